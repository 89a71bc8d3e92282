"""Batch Bayesian optimization toolkit.

Selects batches of query points by maximizing expected improvement restricted
to randomly drawn axis-aligned subspaces through the incumbent, alongside
sequential-EI, Kriging-believer, and random-search baselines, with a
benchmark harness for regret curves and significance tables.
"""

from .acquisition import (
    AcquisitionSpec,
    embed,
    essi,
    essi_batch,
    expected_improvement,
    expected_improvement_batch,
)
from .bench import (
    AggregateCurve,
    ExperimentConfig,
    aggregate,
    load_config,
    run_experiment,
    simple_regret,
    wilcoxon_signed_rank,
)
from .bo import (
    ALGORITHMS,
    LoopConfig,
    run_algorithm,
    run_batch_essi,
    run_batch_kb,
    run_random_search,
    run_sequential_ei,
)
from .doe import Box, latin_hypercube, uniform_sample
from .ga import GAConfig, maximize, polynomial_mutation, sbx_crossover
from .gp import (
    FitConfig,
    GaussianProcessModel,
    KernelParams,
    build_model,
    fantasy_update,
    fit,
    kernel_eval,
    log_likelihood,
    predict,
    predict_batch,
)
from .observations import Incumbent, ObservationSet
from .problems import (
    ProblemInstance,
    evaluate,
    global_minimum,
    make_problem,
    problem_from_name,
)
from .records import RunRecord
from .subspace import (
    Subspace,
    SubspaceStrategy,
    count_subspaces,
    draw_batch,
    draw_subspace,
)

__version__ = "0.1.0"
