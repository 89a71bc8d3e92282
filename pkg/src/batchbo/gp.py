"""Gaussian process regression: constant mean, squared-exponential kernel with
per-dimension lengthscales, maximum-likelihood fitting, posterior prediction,
and fantasy conditioning.

Internally the fitter scales inputs to the unit cube and standardizes outputs;
every public surface speaks original units. A fitted model is immutable:
``fit`` and ``fantasy_update`` return new values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from . import ga
from .doe import Box
from .observations import ObservationSet

LOG_2PI = float(np.log(2.0 * np.pi))


class GPNumericalError(RuntimeError):
    """Covariance factorization failed (matrix not numerically PD)."""


class GPFitError(RuntimeError):
    """Hyperparameter search could not produce a usable model."""


@dataclass(frozen=True)
class KernelParams:
    """Squared-exponential kernel: k(x,x') = sv * exp(-1/2 sum ((xi-xi')/li)^2).

    nugget is the jitter added to the training covariance diagonal only.
    """

    signal_variance: float
    lengthscales: np.ndarray
    nugget: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float)).copy()
        if self.signal_variance <= 0.0:
            raise ValueError("signal_variance must be positive")
        if np.any(ls <= 0.0):
            raise ValueError("lengthscales must be positive")
        if self.nugget < 0.0:
            raise ValueError("nugget must be nonnegative")
        ls.setflags(write=False)
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "nugget", float(self.nugget))

    @property
    def dim(self) -> int:
        return self.lengthscales.size


def kernel_eval(params: KernelParams, x: np.ndarray, x2: np.ndarray) -> float:
    """Covariance between two points (no nugget); symmetric in its arguments."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape or x.ndim != 1 or x.size != params.dim:
        raise ValueError("point dimensions must match the kernel")
    z = (x - x2) / params.lengthscales
    return float(params.signal_variance * np.exp(-0.5 * np.dot(z, z)))


def _cross_sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise squared distances between row sets; clipped at 0 for round-off."""
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.maximum(sq, 0.0)


def _kernel_matrix(params: KernelParams, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    A = X / params.lengthscales
    B = X2 / params.lengthscales
    return params.signal_variance * np.exp(-0.5 * _cross_sqdist(A, B))


@dataclass(frozen=True)
class GaussianProcessModel:
    """Fitted GP: hyperparameters plus the cached training factorization.

    factorization is the lower Cholesky factor of K + nugget*I over the
    training inputs; alpha solves (K + nugget*I) alpha = values - mean.
    """

    mean_constant: float
    kernel: KernelParams
    training_inputs: np.ndarray
    training_values: np.ndarray
    factorization: np.ndarray
    alpha: np.ndarray
    # Scaling context used only for near-duplicate detection; prediction math
    # runs entirely in original units.
    x_lower: np.ndarray
    x_width: np.ndarray

    def __post_init__(self):
        for name in ("training_inputs", "training_values", "factorization",
                     "alpha", "x_lower", "x_width"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.training_values.size

    @property
    def dim(self) -> int:
        return self.training_inputs.shape[1]


def build_model(
    X: np.ndarray,
    y: np.ndarray,
    mean_constant: float,
    kernel: KernelParams,
    x_lower: np.ndarray | None = None,
    x_width: np.ndarray | None = None,
) -> GaussianProcessModel:
    """Condition a GP with fixed hyperparameters on (X, y).

    This is the from-scratch covariance rebuild used by ``fit`` and as the
    oracle against which ``fantasy_update`` is checked.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n, d = X.shape
    if y.size != n:
        raise ValueError("row/value count mismatch")
    if d != kernel.dim:
        raise ValueError("kernel dimension does not match the data")
    K = _kernel_matrix(kernel, X, X)
    K[np.diag_indices_from(K)] += kernel.nugget
    try:
        L = cholesky(K, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise GPNumericalError(
            f"training covariance is not positive definite (n={n})"
        ) from exc
    alpha = cho_solve((L, True), y - mean_constant, check_finite=False)
    if x_lower is None:
        x_lower = X.min(axis=0)
        x_width = np.maximum(X.max(axis=0) - x_lower, 1e-300)
    return GaussianProcessModel(
        mean_constant=float(mean_constant),
        kernel=kernel,
        training_inputs=X,
        training_values=y,
        factorization=L,
        alpha=alpha,
        x_lower=np.asarray(x_lower, dtype=float),
        x_width=np.asarray(x_width, dtype=float),
    )


def log_likelihood(
    data: ObservationSet, mean_constant: float, params: KernelParams
) -> float:
    """Log density of the observed values under the GP prior.

    Raises GPNumericalError when K + nugget*I cannot be factorized, so a
    hyperparameter search can penalize the candidate.
    """
    X, y = data.design, data.values
    if X.shape[1] != params.dim:
        raise ValueError("kernel dimension does not match the data")
    K = _kernel_matrix(params, X, X)
    K[np.diag_indices_from(K)] += params.nugget
    try:
        L = cholesky(K, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise GPNumericalError("covariance not positive definite") from exc
    r = y - mean_constant
    alpha = cho_solve((L, True), r, check_finite=False)
    return float(
        -0.5 * float(r @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * y.size * LOG_2PI
    )


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameter-search settings for ``fit``.

    Lengthscale bounds are relative to the coordinate widths of ``box`` (or to
    the data range when no box is given); signal-variance bounds are relative
    to the variance of the standardized outputs. The nugget is nugget_factor
    times the signal variance.
    """

    population: int = 30
    generations: int = 50
    crossover_rate: float = 0.9
    eta: float = 20.0
    lengthscale_bounds: tuple[float, float] = (1e-3, 1e3)
    signal_bounds: tuple[float, float] = (1e-6, 1e6)
    nugget_factor: float = 1e-10
    isotropic: bool = False
    box: Box | None = None
    dedup_tol: float = 1e-9


def _dedup(Xn: np.ndarray, y: np.ndarray, tol: float) -> np.ndarray:
    """Indices to keep: merge points closer than tol, keeping the better value."""
    n = Xn.shape[0]
    keep: list[int] = []
    for i in np.argsort(y, kind="stable"):  # best first, first occurrence wins
        i = int(i)
        if all(np.linalg.norm(Xn[i] - Xn[j]) >= tol for j in keep):
            keep.append(i)
    keep.sort()
    return np.asarray(keep, dtype=int)


def fit(data: ObservationSet, fit_config: FitConfig | None, seed: int) -> GaussianProcessModel:
    """Maximum-likelihood fit via the in-repo GA; deterministic per seed.

    The returned hyperparameters achieve a log-likelihood at least as high as
    every candidate evaluated during the search (the GA is elitist).
    """
    cfg = fit_config if fit_config is not None else FitConfig()
    X = data.design
    y = data.values
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 observations to fit")

    if cfg.box is not None:
        if cfg.box.dim != d:
            raise ValueError("fit box dimension mismatch")
        x_lower, x_width = cfg.box.lower, cfg.box.width
    else:
        x_lower = X.min(axis=0)
        x_width = np.maximum(X.max(axis=0) - x_lower, 1e-12)
    Xn = (X - x_lower) / x_width

    keep = _dedup(Xn, y, cfg.dedup_tol)
    X, Xn, y = X[keep], Xn[keep], y[keep]
    n = y.size
    if n < 2:
        raise ValueError("fewer than 2 distinct observations after deduplication")

    y_mean = float(np.mean(y))
    y_std = float(np.std(y))
    if y_std < 1e-12:
        y_std = 1.0
    yn = (y - y_mean) / y_std
    var_n = max(float(np.var(yn)), 1e-12)

    diffs = Xn[:, None, :] - Xn[None, :, :]
    sq = diffs * diffs  # (n, n, d), cached across all likelihood evaluations

    n_ls = 1 if cfg.isotropic else d
    theta_lo = np.concatenate([
        np.full(n_ls, np.log(cfg.lengthscale_bounds[0])),
        [np.log(cfg.signal_bounds[0] * var_n)],
    ])
    theta_hi = np.concatenate([
        np.full(n_ls, np.log(cfg.lengthscale_bounds[1])),
        [np.log(cfg.signal_bounds[1] * var_n)],
    ])
    theta_box = Box(theta_lo, theta_hi)
    eye = np.diag_indices(n)

    def neg_in_failure(theta: np.ndarray) -> float:
        ls = np.exp(theta[:n_ls])
        if cfg.isotropic:
            ls = np.full(d, ls[0])
        sv = float(np.exp(theta[-1]))
        Q = sq @ (1.0 / (ls * ls))
        K = sv * np.exp(-0.5 * Q)
        K[eye] += cfg.nugget_factor * sv
        try:
            L = cholesky(K, lower=True, check_finite=False)
        except LinAlgError:
            return -np.inf
        alpha = cho_solve((L, True), yn, check_finite=False)
        return (
            -0.5 * float(yn @ alpha)
            - float(np.sum(np.log(np.diag(L))))
            - 0.5 * n * LOG_2PI
        )

    def objective(thetas: np.ndarray) -> np.ndarray:
        return np.array([neg_in_failure(t) for t in thetas], dtype=float)

    ga_cfg = ga.GAConfig(
        population=cfg.population,
        generations=cfg.generations,
        crossover_rate=cfg.crossover_rate,
        eta_crossover=cfg.eta,
        eta_mutation=cfg.eta,
        seed=seed,
    )
    # Warm starts: isotropic candidates at plausible smoothness levels. The
    # log-uniform bounds span six decades, so an unseeded population is
    # dominated by degenerate kernels (near-delta or near-constant).
    warm = np.array([
        np.concatenate([np.full(n_ls, np.log(ls)), [np.log(var_n)]])
        for ls in (0.05, 0.1, 0.25, 0.5, 1.0, 2.0)
    ])
    best_theta, best_val, _ = ga.maximize(
        objective, theta_box, ga_cfg, vectorized=True, initial=warm
    )
    if not np.isfinite(best_val):
        raise GPFitError(
            "every hyperparameter candidate failed factorization; "
            "consider increasing the nugget"
        )

    ls_n = np.exp(best_theta[:n_ls])
    if cfg.isotropic:
        ls_n = np.full(d, ls_n[0])
    sv_n = float(np.exp(best_theta[-1]))
    kernel = KernelParams(
        signal_variance=sv_n * y_std * y_std,
        lengthscales=ls_n * x_width,
        nugget=cfg.nugget_factor * sv_n * y_std * y_std,
    )
    return build_model(X, y, y_mean, kernel, x_lower=x_lower, x_width=x_width)


def predict_batch(model: GaussianProcessModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances at the rows of X; variances clamped at 0."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dim:
        raise ValueError(f"expected points of dimension {model.dim}, got {X.shape[1]}")
    Ks = _kernel_matrix(model.kernel, X, model.training_inputs)  # (m, n)
    mean = model.mean_constant + Ks @ model.alpha
    v = solve_triangular(model.factorization, Ks.T, lower=True, check_finite=False)
    var = model.kernel.signal_variance - np.sum(v * v, axis=0)
    return mean, np.maximum(var, 0.0)


def predict(model: GaussianProcessModel, x: np.ndarray) -> tuple[float, float]:
    """Posterior mean and variance at a single point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict expects a single point; use predict_batch")
    mean, var = predict_batch(model, x[None, :])
    return float(mean[0]), float(var[0])


def fantasy_update(
    model: GaussianProcessModel, x: np.ndarray, y_fake: float
) -> GaussianProcessModel:
    """Condition on (x, y_fake) with unchanged hyperparameters.

    Extends the cached Cholesky factor by one row; the result matches a
    from-scratch rebuild on the augmented data. Rejects near-duplicates of
    existing training inputs (the caller should perturb or skip).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != model.dim:
        raise ValueError("fantasy point dimension mismatch")
    xn = (x - model.x_lower) / model.x_width
    Xn = (model.training_inputs - model.x_lower) / model.x_width
    dists = np.linalg.norm(Xn - xn, axis=1)
    if np.any(dists < 1e-9):
        raise ValueError("fantasy point duplicates an existing training input")

    L = model.factorization
    k_vec = _kernel_matrix(model.kernel, x[None, :], model.training_inputs)[0]
    kxx = model.kernel.signal_variance + model.kernel.nugget
    l12 = solve_triangular(L, k_vec, lower=True, check_finite=False)
    rest = kxx - float(l12 @ l12)
    if rest <= 0.0:
        raise GPNumericalError("fantasy update would break positive definiteness")
    n = model.n
    L_new = np.zeros((n + 1, n + 1))
    L_new[:n, :n] = L
    L_new[n, :n] = l12
    L_new[n, n] = np.sqrt(rest)
    X_new = np.vstack([model.training_inputs, x[None, :]])
    y_new = np.concatenate([model.training_values, [float(y_fake)]])
    alpha = cho_solve((L_new, True), y_new - model.mean_constant, check_finite=False)
    return GaussianProcessModel(
        mean_constant=model.mean_constant,
        kernel=model.kernel,
        training_inputs=X_new,
        training_values=y_new,
        factorization=L_new,
        alpha=alpha,
        x_lower=model.x_lower,
        x_width=model.x_width,
    )


def condition(
    model: GaussianProcessModel, data: ObservationSet
) -> GaussianProcessModel:
    """Re-condition on a full dataset keeping the model's kernel.

    Used between hyperparameter refits: the constant mean tracks the new
    sample mean but the kernel is reused.
    """
    return build_model(
        data.design,
        data.values,
        float(np.mean(data.values)),
        model.kernel,
        x_lower=model.x_lower,
        x_width=model.x_width,
    )


def model_to_json(model: GaussianProcessModel) -> str:
    """Structured text snapshot (hyperparameters + training data)."""
    payload = {
        "mean_constant": model.mean_constant,
        "signal_variance": model.kernel.signal_variance,
        "lengthscales": model.kernel.lengthscales.tolist(),
        "nugget": model.kernel.nugget,
        "training_inputs": model.training_inputs.tolist(),
        "training_values": model.training_values.tolist(),
        "x_lower": model.x_lower.tolist(),
        "x_width": model.x_width.tolist(),
    }
    return json.dumps(payload)


def model_from_json(text: str) -> GaussianProcessModel:
    payload = json.loads(text)
    kernel = KernelParams(
        signal_variance=payload["signal_variance"],
        lengthscales=np.asarray(payload["lengthscales"], dtype=float),
        nugget=payload["nugget"],
    )
    return build_model(
        np.asarray(payload["training_inputs"], dtype=float),
        np.asarray(payload["training_values"], dtype=float),
        payload["mean_constant"],
        kernel,
        x_lower=np.asarray(payload["x_lower"], dtype=float),
        x_width=np.asarray(payload["x_width"], dtype=float),
    )
