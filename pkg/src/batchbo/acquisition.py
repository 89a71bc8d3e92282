"""Expected improvement and its restriction to an axis-aligned subspace slice
through the incumbent.

The subspace acquisition evaluates the ordinary expected improvement at the
point obtained by writing the subspace coordinates into the incumbent; with
the full-space subspace it coincides with expected improvement, and with a
single coordinate it is the expected improvement along that coordinate's
slice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .doe import Box
from .gp import GaussianProcessModel, predict_batch
from .observations import Incumbent
from .subspace import Subspace

SIGMA_EPS = 1e-12
_SQRT2 = float(np.sqrt(2.0))
_INV_SQRT_2PI = float(1.0 / np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class AcquisitionSpec:
    """A model, an incumbent, and a subspace bound into one scalar criterion.

    box holds the original problem bounds restricted to the subspace
    coordinates, ready for the inner optimizer.
    """

    model: GaussianProcessModel
    incumbent: Incumbent
    subspace: Subspace
    box: Box

    def __post_init__(self):
        d = self.model.dim
        if self.subspace.indices[-1] >= d:
            raise ValueError("subspace index out of range for the model dimension")
        if self.box.dim != self.subspace.size:
            raise ValueError("box must be restricted to the subspace coordinates")


def _normal_cdf(u: np.ndarray) -> np.ndarray:
    # Phi(u) = (1 + erf(u / sqrt(2))) / 2; erf keeps absolute error <= 1e-15.
    return 0.5 * (1.0 + erf(u / _SQRT2))


def _normal_pdf(u: np.ndarray) -> np.ndarray:
    return _INV_SQRT_2PI * np.exp(-0.5 * u * u)


def expected_improvement_values(
    f_min: float, mean: np.ndarray, variance: np.ndarray
) -> np.ndarray:
    """Closed-form EI from posterior moments; the sigma -> 0 limit is
    max(f_min - mean, 0)."""
    mean = np.asarray(mean, dtype=float)
    sigma = np.sqrt(np.asarray(variance, dtype=float))
    gap = f_min - mean
    safe = sigma > SIGMA_EPS
    s = np.where(safe, sigma, 1.0)
    u = gap / s
    ei = gap * _normal_cdf(u) + s * _normal_pdf(u)
    out = np.where(safe, ei, np.maximum(gap, 0.0))
    return np.maximum(out, 0.0)


def expected_improvement_batch(
    model: GaussianProcessModel, f_min: float, X: np.ndarray
) -> np.ndarray:
    mean, var = predict_batch(model, X)
    return expected_improvement_values(f_min, mean, var)


def expected_improvement(
    model: GaussianProcessModel, f_min: float, x: np.ndarray
) -> float:
    """EI at a single point (nonnegative)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a single point")
    return float(expected_improvement_batch(model, f_min, x[None, :])[0])


def embed(incumbent: Incumbent, subspace: Subspace, y: np.ndarray) -> np.ndarray:
    """The incumbent with its coordinates at the subspace indices replaced by y."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != subspace.size:
        raise ValueError(
            f"expected {subspace.size} subspace coordinates, got {y.shape}"
        )
    z = incumbent.x_min.copy()
    z[subspace.as_array()] = y
    return z


def embed_batch(incumbent: Incumbent, subspace: Subspace, Y: np.ndarray) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != subspace.size:
        raise ValueError("subspace coordinate count mismatch")
    Z = np.tile(incumbent.x_min, (Y.shape[0], 1))
    Z[:, subspace.as_array()] = Y
    return Z


def essi_batch(spec: AcquisitionSpec, Y: np.ndarray) -> np.ndarray:
    """Subspace EI at each row of Y (subspace coordinates)."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    Z = embed_batch(spec.incumbent, spec.subspace, Y)
    return expected_improvement_batch(spec.model, spec.incumbent.f_min, Z)


def essi(spec: AcquisitionSpec, y: np.ndarray) -> float:
    """Subspace EI at a point of the subspace box."""
    y = np.asarray(y, dtype=float)
    if not spec.box.contains(y):
        raise ValueError("point lies outside the subspace box")
    return float(essi_batch(spec, y[None, :])[0])
