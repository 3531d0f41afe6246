"""Gaussian fitness model: normalization of raw measures into non-negative
weights, the fitness-weighted mean estimate of the optimum, and a
diagnostic isotropic-Gaussian fit of the sampled fitness landscape.

A :class:`FitnessProfile` wraps a raw objective together with its
orientation. Similarity measures are maximized as-is; difference measures
(anything minimized, e.g. a benchmark function or SSD) are converted to
similarities via ``exp(-eps(value))`` where ``eps`` rescales the current
batch to [0, 1]. The rescaling is per batch, so the resulting weights are
only comparable within one iteration; cross-iteration bookkeeping
(personal/global bests) uses :meth:`FitnessProfile.canonical` instead,
which is a fixed monotone map of the raw measure.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .validation import check_finite

_TINY = 1e-12  # guards the min-max denominator when all values coincide


@dataclass(frozen=True)
class FitnessProfile:
    """A raw objective plus the bookkeeping needed to treat it as a
    non-negative similarity.

    ``sharpness`` scales the exponent of the difference conversion: the
    batch's worst value gets weight ``exp(-sharpness)`` and the best gets
    1, so larger values concentrate the downstream weighted mean on the
    better particles. The raw measure is assumed noisy (zero-mean
    perturbations on top of a smooth landscape); no noise parameter is
    estimated anywhere.
    """

    measure: callable
    orientation: str  # "similarity" (maximize raw) or "difference" (minimize raw)
    name: str = ""
    vectorized: bool = True  # measure accepts (N, D) batches
    sharpness: float = 1.0

    def __post_init__(self):
        if self.orientation not in ("similarity", "difference"):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if self.sharpness <= 0:
            raise ValueError("sharpness must be positive")

    def evaluate(self, positions):
        """Raw measure at each row of a (N, D) position array."""
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        if self.vectorized:
            values = np.asarray(self.measure(positions), dtype=float)
        else:
            values = np.array([float(self.measure(p)) for p in positions])
        return values.reshape(positions.shape[0])

    def canonical(self, raw_values):
        """Raw values mapped so that larger is always better; stable
        across iterations (used for personal/global best tracking)."""
        raw_values = np.asarray(raw_values, dtype=float)
        return raw_values if self.orientation == "similarity" else -raw_values


def normalize_fitness(values, profile):
    """Convert raw measure values into non-negative weights.

    Similarity orientation: shift so the batch minimum is zero (affine and
    order-preserving). Difference orientation: ``exp(-sharpness * eps(v))``
    with ``eps(v) = (v - min) / (max - min + tiny)``, so the best point
    gets weight 1 and the worst roughly ``exp(-sharpness)``. If every
    value is equal the output weights are all equal.
    """
    values = check_finite(values, name="fitness values")
    if values.size == 0:
        raise ValueError("need at least one fitness value")
    if profile.orientation == "similarity":
        return values - np.min(values)
    span = np.max(values) - np.min(values)
    eps = (values - np.min(values)) / (span + _TINY)
    return np.exp(-profile.sharpness * eps)


def weighted_mean_optimum(positions, fitnesses):
    """Fitness-weighted mean of particle positions.

    Weights must be non-negative. If they sum to zero the unweighted mean
    is returned and a RuntimeWarning is emitted (least-informative
    fallback; the weighted form is undefined there).
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    fitnesses = np.asarray(fitnesses, dtype=float)
    if fitnesses.shape[0] != positions.shape[0]:
        raise ValueError("positions and fitnesses must have equal length")
    if np.any(fitnesses < 0):
        raise ValueError("fitness weights must be non-negative")
    total = fitnesses.sum()
    if total <= 0.0:
        warnings.warn(
            "all fitness weights are zero; falling back to the unweighted mean",
            RuntimeWarning,
            stacklevel=2,
        )
        return positions.mean(axis=0)
    return (positions * fitnesses[:, None]).sum(axis=0) / total


@dataclass(frozen=True)
class GaussianFitDiagnostic:
    """Result of fitting ``sigma * exp(-||x - center||^2 / (2 width))`` to
    sampled fitness values. Diagnostic only: the optimizers never feed the
    fitted width back into the search."""

    center: np.ndarray
    width: float  # variance of the fitted kernel
    normalizer: float
    residual: float

    @property
    def precision(self):
        """Inverse width of the fitted kernel (the assumed-model curvature)."""
        return 1.0 / self.width


def fit_gaussian_diagnostic(positions, fitnesses):
    """Least-squares fit of ``log fitness`` to a concave isotropic quadratic.

    Solves for (a, b, g) in ``log f = a + b.x + g ||x||^2`` and converts to
    kernel parameters: ``width = -1 / (2 g)``, ``center = -b / (2 g)``.
    Requires at least D + 2 samples, strictly positive fitnesses, and a
    concave fit (g < 0); otherwise the sample cannot pin down a unimodal
    bump and a ValueError("non-unimodal sample") is raised.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    fitnesses = np.asarray(fitnesses, dtype=float)
    n, dim = positions.shape
    if n < dim + 2:
        raise ValueError(f"need at least {dim + 2} samples for a {dim}-D fit")
    if np.any(fitnesses <= 0):
        raise ValueError("fitnesses must be strictly positive for a log fit")
    log_f = np.log(fitnesses)
    design = np.hstack(
        [np.ones((n, 1)), positions, np.sum(positions**2, axis=1, keepdims=True)]
    )
    coef, _, rank, _ = np.linalg.lstsq(design, log_f, rcond=None)
    if rank < dim + 2:
        raise ValueError("non-unimodal sample")
    a, b, g = coef[0], coef[1 : dim + 1], coef[dim + 1]
    if g >= 0.0:
        raise ValueError("non-unimodal sample")
    width = -1.0 / (2.0 * g)
    center = -b / (2.0 * g)
    normalizer = float(np.exp(a + np.dot(center, center) / (2.0 * width)))
    residual = float(np.sqrt(np.mean((design @ coef - log_f) ** 2)))
    return GaussianFitDiagnostic(
        center=center, width=float(width), normalizer=normalizer, residual=residual
    )
