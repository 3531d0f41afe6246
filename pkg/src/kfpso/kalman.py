"""Gaussian belief propagation: linear Kalman predict/correct steps,
sigma-point selection, and the unscented transform.

Covariances are kept symmetric positive semi-definite throughout: every
update re-symmetrizes and clips stray negative eigenvalues at zero. The
matrix square root used for sigma points is the symmetric eigendecomposition
root (not Cholesky) so that beliefs collapsed onto a subspace still factor.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .core import SearchSpace
from .validation import as_square_matrix, as_vector, check_finite

SYM_TOL = 1e-10
# Eigenvalues below -MATERIAL_TOL (relative to scale) indicate a genuinely
# indefinite matrix rather than roundoff; roundoff is clamped silently.
MATERIAL_TOL = 1e-8


@dataclass(frozen=True)
class GaussianBelief:
    """Gaussian state estimate ``N(mean, cov)`` of the hidden optimum."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = as_vector(self.mean, name="mean")
        cov = as_square_matrix(self.cov, dim=mean.shape[0], name="cov")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def trace(self):
        return float(np.trace(self.cov))


def _clamp_psd(cov, context="covariance"):
    """Symmetrize and clip negative eigenvalues to zero.

    Raises if the matrix is indefinite beyond numerical roundoff, which
    signals an invalid input rather than accumulation error.
    """
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    scale = max(1.0, float(np.max(np.abs(eigvals), initial=0.0)))
    if eigvals[0] < -1e-4 * scale:
        raise ValueError(f"{context} is not positive semi-definite (min eig {eigvals[0]:.3e})")
    if eigvals[0] < 0.0:
        cov = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
        cov = 0.5 * (cov + cov.T)
    return cov


def psd_sqrt(cov):
    """Symmetric matrix square root via eigendecomposition (PSD input)."""
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    root = (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T
    return 0.5 * (root + root.T)


def _as_cov(value, dim, name):
    """Scalar -> scalar * I shorthand; None -> zeros; else a PSD matrix."""
    if value is None:
        return np.zeros((dim, dim))
    if np.isscalar(value):
        if value < 0:
            raise ValueError(f"{name} scalar shorthand must be >= 0")
        return float(value) * np.eye(dim)
    return _clamp_psd(as_square_matrix(value, dim=dim, name=name), context=name)


def weighted_sample_cov(positions, weights):
    """Weight-normalized sample covariance of a point cloud."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        weights = np.full(weights.shape, 1.0 / weights.shape[0])
        total = 1.0
    mean = (positions * weights[:, None]).sum(axis=0) / total
    centered = positions - mean
    cov = (centered * weights[:, None]).T @ centered / total
    return 0.5 * (cov + cov.T)


@dataclass(frozen=True)
class NoiseConfig:
    """Process and observation noise policies.

    ``process``: None (zero), a scalar (variance times identity), or a PSD
    matrix. ``observation``: the same shorthands, or the string
    ``"from-particle-spread"`` meaning the fitness-weighted sample
    covariance of the particle cloud that produced the observation.
    """

    process: object = None
    observation: object = "from-particle-spread"

    def process_cov(self, dim):
        return _as_cov(self.process, dim, "process noise")

    def observation_cov(self, dim, positions=None, weights=None):
        if isinstance(self.observation, str):
            if self.observation != "from-particle-spread":
                raise ValueError(f"unknown observation-noise policy {self.observation!r}")
            if positions is None or weights is None:
                raise ValueError(
                    "observation-noise policy 'from-particle-spread' needs the "
                    "particle positions and weights of the current iteration"
                )
            return weighted_sample_cov(positions, weights)
        return _as_cov(self.observation, dim, "observation noise")

    @classmethod
    def for_space(cls, space: SearchSpace, process_fraction=0.01):
        """Default noise for a search box: small diagonal process noise
        proportional to the range width, spread-derived observation noise."""
        sigma = (process_fraction * space.width) ** 2
        return cls(process=np.diag(sigma), observation="from-particle-spread")


def initial_belief(space: SearchSpace):
    """Uninformative starting belief: box center with half-range variances."""
    half = 0.5 * space.width
    return GaussianBelief(mean=space.center.copy(), cov=np.diag(half**2))


def _resolve_noise(noise):
    if noise is None:
        return NoiseConfig(process=None, observation=None)
    if isinstance(noise, NoiseConfig):
        return noise
    return NoiseConfig(process=noise, observation=noise)


def kf_time_update(belief, transition=None, noise=None):
    """Linear prediction step.

    Parameters
    ----------
    belief : GaussianBelief
        Posterior from the previous iteration.
    transition : (D, D) array or None
        State-transition matrix; None means identity (stationary optimum).
    noise : NoiseConfig, scalar, matrix or None
        Source of the process-noise covariance added to the prediction.

    Returns
    -------
    GaussianBelief
        Predicted mean ``F m`` and covariance ``F P F^T + Q``, re-symmetrized
        and clamped to PSD.
    """
    dim = belief.dim
    q = _resolve_noise(noise).process_cov(dim)
    if transition is None:
        mean = belief.mean.copy()
        cov = belief.cov + q
    else:
        f = as_square_matrix(transition, dim=dim, name="transition")
        mean = f @ belief.mean
        cov = f @ belief.cov @ f.T + q
    return GaussianBelief(mean=mean, cov=_clamp_psd(cov, "predicted covariance"))


def kf_measurement_update(predicted, observation, observation_matrix=None, noise=None,
                          positions=None, weights=None):
    """Linear correction step.

    Parameters
    ----------
    predicted : GaussianBelief
        Output of the time update.
    observation : (D,) array
        Observed state (here: the fitness-weighted mean of the particles).
    observation_matrix : (D, D) array or None
        None means identity.
    noise : NoiseConfig, scalar, matrix or None
        Source of the observation-noise covariance. The
        "from-particle-spread" policy additionally needs ``positions`` and
        ``weights``.

    Returns
    -------
    GaussianBelief
        Posterior after blending the observation with the prediction via
        the Kalman gain.

    Raises
    ------
    ValueError
        If the innovation covariance is numerically singular (the
        condition number is reported in the message).
    """
    dim = predicted.dim
    xi = as_vector(observation, dim=dim, name="observation")
    check_finite(xi, name="observation")
    r = _resolve_noise(noise).observation_cov(dim, positions=positions, weights=weights)
    if observation_matrix is None:
        h = None
        innovation_cov = predicted.cov + r
        cross = predicted.cov
        residual = xi - predicted.mean
    else:
        h = as_square_matrix(observation_matrix, dim=dim, name="observation matrix")
        innovation_cov = h @ predicted.cov @ h.T + r
        cross = predicted.cov @ h.T
        residual = xi - h @ predicted.mean
    innovation_cov = 0.5 * (innovation_cov + innovation_cov.T)
    cond = np.linalg.cond(innovation_cov)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(
            f"singular innovation covariance (condition number {cond:.3e}); "
            "increase the observation or process noise"
        )
    gain = np.linalg.solve(innovation_cov, cross.T).T
    mean = predicted.mean + gain @ residual
    identity = np.eye(dim)
    kh = gain if h is None else gain @ h
    cov = (identity - kh) @ predicted.cov
    return GaussianBelief(mean=mean, cov=_clamp_psd(cov, "posterior covariance"))


@dataclass(frozen=True)
class SigmaSet:
    """Weighted point representation of a Gaussian belief.

    ``kappa`` is the spread parameter of the standard construction; sets
    built from particle clouds have ``kappa=None``.
    """

    points: np.ndarray  # (n, D)
    weights: np.ndarray  # (n,)
    kappa: float = None

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def mean(self):
        return (self.points * self.weights[:, None]).sum(axis=0)

    def covariance(self):
        mean = self.mean()
        centered = self.points - mean
        cov = (centered * self.weights[:, None]).T @ centered
        return 0.5 * (cov + cov.T)


def sigma_points_standard(belief, kappa):
    """Classic 2D+1 sigma-point construction.

    Points are the mean plus/minus the columns of ``sqrt((D + kappa) P)``;
    the central weight is ``kappa / (D + kappa)`` and each wing weight
    ``1 / (2 (D + kappa))``, which reproduces the source mean and
    covariance exactly. ``kappa + D`` must be positive; the package-wide
    policy elsewhere is ``kappa = 3 - D``.
    """
    dim = belief.dim
    if dim + kappa <= 0:
        raise ValueError(f"need D + kappa > 0, got D={dim}, kappa={kappa}")
    scale = dim + kappa
    root = psd_sqrt(scale * _clamp_psd(belief.cov, "sigma source covariance"))
    points = np.empty((2 * dim + 1, dim))
    points[0] = belief.mean
    points[1 : dim + 1] = belief.mean + root.T
    points[dim + 1 :] = belief.mean - root.T
    weights = np.full(2 * dim + 1, 1.0 / (2.0 * scale))
    weights[0] = kappa / scale
    return SigmaSet(points=points, weights=weights, kappa=float(kappa))


def sigma_points_from_particles(swarm, fitnesses, prior_mean):
    """Sigma set built from the particle cloud plus the current estimate.

    The particle weights are the normalized fitnesses; the estimate is
    appended with the mean particle weight, then the whole set is
    renormalized to sum to one. Degenerate (all-zero) fitnesses fall back
    to uniform weights.
    """
    positions = np.atleast_2d(np.asarray(getattr(swarm, "positions", swarm), dtype=float))
    fitnesses = np.asarray(fitnesses, dtype=float)
    k = positions.shape[0]
    prior_mean = as_vector(prior_mean, dim=positions.shape[1], name="prior mean")
    total = fitnesses.sum()
    if total <= 0:
        warnings.warn(
            "all fitness weights are zero; using uniform sigma weights",
            RuntimeWarning,
            stacklevel=2,
        )
        base = np.full(k, 1.0 / k)
    else:
        base = fitnesses / total
    weights = np.append(base, base.mean())
    weights /= weights.sum()
    points = np.vstack([positions, prior_mean])
    return SigmaSet(points=points, weights=weights, kappa=None)


def ut_moments(points, weights, noise=None, dim=None):
    """Weighted mean and covariance of transformed sigma points, plus
    process noise. Shared tail of every unscented prediction."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    dim = points.shape[1] if dim is None else dim
    q = _resolve_noise(noise).process_cov(dim)
    mean = (points * weights[:, None]).sum(axis=0)
    centered = points - mean
    cov = (centered * weights[:, None]).T @ centered + q
    return mean, 0.5 * (cov + cov.T)


def ut_propagate(sigma, transition, noise=None):
    """Unscented prediction: push each sigma point through the transition
    and rebuild a Gaussian from the weighted moments.

    Parameters
    ----------
    sigma : SigmaSet
    transition : callable
        Maps one D-vector to one D-vector; applied point by point.
    noise : NoiseConfig, scalar, matrix or None
        Process noise added to the reconstructed covariance.

    Notes
    -----
    Negative central weights (kappa < 0, used when D > 3 under the
    ``kappa = 3 - D`` rule) can make the reconstructed covariance
    indefinite for strongly nonlinear transitions. If that happens the
    prediction is recomputed once from a fresh ``kappa = 0`` sigma set of
    the same source belief; any residual negative eigenvalues after that
    are clamped to zero.
    """
    if abs(sigma.weights.sum() - 1.0) > 1e-9:
        raise ValueError("sigma weights must sum to 1")
    propagated = np.array([np.asarray(transition(p), dtype=float) for p in sigma.points])
    if not np.all(np.isfinite(propagated)):
        raise ValueError("transition returned non-finite sigma points")
    mean, cov = ut_moments(propagated, sigma.weights, noise)
    min_eig = float(np.linalg.eigvalsh(cov)[0])
    scale = max(1.0, float(np.abs(cov).max()))
    if min_eig < -MATERIAL_TOL * scale and sigma.kappa is not None and np.any(sigma.weights < 0):
        # negative-weight reconstruction went indefinite: retry once with kappa = 0
        source = GaussianBelief(sigma.mean(), sigma.covariance())
        retry = sigma_points_standard(source, kappa=0.0)
        propagated = np.array([np.asarray(transition(p), dtype=float) for p in retry.points])
        if not np.all(np.isfinite(propagated)):
            raise ValueError("transition returned non-finite sigma points")
        mean, cov = ut_moments(propagated, retry.weights, noise)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[0] < 0.0:
        cov = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
    return GaussianBelief(mean=mean, cov=0.5 * (cov + cov.T))
