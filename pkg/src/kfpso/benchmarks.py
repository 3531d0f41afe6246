"""Classic global-optimization benchmark functions and the randomized
bound-shift protocol used by the experiment harness.

All eight functions are minimization problems, vectorized over a trailing
dimension axis: ``eval(x)`` accepts ``(D,)`` or ``(N, D)`` input. Several
carry additive constants (60, 100, 5000) that offset the minimum value but
not its location; accuracy here is always measured as distance between the
returned point and the known optimum location, so the constants are kept.

The ``step`` function is the deliberate adversary of the set: it is
monotone (``60 + sum(floor(x_d))``), so its minimum sits at the lower
corner of the box rather than in the interior.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np

from .core import SearchSpace
from .validation import as_vector

MAX_SHIFT_FRACTION = 0.4  # bound edges may move by at most 40% of the range


def _batched(fn):
    """Allow (D,) or (N, D) input; scalar out for a single point."""

    @functools.wraps(fn)
    def wrapper(x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        out = fn(np.atleast_2d(x))
        return float(out[0]) if single else out

    return wrapper


@_batched
def _ackley(x):
    rms = np.sqrt(np.mean(x**2, axis=-1))
    cos_mean = np.mean(np.cos(2.0 * np.pi * x), axis=-1)
    return -20.0 * np.exp(-0.2 * rms) - np.exp(cos_mean) + 20.0 + math.e


@_batched
def _griewank(x):
    d = np.arange(1, x.shape[-1] + 1, dtype=float)
    return np.sum(x**2, axis=-1) / 4000.0 - np.prod(np.cos(x / np.sqrt(d)), axis=-1) + 1.0


@_batched
def _modulus_sum(x):
    return 60.0 + np.sum(np.abs(x), axis=-1)


@_batched
def _rastrigin(x):
    return 100.0 + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x), axis=-1)


@_batched
def _salomon(x):
    rms = np.sqrt(np.mean(x**2, axis=-1))
    return 1.0 - np.cos(2.0 * np.pi * rms) + 0.1 * np.sum(x**2, axis=-1)


@_batched
def _schwefel(x):
    return 5000.0 + np.sum(-x * np.sin(np.sqrt(np.abs(x))), axis=-1)


@_batched
def _rosenbrock(x):
    if x.shape[-1] < 2:
        raise ValueError("rosenbrock requires dimension >= 2")
    a, b = x[..., :-1], x[..., 1:]
    return np.sum(((a - 1.0) ** 2 + (b - a**2) ** 2) * 100.0, axis=-1)


@_batched
def _step(x):
    return 60.0 + np.sum(np.floor(x), axis=-1)


@dataclass(frozen=True)
class BenchmarkFunction:
    """A named minimization benchmark with box bounds and known optimum."""

    name: str
    eval: callable
    default_lower: float
    default_upper: float
    truth_coordinate: float
    min_dim: int = 1
    orientation: str = "minimize"
    boundary_optimum: bool = False  # argmin rides the box's lower corner

    def ground_truth(self, dim):
        return np.full(dim, self.truth_coordinate)

    def truth_in_space(self, space):
        """Location of the in-box optimum.

        For interior-optimum functions this is the fixed ground truth; for
        the monotone ``step`` function the in-box argmin sits at the lower
        corner of whatever box is searched, so the truth follows the box.
        """
        if self.boundary_optimum:
            return space.lower.copy()
        return self.ground_truth(space.dim)

    def default_space(self, dim):
        if dim < self.min_dim:
            raise ValueError(f"{self.name} requires dimension >= {self.min_dim}")
        return SearchSpace.cube(self.default_lower, self.default_upper, dim)


BENCHMARKS = {
    f.name: f
    for f in [
        BenchmarkFunction("ackley", _ackley, -30.0, 30.0, 0.0),
        BenchmarkFunction("griewank", _griewank, -600.0, 600.0, 0.0),
        BenchmarkFunction("modulus_sum", _modulus_sum, -5.12, 5.12, 0.0),
        BenchmarkFunction("rastrigin", _rastrigin, -5.12, 5.12, 0.0),
        BenchmarkFunction("salomon", _salomon, -100.0, 100.0, 0.0),
        BenchmarkFunction("schwefel", _schwefel, -500.0, 500.0, 420.968746),
        BenchmarkFunction("rosenbrock", _rosenbrock, -30.0, 30.0, 1.0, min_dim=2),
        BenchmarkFunction("step", _step, -5.12, 5.12, -5.12, boundary_optimum=True),
    ]
}


def get_benchmark(name):
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise KeyError(
            f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}"
        ) from None


def eval_benchmark(name, x):
    """Evaluate a registered benchmark at one point or a batch of points."""
    return get_benchmark(name).eval(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ShiftedProblem:
    """A benchmark instance whose search box was randomly translated.

    The ground truth always lies strictly inside the shifted box, and no
    edge moves by more than 40% of the default range width.
    """

    base: BenchmarkFunction
    dim: int
    space: SearchSpace

    @property
    def truth(self):
        return self.base.truth_in_space(self.space)


def make_shifted_problem(base, dim, rng):
    """Draw a rigid per-axis shift of the default box, redrawing any axis
    whose candidate interval would not strictly contain the ground truth."""
    if dim < base.min_dim:
        raise ValueError(f"{base.name} requires dimension >= {base.min_dim}")
    width = base.default_upper - base.default_lower
    max_shift = MAX_SHIFT_FRACTION * width
    truth = base.ground_truth(dim)
    lower = np.empty(dim)
    upper = np.empty(dim)
    for d in range(dim):
        while True:
            shift = rng.uniform(-max_shift, max_shift)
            lo = base.default_lower + shift
            hi = base.default_upper + shift
            if lo < truth[d] < hi:
                lower[d] = lo
                upper[d] = hi
                break
    return ShiftedProblem(base=base, dim=dim, space=SearchSpace(lower, upper))


def error_norm(returned, truth):
    """Euclidean distance between a returned point and the ground truth."""
    returned = as_vector(returned, name="returned")
    truth = as_vector(truth, dim=returned.shape[0], name="truth")
    return float(np.linalg.norm(returned - truth))
