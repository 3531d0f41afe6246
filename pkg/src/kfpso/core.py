"""Shared domain types: search space, swarm bookkeeping, seeded randomness.

All optimizers in this package treat fitness under a maximization
convention; minimization objectives are wrapped upstream (see
:mod:`kfpso.estimator`). Every stochastic routine takes an explicit
generator so that runs keyed by ``(master_seed, stream_id)`` are
bit-reproducible across platforms.
"""

from dataclasses import dataclass, field

import numpy as np

from .validation import as_vector, positive_int


@dataclass(frozen=True)
class SearchSpace:
    """Axis-aligned box bounds of the problem space."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = as_vector(self.lower, name="lower")
        upper = as_vector(self.upper, dim=lower.shape[0], name="upper")
        if not np.all(lower < upper):
            raise ValueError("degenerate bounds: lower must be < upper on every axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, lower, upper, dim):
        """Box with the same scalar bounds repeated on every axis."""
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))

    @property
    def dim(self):
        return self.lower.shape[0]

    @property
    def width(self):
        """Per-axis range width (upper - lower)."""
        return self.upper - self.lower

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class Particle:
    """Read-only view of one particle's state."""

    position: np.ndarray
    velocity: np.ndarray
    personal_best: np.ndarray
    personal_best_fitness: float


@dataclass
class Swarm:
    """Vectorized particle population.

    ``positions``, ``velocities`` and ``personal_best`` are ``(K, D)``
    arrays; ``personal_best_fitness`` is ``(K,)`` under the maximization
    convention. ``global_best_fitness`` always equals the maximum of the
    personal-best fitnesses.
    """

    positions: np.ndarray
    velocities: np.ndarray
    personal_best: np.ndarray
    personal_best_fitness: np.ndarray
    global_best: np.ndarray
    global_best_fitness: float = -np.inf
    iteration: int = 0

    @property
    def size(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]

    @property
    def particles(self):
        """Per-particle views (copies), mainly for inspection and tests."""
        return [
            Particle(
                self.positions[i].copy(),
                self.velocities[i].copy(),
                self.personal_best[i].copy(),
                float(self.personal_best_fitness[i]),
            )
            for i in range(self.size)
        ]


@dataclass(frozen=True)
class RngStream:
    """Deterministic, platform-independent random stream identity.

    The same ``(master_seed, stream_id)`` pair always yields the same
    value sequence (PCG64 seeded through ``SeedSequence`` spawn keys).
    """

    master_seed: int
    stream_id: int = 0

    def generator(self):
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng):
    """Accept an RngStream, a Generator, or a plain integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def init_swarm(space, k, rng, velocity_scale=0.1):
    """Uniformly initialized swarm: positions inside the box, velocities
    uniform in +/- ``velocity_scale`` times the per-axis range, personal
    bests at the initial positions with fitness -inf (nothing evaluated
    yet).

    Draw order is positions then velocities, one (K, D) block each
    regardless of ``velocity_scale``, so identically seeded generators
    produce bitwise-identical swarms and configs differing only in the
    scale stay draw-for-draw comparable.
    """
    k = positive_int(k, minimum=1, name="swarm size")
    if k < 2:
        raise ValueError("swarm too small")
    gen = as_generator(rng)
    lower, upper = space.lower, space.upper
    width = space.width
    positions = lower + gen.random((k, space.dim)) * width
    velocities = (gen.random((k, space.dim)) - 0.5) * (2.0 * velocity_scale) * width
    return Swarm(
        positions=positions,
        velocities=velocities,
        personal_best=positions.copy(),
        personal_best_fitness=np.full(k, -np.inf),
        global_best=positions[0].copy(),
        global_best_fitness=-np.inf,
        iteration=0,
    )


def clamp_to_bounds(x, space):
    """Clip coordinates to the box (hard-clamp boundary policy)."""
    return np.clip(np.asarray(x, dtype=float), space.lower, space.upper)


def update_bests(swarm, fitness):
    """Fold fresh fitness values (maximization convention) into the
    personal and global bests. Returns the swarm for chaining.

    Personal bests also refresh on exact fitness ties so they keep moving
    across flat plateaus (otherwise stale plateau snapshots freeze whole
    axes); the global best updates only on strict improvement.
    """
    fitness = np.asarray(fitness, dtype=float)
    improved = fitness >= swarm.personal_best_fitness
    swarm.personal_best[improved] = swarm.positions[improved]
    swarm.personal_best_fitness[improved] = fitness[improved]
    leader = int(np.argmax(swarm.personal_best_fitness))
    if swarm.personal_best_fitness[leader] > swarm.global_best_fitness:
        swarm.global_best = swarm.personal_best[leader].copy()
        swarm.global_best_fitness = float(swarm.personal_best_fitness[leader])
    return swarm
