"""Swarm optimizer loops: the plain PSO baseline and three variants that
steer the swarm with a Kalman-filtered estimate of the hidden optimum.

All modes share one velocity rule,

    v <- w v + c_p r_p (p_i - x_i) + c_g r_g (g - x_i) + c_t r_t (theta - x_i),

with the last term absent in plain mode. The guided modes differ in how
the belief ``N(theta, Sigma)`` is predicted and corrected each iteration:

* ``lds_kf``    -- identity transition, linear predict/correct against the
                   fitness-weighted mean of the swarm.
* ``spo_ukf``   -- the observation is recomputed from a copy of the cloud
                   translated so its box center lands on the weighted mean
                   (the translated copy is re-evaluated, doubling the
                   evaluation cost), with an unscented prediction.
* ``nested_ukf`` -- two chained correction steps against two fitness
                   measures; the first posterior is the second's prior.

Every stepper draws its three ``(K, D)`` uniform blocks (r_p, r_g, r_t) in
the same order even when a term is unused, so identically seeded runs of
different modes stay draw-for-draw comparable.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .benchmarks import error_norm
from .core import RngStream, SearchSpace, as_generator, clamp_to_bounds, init_swarm, update_bests
from .estimator import FitnessProfile, normalize_fitness, weighted_mean_optimum
from .kalman import (
    GaussianBelief,
    NoiseConfig,
    initial_belief,
    kf_measurement_update,
    kf_time_update,
    sigma_points_from_particles,
    sigma_points_standard,
    ut_moments,
    ut_propagate,
)

MODES = ("original", "lds_kf", "spo_ukf", "nested_ukf")
SPO_TRANSITIONS = ("identity", "particle_motion")

# CLI-facing aliases
MODE_ALIASES = {
    "original": "original",
    "lds-kf": "lds_kf",
    "spo-ukf": "spo_ukf",
    "nested-ukf": "nested_ukf",
}

ACCEL_CAP = 1.2  # clamp on the adapted social coefficient
ACCEL_TOTAL = 2.0  # the adapted pair always sums to this


@dataclass(frozen=True)
class OptimizationProblem:
    """A search box plus one (or, for nested mode, two) fitness profiles.

    ``truth`` is the known optimum location when available; it is used only
    to fill the error field of the trial record.
    """

    space: SearchSpace
    profile: FitnessProfile
    profile2: FitnessProfile = None
    truth: np.ndarray = None
    name: str = ""

    @classmethod
    def minimize(cls, fn, space, truth=None, name="", vectorized=True):
        profile = FitnessProfile(fn, "difference", name=name, vectorized=vectorized)
        return cls(space=space, profile=profile, truth=truth, name=name)

    @classmethod
    def maximize(cls, fn, space, truth=None, name="", vectorized=True):
        profile = FitnessProfile(fn, "similarity", name=name, vectorized=vectorized)
        return cls(space=space, profile=profile, truth=truth, name=name)


@dataclass(frozen=True)
class PsoConfig:
    """Hyperparameters shared by every mode.

    ``social`` and ``guide`` are the starting values of the adapted
    coefficients; in guided modes they are re-balanced every iteration
    from the movement of the measured global best. ``inertia_final`` and
    ``cognitive_final`` (when set) decay their coefficients linearly over
    the iteration budget, the standard explore-then-commit schedule; left
    at None the coefficients stay constant.
    """

    inertia: float = 0.7
    cognitive: float = 2.0
    social: float = 1.0
    guide: float = 1.0
    swarm_size: int = 30
    max_iterations: int = 300
    tol: float = 1e-6
    mode: str = "original"
    spo_transition: str = "identity"
    inertia_final: float = None
    cognitive_final: float = None
    schedule_horizon: float = 1.0  # fraction of max_iterations over which schedules run
    velocity_scale: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.inertia <= 1.0:
            raise ValueError("inertia must be in [0, 1]")
        if self.inertia_final is not None and not 0.0 <= self.inertia_final <= 1.0:
            raise ValueError("inertia_final must be in [0, 1]")
        if min(self.cognitive, self.social, self.guide) < 0.0:
            raise ValueError("acceleration constants must be >= 0")
        if self.cognitive_final is not None and self.cognitive_final < 0.0:
            raise ValueError("cognitive_final must be >= 0")
        if not 0.0 < self.schedule_horizon <= 1.0:
            raise ValueError("schedule_horizon must be in (0, 1]")
        if self.velocity_scale < 0.0:
            raise ValueError("velocity_scale must be >= 0")
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.spo_transition not in SPO_TRANSITIONS:
            raise ValueError(
                f"unknown spo_transition {self.spo_transition!r}; choose from {SPO_TRANSITIONS}"
            )

    def inertia_at(self, iteration):
        return self._scheduled(self.inertia, self.inertia_final, iteration)

    def cognitive_at(self, iteration):
        return self._scheduled(self.cognitive, self.cognitive_final, iteration)

    def _scheduled(self, start, final, iteration):
        if final is None:
            return start
        span = max(self.schedule_horizon * (self.max_iterations - 1), 1.0)
        frac = min(iteration / span, 1.0)
        return start + (final - start) * frac

    @classmethod
    def for_mode(cls, mode, **overrides):
        """Mode defaults: plain PSO uses the conventional social weight 2.0,
        guided modes start the adapted pair at 1.0 each."""
        mode = MODE_ALIASES.get(mode, mode)
        defaults = {"mode": mode}
        if mode == "original":
            defaults["social"] = 2.0
        defaults.update(overrides)
        return cls(**defaults)


@dataclass
class OptimizerState:
    """Mutable per-run state threaded through the iteration loop."""

    swarm: object
    space: SearchSpace = None
    belief: GaussianBelief = None
    c_g: float = 1.0
    c_theta: float = 1.0
    eval_count: int = 0
    history: list = field(default_factory=list)  # (global_best, belief_mean) per iteration
    prev_global_best: np.ndarray = None
    prev_positions: np.ndarray = None


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one optimizer run.

    ``evaluations`` counts the in-loop fitness evaluations (K per iteration,
    2K in spo mode, 2K across both measures in nested mode). The single
    read-out evaluation used to pick between the measured best and the
    belief mean is bookkept separately and not included.
    """

    returned_point: np.ndarray
    error: float
    iterations: int
    evaluations: int
    wall_seconds: float
    mode: str
    seed: object = None
    stop_reason: str = ""


def _step(state, config, rng, guide_point):
    """Shared velocity/position update. Draws r_p, r_g, r_t blocks in that
    order regardless of mode so RNG consumption is mode-independent."""
    swarm = state.swarm
    k, dim = swarm.positions.shape
    r_p = rng.random((k, dim))
    r_g = rng.random((k, dim))
    r_t = rng.random((k, dim))
    velocity = (
        config.inertia_at(swarm.iteration) * swarm.velocities
        + config.cognitive_at(swarm.iteration) * r_p * (swarm.personal_best - swarm.positions)
        + state.c_g * r_g * (swarm.global_best - swarm.positions)
    )
    if guide_point is not None:
        velocity += state.c_theta * r_t * (guide_point - swarm.positions)
    moved = swarm.positions + velocity
    clamped = clamp_to_bounds(moved, state.space)
    # absorbing walls: a clamped coordinate loses its outward velocity,
    # otherwise particles stay pinned to the box faces
    velocity = np.where(moved == clamped, velocity, 0.0)
    swarm.velocities = velocity
    swarm.positions = clamped
    return state


def step_original(state, config, rng, profile=None):
    """One plain-PSO move (no belief attraction)."""
    return _step(state, config, rng, None)


def step_guided(state, config, rng, profile=None):
    """One guided move attracted additionally toward the belief mean."""
    return _step(state, config, rng, state.belief.mean)


def adapt_accelerations(state):
    """Re-balance the social/belief pull from the displacement of the
    measured global best: a stalled best hands its full weight to the
    belief term."""
    delta = float(np.linalg.norm(state.swarm.global_best - state.prev_global_best))
    c_g = min(delta, ACCEL_CAP)
    return c_g, ACCEL_TOTAL - c_g


def check_stop(state, config):
    """Return the stop reason, or None to continue.

    Stops on the iteration cap, on the particle cloud collapsing onto the
    measured best, or (guided modes) on the belief covariance trace
    shrinking below tolerance.
    """
    swarm = state.swarm
    if swarm.iteration >= config.max_iterations:
        return "max_iterations"
    spread = float(np.linalg.norm(swarm.positions - swarm.global_best, axis=1).max())
    if spread < config.tol:
        return "position_variability"
    if state.belief is not None and state.belief.trace < config.tol:
        return "belief_trace"
    return None


def _seed_tag(rng):
    if isinstance(rng, RngStream):
        return (rng.master_seed, rng.stream_id)
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return None


def _evaluate(state, profile, positions):
    values = profile.evaluate(positions)
    state.eval_count += positions.shape[0]
    return values


def _read_out(state, config, problem):
    """The returned point: plain mode reports the measured best; guided
    modes report the filtered estimate (belief mean, clamped into the box).

    Returning the estimate rather than the best-scoring point is the
    distance-oriented stance of these methods: the filter output is the
    answer even where a boundary point happens to score better.
    """
    if state.belief is None:
        return state.swarm.global_best.copy()
    return clamp_to_bounds(state.belief.mean, problem.space)


def _record(state, config, problem, returned, started, seed_tag, reason):
    error = float("nan")
    if problem.truth is not None:
        error = error_norm(returned, problem.truth)
    return TrialRecord(
        returned_point=returned,
        error=error,
        iterations=state.swarm.iteration,
        evaluations=state.eval_count,
        wall_seconds=time.perf_counter() - started,
        mode=config.mode,
        seed=seed_tag,
        stop_reason=reason,
    )


def _init_state(problem, config, gen, with_belief):
    swarm = init_swarm(problem.space, config.swarm_size, gen,
                       velocity_scale=config.velocity_scale)
    return OptimizerState(
        swarm=swarm,
        space=problem.space,
        belief=initial_belief(problem.space) if with_belief else None,
        c_g=config.social,
        c_theta=config.guide,
    )


def _track_best_motion(state, first_iteration):
    """Update the adapted coefficients from the best's displacement and
    remember the current best for the next iteration."""
    if not first_iteration:
        state.c_g, state.c_theta = adapt_accelerations(state)
    state.prev_global_best = state.swarm.global_best.copy()


def run_original(problem, config=None, rng=0):
    """Plain PSO baseline (velocity rule without the belief term)."""
    config = config or PsoConfig.for_mode("original")
    started = time.perf_counter()
    gen = as_generator(rng)
    state = _init_state(problem, config, gen, with_belief=False)
    swarm = state.swarm
    while True:
        raw = _evaluate(state, problem.profile, swarm.positions)
        update_bests(swarm, problem.profile.canonical(raw))
        state.history.append((swarm.global_best.copy(), None))
        step_original(state, config, gen)
        swarm.iteration += 1
        reason = check_stop(state, config)
        if reason is not None:
            break
    return _record(state, config, problem, _read_out(state, config, problem),
                   started, _seed_tag(rng), reason)


def run_lds_kfpso(problem, config=None, rng=0, noise=None):
    """Kalman-guided PSO with an identity (stationary-optimum) transition.

    Each iteration observes the fitness-weighted mean of the swarm, blends
    it into the belief with a linear predict/correct pair, and steers the
    particles toward the posterior mean.
    """
    config = config or PsoConfig.for_mode("lds_kf")
    started = time.perf_counter()
    gen = as_generator(rng)
    noise = noise or NoiseConfig.for_space(problem.space)
    state = _init_state(problem, config, gen, with_belief=True)
    swarm = state.swarm
    first = True
    while True:
        raw = _evaluate(state, problem.profile, swarm.positions)
        update_bests(swarm, problem.profile.canonical(raw))
        weights = normalize_fitness(raw, problem.profile)
        xi = weighted_mean_optimum(swarm.positions, weights)
        predicted = kf_time_update(state.belief, None, noise)
        state.belief = kf_measurement_update(
            predicted, xi, None, noise, positions=swarm.positions, weights=weights
        )
        _track_best_motion(state, first)
        first = False
        state.history.append((swarm.global_best.copy(), state.belief.mean.copy()))
        step_guided(state, config, gen)
        swarm.iteration += 1
        reason = check_stop(state, config)
        if reason is not None:
            break
    return _record(state, config, problem, _read_out(state, config, problem),
                   started, _seed_tag(rng), reason)


def _spo_predict(state, config, weights, noise):
    """Unscented prediction for spo mode.

    ``identity`` uses the standard sigma set of the belief under the
    kappa + D = 3 rule with a stationary transition. ``particle_motion``
    builds the set from the particle cloud plus the belief mean and
    extrapolates each point by the displacement its particle made in the
    last move (the belief point moves by the weighted mean displacement).
    """
    belief = state.belief
    dim = belief.dim
    if config.spo_transition == "identity":
        sigma = sigma_points_standard(belief, kappa=3.0 - dim)
        return ut_propagate(sigma, lambda p: p, noise)
    positions = state.swarm.positions
    sigma = sigma_points_from_particles(positions, weights, belief.mean)
    if state.prev_positions is None:
        deltas = np.zeros_like(positions)
    else:
        deltas = positions - state.prev_positions
    particle_w = sigma.weights[:-1]
    mean_delta = (deltas * particle_w[:, None]).sum(axis=0) / particle_w.sum()
    propagated = np.vstack([positions + deltas, belief.mean + mean_delta])
    mean, cov = ut_moments(propagated, sigma.weights, noise, dim=dim)
    return GaussianBelief(mean, cov)


def run_spo_ukfpso(problem, config=None, rng=0, noise=None):
    """Unscented-Kalman-guided PSO with the shifted-cloud observation.

    After the usual evaluation, a translated copy of the cloud (centered
    on the weighted-mean estimate) is re-evaluated to form a less biased
    observation; the copy is discarded before stepping, so the cost is 2K
    evaluations per iteration.
    """
    config = config or PsoConfig.for_mode("spo_ukf")
    started = time.perf_counter()
    gen = as_generator(rng)
    noise = noise or NoiseConfig.for_space(problem.space)
    state = _init_state(problem, config, gen, with_belief=True)
    swarm = state.swarm
    space = problem.space
    first = True
    while True:
        raw = _evaluate(state, problem.profile, swarm.positions)
        update_bests(swarm, problem.profile.canonical(raw))
        weights = normalize_fitness(raw, problem.profile)
        x_hat = weighted_mean_optimum(swarm.positions, weights)
        shifted = clamp_to_bounds(swarm.positions + (x_hat - space.center), space)
        raw_shifted = _evaluate(state, problem.profile, shifted)
        shifted_weights = normalize_fitness(raw_shifted, problem.profile)
        xi = weighted_mean_optimum(shifted, shifted_weights)
        predicted = _spo_predict(state, config, weights, noise)
        state.belief = kf_measurement_update(
            predicted, xi, None, noise, positions=shifted, weights=shifted_weights
        )
        _track_best_motion(state, first)
        first = False
        state.history.append((swarm.global_best.copy(), state.belief.mean.copy()))
        state.prev_positions = swarm.positions.copy()
        step_guided(state, config, gen)
        swarm.iteration += 1
        reason = check_stop(state, config)
        if reason is not None:
            break
    return _record(state, config, problem, _read_out(state, config, problem),
                   started, _seed_tag(rng), reason)


def run_nested_ukfpso(problem, config=None, rng=0, noise=None, noise2=None):
    """Two chained filters fusing two fitness measures on one swarm.

    Each particle is scored by both measures every iteration. The first
    filter predicts and corrects against the first measure's weighted
    mean; its posterior is taken verbatim as the second filter's prior,
    which corrects against the second measure's weighted mean (no extra
    process noise in between). Personal and global bests are ranked by the
    first measure.
    """
    if problem.profile2 is None:
        raise ValueError("nested mode needs a problem with a second fitness profile")
    config = config or PsoConfig.for_mode("nested_ukf")
    started = time.perf_counter()
    gen = as_generator(rng)
    noise = noise or NoiseConfig.for_space(problem.space)
    noise2 = noise2 or NoiseConfig(process=None, observation=noise.observation)
    state = _init_state(problem, config, gen, with_belief=True)
    swarm = state.swarm
    first = True
    while True:
        raw1 = _evaluate(state, problem.profile, swarm.positions)
        raw2 = _evaluate(state, problem.profile2, swarm.positions)
        update_bests(swarm, problem.profile.canonical(raw1))
        w1 = normalize_fitness(raw1, problem.profile)
        w2 = normalize_fitness(raw2, problem.profile2)
        xi1 = weighted_mean_optimum(swarm.positions, w1)
        xi2 = weighted_mean_optimum(swarm.positions, w2)
        predicted = kf_time_update(state.belief, None, noise)
        inner = kf_measurement_update(
            predicted, xi1, None, noise, positions=swarm.positions, weights=w1
        )
        state.belief = kf_measurement_update(
            inner, xi2, None, noise2, positions=swarm.positions, weights=w2
        )
        _track_best_motion(state, first)
        first = False
        state.history.append((swarm.global_best.copy(), state.belief.mean.copy()))
        step_guided(state, config, gen)
        swarm.iteration += 1
        reason = check_stop(state, config)
        if reason is not None:
            break
    return _record(state, config, problem, _read_out(state, config, problem),
                   started, _seed_tag(rng), reason)


_RUNNERS = {
    "original": run_original,
    "lds_kf": run_lds_kfpso,
    "spo_ukf": run_spo_ukfpso,
    "nested_ukf": run_nested_ukfpso,
}


def run_trial(problem, config, rng=0, **kwargs):
    """Dispatch one run by config mode."""
    return _RUNNERS[config.mode](problem, config, rng, **kwargs)


class BaseSwarmOptimizer(BaseEstimator):
    """Scikit-learn-style wrapper around one optimizer mode.

    Hyperparameters live in the constructor (so ``get_params`` /
    ``set_params`` / ``clone`` compose with sklearn tooling); the work
    happens in :meth:`optimize`, which returns a :class:`TrialRecord` and
    stores the fitted results on underscore attributes.
    """

    _mode = None

    def __init__(self, swarm_size=30, inertia=0.7, cognitive=2.0, social=1.0,
                 guide=1.0, max_iterations=300, tol=1e-6, spo_transition="identity",
                 seed=0):
        self.swarm_size = swarm_size
        self.inertia = inertia
        self.cognitive = cognitive
        self.social = social
        self.guide = guide
        self.max_iterations = max_iterations
        self.tol = tol
        self.spo_transition = spo_transition
        self.seed = seed

    def _config(self):
        return PsoConfig(
            inertia=self.inertia,
            cognitive=self.cognitive,
            social=self.social,
            guide=self.guide,
            swarm_size=self.swarm_size,
            max_iterations=self.max_iterations,
            tol=self.tol,
            mode=self._mode,
            spo_transition=self.spo_transition,
        )

    def optimize(self, problem, seed=None, **kwargs):
        """Run the optimizer on an :class:`OptimizationProblem`.

        ``seed`` may be an int, an RngStream, or a Generator; it defaults
        to the constructor seed.
        """
        rng = self.seed if seed is None else seed
        record = run_trial(problem, self._config(), rng, **kwargs)
        self.result_ = record
        self.best_point_ = record.returned_point
        self.n_iterations_ = record.iterations
        self.n_evaluations_ = record.evaluations
        return record


class OriginalPso(BaseSwarmOptimizer):
    """Plain PSO baseline with the conventional social weight of 2."""

    _mode = "original"

    def __init__(self, swarm_size=30, inertia=0.7, cognitive=2.0, social=2.0,
                 guide=1.0, max_iterations=300, tol=1e-6, spo_transition="identity",
                 seed=0):
        super().__init__(swarm_size, inertia, cognitive, social, guide,
                         max_iterations, tol, spo_transition, seed)


class LdsKfPso(BaseSwarmOptimizer):
    """Linear-Kalman-guided PSO."""

    _mode = "lds_kf"


class SpoUkfPso(BaseSwarmOptimizer):
    """Unscented-Kalman-guided PSO with the shifted-cloud observation."""

    _mode = "spo_ukf"


class NestedUkfPso(BaseSwarmOptimizer):
    """Chained two-measure unscented-Kalman-guided PSO."""

    _mode = "nested_ukf"


OPTIMIZER_CLASSES = {
    "original": OriginalPso,
    "lds-kf": LdsKfPso,
    "spo-ukf": SpoUkfPso,
    "nested-ukf": NestedUkfPso,
}
