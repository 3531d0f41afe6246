"""Fast built-in sanity checks behind the ``kfpso selftest`` subcommand.

Each check is independent of the code path it validates where that
matters (closed forms, brute-force recomputation), raises AssertionError
on failure, and runs in well under a second.
"""

import numpy as np

from .benchmarks import BENCHMARKS, eval_benchmark
from .core import RngStream, SearchSpace, init_swarm
from .estimator import weighted_mean_optimum
from .kalman import (
    GaussianBelief,
    kf_measurement_update,
    kf_time_update,
    sigma_points_standard,
    ut_propagate,
)
from .registration import RigidTransform2D, histogram_entropy, make_synthetic_pair, mutual_information


def check_benchmark_ground_truths():
    assert abs(eval_benchmark("ackley", np.zeros(5))) < 1e-9
    assert abs(eval_benchmark("griewank", np.zeros(4))) < 1e-12
    assert abs(eval_benchmark("modulus_sum", np.zeros(3)) - 60.0) < 1e-12
    assert abs(eval_benchmark("rastrigin", np.zeros(2)) - 80.0) < 1e-12
    schwefel = eval_benchmark("schwefel", np.full(2, 420.968746))
    assert abs(schwefel - (5000.0 - 2 * 418.9829)) < 1e-3


def check_sampling_dominance():
    rng = np.random.default_rng(7)
    for name, fn in BENCHMARKS.items():
        if name == "step":
            continue
        dim = 4
        samples = rng.uniform(fn.default_lower, fn.default_upper, (10_000, dim))
        best_value = fn.eval(fn.ground_truth(dim))
        assert fn.eval(samples).min() >= best_value - 1e-9, name


def check_ut_affine_oracle():
    rng = np.random.default_rng(11)
    dim = 3
    a = rng.standard_normal((dim, dim))
    b = rng.standard_normal(dim)
    root = rng.standard_normal((dim, dim))
    belief = GaussianBelief(rng.standard_normal(dim), root @ root.T + np.eye(dim))
    sigma = sigma_points_standard(belief, kappa=3.0 - dim)
    out = ut_propagate(sigma, lambda p: a @ p + b)
    assert np.allclose(out.mean, a @ belief.mean + b, atol=1e-8)
    assert np.allclose(out.cov, a @ belief.cov @ a.T, atol=1e-8)


def check_sequential_updates_match_wls():
    belief = GaussianBelief(np.array([0.0]), np.array([[1e6]]))
    obs = [1.4, 2.2]
    post = belief
    for z in obs:
        post = kf_measurement_update(post, np.array([z]), noise=1.0)
    # equal-noise WLS of both observations with a vague prior -> plain mean
    assert abs(post.mean[0] - np.mean(obs)) < 1e-4


def check_sigma_weights():
    belief = GaussianBelief(np.zeros(4), np.eye(4))
    sigma = sigma_points_standard(belief, kappa=3.0 - 4)
    assert abs(sigma.weights.sum() - 1.0) < 1e-12
    assert np.allclose(sigma.mean(), belief.mean, atol=1e-10)
    assert np.allclose(sigma.covariance(), belief.cov, atol=1e-8)


def check_weighted_mean_hull():
    rng = np.random.default_rng(3)
    for _ in range(50):
        pts = rng.uniform(-5, 5, (6, 3))
        w = rng.uniform(0, 1, 6)
        est = weighted_mean_optimum(pts, w)
        assert np.all(est >= pts.min(axis=0) - 1e-12)
        assert np.all(est <= pts.max(axis=0) + 1e-12)


def check_mi_self_identity():
    rng = np.random.default_rng(5)
    ref, _, _ = make_synthetic_pair(rng, RigidTransform2D(), noise=0.0)
    mi = mutual_information(ref, ref, RigidTransform2D(), bins=32)
    assert abs(mi - histogram_entropy(ref.intensities.ravel(), 32)) < 1e-12


def check_init_determinism():
    space = SearchSpace.cube(-5.12, 5.12, 6)
    a = init_swarm(space, 12, RngStream(99, 4).generator())
    b = init_swarm(space, 12, RngStream(99, 4).generator())
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.velocities, b.velocities)


def check_kf_identity_update():
    belief = GaussianBelief(np.array([2.0]), np.array([[1.0]]))
    pred = kf_time_update(belief, noise=0.5)
    assert abs(pred.mean[0] - 2.0) < 1e-15 and abs(pred.cov[0, 0] - 1.5) < 1e-15
    post = kf_measurement_update(GaussianBelief([0.0], [[1.0]]), [1.0], noise=1.0)
    assert abs(post.mean[0] - 0.5) < 1e-12 and abs(post.cov[0, 0] - 0.5) < 1e-12


CHECKS = [
    ("benchmark ground truths", check_benchmark_ground_truths),
    ("benchmark sampling dominance", check_sampling_dominance),
    ("unscented transform affine oracle", check_ut_affine_oracle),
    ("sequential updates match least squares", check_sequential_updates_match_wls),
    ("sigma point weights and moments", check_sigma_weights),
    ("weighted mean stays in the hull", check_weighted_mean_hull),
    ("mutual information self identity", check_mi_self_identity),
    ("seeded initialization determinism", check_init_determinism),
    ("scalar kalman textbook cases", check_kf_identity_update),
]
