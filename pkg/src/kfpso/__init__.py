"""Kalman-filter-guided particle swarm optimization.

Plain PSO plus three variants that maintain a Gaussian belief over the
hidden optimum and steer the swarm toward its mean, with a benchmark
harness and a synthetic rigid-registration demo.
"""

from .benchmarks import (
    BENCHMARKS,
    BenchmarkFunction,
    ShiftedProblem,
    error_norm,
    eval_benchmark,
    get_benchmark,
    make_shifted_problem,
)
from .core import (
    Particle,
    RngStream,
    SearchSpace,
    Swarm,
    as_generator,
    clamp_to_bounds,
    init_swarm,
    update_bests,
)
from .estimator import (
    FitnessProfile,
    GaussianFitDiagnostic,
    fit_gaussian_diagnostic,
    normalize_fitness,
    weighted_mean_optimum,
)
from .harness import (
    ExperimentPlan,
    SummaryRow,
    emit_csv,
    run_experiment,
    run_registration_demo,
    selftest,
)
from .kalman import (
    GaussianBelief,
    NoiseConfig,
    SigmaSet,
    initial_belief,
    kf_measurement_update,
    kf_time_update,
    sigma_points_from_particles,
    sigma_points_standard,
    ut_propagate,
)
from .optimizers import (
    LdsKfPso,
    NestedUkfPso,
    OptimizationProblem,
    OptimizerState,
    OriginalPso,
    PsoConfig,
    SpoUkfPso,
    TrialRecord,
    adapt_accelerations,
    check_stop,
    run_lds_kfpso,
    run_nested_ukfpso,
    run_original,
    run_spo_ukfpso,
    run_trial,
    step_guided,
    step_original,
)
from .registration import (
    Image2D,
    LandmarkSet,
    RigidTransform2D,
    TreStats,
    gradient_similarity,
    make_synthetic_pair,
    mutual_information,
    otsu_threshold,
    read_landmarks,
    read_pgm,
    select_roi,
    target_registration_error,
    write_landmarks,
    write_pgm,
)

__version__ = "0.1.0"
