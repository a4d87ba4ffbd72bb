"""synclab: master-slave synchronization of dynamical systems.

Built-in systems (a real-analytic polar plane map, Hénon, Lorenz, linear
maps and flows), product structures, empirical synchronization trials,
exact linear decisions, annulus-map checks and fixed-point certificates of
non-synchronization.
"""

__version__ = "0.1.0"

from .systems import (  # noqa: E402
    DivergedError,
    DomainError,
    HenonMap,
    IntegratorConfig,
    LinearSystem,
    LorenzSystem,
    PlanarPolarMap,
    Trajectory,
    classify_radial_fixed_points,
    integrate,
    orbit,
    system_from_config,
    validate_homeomorphism,
)
from .structure import DriveSequence, ProductStructure  # noqa: E402
from .sync import (  # noqa: E402
    TrialConfig,
    absolute_sync_test,
    conditional_lyapunov,
    lorenz_response_trial,
    run_pair,
    sync_test,
)
from .linear import decide, decide_flow, decide_map, density_experiment, search_structure  # noqa: E402
from .annulus import (  # noqa: E402
    AnnulusAdapter,
    Lift,
    condition_R_report,
    lemma1_arc_verifier,
    lemma2_verifier,
    type_report,
)
from .certifier import (  # noqa: E402
    PerturbationSpec,
    certify,
    count_fixed_points,
    estimate_critical_epsilon,
    find_fixed_point,
    make_perturbation,
    perturbation_sweep,
    slave_section,
)
from .kernels import BACKEND  # noqa: E402

__all__ = [
    "__version__",
    "absolute_sync_test",
    "AnnulusAdapter",
    "BACKEND",
    "certify",
    "classify_radial_fixed_points",
    "condition_R_report",
    "conditional_lyapunov",
    "count_fixed_points",
    "decide",
    "decide_flow",
    "decide_map",
    "density_experiment",
    "DivergedError",
    "DomainError",
    "DriveSequence",
    "estimate_critical_epsilon",
    "find_fixed_point",
    "HenonMap",
    "integrate",
    "IntegratorConfig",
    "lemma1_arc_verifier",
    "lemma2_verifier",
    "Lift",
    "LinearSystem",
    "lorenz_response_trial",
    "LorenzSystem",
    "make_perturbation",
    "orbit",
    "perturbation_sweep",
    "PerturbationSpec",
    "PlanarPolarMap",
    "ProductStructure",
    "run_pair",
    "search_structure",
    "slave_section",
    "sync_test",
    "system_from_config",
    "Trajectory",
    "TrialConfig",
    "type_report",
    "validate_homeomorphism",
]
