"""Hard instances, oracles and a zero-respecting harness for
nonconvex-strongly-concave min-max lower bounds."""

from .algorithms import (
    ALGORITHMS,
    BoxDomain,
    TrajectoryRecord,
    ZeroRespectingViolation,
    gda_step,
    make_algorithm,
    measure_fm_stationarity,
    project,
    run_zero_respecting,
    stationarity,
)
from .instances import (
    ChainPoint,
    Constants,
    DomainError,
    HardChain,
    InstanceSpec,
    NesterovInstance,
    ScaledInstance,
    argmax_y,
    build_scaled,
    estimate_constants,
    eval_fm,
    eval_nc,
    eval_ncsc_sg_unscaled,
    eval_ncsc_unscaled,
    eval_sc,
)
from .oracles import (
    DeterministicOracle,
    OracleResponse,
    StochasticOracle,
    StochasticOracleConfig,
    deterministic_oracle,
    next_coordinate,
    stochastic_oracle,
    verify_probability_p,
)
from .special_functions import BOUNDS, SmoothBounds, phi, phi_prime, psi, psi_prime
from .tridiagonal import (
    HmCoefficients,
    RegimeError,
    TridiagOperator,
    Variant,
    first_column_closed_form,
    hm_coefficients,
    solve,
)

__version__ = "0.1.0"
