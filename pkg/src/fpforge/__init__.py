"""fpforge: compile equilibrium problems into algebraic fixed-point circuits,
locate fixed points numerically, and verify the equilibria independently."""

from .circuit import (
    Box,
    Circuit,
    CircuitBuilder,
    DivisionByZero,
    InvalidWiring,
    check_well_defined,
    evaluate,
    evaluate_exact,
    from_text,
    inline,
    to_text,
)
from .optgate import (
    ConvexProgramSpec,
    CPParams,
    SlaterViolation,
    build_lp_opt_gate,
    build_opt_gate,
    check_explicit_slater,
    pdc_supergradient,
)
from .pseudogate import Pseudogate, fixed_aux_solutions_1d, heaviside
from .solver import (
    DimensionTooLarge,
    DivergedToNaN,
    FixedPointReport,
    SolverConfig,
    grid_fixed_points,
    iterate,
    multistart,
)
from .verify import (
    LPInstance,
    LPResult,
    SizeLimit,
    VerificationReport,
    check_ad_equilibrium,
    check_ccc,
    check_envy_free,
    check_eps_proper,
    check_hz,
    check_kkm,
    check_nash,
    check_stochastic_stationary,
    exact_lp_oracle,
)

__version__ = "0.1.0"
