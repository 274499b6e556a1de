"""Lower each supported problem family to a fixed-point circuit on a box."""

from ..problems import (
    ADConsumer,
    ADFirm,
    ADMarketSpec,
    BapatSpec,
    CCCSystem,
    CakeSpec,
    ConcaveGameSpec,
    ConcavePlayer,
    ConditionalConstraint,
    ConvexSet,
    GameNF,
    HZSpec,
    InstanceError,
    KKMSpec,
    PDCFunction,
    StochasticGameSpec,
)
from .base import Compiled, CompileError
from .cake import bapat_to_cake, check_hungry, compile_cake, compile_kkm
from .ccc import compile_ccc
from .cp import compile_cp, compile_lp
from .games import (
    compile_concave,
    compile_eps_proper,
    compile_nash,
    compile_stochastic,
    eta_weights,
    myerson_witness,
)
from .markets import MissingWitness, compile_ad_market, compile_hz

__all__ = [
    "ADConsumer",
    "ADFirm",
    "ADMarketSpec",
    "BapatSpec",
    "CCCSystem",
    "CakeSpec",
    "Compiled",
    "CompileError",
    "ConcaveGameSpec",
    "ConcavePlayer",
    "ConditionalConstraint",
    "ConvexSet",
    "GameNF",
    "HZSpec",
    "InstanceError",
    "KKMSpec",
    "MissingWitness",
    "PDCFunction",
    "StochasticGameSpec",
    "bapat_to_cake",
    "check_hungry",
    "compile_ad_market",
    "compile_cake",
    "compile_ccc",
    "compile_concave",
    "compile_cp",
    "compile_eps_proper",
    "compile_hz",
    "compile_kkm",
    "compile_lp",
    "compile_nash",
    "compile_stochastic",
    "eta_weights",
    "myerson_witness",
]
