from .base import CalcResult, Calculator, batch_evaluate, failed_result
from .external import ExternalCalcConfig, ExternalCalculator, structure_hash
from .surrogate import (
    MissingPairParameters,
    SurrogateParams,
    SurrogatePotential,
    default_surrogate_params,
    surrogate_evaluate,
)

__all__ = [
    "CalcResult",
    "Calculator",
    "ExternalCalcConfig",
    "ExternalCalculator",
    "MissingPairParameters",
    "SurrogateParams",
    "SurrogatePotential",
    "batch_evaluate",
    "default_surrogate_params",
    "failed_result",
    "structure_hash",
    "surrogate_evaluate",
]
