"""Exception hierarchy. Every error carries a stable machine-readable ``code``."""

from __future__ import annotations


class GZError(Exception):
    code = "ERROR"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details


class NotHermitianError(GZError):
    code = "NOT_HERMITIAN"


class NotPositiveDefiniteError(GZError):
    code = "NOT_POSITIVE_DEFINITE"


class NonFiniteError(GZError):
    code = "NON_FINITE"


class OverflowRiskError(GZError):
    code = "OVERFLOW"


class BranchCutError(GZError):
    code = "BRANCH_CUT"


class SingularBlockError(GZError):
    code = "SINGULAR_BLOCK"


class SingularValueError(GZError):
    code = "SINGULAR_VALUE"


class IllConditionedError(GZError):
    code = "ILL_CONDITIONED_EIGENBASIS"


class DegenerateIrregularTypeError(GZError):
    code = "DEGENERATE_IRREGULAR_TYPE"


class ResonantError(GZError):
    code = "RESONANT"


class StepLimitError(GZError):
    code = "STEP_LIMIT"


class MatchingDivergenceError(GZError):
    code = "MATCHING_DIVERGENCE"


class DegenerateError(GZError):
    code = "DEGENERATE"


class IndexRangeError(GZError, IndexError):
    code = "INDEX"


class TPrimeViolationError(GZError):
    code = "T_PRIME_VIOLATION"


class ConfigError(GZError):
    code = "CONFIG"
