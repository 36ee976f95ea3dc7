from enum import Enum


class BackendKind(str, Enum):
    INTEGER_MATRIX = "integer_matrix"
    CYCLIC = "cyclic"
    FREE_ABELIAN = "free_abelian"
    ABELIAN = "abelian"
    SEMIDIRECT = "semidirect"
    LAMPLIGHTER = "lamplighter"
    FREE_GROUP = "free_group"


class HarmonicCase(str, Enum):
    FINITE_GROUP = "finite_group"
    NON_AMENABLE = "case1_sign_kernel"
    AMENABLE = "case2_spectral"


class DichotomyBranch(str, Enum):
    PERIODIC = "periodic"
    GROWTH = "growth"


class StepKind(str, Enum):
    FINITE_INDEX = "step1_finite_index"
    CYCLIC_KERNEL = "step2_cyclic_kernel"


class TerminalState(str, Enum):
    TRIVIAL = "trivial"
    FINITE = "finite"
    BUDGET = "budget"
    STALLED = "stalled"
    UNCERTIFIED = "uncertified"
