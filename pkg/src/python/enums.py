"""
Enumerations for the hsdm toolkit using Python 3.11+ StrEnum.

This module defines string-based enumerations for the names that appear
in problem specs, CLI flags and reports.
"""

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):  # type: ignore[no-redef]
        """Backport of enum.StrEnum: str() and format() yield the value."""

        __str__ = str.__str__
        __format__ = str.__format__


class Scheme(StrEnum):
    """Iteration schemes.

    Attributes:
        HSDM_SINGLE: u_{n+1} = (1-l)Tu_n + l G(Tu_n) with one nonexpansive T
        HSDM_CYCLIC: same step cycling through T_1..T_N
        VISCOSITY: u_{n+1} = l f(.) + (1-l)Tu_n
        PROJ_GRAD: u_{n+1} = P_S(u_n - mu F(u_n))
    """
    HSDM_SINGLE = "hsdm_single"
    HSDM_CYCLIC = "hsdm_cyclic"
    VISCOSITY = "viscosity"
    PROJ_GRAD = "proj_grad"


class ViscosityOrdering(StrEnum):
    """Argument fed to the viscosity map f.

    Attributes:
        POINT: f(u_n)
        IMAGE: f(Tu_n)
    """
    POINT = "point"
    IMAGE = "image"


class ClassKind(StrEnum):
    """Claimed Lipschitz class of an operator.

    Attributes:
        NONEXPANSIVE: Lipschitz constant 1
        CONTRACTION: Lipschitz constant tau < 1
    """
    NONEXPANSIVE = "nonexpansive"
    CONTRACTION = "contraction"


class ModulusKind(StrEnum):
    """Schedule moduli.

    Attributes:
        H: lambda_n >= 1/h(n)
        CHI: rate of lambda_n -> 0
        PHI1: divergence of the partial sums
        PHI2: relative difference condition
        PHI3: product modulus
        PHI3_MONO: monotonized product modulus
        PHI4: tail-sum modulus of period N
    """
    H = "h"
    CHI = "chi"
    PHI1 = "phi1"
    PHI2 = "phi2"
    PHI3 = "phi3"
    PHI3_MONO = "phi3_mono"
    PHI4 = "phi4"


class CertifyMode(StrEnum):
    """Which metastability or regularity bound to evaluate.

    Attributes:
        SINGLE: Xi from h and chi
        COROLLARY: Cauchy form Xi(eps/2, n + g(n))
        FULL: bound from phi1, phi2 with the shift c
        QUANT: delta variant of FULL with the VIP accuracy eps'
        FAMILY: cyclic family bound
        ASY: asymptotic regularity rate
    """
    SINGLE = "single"
    COROLLARY = "corollary"
    FULL = "full"
    QUANT = "quant"
    FAMILY = "family"
    ASY = "asy"


class VerifySuite(StrEnum):
    """Verification suites selectable from the CLI.

    Attributes:
        LEMMAS: randomized lemma checks
        ADVERSARY: tower postcondition audits against counterfunction strategies
        CONFINEMENT: ball confinement of iterates and resolvent points
        ALL: every suite
    """
    LEMMAS = "lemmas"
    ADVERSARY = "adversary"
    CONFINEMENT = "confinement"
    ALL = "all"


class LemmaKind(StrEnum):
    """Lemma checks available in the harness.

    Attributes:
        SWITCH: inner-product switch from near-projection
        VIP_MODULUS: continuity of the VIP residual
        CORE_SINGLE: resolvent path proximity
        CORE_SINGLE_DIAG: same with exact fixed point
        PERM: permuted compositions under the condition modulus
        FACT_SUM: weighted tail sum bounded by one
        SUBSEQ: index-switch property of g_{u,eps}
        Z_T: near fixed points along the segment toward G
    """
    SWITCH = "switch"
    VIP_MODULUS = "vip_modulus"
    CORE_SINGLE = "core_single"
    CORE_SINGLE_DIAG = "core_single_diag"
    PERM = "perm"
    FACT_SUM = "fact_sum"
    SUBSEQ = "subseq"
    Z_T = "z_t"


class AdversaryStrategy(StrEnum):
    """Counterfunction strategies.

    Attributes:
        ANTICIPATING: J/V/Delta built from the resolvent path
        BRANCH: V' choosing between V and a fixed challenge point
        RANDOM: seeded pseudo-random challenge points
        CONSTANT: always the witness
    """
    ANTICIPATING = "anticipating"
    BRANCH = "branch"
    RANDOM = "random"
    CONSTANT = "constant"


class CertificateStatus(StrEnum):
    """How far a certificate got.

    Attributes:
        BOUND_EVALUATED: bound is an exact natural number
        BOUND_SYMBOLIC: budget exceeded, expression retained
        VERIFIED_EMPIRICALLY: bound evaluated and witness <= bound measured
    """
    BOUND_EVALUATED = "bound_evaluated"
    BOUND_SYMBOLIC = "bound_symbolic"
    VERIFIED_EMPIRICALLY = "verified_empirically"


class ConfinementMode(StrEnum):
    """Ball confinement hypotheses.

    Attributes:
        DIAM_SINGLE: single map, start within d/2 of the witness
        DIAM_FAMILY: cyclic family, start within d/4 of the witness
    """
    DIAM_SINGLE = "diam_single"
    DIAM_FAMILY = "diam_family"


class OmegaReading(StrEnum):
    """Denominator reading for the family core threshold.

    Attributes:
        PROOF: g~(phi3(...)) - n0
        PRINTED: g~(phi3(...) - n0)
    """
    PROOF = "proof"
    PRINTED = "printed"


class TowerReading(StrEnum):
    """Level indexing of the k-tower.

    Attributes:
        PROOF: f_i = f~^(n^(i0 - i)); k_0 = f~_0^(n)(1), k_i = f~_i^(n)(k_{i-1})
        PRINTED: f_i = f~^(n^i); k_0 = f~_0^(n)(1), k_{i+1} = f~_i^(n)(k_i)
    """
    PROOF = "proof"
    PRINTED = "printed"


class LadderReading(StrEnum):
    """How the epsilon-projection walks the psi-ladder.

    Attributes:
        LITERAL: candidates u_1..u_n_eps checked against psi^{u_i}_{n_eps - i},
            stepping with psi_{n_eps - i - 1}
        DOUBLING: restarts at depths 1, 2, 4, ... up to budgets.maxPsiDepth,
            checking and stepping with psi_{depth - i + 1}
    """
    LITERAL = "literal"
    DOUBLING = "doubling"
