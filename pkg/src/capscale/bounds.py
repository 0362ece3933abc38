"""Guarantee constants and competitive-ratio bounds for the adaptive controller.

For rates (r1, r2, R1, R2) the guarantee is the minimum of two regimes: the
Optimistic Competitive Ratio (OCR) scales with the prediction accuracy eta,
the Pessimistic Competitive Ratio (PCR) caps the damage of arbitrarily bad
advice:

    CR(eta) <= min((1 + (sqrt(2*omega*beta) + theta) * eta) * OCR, PCR).

Double precision is used throughout, with an exact rational mirror for the
identities that must hold exactly (the tuned online tuple gives OCR = PCR = 5).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .dynamics import CostWeights
from .policies import ABCSParams, confidence_params  # noqa: F401  (re-export)


@dataclass(frozen=True)
class GuaranteeConstants:
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    ocr: float
    pcr: float
    params: ABCSParams
    ordering_violated: bool = False

    def as_dict(self) -> dict:
        return {
            "r1": self.params.r1, "r2": self.params.r2,
            "R1": self.params.R1, "R2": self.params.R2,
            "c1": self.c1, "c2": self.c2, "c3": self.c3,
            "c4": self.c4, "c5": self.c5, "c6": self.c6,
            "ocr": self.ocr, "pcr": self.pcr,
            "ordering_violated": self.ordering_violated,
        }


def guarantee_constants(params: ABCSParams, allow_unordered: bool = False) -> GuaranteeConstants:
    """Evaluate c1..c6 and the OCR/PCR envelope for a rate tuple.

    All four rates must be positive. Tuples with R1 < r1 or R2 < r2 are
    rejected unless allow_unordered is set, in which case the constants are
    still computed and the violation is flagged on the result.
    """
    if not params.all_positive:
        raise ValueError(f"all rates must be positive for guarantees, got {params}")
    violated = not params.ordering_ok
    if violated and not allow_unordered:
        raise ValueError(f"rate ordering violated (need R1 >= r1 and R2 >= r2): {params}")
    r1, r2, R1, R2 = params.r1, params.r2, params.R1, params.R2
    c1 = 1.0 + 1.0 / r1 + 1.0 / R2
    c3 = 1.0 + 1.0 / R1 + 1.0 / R2
    c2 = (c1 * math.sqrt(1.0 + 2.0 * r1) - c1 + c3) / math.sqrt(1.0 + 2.0 * R1)
    c4 = 1.0 + r2 + r2 / R1 + c2 * r2
    c5 = 1.0 + 1.0 / r1 + 1.0 / r2
    c6 = c5 * math.sqrt(R1 / r1)
    ocr = max(c1 * r1, c2 * R1 / math.sqrt(1.0 + 2.0 * R1), c2 + c3, c4)
    pcr = max(c5 * R1, 2.0 * c6, 2.0 * c6 * R2 + 1.0 - R2 / r2)
    return GuaranteeConstants(c1, c2, c3, c4, c5, c6, ocr, pcr, params, violated)


def guarantee_constants_exact(params: ABCSParams) -> tuple[Fraction, Fraction]:
    """(OCR, PCR) in exact rational arithmetic for tuples with R1 = r1.

    With R1 = r1 the square roots in c2 cancel (c2 = c1 = c3) and c6 = c5, so
    every candidate except c2*R1/sqrt(1+2*R1) is rational; that one is compared
    through its square. Raises when R1 != r1 or when the irrational candidate
    attains the maximum.
    """
    r1, r2 = Fraction(params.r1), Fraction(params.r2)
    R1, R2 = Fraction(params.R1), Fraction(params.R2)
    if R1 != r1:
        raise ValueError("exact constants are only available when R1 = r1")
    if min(r1, r2, R1, R2) <= 0:
        raise ValueError("all rates must be positive")
    c1 = 1 + 1 / r1 + 1 / R2
    c2 = c1
    c3 = c1
    c4 = 1 + r2 + r2 / R1 + c2 * r2
    c5 = 1 + 1 / r1 + 1 / r2
    c6 = c5
    ocr = max(c1 * r1, c2 + c3, c4)
    if (c2 * R1) ** 2 > ocr ** 2 * (1 + 2 * R1):
        raise ValueError("OCR attained by an irrational candidate; no exact value")
    pcr = max(c5 * R1, 2 * c6, 2 * c6 * R2 + 1 - R2 / r2)
    return ocr, pcr


def error_scale(weights: CostWeights) -> float:
    """Coefficient sqrt(2*omega*beta) + theta multiplying eta in the bound."""
    return math.sqrt(2.0 * weights.omega * weights.beta) + weights.theta


def cr_bound(eta: float, constants: GuaranteeConstants, weights: CostWeights) -> float:
    """min((1 + (sqrt(2 omega beta) + theta) eta) * OCR, PCR); PCR at eta = inf."""
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    if math.isinf(eta):
        return constants.pcr
    return min((1.0 + error_scale(weights) * eta) * constants.ocr, constants.pcr)


def crossover_eta(constants: GuaranteeConstants, weights: CostWeights) -> float:
    """Accuracy level where the optimistic branch meets the pessimistic cap."""
    return (constants.pcr - constants.ocr) / (error_scale(weights) * constants.ocr)


@dataclass(frozen=True)
class ExpectedCrReport:
    expected: float
    zeta: float
    optimistic_mass: float
    decomposition: tuple | None  # (2*OCR*E[eta; eta<=zeta], OCR*P, PCR*P) when normalized


def expected_cr(eta_samples: Iterable[Sequence[float]], constants: GuaranteeConstants,
                weights: CostWeights) -> ExpectedCrReport:
    """Expected competitive ratio over a weighted sample of accuracy levels.

    eta_samples is a sequence of (eta, weight) with weights summing to one.
    zeta = (PCR - OCR) / (2 OCR) is the crossover accuracy in the normalized
    case where sqrt(2 omega beta) + theta = 2; the three-term decomposition is
    reported only in that case (it then sums to the expectation exactly).
    """
    samples = [(float(e), float(w)) for e, w in eta_samples]
    if not samples:
        raise ValueError("empty sample set")
    total = sum(w for _, w in samples)
    if any(w < 0 for _, w in samples) or abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights must be nonnegative and sum to 1, got {total}")
    expected = sum(w * cr_bound(e, constants, weights) for e, w in samples)
    zeta = (constants.pcr - constants.ocr) / (2.0 * constants.ocr)
    scale = error_scale(weights)
    optimistic_mass = sum(w for e, w in samples
                          if e <= crossover_eta(constants, weights))
    decomposition = None
    if abs(scale - 2.0) <= 1e-12:
        below = [(e, w) for e, w in samples if e <= zeta]
        t1 = 2.0 * constants.ocr * sum(w * e for e, w in below)
        t2 = constants.ocr * sum(w for _, w in below)
        t3 = constants.pcr * (1.0 - sum(w for _, w in below))
        decomposition = (t1, t2, t3)
    return ExpectedCrReport(expected, zeta, optimistic_mass, decomposition)


def desiderata(constants: GuaranteeConstants, weights: CostWeights,
               eta_grid: Sequence[float] = (0.0, 0.1, 0.5, 1.0, 5.0, math.inf)) -> dict:
    """Consistency / robustness / competitiveness summary of a rate tuple."""
    return {
        "consistency": constants.ocr,
        "robustness": {
            "eta": [("inf" if math.isinf(e) else e) for e in eta_grid],
            "cr": [cr_bound(e, constants, weights) for e in eta_grid],
        },
        "competitiveness": constants.pcr,
    }
