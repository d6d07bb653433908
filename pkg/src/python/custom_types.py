"""
Type definitions for the hsdm toolkit.

This module defines common types, aliases, and TypedDict structures
used throughout the codebase.
"""

from typing import Any, Callable, TypedDict

import numpy as np
import numpy.typing as npt

# NumPy array type aliases
FloatArray = npt.NDArray[np.float64]  # Dense real vectors and matrices
Point = npt.NDArray[np.float64]       # One element of the Hilbert space model (1-D)
PointArray = npt.NDArray[np.float64]  # Stacked points, one per row

# Function-valued arguments of the solution functionals
PhiFn = Callable[[Point], float]
DeltaFn = Callable[[Point, PhiFn], float]
VFn = Callable[[Point, PhiFn], Point]

# Moduli: (d, eps) -> positive real, and index functions on naturals
ModulusFn = Callable[[int, float], float]
SeqFn = Callable[[int], int]


# Configuration TypedDict definitions
class NumericsConfig(TypedDict, total=False):
    """Tolerance section."""
    checkSlack: float
    predicateSlack: float
    lipschitzSlack: float
    monotoneSlack: float
    witnessTolerance: float
    fixedSetTolerance: float
    gramSchmidtPivot: float
    mpDigits: int


class BudgetConfig(TypedDict, total=False):
    """Budget section."""
    evaluations: int
    applications: int
    magnitudeBits: int
    anticipatingSearch: int
    maxPsiDepth: int


class IterationConfig(TypedDict, total=False):
    """Inner solver section."""
    resolventTolerance: float
    resolventCapFactor: int
    innerToleranceDivisor: int
    fixedSetMaxSteps: int
    ladderReading: str


class VerifyConfig(TypedDict, total=False):
    """Verification harness section."""
    seed: int
    samples: int
    fuzzCases: int
    modulusCap: int


class TranscriptEntry(TypedDict):
    """One recorded counterfunction call."""
    level: int
    point: str
    kind: str
    output: Any


class CheckPayload(TypedDict, total=False):
    """Serialized form of a single verification check."""
    name: str
    passed: bool
    inconclusive: bool
    margin: float
    seed: int
    details: dict[str, Any]
