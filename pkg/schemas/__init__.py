from .difficulty import (
    DifficultyCertificate,
    DifficultyResult,
    DifficultyStatus,
    ExhaustionRecord,
    SearchBudget,
)
from .dynamics import (
    BoundMode,
    ClosureOutcome,
    ClosureStatus,
    EscapeCertificate,
    HalfPlaneStrip,
    InfectionState,
    Line,
    OneDFamily,
    Rectangle,
    Torus,
    TranslateRepetition,
)
from .family import FamilyMetrics, FamilyName, Rule, UpdateFamily
from .geometry import Arc, ArcKind, ArcSet, Direction, LatticePoint, Side
from .montecarlo import CurvePoint, PcEstimate
from .reduction import ReductionReport, ReductionVerification, SetCoverInstance
from .report import CommandReport
from .stability import Classification, StabilityProfile

__all__ = [
    # Geometry schemas
    "LatticePoint",
    "Direction",
    "Side",
    "ArcKind",
    "Arc",
    "ArcSet",
    # Family schemas
    "FamilyName",
    "Rule",
    "UpdateFamily",
    "FamilyMetrics",
    # Stability schemas
    "Classification",
    "StabilityProfile",
    # Dynamics schemas
    "Rectangle",
    "Torus",
    "HalfPlaneStrip",
    "Line",
    "InfectionState",
    "ClosureStatus",
    "BoundMode",
    "EscapeCertificate",
    "TranslateRepetition",
    "ClosureOutcome",
    "OneDFamily",
    # Difficulty schemas
    "SearchBudget",
    "DifficultyStatus",
    "ExhaustionRecord",
    "DifficultyResult",
    "DifficultyCertificate",
    # Reduction schemas
    "SetCoverInstance",
    "ReductionReport",
    "ReductionVerification",
    # Monte Carlo schemas
    "CurvePoint",
    "PcEstimate",
    # CLI schemas
    "CommandReport",
]
