from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from schemas.dynamics import Certificate
from schemas.family import UpdateFamily
from schemas.geometry import Direction, LatticePoint


class SearchBudget(BaseModel):
    """Limits of the certified difficulty search and of single closures.

    gap_u and gap_perp are the starting gap bounds between consecutive
    candidate sites (height and position along l_u); None derives them from
    the rule spans. Gaps double while the search finds closures large enough
    to break the enumeration envelope, never beyond gap_cap.
    """

    model_config = ConfigDict(frozen=True)

    max_k: int | None = Field(default=None, ge=1, description="Cap on |Z|; None = D")
    window_half_width: int = Field(default=1 << 16, ge=8)
    height_bound: int = Field(default=64, ge=0)
    gap_u: int | None = Field(default=None, ge=1)
    gap_perp: int | None = Field(default=None, ge=1)
    gap_cap: int = Field(default=64, ge=1)
    step_budget: int = Field(default=4096, ge=1)
    replay_rounds: int = Field(default=256, ge=1)
    use_paper_bounds: bool = False
    escape_radius: int | None = Field(default=None, ge=1)

    @classmethod
    def from_settings(cls, cfg: Any = None, **overrides: Any) -> "SearchBudget":
        """Budget built from ToolkitSettings, with explicit overrides."""
        if cfg is None:
            from app.config import toolkit

            cfg = toolkit.settings
        values: dict[str, Any] = {
            "window_half_width": cfg.SEARCH_WINDOW_HALF_WIDTH,
            "height_bound": cfg.SEARCH_HEIGHT_CAP,
            "gap_cap": cfg.SEARCH_GAP_CAP,
            "step_budget": cfg.SEARCH_STEP_BUDGET,
            "replay_rounds": cfg.SEARCH_REPLAY_ROUNDS,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def paper_bounds(cls, diameter: int, **overrides: Any) -> "SearchBudget":
        """Budget with the worst-case radii of the decidability argument.

        Only executable for tiny diameters.
        """
        return cls(use_paper_bounds=True, **overrides).resolve(diameter)

    def resolve(self, diameter: int) -> "SearchBudget":
        """Fill the worst-case values for a family of the given diameter."""
        if not self.use_paper_bounds or self.escape_radius is not None:
            return self
        d = max(diameter, 2)
        return self.model_copy(
            update={
                "escape_radius": d**13 * 2**d,
                "window_half_width": d**13 * 2**d + d,
                "gap_cap": d**11 * 2**d,
                "height_bound": d**5,
                "step_budget": 5**d,
            }
        )

    def levels(self, diameter: int) -> int:
        return self.max_k if self.max_k is not None else diameter


class DifficultyStatus(str, Enum):
    """How much of a difficulty value is certified."""

    EXACT = "exact"
    UPPER_BOUND_ONLY = "upper_bound_only"
    INDETERMINATE = "indeterminate"


class ExhaustionRecord(BaseModel):
    """Envelope under which smaller candidate sets were certified finite."""

    model_config = ConfigDict(frozen=True)

    gap_u: int
    gap_perp: int
    height_swept: int
    certified_levels: int = Field(
        ..., ge=0, description="Largest size whose candidates all stayed finite"
    )
    candidates_checked: int = 0
    exhausted_candidates: int = 0
    growth_perp: int = 0
    growth_u: int = 0
    envelope_holds: bool = False
    height_condition_holds: bool = False
    step_budget: int
    window_half_width: int


class DifficultyResult(BaseModel):
    """alpha(u) for a direction, or the family difficulty with its components.

    value is None when the difficulty is infinite (see infinite) or when no
    witness was found within the budget.
    """

    model_config = ConfigDict(frozen=True)

    value: int | None = None
    infinite: bool = False
    lower_bound: int = Field(default=0, ge=0)
    status: DifficultyStatus
    direction: Direction | None = None
    witness: tuple[LatticePoint, ...] | None = None
    certificate: Certificate | None = None
    exhaustion: ExhaustionRecord | None = None
    components: tuple["DifficultyResult", ...] = Field(default_factory=tuple)

    @property
    def is_exact(self) -> bool:
        return self.status == DifficultyStatus.EXACT

    def display_value(self) -> str:
        if self.infinite:
            return "inf"
        return "?" if self.value is None else str(self.value)


DifficultyResult.model_rebuild()


class DifficultyCertificate(BaseModel):
    """Certificate file: a witness for one direction with its replay data."""

    model_config = ConfigDict(frozen=True)

    family: UpdateFamily
    direction: Direction
    witness: tuple[LatticePoint, ...]
    certificate: Certificate | None = None
    value: int | None = None
    status: DifficultyStatus
    exhaustion: ExhaustionRecord | None = None
