from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from schemas.dynamics import Certificate, ClosureStatus
from schemas.geometry import LatticePoint


class SetCoverInstance(BaseModel):
    """A universe {1..N} and a collection of subsets covering it."""

    model_config = ConfigDict(frozen=True)

    universe: int = Field(..., ge=4, description="N")
    sets: tuple[tuple[int, ...], ...] = Field(..., min_length=4)

    @field_validator("sets")
    @classmethod
    def canonical_sets(cls, v):
        """Sort each set and drop repeated elements."""
        return tuple(tuple(sorted(set(s))) for s in v)

    @model_validator(mode="after")
    def covers_universe(self):
        """Sets are nonempty subsets of the universe and cover it."""
        for index, s in enumerate(self.sets, start=1):
            if not s:
                raise ValueError(f"set {index} is empty")
            if s[0] < 1 or s[-1] > self.universe:
                raise ValueError(f"set {index} leaves the universe 1..{self.universe}")
        covered = {e for s in self.sets for e in s}
        if len(covered) != self.universe:
            raise ValueError("the sets do not cover the universe")
        return self

    @property
    def set_count(self) -> int:
        return len(self.sets)

    @property
    def total_size(self) -> int:
        return sum(len(s) for s in self.sets)


class ReductionReport(BaseModel):
    """Size figures of the family built from a Set Cover instance."""

    model_config = ConfigDict(frozen=True)

    universe: int
    set_count: int
    rule_count: int
    prose_rule_count: int = Field(..., description="|S|^3 * sum |S_i|")
    site_count: int
    expected_site_count: int
    diameter: int
    optimal_cover: tuple[int, ...]
    optimal_cover_size: int
    predicted_alpha: int


class ReductionVerification(BaseModel):
    """Outcome of simulating the witness Z_0 built from a choice of sets."""

    model_config = ConfigDict(frozen=True)

    verified: bool
    status: ClosureStatus
    cover: tuple[int, ...]
    is_cover: bool
    witness: tuple[LatticePoint, ...]
    witness_size: int
    predicted_alpha: int
    generation: int
    infected_count: int
    certificate: Certificate | None = None
