import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator

from schemas.geometry import LatticePoint


class FamilyName(str, Enum):
    """Update families with a built-in generator."""

    EAST = "east"
    NORTH_EAST = "north_east"
    MODIFIED_TWO_NEIGHBOUR = "modified_two_neighbour"
    TOY = "toy"
    TWO_NEIGHBOUR = "two_neighbour"
    R_NEIGHBOUR = "r_neighbour"
    APPENDIX_UK = "appendix_uk"


class Rule(BaseModel):
    """A finite set of nonzero lattice offsets, deduplicated and sorted."""

    model_config = ConfigDict(frozen=True)

    sites: tuple[LatticePoint, ...] = Field(..., min_length=1)

    @field_validator("sites")
    @classmethod
    def canonical_sites(cls, v):
        """Drop duplicate sites, sort, and reject the origin."""
        unique = sorted(set(v), key=lambda p: (p.x, p.y))
        if any(p.x == 0 and p.y == 0 for p in unique):
            raise ValueError("rule contains the origin")
        return tuple(unique)

    @classmethod
    def of(cls, *sites: tuple[int, int]) -> "Rule":
        return cls(sites=tuple(LatticePoint(x=x, y=y) for x, y in sites))

    def offsets(self) -> list[tuple[int, int]]:
        return [s.as_tuple() for s in self.sites]

    def sort_key(self) -> tuple[tuple[int, int], ...]:
        return tuple(self.offsets())

    def __len__(self) -> int:
        return len(self.sites)


class UpdateFamily(BaseModel):
    """A finite set of rules, deduplicated and sorted."""

    model_config = ConfigDict(frozen=True)

    rules: tuple[Rule, ...] = Field(..., min_length=1)

    @field_validator("rules")
    @classmethod
    def canonical_rules(cls, v):
        """Drop duplicate rules and sort."""
        return tuple(sorted(set(v), key=lambda r: r.sort_key()))

    @property
    def diameter(self) -> int:
        """D: twice the largest sup-norm over all rule sites."""
        return 2 * max(max(abs(s.x), abs(s.y)) for r in self.rules for s in r.sites)

    @property
    def site_count(self) -> int:
        return sum(len(r) for r in self.rules)

    @property
    def rule_count(self) -> int:
        return len(self.rules)

    @property
    def input_size(self) -> float:
        """Natural log of D times the total number of sites."""
        return math.log(self.diameter) * self.site_count

    def offsets(self) -> list[list[tuple[int, int]]]:
        return [r.offsets() for r in self.rules]


class FamilyMetrics(BaseModel):
    """Derived size metrics of a family."""

    diameter: int
    input_size: float
    log_base: str = "e"
    rule_count: int
    site_count: int
