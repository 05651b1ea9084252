from enum import Enum
from math import gcd

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.arithmetic import in_range


class LatticePoint(BaseModel):
    """A site of the square lattice."""

    model_config = ConfigDict(frozen=True)

    x: int
    y: int

    @field_validator("x", "y")
    @classmethod
    def within_machine_range(cls, v):
        """Reject coordinates that checked arithmetic cannot hold."""
        if not in_range(v):
            raise ValueError("coordinate outside the checked integer range")
        return v

    @classmethod
    def of(cls, x: int, y: int) -> "LatticePoint":
        return cls(x=x, y=y)

    def as_tuple(self) -> tuple[int, int]:
        return (self.x, self.y)

    def __str__(self) -> str:
        return f"{self.x},{self.y}"


class Direction(BaseModel):
    """A rational direction, stored as a primitive integer vector.

    Any nonzero vector is accepted and reduced to the primitive vector of its
    ray, so Direction(px=2, py=2) == Direction(px=1, py=1).
    """

    model_config = ConfigDict(frozen=True)

    px: int
    py: int

    @model_validator(mode="before")
    @classmethod
    def normalize(cls, data):
        """Reduce to the primitive vector of the ray."""
        if isinstance(data, (tuple, list)):
            data = {"px": data[0], "py": data[1]}
        if isinstance(data, dict):
            px, py = int(data.get("px", 0)), int(data.get("py", 0))
            g = gcd(abs(px), abs(py))
            if g == 0:
                raise ValueError("direction vector must be nonzero")
            data = {"px": px // g, "py": py // g}
        return data

    @classmethod
    def of(cls, px: int, py: int) -> "Direction":
        return cls(px=px, py=py)

    def as_tuple(self) -> tuple[int, int]:
        return (self.px, self.py)

    def __str__(self) -> str:
        return f"{self.px},{self.py}"


class Side(str, Enum):
    """Which way a semicircle extends from its endpoint."""

    COUNTERCLOCKWISE = "ccw"
    CLOCKWISE = "cw"


class ArcKind(str, Enum):
    """Arc kinds; SPAN is the ordinary counterclockwise sweep lo -> hi."""

    EMPTY = "empty"
    FULL = "full"
    SPAN = "span"
    PUNCTURED = "punctured"  # full circle without lo (lo == hi, both open)


class Arc(BaseModel):
    """Directions swept counterclockwise from lo to hi.

    A SPAN with lo == hi is the single closed point lo.
    """

    model_config = ConfigDict(frozen=True)

    kind: ArcKind = ArcKind.SPAN
    lo: Direction | None = None
    hi: Direction | None = None
    lo_open: bool = True
    hi_open: bool = True

    @model_validator(mode="after")
    def endpoints_match_kind(self):
        """SPAN and PUNCTURED need endpoints, EMPTY and FULL carry none."""
        if self.kind in (ArcKind.SPAN, ArcKind.PUNCTURED):
            if self.lo is None or self.hi is None:
                raise ValueError(f"{self.kind.value} arc needs both endpoints")
        elif self.lo is not None or self.hi is not None:
            raise ValueError(f"{self.kind.value} arc has no endpoints")
        return self

    @property
    def is_point(self) -> bool:
        return self.kind == ArcKind.SPAN and self.lo == self.hi

    def __str__(self) -> str:
        if self.kind == ArcKind.EMPTY:
            return "{}"
        if self.kind == ArcKind.FULL:
            return "S1"
        if self.kind == ArcKind.PUNCTURED:
            return f"S1\\{{{self.lo}}}"
        if self.is_point:
            return f"{{{self.lo}}}"
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"{left}{self.lo} -> {self.hi}{right}"


class ArcSet(BaseModel):
    """Canonical finite union of pairwise disjoint, non-adjacent arcs."""

    model_config = ConfigDict(frozen=True)

    arcs: tuple[Arc, ...] = Field(default_factory=tuple)

    @property
    def is_empty(self) -> bool:
        return not self.arcs

    @property
    def is_full(self) -> bool:
        return len(self.arcs) == 1 and self.arcs[0].kind == ArcKind.FULL

    def __str__(self) -> str:
        if not self.arcs:
            return "{}"
        return " u ".join(str(a) for a in self.arcs)
