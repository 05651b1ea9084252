from enum import Enum
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from schemas.geometry import Direction, LatticePoint


class Rectangle(BaseModel):
    """Finite box [x0, x1] x [y0, y1]; sites outside are healthy."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["rectangle"] = "rectangle"
    x0: int
    x1: int
    y0: int
    y1: int

    @model_validator(mode="after")
    def ordered_bounds(self):
        """Require a nonempty box."""
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ValueError("rectangle bounds must satisfy x0 <= x1 and y0 <= y1")
        return self

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x1 - self.x0 + 1, self.y1 - self.y0 + 1)


class Torus(BaseModel):
    """The n x n discrete torus."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["torus"] = "torus"
    n: int = Field(..., ge=1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)


class HalfPlaneStrip(BaseModel):
    """Rows 0..height above l_u; H_u below is permanently infected.

    half_width bounds the distance along l_u, in lattice steps of l_u.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["half_plane_strip"] = "half_plane_strip"
    u: Direction
    height: int = Field(..., ge=0)
    half_width: int = Field(..., ge=0)


class Line(BaseModel):
    """The integer line of a one-dimensional process; sites are stored as (x, 0)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["line"] = "line"


Region = Annotated[
    Rectangle | Torus | HalfPlaneStrip | Line, Field(discriminator="kind")
]


class InfectionState(BaseModel):
    """Infected sites of a region after some number of synchronous rounds."""

    model_config = ConfigDict(frozen=True)

    region: Region
    infected: tuple[LatticePoint, ...] = Field(default_factory=tuple)
    generation: int = Field(default=0, ge=0)

    @property
    def cells(self) -> frozenset[tuple[int, int]]:
        return frozenset(p.as_tuple() for p in self.infected)


class ClosureStatus(str, Enum):
    """How a closure computation ended."""

    CERTIFIED_FINITE = "certified_finite"
    CERTIFIED_INFINITE = "certified_infinite"
    BUDGET_EXHAUSTED = "budget_exhausted"


class BoundMode(str, Enum):
    """Infinite-growth detection for one-dimensional closures."""

    PAPER_BOUND = "paper_bound"
    ADAPTIVE = "adaptive"


class EscapeCertificate(BaseModel):
    """An infected site beyond the radius past which growth cannot stop."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["escape"] = "escape"
    site: LatticePoint
    radius: int
    generation: int


class TranslateRepetition(BaseModel):
    """A finite infected window whose closure contains its own translate.

    Together with the always-infected half-plane, window alone regenerates
    window + offset within the given number of rounds, so its closure
    contains window + k * offset for every k >= 0.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["translate"] = "translate"
    offset: LatticePoint
    window: tuple[LatticePoint, ...]
    rounds: int = Field(..., ge=1)


Certificate = Annotated[
    EscapeCertificate | TranslateRepetition, Field(discriminator="kind")
]


class ClosureOutcome(BaseModel):
    """Result of a closure computation with its termination certificate."""

    model_config = ConfigDict(frozen=True)

    status: ClosureStatus
    state: InfectionState
    certificate: Certificate | None = None
    reason: str | None = None

    @property
    def is_infinite(self) -> bool:
        return self.status == ClosureStatus.CERTIFIED_INFINITE

    @property
    def is_finite(self) -> bool:
        return self.status == ClosureStatus.CERTIFIED_FINITE


class OneDFamily(BaseModel):
    """Rules of a one-dimensional process on the integers."""

    model_config = ConfigDict(frozen=True)

    rules: tuple[tuple[int, ...], ...]
    step_norm_sq: int = Field(
        default=1,
        ge=1,
        description="Squared length of the lattice step of l_u identified with 1",
    )

    @model_validator(mode="after")
    def nonzero_sites(self):
        """Sites are nonzero; rules canonical and deduplicated."""
        canonical = tuple(sorted({tuple(sorted(set(r))) for r in self.rules}))
        if any(0 in r or not r for r in canonical):
            raise ValueError("one-dimensional rules need nonzero sites")
        object.__setattr__(self, "rules", canonical)
        return self

    @property
    def diameter(self) -> int:
        """D1: twice the largest absolute site."""
        if not self.rules:
            return 0
        return 2 * max(abs(s) for r in self.rules for s in r)
