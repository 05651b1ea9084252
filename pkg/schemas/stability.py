from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

from schemas.geometry import Arc, ArcSet, Direction


class Classification(str, Enum):
    """Rough universality class of an update family."""

    SUPERCRITICAL = "supercritical"
    CRITICAL = "critical"
    SUBCRITICAL = "subcritical"

    @property
    def label(self) -> str:
        return self.value.capitalize()


class StabilityProfile(BaseModel):
    """Unstable and stable direction sets of a family and its class."""

    model_config = ConfigDict(frozen=True)

    unstable: ArcSet
    stable: ArcSet
    isolated: tuple[Direction, ...] = Field(default_factory=tuple)
    classification: Classification
    rule_arcs: tuple[Arc, ...] = Field(default_factory=tuple)
