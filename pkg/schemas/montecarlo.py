from pydantic import BaseModel, ConfigDict, Field, model_validator


class CurvePoint(BaseModel):
    """Empirical probability that the torus fills at one probe p."""

    model_config = ConfigDict(frozen=True)

    p: float = Field(..., ge=0.0, le=1.0)
    frequency: float = Field(..., ge=0.0, le=1.0)
    trials: int = Field(..., ge=1)


class PcEstimate(BaseModel):
    """Bracket around the critical probability p_c(n) with its probe curve."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=2)
    p_lo: float = Field(..., ge=0.0, le=1.0)
    p_hi: float = Field(..., ge=0.0, le=1.0)
    trials_per_probe: int = Field(..., ge=1)
    seed: int = Field(..., ge=0)
    curve: tuple[CurvePoint, ...] = Field(default_factory=tuple)

    @model_validator(mode="after")
    def ordered_bracket(self):
        if self.p_lo > self.p_hi:
            raise ValueError("p_lo must not exceed p_hi")
        return self

    @property
    def midpoint(self) -> float:
        return (self.p_lo + self.p_hi) / 2
