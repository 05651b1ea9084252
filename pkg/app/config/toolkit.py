"""Toolkit configuration: arithmetic range, search budgets, Monte Carlo."""

import os

from pydantic import Field, field_validator

from app.config.base import BaseSettings


class ToolkitSettings(BaseSettings):
    """Configuration for the bootdiff library and CLI."""

    # Service Info
    SERVICE_NAME: str = Field(default="bootdiff")
    VERSION: str = Field(default="0.1.0")

    # Checked arithmetic
    ARBITRARY_PRECISION: bool = Field(
        default=False,
        description="Use unbounded integers instead of checked machine words",
    )
    INTEGER_BITS: int = Field(
        default=64, ge=16, le=128, description="Width of the checked integer range"
    )

    # Search budget defaults
    SEARCH_STEP_BUDGET: int = Field(
        default=4096, ge=1, description="Maximum synchronous rounds per closure"
    )
    SEARCH_WINDOW_HALF_WIDTH: int = Field(
        default=1 << 16,
        ge=8,
        description="Largest distance along l_u a closure may reach",
    )
    SEARCH_GAP_CAP: int = Field(
        default=64, ge=1, description="Cap on candidate gap doubling"
    )
    SEARCH_HEIGHT_CAP: int = Field(
        default=64, ge=0, description="Cap on the height sweep above l_u"
    )
    SEARCH_REPLAY_ROUNDS: int = Field(
        default=256,
        ge=1,
        description="Rounds allowed to replay a translate-repetition certificate",
    )

    # Parallelism
    THREADS: int = Field(
        default=1, ge=0, description="Worker processes (0 = all available cores)"
    )

    # Monte Carlo
    MONTE_CARLO_TRIALS: int = Field(default=200, ge=1)
    MONTE_CARLO_TOLERANCE: float = Field(default=0.01, gt=0.0, lt=0.5)
    MONTE_CARLO_SEED: int = Field(default=20240501, ge=0, lt=1 << 64)

    @field_validator("THREADS")
    @classmethod
    def resolve_threads(cls, v):
        """Expand 0 to the number of available cores."""
        if v == 0:
            return os.cpu_count() or 1
        return v

    @property
    def integer_bound(self) -> int:
        """Largest magnitude allowed by checked arithmetic."""
        return (1 << (self.INTEGER_BITS - 1)) - 1


# Global settings instance
settings = ToolkitSettings()
