from typing import Any

from pydantic import BaseModel, ConfigDict, Field


class CommandReport(BaseModel):
    """Machine-readable result of one CLI command.

    Everything except wall_time_s is reproducible for deterministic commands.
    """

    model_config = ConfigDict(frozen=True)

    command: str
    inputs_digest: str = Field(..., description="sha256 of the inputs and options")
    status: str = "ok"
    result: dict[str, Any] = Field(default_factory=dict)
    budget: dict[str, Any] | None = None
    wall_time_s: float = 0.0
