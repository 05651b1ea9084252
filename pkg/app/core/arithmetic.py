"""Checked integer arithmetic for exact direction geometry."""

from app.config import toolkit
from app.core.exceptions import ArithmeticOverflowError


def checked(value: int, operation: str = "arithmetic") -> int:
    """Return value unchanged, raising if it leaves the configured range."""
    cfg = toolkit.settings
    if cfg.ARBITRARY_PRECISION:
        return value
    if -cfg.integer_bound - 1 <= value <= cfg.integer_bound:
        return value
    raise ArithmeticOverflowError(operation, value, cfg.INTEGER_BITS)


def cross(ax: int, ay: int, bx: int, by: int) -> int:
    """z-component of the cross product a x b."""
    return checked(checked(ax * by, "cross") - checked(ay * bx, "cross"), "cross")


def dot(ax: int, ay: int, bx: int, by: int) -> int:
    """Euclidean inner product."""
    return checked(checked(ax * bx, "dot") + checked(ay * by, "dot"), "dot")


def in_range(value: int) -> bool:
    """Whether value fits the configured range."""
    cfg = toolkit.settings
    return cfg.ARBITRARY_PRECISION or -cfg.integer_bound - 1 <= value <= cfg.integer_bound
