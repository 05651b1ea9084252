"""Custom exceptions for Bootdiff."""

from typing import Any


class BootdiffException(Exception):  # noqa: N818
    """Base exception for Bootdiff."""

    def __init__(
        self,
        message: str,
        error_code: str = "BOOTDIFF_ERROR",
        exit_code: int = 1,
        details: dict[str, Any] | None = None,
    ):
        self.message = message
        self.error_code = error_code
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> dict[str, Any]:
        """Structured form printed by the CLI."""
        return {
            "error_code": self.error_code,
            "message": self.message,
            "details": self.details,
        }


class ConfigurationError(BootdiffException):
    """Configuration-related errors."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message,
            error_code="CONFIGURATION_ERROR",
            exit_code=2,
            details=details,
        )


class ValidationError(BootdiffException):
    """Input validation errors."""

    def __init__(
        self,
        message: str,
        field: str | None = None,
        details: dict[str, Any] | None = None,
        error_code: str = "VALIDATION_ERROR",
    ):
        error_details = details or {}
        if field:
            error_details["field"] = field

        super().__init__(
            message=message,
            error_code=error_code,
            exit_code=2,
            details=error_details,
        )


class InvalidRuleError(ValidationError):
    """A rule is empty or contains the origin."""

    def __init__(
        self,
        message: str,
        rule_index: int | None = None,
        details: dict[str, Any] | None = None,
    ):
        error_details = details or {}
        if rule_index is not None:
            error_details["rule_index"] = rule_index

        super().__init__(
            message=message,
            details=error_details,
            error_code="INVALID_RULE",
        )
        self.rule_index = rule_index


class InvalidFamilyError(ValidationError):
    """A candidate family failed validation; carries every violation."""

    def __init__(self, errors: list[dict[str, Any]]):
        summary = "; ".join(
            f"rule {e['rule_index']}: {e['reason']}"
            if e.get("rule_index") is not None
            else e["reason"]
            for e in errors
        )
        super().__init__(
            message=f"Invalid update family: {summary}",
            details={"errors": errors},
            error_code="INVALID_FAMILY",
        )
        self.errors = errors


class ParseError(ValidationError):
    """Malformed family or instance text."""

    def __init__(
        self,
        message: str,
        line: int,
        position: int | None = None,
        details: dict[str, Any] | None = None,
    ):
        error_details = details or {}
        error_details["line"] = line
        if position is not None:
            error_details["position"] = position

        location = f"line {line}" if position is None else f"line {line}:{position}"
        super().__init__(
            message=f"{location}: {message}",
            details=error_details,
            error_code="PARSE_ERROR",
        )
        self.line = line
        self.position = position


class ArithmeticOverflowError(BootdiffException):
    """Checked integer arithmetic left the configured machine range."""

    def __init__(self, operation: str, value: int, bits: int = 64):
        super().__init__(
            message=f"{operation} overflows {bits}-bit range",
            error_code="ARITHMETIC_OVERFLOW",
            exit_code=1,
            details={"operation": operation, "bits": bits, "value": str(value)},
        )


class StateError(BootdiffException):
    """Operation invoked on an object in the wrong state."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message,
            error_code="STATE_ERROR",
            exit_code=1,
            details=details,
        )


class PreconditionError(BootdiffException):
    """Input violates an operation precondition."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message,
            error_code="PRECONDITION_ERROR",
            exit_code=2,
            details=details,
        )


class NotFoundError(BootdiffException):
    """Named resource not found."""

    def __init__(
        self,
        resource: str,
        identifier: str | None = None,
        details: dict[str, Any] | None = None,
    ):
        message = f"{resource} not found"
        if identifier:
            message += f": {identifier}"

        error_details = details or {}
        error_details["resource"] = resource
        if identifier:
            error_details["identifier"] = identifier

        super().__init__(
            message=message,
            error_code="NOT_FOUND",
            exit_code=2,
            details=error_details,
        )


class IndeterminateResultError(BootdiffException):
    """A result could not be certified exact and exactness was required."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message,
            error_code="INDETERMINATE_RESULT",
            exit_code=3,
            details=details,
        )
