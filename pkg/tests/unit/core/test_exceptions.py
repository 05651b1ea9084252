"""Tests for core exception classes."""

from app.core.exceptions import (
    ArithmeticOverflowError,
    BootdiffException,
    ConfigurationError,
    IndeterminateResultError,
    InvalidFamilyError,
    InvalidRuleError,
    NotFoundError,
    ParseError,
    PreconditionError,
    StateError,
    ValidationError,
)


def test_bootdiff_exception_basic():
    """Test basic BootdiffException functionality."""
    exc = BootdiffException("Test message")

    assert exc.message == "Test message"
    assert exc.error_code == "BOOTDIFF_ERROR"
    assert exc.exit_code == 1
    assert exc.details == {}
    assert str(exc) == "Test message"


def test_bootdiff_exception_with_details():
    """Test BootdiffException with custom details."""
    details = {"field": "rules", "reason": "invalid"}
    exc = BootdiffException(
        message="Custom error",
        error_code="CUSTOM_ERROR",
        exit_code=2,
        details=details,
    )

    assert exc.error_code == "CUSTOM_ERROR"
    assert exc.exit_code == 2
    assert exc.to_dict() == {
        "error_code": "CUSTOM_ERROR",
        "message": "Custom error",
        "details": details,
    }


def test_configuration_error():
    """Test ConfigurationError exception."""
    exc = ConfigurationError("Missing config key")

    assert exc.error_code == "CONFIGURATION_ERROR"
    assert exc.exit_code == 2


def test_validation_error():
    """Test ValidationError exception."""
    exc = ValidationError("Invalid value")

    assert exc.error_code == "VALIDATION_ERROR"
    assert exc.exit_code == 2
    assert exc.details == {}

    exc_with_field = ValidationError("Invalid n", field="n")
    assert exc_with_field.details == {"field": "n"}


def test_invalid_rule_error():
    """Test InvalidRuleError carries the rule index."""
    exc = InvalidRuleError("rule contains the origin", rule_index=3)

    assert isinstance(exc, ValidationError)
    assert exc.error_code == "INVALID_RULE"
    assert exc.rule_index == 3
    assert exc.details == {"rule_index": 3}


def test_invalid_family_error_collects_every_violation():
    """Test InvalidFamilyError summarizes all errors."""
    errors = [
        {"rule_index": 0, "reason": "rule is empty"},
        {"rule_index": 2, "reason": "rule contains the origin"},
    ]
    exc = InvalidFamilyError(errors)

    assert exc.error_code == "INVALID_FAMILY"
    assert exc.errors == errors
    assert "rule 0: rule is empty" in exc.message
    assert "rule 2: rule contains the origin" in exc.message


def test_parse_error_location():
    """Test ParseError reports line and position."""
    exc = ParseError("malformed site", line=4, position=7)

    assert exc.message == "line 4:7: malformed site"
    assert exc.details == {"line": 4, "position": 7}
    assert exc.error_code == "PARSE_ERROR"

    no_position = ParseError("empty", line=1)
    assert no_position.message == "line 1: empty"
    assert "position" not in no_position.details


def test_arithmetic_overflow_error():
    """Test ArithmeticOverflowError exception."""
    exc = ArithmeticOverflowError("cross", 1 << 70, bits=64)

    assert exc.error_code == "ARITHMETIC_OVERFLOW"
    assert exc.details["bits"] == 64
    assert exc.details["value"] == str(1 << 70)


def test_state_and_precondition_errors():
    """Test StateError and PreconditionError exit codes."""
    assert StateError("not critical").exit_code == 1
    assert PreconditionError("seed below l_u").exit_code == 2


def test_not_found_error():
    """Test NotFoundError exception."""
    exc = NotFoundError("Family", "pentagon")

    assert exc.message == "Family not found: pentagon"
    assert exc.details == {"resource": "Family", "identifier": "pentagon"}

    exc_no_id = NotFoundError("Family")
    assert exc_no_id.message == "Family not found"


def test_indeterminate_result_error():
    """Test IndeterminateResultError exit code."""
    exc = IndeterminateResultError("upper bound only")

    assert exc.error_code == "INDETERMINATE_RESULT"
    assert exc.exit_code == 3


def test_exception_inheritance():
    """Test that all custom exceptions inherit from BootdiffException."""
    for exc in (
        ConfigurationError("x"),
        ValidationError("x"),
        InvalidRuleError("x"),
        InvalidFamilyError([]),
        ParseError("x", line=1),
        ArithmeticOverflowError("x", 0),
        StateError("x"),
        PreconditionError("x"),
        NotFoundError("x"),
        IndeterminateResultError("x"),
    ):
        assert isinstance(exc, BootdiffException)
        assert isinstance(exc, Exception)
