import os
from unittest.mock import patch

import pytest

# Set test environment variables before importing settings
os.environ["ENVIRONMENT"] = "test"
os.environ["LOG_LEVEL"] = "WARNING"
os.environ["THREADS"] = "1"

# Import settings modules after setting env vars
from app.config.toolkit import ToolkitSettings  # noqa: E402
from app.services.family import named_family  # noqa: E402
from schemas.difficulty import SearchBudget  # noqa: E402

# Create test settings instance
toolkit_test_settings = ToolkitSettings(
    SEARCH_STEP_BUDGET=2048,
    SEARCH_WINDOW_HALF_WIDTH=4096,
    SEARCH_GAP_CAP=32,
    SEARCH_HEIGHT_CAP=16,
    MONTE_CARLO_TRIALS=20,
    MONTE_CARLO_TOLERANCE=0.05,
)


@pytest.fixture(autouse=True, scope="session")
def mock_toolkit_settings():
    """Automatically mock toolkit settings for all tests."""
    with patch("app.config.toolkit.settings", toolkit_test_settings):
        yield


@pytest.fixture
def budget():
    """Small search budget for unit tests."""
    return SearchBudget.from_settings(toolkit_test_settings)


@pytest.fixture
def east():
    return named_family("east")


@pytest.fixture
def north_east():
    return named_family("north_east")


@pytest.fixture
def modified_two_neighbour():
    return named_family("modified_two_neighbour")


@pytest.fixture
def toy():
    return named_family("toy")


@pytest.fixture
def two_neighbour():
    return named_family("two_neighbour")


@pytest.fixture
def mock_settings(monkeypatch):
    """Mock settings for testing."""
    monkeypatch.setenv("ENVIRONMENT", "test")
    monkeypatch.setenv("DEBUG", "False")
    return monkeypatch
