"""Configuration package for Bootdiff."""

from .base import BaseSettings
from .toolkit import ToolkitSettings, settings

__all__ = ["BaseSettings", "ToolkitSettings", "settings"]
