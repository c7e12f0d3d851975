"""
Shared utility functions for the choreography toolkit

This module contains helper functions used across multiple services:
- Identifier and limit validation
- Reading DSL sources
- JSON output
- Logging setup
"""

import json
import logging
import re
import sys
from pathlib import Path
from typing import Any

from choreo.config import IDENTIFIER_PATTERN, LOG_FORMAT, LOG_LEVEL
from choreo.errors import ChoreographyError


_IDENTIFIER = re.compile(IDENTIFIER_PATTERN)


# ============================================================================
# VALIDATION UTILITIES
# ============================================================================

def validate_identifier(value: str, field_name: str) -> str:
    """
    Validate a role or operation name.

    Args:
        value: Name to validate
        field_name: Field name for the error message

    Returns:
        The name, unchanged

    Raises:
        ChoreographyError: If the name is empty or not an identifier
    """
    if not isinstance(value, str) or not _IDENTIFIER.fullmatch(value):
        raise ChoreographyError(f"{field_name} must be an identifier, got {value!r}")
    return value


def validate_positive(value: int, field_name: str) -> int:
    """
    Validate that a limit is a positive integer.

    Raises:
        ChoreographyError: If value is not > 0
    """
    if value <= 0:
        raise ChoreographyError(f"{field_name} must be greater than 0")
    return value


# ============================================================================
# INPUT / OUTPUT
# ============================================================================

def read_source(path: str) -> str:
    """
    Read DSL text from a file, or from stdin when path is "-".

    Args:
        path: File path or "-"

    Returns:
        The UTF-8 decoded text
    """
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def to_json(data: Any) -> str:
    """Serialize data to a stable, indented JSON string."""
    return json.dumps(data, indent=2, sort_keys=False)


def write_json(path: str, data: Any) -> None:
    """Write data as JSON to a file."""
    Path(path).write_text(to_json(data) + "\n", encoding="utf-8")


# ============================================================================
# LOGGING
# ============================================================================

def setup_logging(level: str = LOG_LEVEL) -> None:
    """
    Configure the root logger once, writing to stderr.

    Args:
        level: Level name such as "INFO" or "DEBUG"
    """
    numeric = getattr(logging, level.upper(), logging.WARNING)
    logging.basicConfig(level=numeric, format=LOG_FORMAT, stream=sys.stderr)
    # basicConfig is a no-op once handlers exist; the level still applies
    logging.getLogger().setLevel(numeric)
