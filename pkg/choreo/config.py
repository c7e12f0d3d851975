"""
Configuration and Limits for the Choreography Toolkit

This module contains the enumeration limits, fresh-name conventions,
rendering tokens, exit codes and logging settings used throughout the
parse -> check -> amend -> project -> verify pipeline.
"""

import os


# ============================================================================
# ENUMERATION LIMITS
# ============================================================================

# Maximum number of maximal traces a single enumeration may produce.
# Parallel interleavings grow factorially, so hitting the cap means the
# caller has to raise it explicitly (--cap N).
DEFAULT_TRACE_CAP = 100_000

# Verify-and-iterate rounds of the amend driver before giving up
DEFAULT_MAX_ROUNDS = 16

# Node budget for a single normal-form expansion
# Example: 8 same-operation interactions in parallel need well over 20000 nodes
DEFAULT_EXPANSION_BUDGET = 20_000


# ============================================================================
# FRESH NAMES
# ============================================================================

# Generated names look like _e1 (roles), _f1* (private operations) and
# _r1 (role pairs standing in for a replaced `1` inside a normal form)
DEFAULT_FRESH_PREFIX = "_"
FRESH_ROLE_STEM = "e"
FRESH_OPERATION_STEM = "f"
ONE_REPLACEMENT_ROLE_STEM = "r"


# ============================================================================
# RENDERING TOKENS
# ============================================================================

PRIVATE_MARK = "*"
TICK_TEXT = "TICK"
IDENTIFIER_PATTERN = r"[A-Za-z_][A-Za-z0-9_]*"


# ============================================================================
# EXIT CODES (command line)
# ============================================================================

EXIT_OK = 0
EXIT_PROPERTY_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_RESOURCE = 3


# ============================================================================
# LOGGING
# ============================================================================

LOG_LEVEL = os.environ.get("CHOREO_LOG_LEVEL", "WARNING").upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


# ============================================================================
# APPLICATION METADATA
# ============================================================================

APP_NAME = "choreo"
APP_VERSION = "1.0.0"
APP_DESCRIPTION = """
Choreography compiler toolkit:
- Parse and render the global-interaction DSL
- Detect connectedness violations (sequence, choice, causality)
- Amend choreographies into connected, weak-trace-equivalent ones
- Project onto endpoint processes
- Verify equivalence by exhaustive trace enumeration
"""
