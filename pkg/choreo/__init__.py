"""Choreography compiler toolkit."""

from choreo.config import APP_VERSION

__version__ = APP_VERSION
