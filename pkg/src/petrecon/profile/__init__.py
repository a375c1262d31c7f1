"""
Profiling helpers for petrecon.

This module provides utilities for measuring the run time of the expensive steps.
"""

from .timing import measure_time

__all__ = ["measure_time"]
