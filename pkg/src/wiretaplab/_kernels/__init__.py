"""Tail-scan backend selection: compiled kernel when built, numpy otherwise."""
from __future__ import annotations

try:
    from ._tailscan import tail_scan

    BACKEND = "cython"
except ImportError:  # extension not built on this install
    from ._fallback import tail_scan

    BACKEND = "numpy"

__all__ = ["tail_scan", "BACKEND"]
