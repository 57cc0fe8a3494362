"""Solovay-Kitaev compilation for SU(d), including variants that never invert gates."""
from __future__ import annotations

__version__ = "0.1.0"
