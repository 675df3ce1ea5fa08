"""Big-Five trait scoring, demographic regressions and CHAID trees for open survey data."""

from __future__ import annotations

__version__ = "0.1.0"
