"""Numerical laboratory for translation-intertwined CP semigroups on the
half line: truncated tensor-product models, boundary weight series,
intertwining semigroups, the gauge parameter group, and complete
positivity checks.
"""

__all__ = [
    "halfline",
    "tensorspace",
    "weights",
    "opbasis",
    "semigroups",
    "gauge",
    "cornercheck",
    "cli",
]

__version__ = "0.1.0"
