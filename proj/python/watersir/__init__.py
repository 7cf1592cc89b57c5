"""Security injection regions of tree-structured water networks.

Thin Python face of the C++ core: every function takes network file text
(the block grammar produced by :func:`canonical`) and returns plain
dictionaries and lists. Demands and flows are in cubic meters per second,
heads and elevations in meters.
"""

from watersir._core import (
    canonical,
    check,
    coverage,
    from_inp,
    grid,
    ops,
    probe,
    sir,
    support,
    validate,
)

__all__ = [
    "canonical",
    "check",
    "coverage",
    "from_inp",
    "grid",
    "ops",
    "probe",
    "sir",
    "support",
    "validate",
]

__version__ = "1.0.0"
