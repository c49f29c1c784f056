"""Interval exchange transformations, Rauzy-Veech induction, bounded-type
certificates and drift certificates for special flows with logarithmic roofs."""

__version__ = "0.1.0"

from .iet import IET, CombinatorialData, apply, build_iet  # noqa: E402
from .builtins import get as builtin  # noqa: E402

__all__ = ["IET", "CombinatorialData", "apply", "build_iet", "builtin", "__version__"]
