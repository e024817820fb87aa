"""High-dimensional Sobolev tests of uniformity and symmetry."""
from importlib.metadata import PackageNotFoundError, version

from .radial import BootstrapConfig, RadialNull, parse_null
from .sampling import RngStream, uniform_sphere
from .sobolev import (
    BINGHAM,
    RAYLEIGH,
    Custom,
    DecayAdjusted,
    Finite,
    Hybrid,
    KSobolev,
    SphereSample,
    parse_scheme,
    statistic,
)
from .symmetry import gof_composite, gof_simple, rotsym_test

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # source tree without an install
    __version__ = "0.0.0"

__all__ = [
    "BINGHAM",
    "RAYLEIGH",
    "BootstrapConfig",
    "Custom",
    "DecayAdjusted",
    "Finite",
    "Hybrid",
    "KSobolev",
    "RadialNull",
    "RngStream",
    "SphereSample",
    "gof_composite",
    "gof_simple",
    "parse_null",
    "parse_scheme",
    "rotsym_test",
    "statistic",
    "uniform_sphere",
]
