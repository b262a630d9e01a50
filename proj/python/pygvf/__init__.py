"""Python bindings for the gvf library."""

from ._gvf import (
    Complex,
    NumericalError,
    ValidationError,
    __version__,
    build_complex,
    cli,
    complex_from_json,
    cri,
    curl,
    decompose,
    dps,
    grad,
    simulate,
    spectral_distance,
)

__all__ = [
    "Complex",
    "NumericalError",
    "ValidationError",
    "__version__",
    "build_complex",
    "cli",
    "complex_from_json",
    "cri",
    "curl",
    "decompose",
    "dps",
    "grad",
    "simulate",
    "spectral_distance",
]
