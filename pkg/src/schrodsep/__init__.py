"""Separable Schrodinger problems for a charged particle in an electromagnetic field.

The package builds the full catalogue of orthogonal coordinate systems in
which the (1+3)-dimensional Schrodinger equation separates, attaches the
moving frames and potentials that make separation possible, integrates the
separated ordinary differential equations, and verifies the reassembled
wavefunction against the original partial differential equation with
independent finite-difference residuals.
"""

from schrodsep.errors import (
    ConfigurationError,
    DomainError,
    IntegrationError,
    InversionError,
    NumericError,
    OutOfRangeError,
    QuadratureError,
    SchrodsepError,
    SingularityError,
    StencilError,
    TurningPointError,
    UsageError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DomainError",
    "IntegrationError",
    "InversionError",
    "NumericError",
    "OutOfRangeError",
    "QuadratureError",
    "SchrodsepError",
    "SingularityError",
    "StencilError",
    "TurningPointError",
    "UsageError",
    "__version__",
]
