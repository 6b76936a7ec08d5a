"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration (bad key, missing key, violated invariant)."""


class OutOfDomainError(ValueError):
    """Argument outside the domain an operation is defined on."""


class NumericsError(RuntimeError):
    """A numerical procedure failed (quadrature, solver, validation)."""


class BracketError(NumericsError):
    """Root bracketing failed; signals an invalid config or kappa too large."""


class ContractionError(NumericsError):
    """Fixed-point iteration stopped contracting (epsilon too large)."""


class KernelValidationError(NumericsError):
    """A kernel/adjoint/transversality validation check failed."""
