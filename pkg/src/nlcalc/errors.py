"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid discretization, material, or run configuration."""


class SingularConfigurationError(ArithmeticError):
    """A deformed bond collapsed to zero length."""


class DimensionError(ValueError):
    """Operands with incompatible grids, ranks, or codomain dimensions."""
