"""Exception hierarchy for springmesh."""


class SpringMeshError(Exception):
    """Base class for all library errors."""


class StructuralError(SpringMeshError):
    """Malformed mesh connectivity (repeated or out-of-range node ids)."""


class DegenerateInputError(SpringMeshError):
    """Geometry too degenerate for the requested operation."""


class OutOfCoverageError(SpringMeshError):
    """Evaluation point lies outside every guide element."""


class SingularCoordinateError(SpringMeshError):
    """Point sits on a polar/spherical coordinate singularity."""


class ConfigError(SpringMeshError):
    """Invalid configuration; carries the offending key and line when known."""

    def __init__(self, message, key=None, line=None):
        self.reason = message
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.key = key
        self.line = line


class ConstraintDeficiencyError(SpringMeshError):
    """Assembled spring system is singular: a rigid-body mode was left free."""


class NumericalError(SpringMeshError):
    """Linear solve failed or missed its residual bound."""


class UndefinedStatisticError(SpringMeshError):
    """Statistic requested over an empty set."""


class UnsupportedDimensionError(SpringMeshError):
    """Operation not available for this mesh dimension."""
