"""Exception hierarchy for uavlos."""


class UavLosError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateInput(UavLosError, ValueError):
    """Geometry input has no area (collinear, too few distinct points)."""


class OriginOccluded(UavLosError):
    """The visibility origin lies inside (or on the boundary of) an obstacle."""


class VertexAboveUav(UavLosError, ValueError):
    """A vertex cannot be projected because it is not below the UAV."""


class InvalidDistance(UavLosError, ValueError):
    pass


class InvalidParams(UavLosError, ValueError):
    pass


class ParseError(UavLosError, ValueError):
    """Malformed scenario, sweep-spec or CSV input.

    ``line`` and ``field`` are filled in when the location is known.
    """

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
