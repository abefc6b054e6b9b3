"""Exception types shared across the planner modules."""


class ParameterError(ValueError):
    """A configuration value violates one of its invariants."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NonFiniteError(ValueError):
    """A state or control contains NaN or infinite components."""


class SensingError(RuntimeError):
    """The sensor was asked to scan from inside an obstacle."""


class SingularityError(RuntimeError):
    """The UAV coincides with an obstacle point (potential field singular)."""
