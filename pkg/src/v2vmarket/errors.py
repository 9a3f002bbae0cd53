"""Error types shared across the market engine."""


class ConfigurationError(Exception):
    """Invalid configuration: bad ranges, empty facility lists, malformed specs."""


class FeasibilityError(Exception):
    """A trade precondition is violated (provider surplus below requested amount)."""


class CapacityError(Exception):
    """An exhaustive oracle was asked to run beyond its size guard."""


class InvariantViolation(Exception):
    """An instrumented runtime check (e.g. labeling feasibility) failed."""
