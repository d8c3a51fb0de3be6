"""Exception types shared across the simulator."""


class BondthermError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(BondthermError):
    """Invalid configuration input.

    Carries a list of human-readable problem strings ("key.path: message")
    so callers can report every failure at once.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class GeometryError(BondthermError):
    """A geometric entity cannot be placed on the grid."""


class MaterialRangeError(BondthermError):
    """A material law was evaluated outside its valid temperature range."""


class DataError(BondthermError):
    """Measured input data is unusable."""


class SolverError(BondthermError):
    """A linear solve or fixed-point iteration failed to converge."""
