"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent or invalid inputs (length mismatches, bad fields)."""


class ResolutionError(ValueError):
    """A smooth object is too narrow for the grid (derivatives unresolved)."""


class ZeroCrossingError(ValueError):
    """A field vanished where a nonzero value was required."""

    def __init__(self, index: int, time: float):
        self.index = index
        self.time = time
        super().__init__(
            f"field vanishes within tolerance at sample {index} (t={time}); "
            "focusing point reached"
        )


class InfiniteExpectationError(ValueError):
    """A mean-value estimate does not exist (zero event probability)."""
