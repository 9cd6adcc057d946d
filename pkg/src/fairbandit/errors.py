"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value is missing, malformed or out of range.

    ``key`` names the offending configuration key when one is known.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class InfeasibleError(ConfigError):
    """The minimum selection rate cannot be met: ``k * min_rate > 1``."""
