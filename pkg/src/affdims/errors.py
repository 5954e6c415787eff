"""Exception types shared across the package.

The CLI maps each class to a distinct process exit code, so library code
should raise the most specific type that applies.
"""


class InvalidInputError(ValueError):
    """A parameter or data structure violates a documented precondition."""


class ConfigError(InvalidInputError):
    """A run configuration file is missing, malformed, or inconsistent."""


class ResourceLimitError(RuntimeError):
    """An enumeration or allocation would exceed its configured budget."""


class InsufficientDataError(RuntimeError):
    """Not enough usable data to produce the requested estimate."""


class DepthInsufficientError(InsufficientDataError):
    """Sampled words failed to resolve joins at the configured depth."""


class NoRootError(RuntimeError):
    """A bracketing search could not locate a sign change."""
