"""Exception types shared across the package.

The CLI maps ConfigError to exit code 2 and NumericError (including
SingularityError) to exit code 3. Plain ValueError is used for ordinary
domain violations such as t outside [0, 1].
"""


class ConfigError(Exception):
    """Bad or unknown configuration input."""


class NumericError(Exception):
    """Non-finite values or other numeric failure during computation."""


class SingularityError(NumericError):
    """A path coefficient is evaluated where it diverges (alpha_t = 0 etc.)."""
