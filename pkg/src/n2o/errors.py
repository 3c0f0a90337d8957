"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: configuration problems exit 2, data
and file-format problems exit 3, violated internal invariants exit 4.
"""


class N2OError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(N2OError):
    """Bad parameters or an unusable run configuration."""


class DataFormatError(N2OError):
    """A file exists but its contents violate the expected format."""


class InvariantError(N2OError):
    """An internal consistency check failed; indicates a bug."""
