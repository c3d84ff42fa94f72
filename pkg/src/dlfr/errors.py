"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so new error types should
subclass one of the three roots below rather than raising bare ValueError.
"""


class DlfrError(Exception):
    """Base class for all package errors."""


class ParameterError(DlfrError, ValueError):
    """Invalid argument or configuration value (CLI exit code 2)."""


class DimensionError(ParameterError):
    """Operands have mismatched or unusable shapes."""


class FormatError(DlfrError, ValueError):
    """Malformed input file or byte stream (CLI exit code 4)."""


class ContainerError(FormatError):
    """Base class for latent-container decoding failures."""


class BadMagicError(ContainerError):
    """Stream does not start with the container magic."""


class UnsupportedVersionError(ContainerError):
    """Container version is not supported by this reader."""


class TruncatedStreamError(ContainerError):
    """Stream ended before a complete record could be read."""


class ChecksumError(ContainerError):
    """Segment payload does not match its stored CRC32."""
