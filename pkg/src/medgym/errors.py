"""Exception hierarchy shared across the package."""


class MedgymError(Exception):
    """Base class for all package errors."""


class FormatError(MedgymError):
    """A file or wire payload could not be parsed (bad magic, truncation, syntax)."""


class ValidationError(MedgymError):
    """Parsed data violates a documented invariant."""


class EpisodeError(MedgymError):
    """Environment protocol misuse: step after termination, step before reset,
    or an action outside the declared action space."""
