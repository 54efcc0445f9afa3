"""Exception hierarchy shared across the package."""


class PitchKDEError(Exception):
    """Base class for every error raised deliberately by pitchkde."""


class InvalidArgumentError(PitchKDEError, ValueError):
    pass


class EmptyInputError(PitchKDEError, ValueError):
    pass


class InsufficientDataError(PitchKDEError, ValueError):
    pass


class DegenerateInputError(PitchKDEError, ValueError):
    pass


class FloorTooAggressiveError(DegenerateInputError):
    """Every cell fell below the mass floor; the support would be empty."""


class SchemaError(PitchKDEError, ValueError):
    pass


class ConfigError(PitchKDEError, ValueError):
    pass


class SolverError(PitchKDEError, RuntimeError):
    pass
