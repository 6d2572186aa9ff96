class MCSepError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigurationError(MCSepError, ValueError):
    pass


class GeometryError(MCSepError, ValueError):
    """Arrays or STFT geometries that do not line up."""


class DegenerateInputError(MCSepError, ValueError):
    """Inputs for which a quantity is undefined, e.g. an all-zero mixture."""


class NumericalError(MCSepError, ArithmeticError):
    pass


class DivergenceError(NumericalError):
    """The alternating solver's objective went up by more than the slack."""
