"""Exception types raised by the model and the experiment harness."""


class ModelError(Exception):
    pass


class ConfigurationError(ModelError, ValueError):
    """Invalid stimulus, grid or run configuration."""


class ParameterError(ModelError, ValueError):
    """Model parameter outside its admissible range."""


class DegenerateInputError(ModelError, ValueError):
    pass


class NoThresholdError(ModelError):
    """A level sweep never produced a usable sensitivity."""


class AlignmentError(ModelError, ValueError):
    """Model curve and reference data are not on the same grid."""
