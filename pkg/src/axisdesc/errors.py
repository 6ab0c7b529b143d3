"""Exception hierarchy shared by the pipeline stages."""


class AxisDescError(Exception):
    """Base class; ``stage`` names the pipeline step that failed."""

    stage = "pipeline"


class MaskError(AxisDescError):
    stage = "load"


class ConvergenceError(AxisDescError):
    stage = "field"


class StepSizeError(AxisDescError):
    stage = "field"


class TopologyError(AxisDescError):
    """Annealing hit ``tau_max`` without reaching the requested topology."""

    stage = "anneal"

    def __init__(self, message, criticals=()):
        super().__init__(message)
        self.criticals = list(criticals)


class MajorAxesError(AxisDescError):
    stage = "descriptor"


class DescriptorFormatError(AxisDescError):
    stage = "io"


class ManifestMismatchError(AxisDescError):
    stage = "database"
