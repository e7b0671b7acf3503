class RelentError(Exception):
    message = "Computation failed"

    def __init__(self, message=None):
        super().__init__(message or self.message)
        if message:
            self.message = message


class FormatError(RelentError):
    message = "Malformed input file"

class ConfigError(RelentError):
    message = "Invalid run configuration"

class InvalidParameter(RelentError):
    message = "Parameter out of range"

class InvalidSystem(RelentError):
    message = "Invalid subshift"

class EnumerationCapExceeded(RelentError):
    message = "Word enumeration exceeds the configured cap"

class DisallowedWord(RelentError):
    message = "Word is not allowed in this subshift"

class ReducibleMatrix(RelentError):
    message = "Matrix is not irreducible"

class NotConverged(RelentError):
    message = "Power iteration did not converge"

class InvalidMeasure(RelentError):
    message = "Invalid Markov measure"

class InvalidCode(RelentError):
    message = "Invalid factor code"

class ZeroMass(RelentError):
    message = "Measure gives zero mass to the required symbols"

class NotSingletonClump(RelentError):
    message = "Symbol is not a singleton clump"

class TruncationTooCoarse(RelentError):
    message = "Truncated induced system retains too little mass"

class NoFiber(RelentError):
    message = "Orbit has no invariant fiber"

class InfeasibleLift(RelentError):
    message = "No Markov lift satisfies the marginal constraints"

class ZeroProbabilityWindow(RelentError):
    message = "Window has zero probability under the lift"

class PushforwardMismatch(RelentError):
    message = "Lifts do not push forward to the same measure"

class ImageMismatch(RelentError):
    message = "Words do not have the same image"

class InsufficientData(RelentError):
    message = "Sample too short for the requested block length"

class UnknownGalleryEntry(RelentError):
    message = "Unknown gallery entry"

class GalleryCheckFailed(RelentError):
    message = "Gallery entry failed its self-check"
