"""Exception types raised across the package."""


class OmniStereoError(Exception):
    """Base class for every error raised by omnistereo."""


# camera model
class InvalidIntrinsics(OmniStereoError, ValueError):
    pass


class NonUnitDirection(OmniStereoError, ValueError):
    pass


class PolarAngleOutOfRange(OmniStereoError, ValueError):
    pass


class RadiusOutOfRange(OmniStereoError, ValueError):
    pass


# triangulation
class ParallelRays(OmniStereoError, ArithmeticError):
    pass


class DegeneratePlane(OmniStereoError, ArithmeticError):
    pass


class ParallelProjectedLines(OmniStereoError, ArithmeticError):
    pass


# calibration
class DegenerateGeometry(OmniStereoError, ValueError):
    pass


class DegenerateBoard(OmniStereoError, ValueError):
    pass


class DivergedOptimization(OmniStereoError, RuntimeError):
    pass


class InsufficientViews(OmniStereoError, ValueError):
    pass


# matching / file io
class ParseError(OmniStereoError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OutOfBoundsPixel(OmniStereoError, ValueError):
    pass


class EmptyScene(OmniStereoError, ValueError):
    pass


# fov zones
class InvalidOverlap(OmniStereoError, ValueError):
    pass


class CoverageExceeds360(OmniStereoError, ValueError):
    pass


class UnknownPreset(OmniStereoError, KeyError):
    pass
