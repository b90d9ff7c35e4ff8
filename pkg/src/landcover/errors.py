"""Exception hierarchy shared across the pipeline."""


class LandcoverError(Exception):
    """Base class for all pipeline errors."""


# raster I/O and preprocessing
class UnreadableFile(LandcoverError):
    pass


class UnsupportedFormat(LandcoverError):
    pass


class BandIndexOutOfRange(LandcoverError):
    pass


class UnknownColor(LandcoverError):
    pass


# sampling
class InsufficientSamples(LandcoverError):
    def __init__(self, category, available=None, requested=None):
        self.category = category
        msg = f"category {category} has too few labeled pixels"
        if available is not None:
            msg += f" ({available} available, {requested} requested)"
        super().__init__(msg)


class CenterOutOfBounds(LandcoverError):
    pass


class WindowOutOfBounds(LandcoverError):
    pass


# features
class DegeneratePatch(LandcoverError):
    pass


class PatchTooSmall(LandcoverError):
    pass


# classification
class EmptyTrainingSet(LandcoverError):
    pass


class DimensionMismatch(LandcoverError):
    pass


class MalformedHeader(LandcoverError):
    pass


class NonStochasticRow(LandcoverError):
    pass


# segmentation
class InfeasibleTarget(LandcoverError):
    pass


class RegionOverflow(LandcoverError):
    pass


# fusion / metrics
class ExtentMismatch(LandcoverError):
    pass


class GridMismatch(LandcoverError):
    pass


class PredictionContainsUnknown(LandcoverError):
    pass


class EmptyMatrix(LandcoverError):
    pass


# synthetic scenes / config
class InvalidSpec(LandcoverError):
    pass


class ConfigError(LandcoverError):
    pass
