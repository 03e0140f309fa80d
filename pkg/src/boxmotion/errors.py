"""Exception types shared across the package."""


class BoxMotionError(Exception):
    """Base class for all library errors."""


class ShapeError(BoxMotionError):
    """Image dimensions do not match, or an image is too small for the operation."""


class InvalidParameterError(BoxMotionError):
    """A numeric parameter is outside its valid range (sigma <= 0, singular transform, ...)."""


class InsufficientCorrespondencesError(BoxMotionError):
    """Too few usable point correspondences to estimate a transform."""


class InvalidAnnotationError(BoxMotionError):
    """A bounding box or mask annotation is inconsistent with the frame it describes."""


class ManifestError(BoxMotionError):
    """A sequence manifest or one of its referenced files cannot be used.

    Carries the offending path so CLI error reports can name it.
    """

    def __init__(self, message: str, path=None):
        super().__init__(message if path is None else f"{message} ({path})")
        self.path = str(path) if path is not None else None


class MissingFileError(ManifestError):
    """A file referenced by the manifest does not exist."""


class MalformedManifestError(ManifestError):
    """The manifest JSON cannot be parsed or violates the schema."""


class NonMonotoneIndexError(ManifestError):
    """Frame indices in the manifest are not strictly increasing."""


class ImageDecodeError(ManifestError):
    """A referenced image file exists but cannot be decoded."""
