"""Exception hierarchy shared by every pipeline stage."""


class CollageLinkError(Exception):
    """Base class for all errors raised by this package."""


class ImageDecodeError(CollageLinkError):
    pass


class DimensionError(CollageLinkError, ValueError):
    pass


class DegenerateVectorError(CollageLinkError, ValueError):
    pass


class InvalidAgeError(CollageLinkError, ValueError):
    pass


class ConfigError(CollageLinkError):
    pass


class EmptyGraphError(CollageLinkError):
    pass


class WriteError(CollageLinkError, OSError):
    pass


class BackendUnavailableError(CollageLinkError):
    pass


class IncompatibleEmbeddingError(CollageLinkError):
    """Face embeddings produced by different models cannot be compared."""


class ManifestError(CollageLinkError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicatePostError(ManifestError):
    pass


class BundleParseError(CollageLinkError):
    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
