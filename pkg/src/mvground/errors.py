"""Exception types shared across the grounding pipeline."""


class GroundingError(Exception):
    """Base class for all pipeline errors."""


class BundleFormatError(GroundingError):
    """A scene bundle on disk is missing files or violates the format contract."""


class ConfigurationError(GroundingError):
    """A pipeline configuration value is out of range or a spec string is unknown."""


class NoProposalsError(GroundingError):
    """The scene contains no proposals after confidence filtering."""


class DegenerateEmbeddingError(GroundingError):
    """An embedding vector has zero norm and cannot enter a cosine."""


class EmbeddingProviderError(GroundingError):
    """A remote embedding provider failed; the message carries the provider identity."""


class ParserError(GroundingError):
    """A remote query parser failed after its retries."""


class EmptyProjectionError(GroundingError):
    """A bounding rectangle was requested for an empty pixel set."""


class JudgeTransportError(GroundingError):
    """A judge request failed at the transport level (network, HTTP, bad envelope)."""


class JudgeParseError(GroundingError):
    """A judge response contained no valid choice object."""
