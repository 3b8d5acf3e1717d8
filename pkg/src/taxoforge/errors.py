"""Exception hierarchy. Everything raised on bad data or bad state derives
from TaxoforgeError so the CLI can map it to a single data-error exit code."""


class TaxoforgeError(Exception):
    """Base class for all taxoforge errors."""


class ConfigError(TaxoforgeError):
    """Invalid configuration value."""


class DataFormatError(TaxoforgeError):
    """Malformed input file. Carries a line number when one is known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateLabelError(TaxoforgeError):
    """Label already present in the taxonomy."""


class UnknownNodeError(TaxoforgeError):
    """Node id not present in the taxonomy."""


class CycleError(TaxoforgeError):
    """Move would place a node under its own subtree."""


class RootViolationError(TaxoforgeError):
    """Operation not permitted on or would duplicate the root."""


class EmptyCorpusError(TaxoforgeError):
    """Corpus has no usable tokens, or no word survives min_count."""


class DegeneratePhraseError(TaxoforgeError):
    """Phrase has no representable tokens under the embedding model."""


class EmptyIndexError(TaxoforgeError):
    """Nearest-neighbor lookup over an empty index."""


class SingleClassError(TaxoforgeError):
    """Scorer training data contains only one class."""


class EmptyOverlapError(TaxoforgeError):
    """Reference ontology shares no edges with the taxonomy label set."""


class SuggestionStateError(TaxoforgeError):
    """Suggestion already decided."""


class SuggestionExpiredError(TaxoforgeError):
    """Suggestion's proposed parent no longer usable."""
