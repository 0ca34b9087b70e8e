"""Exception types shared across the engine."""


class FuzzyNearError(Exception):
    """Base class for all engine errors."""


class FitNotFound(FuzzyNearError):
    """Raised when the Beta-to-Gaussian fit search exhausts its grid.

    Carries the best candidate seen so the caller can inspect how close
    the search got.
    """

    def __init__(self, message, best_params=None, best_error=None):
        super().__init__(message)
        self.best_params = best_params
        self.best_error = best_error


class ImageTooSmall(FuzzyNearError):
    """Image smaller than a single block in at least one dimension."""


class UnknownProbe(FuzzyNearError):
    """Probe id not present in the probe registry."""


class DimensionMismatch(FuzzyNearError):
    """Two descriptions of unequal length were compared."""


class BudgetExceeded(FuzzyNearError):
    """Clique enumeration hit its clique cap or time budget.

    ``cliques`` holds the (genuinely maximal) cliques found before the
    budget tripped.
    """

    def __init__(self, message, cliques=(), reason="cliques"):
        super().__init__(message)
        self.cliques = list(cliques)
        self.reason = reason


class FingerprintMismatch(FuzzyNearError):
    """Query described under a different config than the index."""


class EmptyRetrieval(FuzzyNearError):
    """Precision asked for with no retrieved images."""


class NoRelevantImages(FuzzyNearError):
    """Recall asked for with an empty relevant set."""


class EmptyDataset(FuzzyNearError):
    """No decodable image found when building an index."""


class IndexFormatError(FuzzyNearError):
    """Index file is malformed or has an unsupported version."""
