"""Exception hierarchy for the toolkit."""


class ScelmoError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(ScelmoError):
    """Corpus loading, deduplication, or splitting failed."""


class FormatError(ScelmoError):
    """A model container or JSONL artifact is malformed or has the wrong magic."""


class MutationError(ScelmoError):
    """A mutation cannot be applied (e.g. no alternative operator exists)."""


class TrainingError(ScelmoError):
    """Training diverged or was configured with invalid hyperparameters."""


class ProviderError(ScelmoError):
    """A feature provider was queried with an instance it cannot serve."""
