"""Exception taxonomy.

Two broad families matter to callers: `DataError` (bad corpus, bad file, bad
argument shape; CLI exit code 2) and `BackendError` (remote or scripted policy
failure; CLI exit code 3). Everything inherits `ArtJudgeError` so library users
can catch one base.
"""

from __future__ import annotations


class ArtJudgeError(Exception):
    """Base class for all library errors."""


class DataError(ArtJudgeError):
    """Invalid data, file, or argument. Maps to CLI exit code 2."""


class BackendError(ArtJudgeError):
    """A reasoning backend could not produce a usable response. CLI exit code 3."""


# -- corpus / model ----------------------------------------------------------

class ValidationError(DataError):
    """Corpus failed hard validation. Carries the full report when available."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


# -- embedding store ---------------------------------------------------------

class FormatError(DataError):
    """Malformed embedding-store file: bad magic, truncation, duplicate ids."""


class DimMismatchError(DataError):
    """Vector dimensions disagree."""


class ZeroVectorError(DataError):
    """A vector with (near-)zero norm where a direction is required."""


# -- style manifold ----------------------------------------------------------

class DegenerateAxisError(DataError):
    """A pole axis is linearly dependent on earlier axes."""


class EmptyPortfolioError(DataError):
    """An artist has no embedded artworks to aggregate."""


class WeightSumError(DataError):
    """Patch weights do not sum to one."""


# -- concept graph -----------------------------------------------------------

class CycleError(DataError):
    """Explicit concept edges introduced a cycle."""


class UnknownCodeError(DataError):
    """A concept code is absent from the parsed graph."""


class EmptySetError(DataError):
    """Set distance requested over an empty code set."""


class MisalignedListsError(DataError):
    """Paired lists have different lengths."""


# -- retrieval ---------------------------------------------------------------

class EmptyMatrixError(DataError):
    """Cannot build an index over zero vectors."""


# -- evidence tools ----------------------------------------------------------

class ToolFailure(DataError):
    """An evidence tool could not run for this pair; recorded, not fatal."""


class MissingBiographyError(ToolFailure):
    """Neither artist in the pair has any biography document."""


class MissingSignatureError(ToolFailure):
    """No style signature available for an artist."""


class MissingCodesError(ToolFailure):
    """No concept codes available for an artist's portfolio."""


# -- backends ----------------------------------------------------------------

class UnscriptedContextError(BackendError):
    """A scripted backend was asked about a context not covered by its script."""


class TransportError(BackendError):
    """HTTP transport failed after retries."""


class RateLimitError(TransportError):
    """Remote endpoint kept answering 429 after retries."""


class ParseError(BackendError):
    """Backend response did not match the action grammar after one retry."""


# -- benchmark ---------------------------------------------------------------

class ImbalanceError(DataError):
    """Balanced dataset mode got unequal class counts."""


class StratificationError(DataError):
    """Folds cannot satisfy the stratification tolerances."""


class LengthMismatchError(DataError):
    """Predictions and labels differ in length."""


class MissingTierError(DataError):
    """A negative pair lacks the tier needed for per-tier reporting."""


class UnknownSwitchError(DataError):
    """Unrecognised ablation switch name."""


# -- export ------------------------------------------------------------------

class DanglingVerdictError(DataError):
    """A verdict references an artist missing from the corpus."""
