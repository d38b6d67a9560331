"""Exception types shared across the toolkit.

Every operational failure mode has a named exception so callers (and the
HTTP layer) can map errors to stable codes.  Exceptions carry enough
context to be actionable: line numbers, ids, field names.
"""


class MindvlogError(Exception):
    """Base class for all toolkit errors."""

    code = "error"


# --- corpus -----------------------------------------------------------------

class MalformedRecord(MindvlogError):
    code = "malformed_record"

    def __init__(self, line_no, detail=""):
        self.line_no = line_no
        super().__init__(f"malformed manifest record at line {line_no}: {detail}")


class DuplicateId(MindvlogError):
    code = "duplicate_id"

    def __init__(self, sample_id):
        self.sample_id = sample_id
        super().__init__(f"duplicate sample_id: {sample_id}")


class MissingRequiredField(MindvlogError):
    code = "missing_required_field"

    def __init__(self, field, line_no=None):
        self.field = field
        self.line_no = line_no
        where = f" at line {line_no}" if line_no is not None else ""
        super().__init__(f"missing required field '{field}'{where}")


class EmptyCorpus(MindvlogError):
    code = "empty_corpus"


class TranscriptionFailed(MindvlogError):
    code = "transcription_failed"

    def __init__(self, detail):
        self.detail = detail
        super().__init__(f"transcription failed: {detail}")


# --- clients ----------------------------------------------------------------

class ClientUnavailable(MindvlogError):
    code = "client_unavailable"


# --- features ---------------------------------------------------------------

class EmptySignal(MindvlogError):
    code = "empty_signal"


class InvalidConfig(MindvlogError):
    code = "invalid_config"


class DimensionMismatch(MindvlogError):
    code = "dimension_mismatch"


class EmptyVideo(MindvlogError):
    code = "empty_video"


class NonDivisibleDims(MindvlogError):
    code = "non_divisible_dims"


class EmptyText(MindvlogError):
    code = "empty_text"


class InvalidRate(MindvlogError):
    code = "invalid_rate"


# --- fusion / training ------------------------------------------------------

class LengthOverflow(MindvlogError):
    code = "length_overflow"


class EmptyMask(MindvlogError):
    code = "empty_mask"


class BatchMismatch(MindvlogError):
    code = "batch_mismatch"


class NonFiniteGradient(MindvlogError):
    code = "non_finite_gradient"


class MissingFeatures(MindvlogError):
    code = "missing_features"

    def __init__(self, sample_id, detail=""):
        self.sample_id = sample_id
        super().__init__(f"missing features for sample '{sample_id}' {detail}".rstrip())


class MissingMedia(MindvlogError):
    code = "missing_media"


class NonFiniteFeatures(MindvlogError):
    code = "non_finite_features"


class DivergedLoss(MindvlogError):
    code = "diverged_loss"


class UnknownVariant(MindvlogError):
    code = "unknown_variant"


class EmptySet(MindvlogError):
    code = "empty_set"


class CorruptCheckpoint(MindvlogError):
    code = "corrupt_checkpoint"


# --- metrics ----------------------------------------------------------------

class LengthMismatch(MindvlogError):
    code = "length_mismatch"


class EmptyInput(MindvlogError):
    code = "empty_input"


class EmptyCandidate(MindvlogError):
    code = "empty_candidate"


# --- retrieval --------------------------------------------------------------

class EmptyDocument(MindvlogError):
    code = "empty_document"


class EmptyIndex(MindvlogError):
    code = "empty_index"


class CorruptIndexFile(MindvlogError):
    code = "corrupt_index_file"


# --- distortion -------------------------------------------------------------

class EmptyUtterance(MindvlogError):
    code = "empty_utterance"


class MissingFewshots(MindvlogError):
    code = "missing_fewshots"


class UnparseableOutput(MindvlogError):
    code = "unparseable_output"

    def __init__(self, detail):
        self.detail = detail
        super().__init__(f"could not parse model output: {detail}")


class UnknownDistortionName(MindvlogError):
    code = "unknown_distortion_name"

    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown distortion name: {name!r}")


class UnparseableAfterRetries(MindvlogError):
    code = "unparseable_after_retries"

    def __init__(self, attempts, last_detail=""):
        self.attempts = attempts
        super().__init__(
            f"model output unparseable after {attempts} attempts: {last_detail}"
        )


# --- agent service ----------------------------------------------------------

class UnknownSession(MindvlogError):
    code = "unknown_session"

    def __init__(self, session_id):
        self.session_id = session_id
        super().__init__(f"unknown session: {session_id}")


class ConcurrentModificationRetry(MindvlogError):
    code = "concurrent_modification"


class StageError(MindvlogError):
    """Wraps an error from one pipeline stage, tagged with the stage name."""

    code = "stage_error"

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
