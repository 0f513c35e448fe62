"""Exception taxonomy for the evaluation pipeline.

Two families matter to callers: :class:`InputError` covers file/config
problems (CLI exit code 1), :class:`EstimationError` covers geometric or
numerical failures inside the pipeline (CLI exit code 2).
"""


class MapEvalError(Exception):
    """Base class for all package errors."""


class InputError(MapEvalError):
    """Bad input file, config key, or argument."""


class EstimationError(MapEvalError):
    """A pipeline stage could not produce a valid result."""


# --- file parsing -----------------------------------------------------------

class MalformedHeader(InputError):
    pass


class UnsupportedEncoding(InputError):
    pass


class TruncatedBody(InputError):
    pass


class DuplicateTargetId(InputError):
    pass


class MalformedRow(InputError):
    pass


class EmptyFile(InputError):
    pass


class IoFailure(InputError):
    pass


# --- config / evaluation inputs --------------------------------------------

class TooFewTargets(InputError):
    pass


class IdMismatch(InputError):
    def __init__(self, missing_in_estimates=(), missing_in_gps=()):
        self.missing_in_estimates = sorted(missing_in_estimates)
        self.missing_in_gps = sorted(missing_in_gps)
        parts = []
        if self.missing_in_estimates:
            parts.append(f"missing estimates for {self.missing_in_estimates}")
        if self.missing_in_gps:
            parts.append(f"missing ground truth for {self.missing_in_gps}")
        super().__init__("; ".join(parts) or "target id sets differ")


class OverlappingTargets(InputError):
    pass


# --- cropping ---------------------------------------------------------------

class EmptyCrop(EstimationError):
    pass


class NoGroundFound(EstimationError):
    pass


class EmptyAfterRemoval(EstimationError):
    pass


# --- target estimation ------------------------------------------------------

class TooFewPoints(EstimationError):
    pass


class DegenerateCluster(EstimationError):
    pass


class NoConsensus(EstimationError):
    pass


class DegeneratePlane(EstimationError):
    pass


class NearParallel(EstimationError):
    pass


class RetriesExhausted(EstimationError):
    pass


class SampleFailure(EstimationError):
    def __init__(self, sample_index, cause):
        self.sample_index = sample_index
        self.cause = cause
        super().__init__(f"sample {sample_index} failed: {cause}")


# --- registration -----------------------------------------------------------

class TooFewPairs(EstimationError):
    pass


class DegenerateConfiguration(EstimationError):
    pass
