"""Error types raised across the package.

Every error carries a short machine-readable ``code`` (stable, used as the
one-line prefix on the CLI error stream) and the process exit code the CLI
maps it to: 1 for validation problems, 2 for I/O, 3 for numerical failures.
"""


class LoramergeError(Exception):
    """Base class for all errors raised by loramerge."""

    code = "error"
    exit_code = 1


class ParameterError(LoramergeError):
    """An argument is outside its documented range or shape."""

    code = "parameter"


class ValidationError(LoramergeError):
    """A value violates a type invariant (shapes, rank, emptiness)."""

    code = "validation"


class FormatError(LoramergeError):
    """A file does not conform to the container or record format."""

    code = "format"


class OverlapError(FormatError):
    """Tensor data offsets in a container file overlap."""

    code = "overlap"


class PairingError(LoramergeError):
    """An adapter file is missing the A or B factor for a layer."""

    code = "pairing"


class DataError(LoramergeError):
    """Tensor data contains non-finite values (NaN or Inf)."""

    code = "data"


class AlignmentError(LoramergeError):
    """Inputs that must share layer names and shapes do not."""

    code = "alignment"


class SimilarityUndefinedError(LoramergeError):
    """Cosine similarity requested against an all-zero vector."""

    code = "similarity-undefined"


class RateUndefinedError(LoramergeError):
    """Hallucination rate requested with zero generated examples."""

    code = "rate-undefined"


class ReductionUndefinedError(LoramergeError):
    """Percentage reduction from a zero baseline to a nonzero value."""

    code = "reduction-undefined"


class StorageError(LoramergeError):
    """Underlying file could not be read or written."""

    code = "io"
    exit_code = 2


class NumericalError(LoramergeError):
    """A numerical routine (SVD) failed to converge."""

    code = "numerical"
    exit_code = 3
