"""Exception hierarchy shared by all grpcoll modules."""


class GrpcollError(Exception):
    """Base class for all grpcoll errors."""


class InvalidDimensionError(GrpcollError, ValueError):
    """Dimensions are inconsistent or out of range (e.g. k > d, k = 0)."""


class UnachievableConditionError(GrpcollError, ValueError):
    """Requested Frobenius condition number is below the attainable minimum."""


class DegenerateMatrixError(GrpcollError, ValueError):
    """Matrix is all-zero (or otherwise unusable for the requested operation)."""


class InvalidScaleError(GrpcollError, ValueError):
    """Laplace scale parameter must be strictly positive."""


class InvalidBoundsError(GrpcollError, ValueError):
    """Domain bounds are empty or have upper < lower."""


class DataFormatError(GrpcollError, ValueError):
    """A dataset file is malformed (bad magic, truncation, ragged rows, ...)."""


class EmptyDatasetError(GrpcollError, ValueError):
    """An operation requiring samples received an empty dataset."""


class ShardingError(GrpcollError, ValueError):
    """More shards requested than samples available."""


class FramingError(GrpcollError, ValueError):
    """A wire frame is malformed (bad magic, version, or length overrun)."""


class ProtocolError(GrpcollError, RuntimeError):
    """A peer violated the session state machine."""


class TransportError(GrpcollError, RuntimeError):
    """Connection-level failure (refused, reset, timeout)."""


class RemoteError(GrpcollError, RuntimeError):
    """The peer answered with an ERROR frame."""

    def __init__(self, code: int, message: str):
        super().__init__(f"remote error {code}: {message}")
        self.code = code
        self.message = message
