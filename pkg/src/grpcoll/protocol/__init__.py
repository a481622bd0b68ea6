from .coordinator import CoordinatorReport, CoordinatorServer, serve_coordinator
from .framing import (
    ErrorCode,
    MsgType,
    WireMessage,
    decode,
    encode,
    read_message,
    write_message,
)
from .participant import TransferReport, classify_remote, run_participant
from .simulate import SimulationResult, simulate

__all__ = [
    "CoordinatorReport",
    "CoordinatorServer",
    "ErrorCode",
    "MsgType",
    "SimulationResult",
    "TransferReport",
    "WireMessage",
    "classify_remote",
    "decode",
    "encode",
    "read_message",
    "run_participant",
    "serve_coordinator",
    "simulate",
    "write_message",
]
