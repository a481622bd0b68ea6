"""Binary wire format between participants and the coordinator.

Frame layout (all integers little-endian):

    magic "GRPC" | version u16 | msg_type u16 | payload_len u32 | payload

Vector payloads carry IEEE-754 single-precision values; labels are u16.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ..errors import FramingError, TransportError

MAGIC = b"GRPC"
VERSION = 1
HEADER = struct.Struct("<4sHHI")
FRAME_OVERHEAD = HEADER.size  # 12 bytes per frame
MAX_PAYLOAD = 64 * 1024 * 1024

_HELLO = struct.Struct("<IHI")  # k, class_count, sample_count
_CHUNK_COUNT = struct.Struct("<H")
_CLASSIFY_RESP = struct.Struct("<H")
_ERROR = struct.Struct("<H")


class MsgType(IntEnum):
    HELLO = 1
    DATASET_CHUNK = 2
    DATASET_END = 3
    TRAIN_ACK = 4
    CLASSIFY_REQ = 5
    CLASSIFY_RESP = 6
    ERROR = 7


class ErrorCode(IntEnum):
    NOT_READY = 1
    DIMENSION_MISMATCH = 2
    PROTOCOL_VIOLATION = 3
    INTERNAL = 4
    PARTIAL_DATA = 5


@dataclass(frozen=True)
class WireMessage:
    msg_type: int
    payload: bytes = b""
    version: int = VERSION

    def __post_init__(self):
        if len(self.payload) > MAX_PAYLOAD:
            raise FramingError("payload too large")


def encode(msg: WireMessage) -> bytes:
    return HEADER.pack(MAGIC, msg.version, int(msg.msg_type), len(msg.payload)) + msg.payload


def decode(frame: bytes) -> WireMessage:
    if len(frame) < HEADER.size:
        raise FramingError("frame shorter than header")
    magic, version, msg_type, payload_len = HEADER.unpack_from(frame)
    if magic != MAGIC:
        raise FramingError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FramingError(f"unsupported version {version}")
    if len(frame) != HEADER.size + payload_len:
        raise FramingError(
            f"frame length {len(frame)} != header + payload_len {HEADER.size + payload_len}"
        )
    try:
        msg_type = MsgType(msg_type)
    except ValueError as exc:
        raise FramingError(f"unknown message type {msg_type}") from exc
    return WireMessage(msg_type=msg_type, payload=frame[HEADER.size :], version=version)


def _recv_exact(sock: socket.socket, size: int) -> bytes:
    buf = bytearray()
    while len(buf) < size:
        try:
            part = sock.recv(size - len(buf))
        except socket.timeout as exc:
            raise TransportError("receive timeout") from exc
        except OSError as exc:
            raise TransportError(str(exc)) from exc
        if not part:
            raise TransportError("connection closed mid-frame")
        buf += part
    return bytes(buf)


def read_message(sock: socket.socket) -> WireMessage:
    header = _recv_exact(sock, HEADER.size)
    magic, version, msg_type, payload_len = HEADER.unpack(header)
    if magic != MAGIC:
        raise FramingError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FramingError(f"unsupported version {version}")
    if payload_len > MAX_PAYLOAD:
        raise FramingError(f"payload length {payload_len} exceeds limit")
    payload = _recv_exact(sock, payload_len) if payload_len else b""
    try:
        msg_type = MsgType(msg_type)
    except ValueError as exc:
        raise FramingError(f"unknown message type {msg_type}") from exc
    return WireMessage(msg_type=msg_type, payload=payload, version=version)


def write_message(sock: socket.socket, msg: WireMessage) -> int:
    frame = encode(msg)
    try:
        sock.sendall(frame)
    except OSError as exc:
        raise TransportError(str(exc)) from exc
    return len(frame)


# --- payload codecs ---------------------------------------------------------

def pack_hello(k: int, class_count: int, sample_count: int) -> bytes:
    return _HELLO.pack(k, class_count, sample_count)


def unpack_hello(payload: bytes):
    if len(payload) != _HELLO.size:
        raise FramingError("bad HELLO payload")
    return _HELLO.unpack(payload)


def _sample_dtype(k: int) -> np.dtype:
    return np.dtype([("v", "<f4", (k,)), ("y", "<u2")])


def chunk_payload_bytes(n_samples: int, k: int) -> int:
    """Exact chunk payload size: count word plus n * (4k + 2)."""
    return _CHUNK_COUNT.size + n_samples * (4 * k + 2)


def pack_chunk(vectors: np.ndarray, labels: np.ndarray) -> bytes:
    n, k = vectors.shape
    if n > 0xFFFF:
        raise FramingError("chunk too large")
    rec = np.empty(n, dtype=_sample_dtype(k))
    rec["v"] = vectors.astype("<f4")
    rec["y"] = labels.astype("<u2")
    return _CHUNK_COUNT.pack(n) + rec.tobytes()


def unpack_chunk(payload: bytes, k: int):
    if len(payload) < _CHUNK_COUNT.size:
        raise FramingError("bad chunk payload")
    (n,) = _CHUNK_COUNT.unpack_from(payload)
    expected = chunk_payload_bytes(n, k)
    if len(payload) != expected:
        raise FramingError(f"chunk payload {len(payload)} != expected {expected}")
    rec = np.frombuffer(payload, dtype=_sample_dtype(k), offset=_CHUNK_COUNT.size)
    return rec["v"].astype(np.float64), rec["y"].astype(np.int64)


def pack_classify_req(vector: np.ndarray) -> bytes:
    return np.asarray(vector).astype("<f4").tobytes()


def unpack_classify_req(payload: bytes, k: int) -> np.ndarray:
    if len(payload) != 4 * k:
        raise FramingError(f"classify payload {len(payload)} != {4 * k}")
    return np.frombuffer(payload, dtype="<f4").astype(np.float64)


def pack_classify_resp(label: int, probs: np.ndarray) -> bytes:
    return _CLASSIFY_RESP.pack(label) + np.asarray(probs).astype("<f4").tobytes()


def unpack_classify_resp(payload: bytes):
    if len(payload) < _CLASSIFY_RESP.size or (len(payload) - 2) % 4:
        raise FramingError("bad classify response")
    (label,) = _CLASSIFY_RESP.unpack_from(payload)
    probs = np.frombuffer(payload, dtype="<f4", offset=2).astype(np.float64)
    return label, probs


def pack_error(code: int, message: str) -> bytes:
    return _ERROR.pack(code) + message.encode()


def unpack_error(payload: bytes):
    if len(payload) < _ERROR.size:
        raise FramingError("bad error payload")
    (code,) = _ERROR.unpack_from(payload)
    return code, payload[2:].decode(errors="replace")
