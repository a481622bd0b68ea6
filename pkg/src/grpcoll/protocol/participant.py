"""Participant client: obfuscate a local shard and stream it, then optionally
query the trained coordinator with projected test vectors."""

from __future__ import annotations

import socket
import time
from dataclasses import dataclass

import numpy as np

from ..datasets import Dataset
from ..errors import EmptyDatasetError, RemoteError, TransportError
from ..obfuscation import NoScheme
from . import framing
from .framing import MsgType, WireMessage

DEFAULT_CHUNK = 256


@dataclass
class TransferReport:
    bytes_sent: int
    samples_sent: int
    obfuscation_seconds: float
    transfer_seconds: float
    k: int


def _connect(address, timeout_secs: float) -> socket.socket:
    try:
        sock = socket.create_connection(address, timeout=timeout_secs)
    except OSError as exc:
        raise TransportError(f"cannot connect to {address}: {exc}") from exc
    sock.settimeout(timeout_secs)
    return sock


def _raise_if_error(msg: WireMessage):
    if msg.msg_type == MsgType.ERROR:
        code, text = framing.unpack_error(msg.payload)
        raise RemoteError(code, text)


def run_participant(
    address,
    shard: Dataset,
    obfuscation=NoScheme(),
    participant_index: int = 0,
    chunk_size: int = DEFAULT_CHUNK,
    timeout_secs: float = 60.0,
    wait_for_ack: bool = False,
) -> TransferReport:
    """Obfuscate the shard locally, then stream HELLO / chunks / END."""
    if len(shard) == 0:
        raise EmptyDatasetError("refusing to transmit an empty shard")
    started = time.perf_counter()
    sent = obfuscation.obfuscate(shard, participant_index, phase=0)
    obf_seconds = time.perf_counter() - started

    sock = _connect(address, timeout_secs)
    bytes_sent = 0
    transfer_started = time.perf_counter()
    try:
        bytes_sent += framing.write_message(
            sock,
            WireMessage(
                MsgType.HELLO,
                framing.pack_hello(sent.dimension, sent.class_count, len(sent)),
            ),
        )
        for start in range(0, len(sent), chunk_size):
            payload = framing.pack_chunk(
                sent.vectors[start : start + chunk_size],
                sent.labels[start : start + chunk_size],
            )
            bytes_sent += framing.write_message(
                sock, WireMessage(MsgType.DATASET_CHUNK, payload)
            )
        bytes_sent += framing.write_message(sock, WireMessage(MsgType.DATASET_END))
        if wait_for_ack:
            msg = framing.read_message(sock)
            _raise_if_error(msg)
    finally:
        sock.close()
    return TransferReport(
        bytes_sent=bytes_sent,
        samples_sent=len(sent),
        obfuscation_seconds=obf_seconds,
        transfer_seconds=time.perf_counter() - transfer_started,
        k=sent.dimension,
    )


def classify_remote(
    address,
    vectors: np.ndarray,
    class_count: int,
    timeout_secs: float = 60.0,
):
    """Send CLASSIFY_REQs over one session; returns (labels, probability rows)."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    k = vectors.shape[1]
    sock = _connect(address, timeout_secs)
    try:
        framing.write_message(
            sock, WireMessage(MsgType.HELLO, framing.pack_hello(k, class_count, 0))
        )
        msg = framing.read_message(sock)
        _raise_if_error(msg)
        if msg.msg_type != MsgType.TRAIN_ACK:
            raise TransportError(f"expected TRAIN_ACK, got {msg.msg_type}")
        labels = np.empty(len(vectors), dtype=np.int64)
        probs = np.empty((len(vectors), class_count))
        for i, x in enumerate(vectors):
            framing.write_message(
                sock, WireMessage(MsgType.CLASSIFY_REQ, framing.pack_classify_req(x))
            )
            resp = framing.read_message(sock)
            _raise_if_error(resp)
            labels[i], probs[i] = framing.unpack_classify_resp(resp.payload)
        return labels, probs
    finally:
        sock.close()
