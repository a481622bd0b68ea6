"""Coordinator service: assembles obfuscated shards, trains, serves classify.

This module deliberately never imports the projection, privacy, or attack
modules: the coordinator must have no code path that can observe a
participant's projection key or noise budget (enforced by a test).
"""

from __future__ import annotations

import socket
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ..datasets import Dataset
from ..errors import FramingError, ProtocolError, TransportError
from ..nn.network import predict_proba, train
from . import framing
from .framing import ErrorCode, MsgType, WireMessage


@dataclass
class CoordinatorReport:
    expected_participants: int
    samples_received: int = 0
    bytes_received: int = 0
    train_seconds: float = 0.0
    k: int | None = None
    class_count: int | None = None
    sessions: list = field(default_factory=list)


class CoordinatorServer:
    """Accepts participant connections until N DATASET_ENDs, then trains.

    Samples are stored in arrival-interleaved order with no participant
    identity attached. After training, connected and new sessions may issue
    CLASSIFY_REQ against the frozen model.
    """

    def __init__(
        self,
        bind_address=("127.0.0.1", 0),
        expected_participants: int = 1,
        model_builder=None,
        train_config=None,
        timeout_secs: float = 60.0,
    ):
        if expected_participants < 1:
            raise ValueError("expected_participants must be >= 1")
        self.bind_address = bind_address
        self.expected_participants = expected_participants
        self.model_builder = model_builder
        self.train_config = train_config
        self.timeout_secs = timeout_secs

        self.model = None
        self.report = CoordinatorReport(expected_participants=expected_participants)
        self._lock = threading.Lock()
        self._vectors: list[np.ndarray] = []
        self._labels: list[np.ndarray] = []
        self._ends_seen = 0
        self._k = None
        self._class_count = None
        self._trained = threading.Event()
        self._aborted: Exception | None = None
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._listen_sock: socket.socket | None = None

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "CoordinatorServer":
        self._listen_sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listen_sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listen_sock.bind(self.bind_address)
        self._listen_sock.listen()
        self._listen_sock.settimeout(0.2)
        t = threading.Thread(target=self._accept_loop, daemon=True)
        t.start()
        self._threads.append(t)
        w = threading.Thread(target=self._deadline_watch, daemon=True)
        w.start()
        self._threads.append(w)
        return self

    @property
    def address(self):
        return self._listen_sock.getsockname()

    def wait_trained(self, timeout: float | None = None):
        deadline = timeout if timeout is not None else self.timeout_secs + 300.0
        if not self._trained.wait(deadline):
            if self._aborted:
                raise self._aborted
            raise TransportError("training did not complete in time")
        if self._aborted:
            raise self._aborted
        return self.model

    def shutdown(self):
        self._stop.set()
        if self._listen_sock is not None:
            self._listen_sock.close()
        for t in self._threads:
            t.join(timeout=5.0)

    # -- internals -----------------------------------------------------------

    def _deadline_watch(self):
        if self._trained.wait(self.timeout_secs):
            return
        with self._lock:
            if not self._trained.is_set() and self._ends_seen < self.expected_participants:
                self._aborted = ProtocolError(
                    f"partial data: only {self._ends_seen}/{self.expected_participants}"
                    f" participants finished within {self.timeout_secs}s"
                )
                self._trained.set()  # release waiters with the abort recorded

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._listen_sock.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            t = threading.Thread(target=self._session, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _send_error(self, conn, code: ErrorCode, message: str):
        try:
            framing.write_message(
                conn, WireMessage(MsgType.ERROR, framing.pack_error(code, message))
            )
        except TransportError:
            pass

    def _session(self, conn: socket.socket):
        conn.settimeout(self.timeout_secs)
        session = {"samples": 0, "bytes": 0}
        with self._lock:
            self.report.sessions.append(session)
        got_hello = False
        ended = False
        try:
            while not self._stop.is_set():
                try:
                    msg = framing.read_message(conn)
                except TransportError:
                    return
                except FramingError as exc:
                    self._send_error(conn, ErrorCode.PROTOCOL_VIOLATION, str(exc))
                    return
                session["bytes"] += framing.FRAME_OVERHEAD + len(msg.payload)

                if msg.msg_type == MsgType.HELLO:
                    k, class_count, _count = framing.unpack_hello(msg.payload)
                    with self._lock:
                        if self._k is None:
                            self._k = k
                            self._class_count = class_count
                            self.report.k = k
                            self.report.class_count = class_count
                        elif k != self._k or class_count != self._class_count:
                            self._send_error(
                                conn,
                                ErrorCode.DIMENSION_MISMATCH,
                                f"expected k={self._k}, classes={self._class_count}",
                            )
                            return
                    got_hello = True
                    if self._trained.is_set() and self._aborted is None:
                        framing.write_message(conn, WireMessage(MsgType.TRAIN_ACK))

                elif msg.msg_type == MsgType.DATASET_CHUNK:
                    if not got_hello or ended:
                        self._send_error(
                            conn, ErrorCode.PROTOCOL_VIOLATION, "chunk outside session"
                        )
                        return
                    try:
                        vectors, labels = framing.unpack_chunk(msg.payload, self._k)
                    except FramingError as exc:
                        self._send_error(conn, ErrorCode.DIMENSION_MISMATCH, str(exc))
                        return
                    with self._lock:
                        self._vectors.append(vectors)
                        self._labels.append(labels)
                        self.report.samples_received += len(labels)
                    session["samples"] += len(labels)

                elif msg.msg_type == MsgType.DATASET_END:
                    if not got_hello:
                        self._send_error(
                            conn, ErrorCode.PROTOCOL_VIOLATION, "end before hello"
                        )
                        return
                    if ended:
                        self._send_error(
                            conn, ErrorCode.PROTOCOL_VIOLATION, "duplicate DATASET_END"
                        )
                        return
                    ended = True
                    train_now = False
                    with self._lock:
                        self._ends_seen += 1
                        if self._ends_seen == self.expected_participants:
                            train_now = True
                    if train_now:
                        self._train()
                    if self._trained.wait(self.timeout_secs + 600.0):
                        if self._aborted is None:
                            framing.write_message(conn, WireMessage(MsgType.TRAIN_ACK))
                        else:
                            self._send_error(
                                conn, ErrorCode.PARTIAL_DATA, str(self._aborted)
                            )
                            return

                elif msg.msg_type == MsgType.CLASSIFY_REQ:
                    if not self._trained.is_set() or self.model is None:
                        self._send_error(
                            conn, ErrorCode.NOT_READY, "model not trained yet"
                        )
                        continue
                    try:
                        x = framing.unpack_classify_req(msg.payload, self._k)
                    except FramingError as exc:
                        self._send_error(conn, ErrorCode.DIMENSION_MISMATCH, str(exc))
                        continue
                    probs = predict_proba(self.model, x)[0]
                    framing.write_message(
                        conn,
                        WireMessage(
                            MsgType.CLASSIFY_RESP,
                            framing.pack_classify_resp(int(probs.argmax()), probs),
                        ),
                    )

                elif msg.msg_type == MsgType.ERROR:
                    return
                else:
                    self._send_error(
                        conn, ErrorCode.PROTOCOL_VIOLATION, "unexpected message"
                    )
                    return
        finally:
            conn.close()

    def _train(self):
        # Runs in exactly one thread: the session observing the final END.
        with self._lock:
            vectors = (
                np.concatenate(self._vectors)
                if self._vectors
                else np.empty((0, self._k or 0))
            )
            labels = (
                np.concatenate(self._labels) if self._labels else np.empty(0, np.int64)
            )
            self.report.bytes_received = sum(s["bytes"] for s in self.report.sessions)
        try:
            ds = Dataset(
                vectors=vectors,
                labels=labels,
                class_count=self._class_count,
                domain_bounds=np.stack(
                    [vectors.min(axis=0), vectors.max(axis=0)]
                )
                if len(vectors)
                else np.zeros((2, self._k)),
                provenance="coordinator-assembly",
            )
            model = self.model_builder(self._k, self._class_count)
            started = time.perf_counter()
            train(model, ds, self.train_config)
            self.report.train_seconds = time.perf_counter() - started
            self.model = model
        except Exception as exc:  # surfaced to wait_trained callers
            self._aborted = exc
        finally:
            self._trained.set()


def serve_coordinator(
    bind_address,
    expected_participants: int,
    model_builder,
    train_config,
    timeout_secs: float = 60.0,
):
    """Blocking convenience: run a coordinator until training completes.

    Returns (server, report); the server keeps answering CLASSIFY_REQ until
    ``server.shutdown()``.
    """
    server = CoordinatorServer(
        bind_address=bind_address,
        expected_participants=expected_participants,
        model_builder=model_builder,
        train_config=train_config,
        timeout_secs=timeout_secs,
    ).start()
    server.wait_trained()
    return server, server.report
