"""Newline-delimited JSON-RPC framing over stdio, TCP, or in-process loopback.

One canonical-JSON frame per line.  The server side answers ``tool/<name>``
calls and a ``registry/list`` introspection method; the client side writes
one envelope frame and consumes exactly one response frame with a matching
id.  Unknown tools come back as error results, not crashes.
"""

from __future__ import annotations

import json
import logging
import socket
import sys
from dataclasses import dataclass
from typing import BinaryIO, Callable, Optional

from .envelope import JSONRPC_VERSION, canonical_json_bytes, serialize_envelope
from .errors import IdMismatch, TransportClosed
from .router import ToolRegistry

logger = logging.getLogger("tickslab.transport")

STATUS_OK = "ok"
STATUS_ERROR = "error"

_CODE_METHOD_NOT_FOUND = -32601
_CODE_INVALID_REQUEST = -32600
_CODE_PARSE_ERROR = -32700


@dataclass(frozen=True)
class ToolResult:
    status: str                  # "ok" | "error"
    payload: dict

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


def ok_result(**payload) -> ToolResult:
    return ToolResult(STATUS_OK, payload)


def error_result(reason: str, **payload) -> ToolResult:
    return ToolResult(STATUS_ERROR, {"reason": reason, **payload})


class Transport:
    """One frame = one canonical-JSON line."""

    def send_frame(self, frame: bytes) -> None:
        raise NotImplementedError

    def recv_frame(self) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        pass


class StreamTransport(Transport):
    """Transport over a binary reader/writer pair."""

    def __init__(self, reader: BinaryIO, writer: BinaryIO):
        self._reader = reader
        self._writer = writer
        self._closed = False

    def send_frame(self, frame: bytes) -> None:
        if self._closed:
            raise TransportClosed("transport is closed")
        if b"\n" in frame:
            raise ValueError("frames must not contain newlines")
        self._writer.write(frame + b"\n")
        self._writer.flush()

    def recv_frame(self) -> bytes:
        if self._closed:
            raise TransportClosed("transport is closed")
        line = self._reader.readline()
        if not line:
            raise TransportClosed("peer closed the stream")
        return line.rstrip(b"\n")

    def close(self) -> None:
        self._closed = True


class StdioTransport(StreamTransport):
    def __init__(self, reader: Optional[BinaryIO] = None, writer: Optional[BinaryIO] = None):
        super().__init__(reader or sys.stdin.buffer, writer or sys.stdout.buffer)


class TcpTransport(StreamTransport):
    def __init__(self, sock: socket.socket):
        self._sock = sock
        super().__init__(sock.makefile("rb"), sock.makefile("wb"))

    @classmethod
    def connect(cls, host: str, port: int) -> "TcpTransport":
        return cls(socket.create_connection((host, port)))

    def close(self) -> None:
        super().close()
        # makefile objects keep the fd alive; close them before the socket
        # so the peer sees EOF promptly
        for stream in (self._writer, self._reader):
            try:
                stream.close()
            except OSError:  # pragma: no cover
                pass
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class ToolServer:
    """Executes tool calls against a handler and serves registry introspection.

    ``handler(name, args, meta)`` returns a ToolResult; ``meta`` is the
    envelope metadata when present (None for bare requests).
    """

    def __init__(self, registry: ToolRegistry, handler: Callable[[str, dict, Optional[dict]], ToolResult]):
        self.registry = registry
        self.handler = handler

    def handle_frame(self, frame: bytes) -> bytes:
        try:
            doc = json.loads(frame.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return self._error_frame(None, _CODE_PARSE_ERROR, f"parse error: {exc}")
        if (
            not isinstance(doc, dict)
            or doc.get("jsonrpc") != JSONRPC_VERSION
            or not isinstance(doc.get("method"), str)
            or isinstance(doc.get("id"), bool)
            or not isinstance(doc.get("id"), int)
        ):
            return self._error_frame(None, _CODE_INVALID_REQUEST, "invalid request")
        req_id = doc["id"]
        method = doc["method"]
        params = doc.get("params") or {}

        if method == "registry/list":
            tools = [
                {
                    "name": s.name,
                    "arg_slots": [[slot, kind.value] for slot, kind in s.arg_slots],
                    "description": s.description,
                }
                for s in self.registry.specs
            ]
            return self._result_frame(req_id, {"tools": tools})

        if method.startswith("tool/"):
            name = method[len("tool/") :]
            if name not in self.registry:
                return self._error_frame(
                    req_id, _CODE_METHOD_NOT_FOUND, f"UnknownTool: {name}"
                )
            args = params.get("args") or {}
            meta = params.get("meta")
            try:
                result = self.handler(name, args, meta)
            except Exception as exc:  # tool failures are results, not crashes
                logger.warning("tool %s raised: %r", name, exc)
                result = error_result(f"tool raised: {exc!r}")
            return self._result_frame(
                req_id, {"status": result.status, "payload": result.payload}
            )

        return self._error_frame(req_id, _CODE_METHOD_NOT_FOUND, f"no such method: {method}")

    @staticmethod
    def _result_frame(req_id: int, result: dict) -> bytes:
        return canonical_json_bytes(
            {"jsonrpc": JSONRPC_VERSION, "id": req_id, "result": result}
        )

    @staticmethod
    def _error_frame(req_id, code: int, message: str) -> bytes:
        return canonical_json_bytes(
            {
                "jsonrpc": JSONRPC_VERSION,
                "id": req_id,
                "error": {"code": code, "message": message},
            }
        )

    def serve_stream(self, transport: Transport) -> None:
        """Answer frames until the peer hangs up."""
        while True:
            try:
                frame = transport.recv_frame()
            except TransportClosed:
                return
            transport.send_frame(self.handle_frame(frame))

    def serve_tcp(self, host: str, port: int, max_clients: Optional[int] = None, ready=None) -> None:
        """Accept clients serially; ``ready`` (if given) receives the bound port."""
        with socket.create_server((host, port)) as listener:
            if ready is not None:
                ready(listener.getsockname()[1])
            served = 0
            while max_clients is None or served < max_clients:
                conn, _ = listener.accept()
                with conn:
                    self.serve_stream(TcpTransport(conn))
                served += 1


class LoopbackTransport(Transport):
    """In-process transport that hands frames straight to a ToolServer."""

    def __init__(self, server: ToolServer):
        self._server = server
        self._pending: list[bytes] = []
        self._closed = False

    def send_frame(self, frame: bytes) -> None:
        if self._closed:
            raise TransportClosed("transport is closed")
        self._pending.append(self._server.handle_frame(frame))

    def recv_frame(self) -> bytes:
        if self._closed:
            raise TransportClosed("transport is closed")
        if not self._pending:
            raise TransportClosed("no response pending")
        return self._pending.pop(0)

    def close(self) -> None:
        self._closed = True


def dispatch(envelope, transport: Transport) -> ToolResult:
    """Send one envelope frame and consume its matching response frame.

    JSON-RPC error objects surface as error ToolResults; a response id that
    does not echo the request id raises IdMismatch.
    """
    transport.send_frame(serialize_envelope(envelope))
    raw = transport.recv_frame()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TransportClosed(f"unreadable response frame: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("jsonrpc") != JSONRPC_VERSION:
        raise TransportClosed("response is not a JSON-RPC 2.0 object")
    if doc.get("id") != envelope.id:
        raise IdMismatch(f"request id {envelope.id}, response id {doc.get('id')}")
    if "error" in doc:
        err = doc["error"] or {}
        return error_result(str(err.get("message", "error")), code=err.get("code"))
    result = doc.get("result") or {}
    status = result.get("status", STATUS_OK)
    payload = result.get("payload", {})
    if status not in (STATUS_OK, STATUS_ERROR):
        raise TransportClosed(f"unknown result status {status!r}")
    return ToolResult(status, payload)
