"""Request/event service speaking `marv-wire/1`.

Frames are UTF-8 JSON. Over plain TCP a frame is the payload's decimal
byte length, a newline, then the payload; over the WebSocket bridge each
text message is one payload (the socket's own framing length-delimits).
Any number of viewers may connect; requests from all of them funnel
through one dispatcher thread, so mutations apply serially and every
client sees every patch in the same order. Errors answer only the
requester and never mutate the session.

The HTTP side of the bridge also serves the viewer's static bundle.
"""
from __future__ import annotations

import base64
import hashlib
import json
import queue
import socket
import struct
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any

from .scene import _dumps  # canonical JSON bytes
from .session import Session

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

MUTATING_REQUESTS = frozenset({
    "set_representation", "extract_chrono", "dismiss_chrono",
    "click_chrono_quad", "sk_select",
})


def encode_frame(payload: dict[str, Any]) -> bytes:
    body = _dumps(payload)
    return str(len(body)).encode("ascii") + b"\n" + body


def read_frame(sock_file) -> dict[str, Any] | None:
    """Read one length-delimited frame; None on clean EOF."""
    header = sock_file.readline(32)
    if not header:
        return None
    try:
        length = int(header.strip())
    except ValueError:
        raise ProtocolError(f"bad frame header {header!r}") from None
    if length < 0 or length > 64 * 1024 * 1024:
        raise ProtocolError(f"unreasonable frame length {length}")
    body = sock_file.read(length)
    if len(body) != length:
        raise ProtocolError("truncated frame")
    try:
        return json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"frame is not UTF-8 JSON: {exc}") from None


class ProtocolError(Exception):
    pass


def _shutdown_close(conn: socket.socket) -> None:
    # shutdown wakes any thread blocked in recv; bare close would not
    try:
        conn.shutdown(socket.SHUT_RDWR)
    except OSError:
        pass
    conn.close()


class _Client:
    """One connected viewer, TCP or WebSocket."""

    def __init__(self, send_bytes, close) -> None:
        self._send_bytes = send_bytes
        self._close = close
        self._lock = threading.Lock()
        self.alive = True

    def send(self, payload: dict[str, Any]) -> None:
        if not self.alive:
            return
        try:
            with self._lock:
                self._send_bytes(payload)
        except OSError:
            self.alive = False

    def close(self) -> None:
        self.alive = False
        try:
            self._close()
        except OSError:
            pass


class WireServer:
    """TCP wire endpoint plus optional HTTP/WebSocket bridge."""

    def __init__(
        self,
        session: Session,
        host: str = "127.0.0.1",
        port: int = 0,
        http_port: int | None = None,
        static_dir: str | Path | None = None,
        record_path: str | Path | None = None,
    ) -> None:
        self.session = session
        self.host = host
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(16)
        self.port = self._listener.getsockname()[1]
        self._clients: set[_Client] = set()
        self._clients_lock = threading.Lock()
        self._requests: queue.Queue = queue.Queue()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._record_path = Path(record_path) if record_path else None
        self._http: ThreadingHTTPServer | None = None
        self.http_port: int | None = None
        if http_port is not None:
            self._http = _make_http_server(self, host, http_port, static_dir)
            self.http_port = self._http.server_address[1]

    # -- lifecycle --------------------------------------------------------

    def start(self) -> None:
        self._spawn(self._accept_loop, "marv-accept")
        self._spawn(self._dispatch_loop, "marv-dispatch")
        if self._http is not None:
            self._spawn(self._http.serve_forever, "marv-http")

    def serve_forever(self) -> None:
        self.start()
        self._stop.wait()

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        if self._http is not None:
            self._http.shutdown()
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.close()
        self._requests.put(None)
        for thread in self._threads:
            thread.join(timeout=2)

    def _spawn(self, target, name: str) -> None:
        thread = threading.Thread(target=target, name=name, daemon=True)
        thread.start()
        self._threads.append(thread)

    # -- TCP side ---------------------------------------------------------

    def _accept_loop(self) -> None:
        self._listener.settimeout(0.2)
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            client = _Client(
                send_bytes=lambda payload, c=conn: c.sendall(encode_frame(payload)),
                close=lambda c=conn: _shutdown_close(c),
            )
            self._register(client)
            self._spawn(lambda: self._tcp_reader(conn, client), "marv-client")

    def _tcp_reader(self, conn: socket.socket, client: _Client) -> None:
        fh = conn.makefile("rb")
        try:
            while not self._stop.is_set():
                try:
                    request = read_frame(fh)
                except ProtocolError as exc:
                    client.send({
                        "type": "error",
                        "sceneVersion": self.session.scene_version,
                        "code": "protocol",
                        "message": str(exc),
                    })
                    break
                if request is None:
                    break
                self._requests.put((client, request))
        finally:
            self._unregister(client)

    # -- shared dispatch ----------------------------------------------------

    def _register(self, client: _Client) -> None:
        with self._clients_lock:
            self._clients.add(client)
        client.send(self.session.handshake())

    def _unregister(self, client: _Client) -> None:
        client.close()
        with self._clients_lock:
            self._clients.discard(client)

    def _dispatch_loop(self) -> None:
        while True:
            item = self._requests.get()
            if item is None:
                return
            client, request = item
            version_before = self.session.scene_version
            response = self.session.apply_request(request)
            mutated = self.session.scene_version != version_before
            if mutated and self._record_path is not None:
                with self._record_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(request, sort_keys=True) + "\n")
            if mutated:
                with self._clients_lock:
                    receivers = [c for c in self._clients if c.alive]
                for receiver in receivers:
                    receiver.send(response)
            else:
                client.send(response)

    def submit(self, client: _Client, request: dict[str, Any]) -> None:
        self._requests.put((client, request))


# -- WebSocket bridge -------------------------------------------------------

def _ws_accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_encode_text(payload: bytes) -> bytes:
    length = len(payload)
    if length < 126:
        header = struct.pack("!BB", 0x81, length)
    elif length < 1 << 16:
        header = struct.pack("!BBH", 0x81, 126, length)
    else:
        header = struct.pack("!BBQ", 0x81, 127, length)
    return header + payload


def ws_read_message(rfile) -> tuple[int, bytes] | None:
    """One complete message as (opcode, payload); None on EOF.

    Handles continuation frames and masked payloads; callers answer pings.
    """
    opcode = None
    buffer = b""
    while True:
        head = rfile.read(2)
        if len(head) < 2:
            return None
        b0, b1 = head
        fin = b0 & 0x80
        frame_op = b0 & 0x0F
        masked = b1 & 0x80
        length = b1 & 0x7F
        if length == 126:
            length = struct.unpack("!H", rfile.read(2))[0]
        elif length == 127:
            length = struct.unpack("!Q", rfile.read(8))[0]
        mask = rfile.read(4) if masked else b""
        payload = rfile.read(length)
        if len(payload) != length:
            return None
        if masked:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        if frame_op != 0:
            opcode = frame_op
            buffer = payload
        else:
            buffer += payload
        if fin:
            return (opcode or 0, buffer)


def _make_http_server(
    wire: WireServer, host: str, port: int, static_dir: str | Path | None
) -> ThreadingHTTPServer:
    static_root = Path(static_dir).resolve() if static_dir else None

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt: str, *args: Any) -> None:
            pass

        def do_GET(self) -> None:  # noqa: N802 (http.server API)
            if self.headers.get("Upgrade", "").lower() == "websocket":
                self._websocket()
                return
            self._static()

        def _websocket(self) -> None:
            key = self.headers.get("Sec-WebSocket-Key")
            if not key:
                self.send_error(400, "missing Sec-WebSocket-Key")
                return
            self.send_response(101, "Switching Protocols")
            self.send_header("Upgrade", "websocket")
            self.send_header("Connection", "Upgrade")
            self.send_header("Sec-WebSocket-Accept", _ws_accept_key(key))
            self.end_headers()
            self.close_connection = True

            conn = self.connection
            client = _Client(
                send_bytes=lambda payload, c=conn: c.sendall(
                    ws_encode_text(_dumps(payload))
                ),
                close=lambda c=conn: _shutdown_close(c),
            )
            wire._register(client)
            try:
                while True:
                    message = ws_read_message(self.rfile)
                    if message is None:
                        break
                    opcode, payload = message
                    if opcode == 8:  # close
                        break
                    if opcode == 9:  # ping -> pong
                        conn.sendall(b"\x8a" + bytes([len(payload)]) + payload)
                        continue
                    if opcode != 1:
                        continue
                    try:
                        request = json.loads(payload.decode("utf-8"))
                    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                        client.send({
                            "type": "error",
                            "sceneVersion": wire.session.scene_version,
                            "code": "protocol",
                            "message": f"frame is not UTF-8 JSON: {exc}",
                        })
                        continue
                    wire.submit(client, request)
            finally:
                wire._unregister(client)

        def _static(self) -> None:
            if static_root is None:
                body = (b"marv engine is running; no viewer bundle configured.\n")
                self.send_response(200)
                self.send_header("Content-Type", "text/plain; charset=utf-8")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
                return
            rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
            target = (static_root / rel).resolve()
            if not str(target).startswith(str(static_root)) or not target.is_file():
                self.send_error(404)
                return
            body = target.read_bytes()
            content_type = {
                ".html": "text/html; charset=utf-8",
                ".js": "text/javascript; charset=utf-8",
                ".css": "text/css; charset=utf-8",
                ".json": "application/json",
                ".map": "application/json",
            }.get(target.suffix, "application/octet-stream")
            self.send_response(200)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    server = ThreadingHTTPServer((host, port), Handler)
    server.daemon_threads = True
    return server


class WireClient:
    """Minimal blocking TCP client, used by tests and the replay tool."""

    def __init__(self, host: str, port: int, timeout: float = 10.0) -> None:
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._fh = self._sock.makefile("rb")

    def send(self, request: dict[str, Any]) -> None:
        self._sock.sendall(encode_frame(request))

    def send_raw(self, data: bytes) -> None:
        self._sock.sendall(data)

    def recv(self) -> dict[str, Any] | None:
        return read_frame(self._fh)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass
