from __future__ import annotations

import base64
import hashlib
import json
import socket
import struct

import pytest

from marv.server import WireClient, WireServer, encode_frame, ws_encode_text
from marv.session import Session


@pytest.fixture
def server():
    from marv.ingest import demo_spec, generate_synthetic
    spec, binding = demo_spec(steps=3, records=60)
    session = Session(generate_synthetic(spec, seed=3), binding)
    srv = WireServer(session, port=0, http_port=0)
    srv.start()
    yield srv
    srv.stop()


def connect(server: WireServer) -> WireClient:
    client = WireClient("127.0.0.1", server.port)
    handshake = client.recv()
    assert handshake["type"] == "handshake"
    return client


class TestTcpWire:
    def test_handshake_on_connect(self, server):
        client = WireClient("127.0.0.1", server.port)
        frame = client.recv()
        assert frame["type"] == "handshake"
        assert frame["protocol"] == "marv-wire/1"
        assert frame["sceneVersion"] == 0
        assert "palette" in frame and "constants" in frame
        client.close()

    def test_open_returns_full_snapshot(self, server):
        client = connect(server)
        client.send({"type": "open"})
        frame = client.recv()
        assert frame["type"] == "snapshot"
        assert frame["scene"]["schema"] == "marv-scene/1"
        assert any(n["id"] == "chart/mdd0" for n in frame["scene"]["nodes"])
        client.close()

    def test_two_viewers_receive_patches_in_order(self, server):
        a = connect(server)
        b = connect(server)
        a.send({"type": "set_representation", "chartId": "mdd0", "repr": "TET"})
        a.send({"type": "extract_chrono", "attribute": "Diameter"})
        frames_a = [a.recv(), a.recv()]
        frames_b = [b.recv(), b.recv()]
        assert [f["sceneVersion"] for f in frames_a] == [1, 2]
        assert [f["sceneVersion"] for f in frames_b] == [1, 2]
        assert all(f["type"] == "patch" for f in frames_a + frames_b)
        # byte-level equality of the broadcast patches
        assert [json.dumps(f, sort_keys=True) for f in frames_a] == \
               [json.dumps(f, sort_keys=True) for f in frames_b]
        a.close()
        b.close()

    def test_malformed_request_errors_session_intact(self, server):
        client = connect(server)
        client.send({"type": "dismiss_chrono", "chartId": "missing"})
        frame = client.recv()
        assert frame["type"] == "error"
        assert frame["sceneVersion"] == 0
        client.send({"type": "open"})
        assert client.recv()["type"] == "snapshot"
        client.close()

    def test_error_frames_do_not_broadcast(self, server):
        a = connect(server)
        b = connect(server)
        a.send({"type": "sk_select", "cell": [9, 9]})
        assert a.recv()["type"] == "error"
        b.send({"type": "open"})
        frame = b.recv()
        assert frame["type"] == "snapshot"  # no stray error frame arrived first
        a.close()
        b.close()

    def test_bad_frame_header_gets_protocol_error(self, server):
        client = connect(server)
        client.send_raw(b"not-a-length\n")
        frame = client.recv()
        assert frame["type"] == "error"
        assert frame["code"] == "protocol"
        client.close()

    def test_port_busy_raises(self, server):
        with pytest.raises(OSError):
            WireServer(server.session, port=server.port)


class TestWebSocketBridge:
    def ws_connect(self, server) -> socket.socket:
        sock = socket.create_connection(("127.0.0.1", server.http_port),
                                        timeout=10)
        key = base64.b64encode(b"0123456789abcdef").decode()
        request = (
            f"GET /ws HTTP/1.1\r\nHost: 127.0.0.1:{server.http_port}\r\n"
            f"Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        )
        sock.sendall(request.encode())
        response = b""
        while b"\r\n\r\n" not in response:
            response += sock.recv(4096)
        head, _, rest = response.partition(b"\r\n\r\n")
        assert b"101" in head.split(b"\r\n")[0]
        accept = base64.b64encode(hashlib.sha1(
            (key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11").encode()
        ).digest())
        assert accept in head
        self._buffer = rest
        return sock

    def ws_recv_text(self, sock) -> dict:
        while True:
            frame, self._buffer = self._try_parse(self._buffer)
            if frame is not None:
                return json.loads(frame.decode("utf-8"))
            chunk = sock.recv(65536)
            if not chunk:
                raise AssertionError("connection closed early")
            self._buffer += chunk

    @staticmethod
    def _try_parse(buffer: bytes):
        if len(buffer) < 2:
            return None, buffer
        length = buffer[1] & 0x7F
        offset = 2
        if length == 126:
            if len(buffer) < 4:
                return None, buffer
            length = struct.unpack("!H", buffer[2:4])[0]
            offset = 4
        elif length == 127:
            if len(buffer) < 10:
                return None, buffer
            length = struct.unpack("!Q", buffer[2:10])[0]
            offset = 10
        if len(buffer) < offset + length:
            return None, buffer
        return buffer[offset:offset + length], buffer[offset + length:]

    @staticmethod
    def ws_send_text(sock, payload: dict) -> None:
        data = json.dumps(payload).encode()
        mask = b"\x01\x02\x03\x04"
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(data))
        if len(data) < 126:
            header = struct.pack("!BB", 0x81, 0x80 | len(data))
        else:
            header = struct.pack("!BBH", 0x81, 0x80 | 126, len(data))
        sock.sendall(header + mask + masked)

    def test_ws_handshake_and_requests(self, server):
        sock = self.ws_connect(server)
        handshake = self.ws_recv_text(sock)
        assert handshake["type"] == "handshake"
        self.ws_send_text(sock, {"type": "open"})
        snapshot = self.ws_recv_text(sock)
        assert snapshot["type"] == "snapshot"
        self.ws_send_text(sock, {"type": "set_representation",
                                 "chartId": "mdd0", "repr": "TET"})
        patch = self.ws_recv_text(sock)
        assert patch["type"] == "patch"
        assert patch["sceneVersion"] == 1
        sock.close()

    def test_ws_and_tcp_clients_share_broadcasts(self, server):
        sock = self.ws_connect(server)
        self.ws_recv_text(sock)  # handshake
        tcp = connect(server)
        tcp.send({"type": "extract_chrono", "attribute": "Diameter"})
        ws_frame = self.ws_recv_text(sock)
        tcp_frame = tcp.recv()
        assert ws_frame["type"] == tcp_frame["type"] == "patch"
        assert ws_frame["sceneVersion"] == tcp_frame["sceneVersion"] == 1
        tcp.close()
        sock.close()

    def test_http_serves_static_bundle(self, tmp_path):
        from marv.ingest import demo_spec, generate_synthetic
        spec, binding = demo_spec(steps=2, records=40)
        (tmp_path / "index.html").write_text("<html>viewer</html>")
        srv = WireServer(Session(generate_synthetic(spec, seed=4), binding),
                         port=0, http_port=0, static_dir=tmp_path)
        srv.start()
        try:
            sock = socket.create_connection(("127.0.0.1", srv.http_port),
                                            timeout=10)
            sock.sendall(b"GET / HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
            data = b""
            while True:
                chunk = sock.recv(4096)
                if not chunk:
                    break
                data += chunk
            assert b"200" in data.split(b"\r\n")[0]
            assert b"<html>viewer</html>" in data
            sock.close()
        finally:
            srv.stop()


class TestRequestRecording:
    def test_recorded_log_replays_to_identical_snapshots(self, tmp_path):
        from marv.ingest import demo_spec, generate_synthetic
        from marv.session import read_request_log, replay

        spec, binding = demo_spec(steps=3, records=60)
        series = generate_synthetic(spec, seed=3)
        log = tmp_path / "requests.jsonl"
        srv = WireServer(Session(series, binding), port=0, record_path=log)
        srv.start()
        try:
            client = connect(srv)
            client.send({"type": "extract_chrono", "attribute": "Diameter"})
            client.recv()
            client.send({"type": "dismiss_chrono", "chartId": "missing"})  # fails
            client.recv()
            client.send({"type": "sk_select", "cell": [1, 1]})
            client.recv()
            final = srv.session.snapshot_bytes()
            client.close()
        finally:
            srv.stop()
        requests = read_request_log(log)
        assert len(requests) == 2  # the failed request is not recorded
        snapshots = replay(series, binding, requests)
        assert snapshots[-1][1] == final


class TestFrameCodec:
    def test_tcp_frame_shape(self):
        frame = encode_frame({"type": "hello"})
        length, _, body = frame.partition(b"\n")
        assert int(length) == len(body)
        assert json.loads(body) == {"type": "hello"}

    def test_ws_frame_shapes(self):
        small = ws_encode_text(b"x" * 10)
        assert small[0] == 0x81 and small[1] == 10
        medium = ws_encode_text(b"x" * 1000)
        assert medium[1] == 126
        big = ws_encode_text(b"x" * 70_000)
        assert big[1] == 127
