import json
import socket

import pytest

from mfp_agent.config import AppConfig
from mfp_agent.server import SessionServer
from mfp_agent.session import build_bundle


@pytest.fixture()
def server():
    cfg = AppConfig(port=0)  # let the OS pick a free port
    srv = SessionServer(bundle=build_bundle(cfg))
    srv.serve_in_background()
    yield srv
    srv.shutdown()
    srv.server_close()


def connect(server):
    sock = socket.create_connection(server.server_address, timeout=5)
    return sock, sock.makefile("rwb")


def read_until(stream, predicate):
    """Read envelopes until one matches; return (matching, all read)."""
    seen = []
    while True:
        env = json.loads(stream.readline())
        seen.append(env)
        if predicate(env):
            return env, seen


def send(stream, text):
    stream.write((text + "\n").encode("utf-8"))
    stream.flush()


def test_tcp_round_trip(server):
    sock, stream = connect(server)
    try:
        started = json.loads(stream.readline())
        assert started["type"] == "session.started"
        greeting = json.loads(stream.readline())
        assert greeting["payload"]["action"] == "Greeting"

        send(stream, "2 copies single sided")
        echo, _ = read_until(stream, lambda e: e["type"] == "user.utterance")
        assert echo["payload"] == {"text": "2 copies single sided"}
        reply = json.loads(stream.readline())
        assert reply["type"] == "agent.response"
        assert reply["seq"] == echo["seq"] + 1
    finally:
        sock.close()


def test_two_connections_get_independent_sessions(server):
    sock_a, a = connect(server)
    sock_b, b = connect(server)
    try:
        ids = set()
        for stream in (a, b):
            started = json.loads(stream.readline())
            ids.add(started["session_id"])
            assert started["seq"] == 1
        assert len(ids) == 2
    finally:
        sock_a.close()
        sock_b.close()


def test_close_envelope_ends_the_connection(server):
    sock, stream = connect(server)
    try:
        stream.readline()
        stream.readline()
        send(stream, json.dumps({"type": "session.close"}))
        lines = stream.readlines()  # server closes after the farewell
        assert json.loads(lines[-1])["type"] == "session.ended"
    finally:
        sock.close()


def test_ws_app_serves_the_same_protocol():
    fastapi = pytest.importorskip("fastapi")
    from fastapi.testclient import TestClient

    from mfp_agent.server import create_ws_app

    app = create_ws_app(bundle=build_bundle())
    client = TestClient(app)
    assert client.get("/healthz").json() == {"ok": True}
    with client.websocket_connect("/session") as ws:
        started = json.loads(ws.receive_text())
        assert started["type"] == "session.started"
        greeting = json.loads(ws.receive_text())
        assert greeting["payload"]["action"] == "Greeting"
        ws.send_text("copy this")
        while True:  # drain the rest of the greeting until the echo
            env = json.loads(ws.receive_text())
            if env["type"] == "user.utterance":
                break
        reply = json.loads(ws.receive_text())
        assert reply["type"] == "agent.response"
