"""Network transports for sessions.

The primary transport is a line-oriented TCP server: one connection is one
session, every line in each direction is a JSON SessionEnvelope. An
optional WebSocket transport (FastAPI) speaks the identical envelope
protocol for browser clients.
"""

from __future__ import annotations

import socketserver
import threading

from .config import AppConfig
from .session import Session, SessionBundle, build_bundle

try:  # optional dependency for the WebSocket transport
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
except ImportError:  # pragma: no cover
    FastAPI = None


class _SessionHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        bundle: SessionBundle = self.server.bundle  # type: ignore[attr-defined]
        session = Session(bundle=bundle)
        self._send(session.start())
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            envelopes = session.process_client_line(line)
            self._send(envelopes)
            if not session.open:
                break

    def _send(self, envelopes) -> None:
        for env in envelopes:
            self.wfile.write((env.to_json() + "\n").encode("utf-8"))
        self.wfile.flush()


class SessionServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, config: AppConfig | None = None,
                 bundle: SessionBundle | None = None):
        self.bundle = bundle or build_bundle(config)
        cfg = self.bundle.config
        super().__init__((cfg.host, cfg.port), _SessionHandler)

    def serve_in_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


def create_ws_app(config: AppConfig | None = None, bundle: SessionBundle | None = None):
    """FastAPI app exposing the envelope protocol over a WebSocket at /session."""
    if FastAPI is None:
        raise RuntimeError("the WebSocket transport requires the 'fastapi' package")

    shared = bundle or build_bundle(config)
    app = FastAPI(title="mfp-agent")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"ok": True}

    @app.websocket("/session")
    async def session_socket(ws: WebSocket) -> None:
        await ws.accept()
        session = Session(bundle=shared)
        try:
            for env in session.start():
                await ws.send_text(env.to_json())
            while True:
                line = await ws.receive_text()
                for env in session.process_client_line(line):
                    await ws.send_text(env.to_json())
                if not session.open:
                    await ws.close()
                    return
        except WebSocketDisconnect:
            pass

    return app
