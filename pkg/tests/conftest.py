"""Shared fixtures: a real HTTP server thread for streaming endpoints."""
import socket
import threading
import time

import pytest
import uvicorn


def free_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


class HttpServerThread:
    """uvicorn in a daemon thread; TestClient cannot drive open-ended SSE."""

    def __init__(self, app):
        self.port = free_port()
        self.config = uvicorn.Config(app, host="127.0.0.1", port=self.port,
                                     log_level="critical")
        self.server = uvicorn.Server(self.config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self):
        self.thread.start()
        deadline = time.monotonic() + 10
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("http server did not start")
            time.sleep(0.02)
        return self

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=5)


@pytest.fixture
def http_server():
    servers = []

    def start(app):
        srv = HttpServerThread(app)
        srv.__enter__()
        servers.append(srv)
        return srv

    yield start
    for srv in servers:
        srv.__exit__()
