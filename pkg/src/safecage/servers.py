"""Network front ends for the control centre.

Two listeners share one ControlCentre:

* a raw TCP server for vehicles (length-prefixed frames; the first message on
  a connection must be Register, which binds the connection as that vehicle's
  command channel), and
* an HTTP/WebSocket app for operator consoles (fleet and vehicle queries,
  command dispatch with a blocking ack wait, and a live event stream).
"""

from __future__ import annotations

import asyncio
import logging
import queue
import socket
import threading
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles

from .control_centre import ControlCentre
from .protocol import FrameBuffer, ProtocolError, WireMessage, encode_message

log = logging.getLogger(__name__)

DEFAULT_TCP_PORT = 7700
DEFAULT_HTTP_PORT = 7780


class VehicleTcpServer:
    """Accepts vehicle connections and pumps their frames into the centre."""

    def __init__(self, centre: ControlCentre, host: str = "0.0.0.0", port: int = DEFAULT_TCP_PORT):
        self.centre = centre
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen()
        self.port = self._sock.getsockname()[1]
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)

    def start(self) -> None:
        self._accept_thread.start()

    def stop(self) -> None:
        self._stop.set()
        try:
            self._sock.close()
        except OSError:
            pass

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, addr = self._sock.accept()
            except OSError:
                return
            worker = threading.Thread(target=self._serve_connection, args=(conn, addr), daemon=True)
            worker.start()
            self._threads.append(worker)

    def _serve_connection(self, conn: socket.socket, addr) -> None:
        buf = FrameBuffer()
        vehicle_id: Optional[str] = None
        send_lock = threading.Lock()

        def send(msg: WireMessage) -> None:
            with send_lock:
                try:
                    conn.sendall(encode_message(msg))
                except OSError:
                    pass  # writer loses the race with a dropped connection

        try:
            while not self._stop.is_set():
                try:
                    chunk = conn.recv(65536)
                except OSError:
                    break
                if not chunk:
                    break
                try:
                    msgs = list(buf.feed(chunk))
                except ProtocolError as exc:
                    log.warning("dropping connection %s: %s", addr, exc)
                    break
                for msg in msgs:
                    if vehicle_id is None:
                        if msg.type != "Register":
                            log.warning("connection %s spoke before Register", addr)
                            return
                        vehicle_id = msg.vehicle_id
                        self.centre.attach_sender(vehicle_id, send)
                    try:
                        self.centre.ingest(msg)
                    except ProtocolError as exc:
                        log.warning("rejected message from %s: %s", vehicle_id, exc)
        finally:
            if vehicle_id is not None:
                self.centre.detach_sender(vehicle_id)
            try:
                conn.close()
            except OSError:
                pass


def build_http_app(centre: ControlCentre, frontend_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(title="fleet control centre")

    @app.get("/fleet")
    def fleet() -> dict:
        return {"vehicles": centre.fleet_query()}

    @app.get("/vehicle/{vehicle_id}")
    def vehicle(vehicle_id: str) -> dict:
        detail = centre.vehicle_detail(vehicle_id)
        if detail is None:
            raise HTTPException(status_code=404, detail=f"unknown vehicle {vehicle_id!r}")
        return detail

    @app.post("/vehicle/{vehicle_id}/command")
    async def command(vehicle_id: str, payload: dict) -> dict:
        if not centre.known_vehicle(vehicle_id):
            raise HTTPException(status_code=404, detail=f"unknown vehicle {vehicle_id!r}")
        try:
            pending = centre.dispatch_command(vehicle_id, payload)
        except ProtocolError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        outcome = await asyncio.to_thread(centre.wait_for_outcome, pending)
        return {"seq": pending.seq, "outcome": outcome.to_dict()}

    @app.websocket("/stream")
    async def stream(ws: WebSocket) -> None:
        await ws.accept()
        q = centre.subscribe()
        try:
            while True:
                try:
                    entry = await asyncio.to_thread(q.get, True, 1.0)
                except queue.Empty:
                    # idle poke also surfaces a gone client as an exception
                    await ws.send_json({"keepalive": True})
                    continue
                await ws.send_json(entry.to_dict())
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            centre.unsubscribe(q)

    if frontend_dir is not None:
        root = Path(frontend_dir)
        index = root / "index.html"
        if index.exists():

            @app.get("/")
            def home():
                return FileResponse(index)

            app.mount("/ui", StaticFiles(directory=root), name="ui")

    return app


class HttpServerThread:
    """Uvicorn in a daemon thread so the CLI can run both listeners at once."""

    def __init__(self, app: FastAPI, host: str = "0.0.0.0", port: int = DEFAULT_HTTP_PORT):
        import uvicorn

        self._config = uvicorn.Config(app, host=host, port=port, log_level="warning")
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self) -> None:
        self._thread.start()

    @property
    def port(self) -> int:
        """Bound port, resolving 0 to what the OS picked. Blocks briefly
        until uvicorn has actually opened its socket."""
        for _ in range(200):
            if self._server.started and self._server.servers:
                return self._server.servers[0].sockets[0].getsockname()[1]
            time.sleep(0.025)
        raise RuntimeError("http server did not start")

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=5.0)
