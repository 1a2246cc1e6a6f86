"""WebSocket gateway for a running simulation: snapshots and events out,
steering commands in.

Wire format (JSON text frames): server sends `snapshot`, `event`, `ack`,
`error`; clients send `pause`, `resume`, `step`, `inject`, `waypoints`,
each carrying a `requestId` that is answered by exactly one ack or error.
"""

from __future__ import annotations

import asyncio
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles

from .runtime import RuntimeFault
from .simulator import InjectStimulus, Pause, Resume, SetWaypoints, Simulation, StepOne

FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>diakit simulation</title></head>
<body style="font-family: sans-serif">
<h1>diakit simulation gateway</h1>
<p>The simulation is reachable on the <code>/ws</code> websocket.</p>
<p>Build the console UI (<code>frontend/</code>, <code>npm run build</code>) and pass
<code>--ui frontend/</code> to <code>diakit simulate</code> to monitor it here.</p>
</body></html>
"""


def handle_client_message(sim: Simulation, msg: dict) -> dict:
    """Apply one steering message; returns the ack or error reply."""
    req = msg.get("requestId")
    try:
        kind = msg.get("type")
        if kind == "pause":
            sim.steer(Pause())
        elif kind == "resume":
            sim.steer(Resume())
        elif kind == "step":
            sim.steer(StepOne())
        elif kind == "inject":
            sim.steer(InjectStimulus(msg["deviceId"], msg["source"], msg.get("value")))
        elif kind == "waypoints":
            points = tuple((float(x), float(y)) for x, y in msg["points"])
            sim.steer(SetWaypoints(msg["agentId"], points))
        else:
            return {"type": "error", "requestId": req, "message": f"unknown message type {kind!r}"}
        return {"type": "ack", "requestId": req}
    except (RuntimeFault, KeyError, TypeError, ValueError) as e:
        return {"type": "error", "requestId": req, "message": str(e)}


def create_app(sim: Simulation, ui_dir: str | Path | None = None) -> FastAPI:
    clients: set[asyncio.Queue] = set()
    state: dict = {"loop": None}

    def on_tick(snapshot) -> None:
        # Called from the simulation thread; hop onto the server's event loop.
        loop = state["loop"]
        if loop is None:
            return
        for q in list(clients):
            loop.call_soon_threadsafe(q.put_nowait, snapshot)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        state["loop"] = asyncio.get_running_loop()
        yield

    app = FastAPI(lifespan=lifespan)
    sim.add_listener(on_tick)

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        queue: asyncio.Queue = asyncio.Queue()
        clients.add(queue)
        send_lock = asyncio.Lock()

        async def send(obj: dict) -> None:
            async with send_lock:
                await websocket.send_json(obj)

        async def pump() -> None:
            while True:
                snap = await queue.get()
                for event in snap.events:
                    await send({"type": "event", "event": event})
                await send({"type": "snapshot", **snap.to_json_obj()})

        pump_task = asyncio.create_task(pump())
        try:
            snap = sim.snapshot()
            await send({"type": "snapshot", **snap.to_json_obj()})
            while True:
                msg = await websocket.receive_json()
                await send(handle_client_message(sim, msg))
        except WebSocketDisconnect:
            pass
        finally:
            clients.discard(queue)
            pump_task.cancel()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:
        @app.get("/")
        async def index() -> HTMLResponse:
            return HTMLResponse(FALLBACK_PAGE)

    return app
