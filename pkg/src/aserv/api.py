"""HTTP face of a running simulation: query endpoints, steering, and a
server-sent-event feed of per-cycle ingest records.

Payload builders live here and are shared with the CLI, so the same
query at the same watermark produces byte-identical output either way.
All bodies are canonical JSON: compact separators, sorted keys.
"""

from __future__ import annotations

import json
import queue
from typing import Iterator

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import StreamingResponse

from .domain import Region, TimeInterval
from .query import QueryEngine, SeriesRange, UnknownEventError
from .sim import ControlError, Simulation


def canonical(payload) -> str:
    return json.dumps(payload, separators=(",", ":"), sort_keys=True)


def _row_json(row) -> dict:
    return {"oid": row.oid, "x": row.x, "y": row.y, "t": row.t,
            "d": list(row.d)}


def probe_payload(engine: QueryEngine, reg: Region | None,
                  interval: TimeInterval) -> dict:
    return {"count": engine.probe(reg, interval)}


def list_payload(engine: QueryEngine, reg: Region | None,
                 interval: TimeInterval) -> dict:
    events = []
    for series in engine.list_events(reg, interval):
        events.append({
            "eid": series.event.eid,
            "oid": series.event.oid,
            "stime": series.event.stime,
            "etime": series.event.etime,
            "pid": f"{series.pid[0]}:{series.pid[1]}",
            "rows": [_row_json(r) for r in series.rows],
        })
    return {"events": events}


def stretch_payload(engine: QueryEngine, eid: str, dt1: int, dt2: int) -> dict:
    rng: SeriesRange = engine.stretch(eid, dt1, dt2)
    return {"eid": rng.eid, "oid": rng.oid, "ts": rng.ts, "te": rng.te,
            "rows": [_row_json(r) for r in rng.rows]}


def accuracy_payload(engine: QueryEngine, reg: Region,
                     interval: TimeInterval) -> dict:
    result = engine.accuracy(reg, interval)
    return {"probe": result.probe, "pcse": result.pcse,
            "accuracy": result.accuracy}


def _bad(msg: str) -> HTTPException:
    return HTTPException(status_code=400, detail=msg)


def _parse_int(name: str, raw: str | None, default: int | None = None) -> int:
    if raw is None:
        if default is None:
            raise _bad(f"missing required parameter {name}")
        return default
    try:
        return int(raw)
    except ValueError:
        raise _bad(f"parameter {name} must be an integer, got {raw!r}")


def _parse_float(name: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise _bad(f"parameter {name} must be a number, got {raw!r}")


def _parse_interval(ts: str | None, te: str | None) -> TimeInterval:
    try:
        return TimeInterval(_parse_int("ts", ts), _parse_int("te", te))
    except ValueError as exc:
        raise _bad(str(exc))


def _parse_region(x: str | None, y: str | None, r: str | None,
                  required: bool = False) -> Region | None:
    given = [v for v in (x, y, r) if v is not None]
    if not given:
        if required:
            raise _bad("x, y, r are required")
        return None
    if len(given) != 3:
        raise _bad("region needs all of x, y, r")
    try:
        return Region(_parse_float("x", x), _parse_float("y", y),
                      _parse_float("r", r))
    except ValueError as exc:
        raise _bad(str(exc))


def create_app(sim: Simulation) -> FastAPI:
    app = FastAPI(title="aserv")
    engine = sim.query_engine()

    @app.exception_handler(RequestValidationError)
    async def _invalid(request: Request, exc: RequestValidationError):
        return Response(content=canonical({"detail": str(exc)}),
                        status_code=400, media_type="application/json")

    def reply(payload) -> Response:
        return Response(content=canonical(payload),
                        media_type="application/json")

    @app.get("/status")
    def status():
        units = {
            unit: {"committed": t} for unit, t in sim.master.units.items()
        }
        return reply({
            "watermark": sim.master.watermark,
            "state": sim.state,
            "cycles": sim.cycles,
            "rate": sim.rate,
            "units": units,
            "keys": sim.store.key_count(),
        })

    @app.get("/probe")
    def probe(ts: str | None = None, te: str | None = None,
              x: str | None = None, y: str | None = None,
              r: str | None = None):
        interval = _parse_interval(ts, te)
        reg = _parse_region(x, y, r)
        return reply(probe_payload(engine, reg, interval))

    @app.get("/list")
    def list_(ts: str | None = None, te: str | None = None,
              x: str | None = None, y: str | None = None,
              r: str | None = None):
        interval = _parse_interval(ts, te)
        reg = _parse_region(x, y, r)
        return reply(list_payload(engine, reg, interval))

    @app.get("/stretch")
    def stretch(eid: str | None = None, dt1: str | None = None,
                dt2: str | None = None):
        if eid is None:
            raise _bad("missing required parameter eid")
        d1 = _parse_int("dt1", dt1, default=0)
        d2 = _parse_int("dt2", dt2, default=0)
        if d1 < 0 or d2 < 0:
            raise _bad("dt1 and dt2 must be >= 0")
        try:
            return reply(stretch_payload(engine, eid, d1, d2))
        except UnknownEventError:
            raise HTTPException(status_code=404, detail=f"unknown eid {eid!r}")

    @app.get("/accuracy")
    def accuracy(ts: str | None = None, te: str | None = None,
                 x: str | None = None, y: str | None = None,
                 r: str | None = None):
        interval = _parse_interval(ts, te)
        reg = _parse_region(x, y, r, required=True)
        return reply(accuracy_payload(engine, reg, interval))

    def steer(action) -> Response:
        try:
            action()
        except ControlError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return reply({"state": sim.state, "rate": sim.rate})

    @app.post("/sim/pause")
    def pause():
        return steer(sim.pause)

    @app.post("/sim/resume")
    def resume():
        return steer(sim.resume)

    @app.post("/sim/rate")
    def rate(value: str | None = None):
        v = _parse_float("value", value) if value is not None else None
        if v is None:
            raise _bad("missing required parameter value")
        try:
            return steer(lambda: sim.set_rate(v))
        except ValueError as exc:
            raise _bad(str(exc))

    def _feed() -> Iterator[str]:
        q = sim.master.subscribe()
        try:
            yield ": connected\n\n"
            while True:
                try:
                    record = q.get(timeout=1.0)
                except queue.Empty:
                    if sim.state in ("done", "stalled"):
                        yield "event: end\ndata: {}\n\n"
                        return
                    yield ": keepalive\n\n"
                    continue
                yield f"data: {canonical(record)}\n\n"
        finally:
            sim.master.unsubscribe(q)

    @app.get("/stream")
    def stream():
        return StreamingResponse(_feed(), media_type="text/event-stream")

    return app


def serve(sim: Simulation, host: str, port: int) -> None:
    """Blocking HTTP server around an already-started simulation."""
    import uvicorn

    app = create_app(sim)
    uvicorn.run(app, host=host, port=port, log_level="warning")
