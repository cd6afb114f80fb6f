"""HTTP API over feedback-loop workspaces.

State lives on disk under one directory per workspace; the service
itself only holds the background training threads, so a restart loses
nothing that was committed.
"""

from __future__ import annotations

import json
import re
import threading
from pathlib import Path
from typing import Union

import uvicorn
from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .align import build_bags
from .corpus import read_tagged
from .dataset_io import read_dataset
from .errors import (
    ContractError,
    EmptiedRelationError,
    FormatError,
    LengthError,
    RexloopError,
    SchemaError,
    StaleRoundError,
)
from .feedback import (
    STATE_FAILED,
    STATE_IDLE,
    STATE_TRAINING,
    Verdict,
    Workspace,
    _utcnow,
)
from .interpret import find_trigram_samples, trigrams_from_jsonl
from .kb import RelationSchema, load_schema
from .model import Hyperparams

_ID_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]{0,63}$")


class ApiError(Exception):
    """Error carrying the HTTP status and the {code, message} envelope."""

    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


def _not_found(what: str) -> ApiError:
    return ApiError(404, "not_found", what)


class JobRegistry:
    """At most one background training job per workspace."""

    def __init__(self):
        self._lock = threading.Lock()
        self._threads: dict[str, threading.Thread] = {}

    def is_running(self, workspace_id: str) -> bool:
        with self._lock:
            t = self._threads.get(workspace_id)
            return t is not None and t.is_alive()

    def try_start(self, workspace_id: str, target) -> bool:
        with self._lock:
            t = self._threads.get(workspace_id)
            if t is not None and t.is_alive():
                return False
            thread = threading.Thread(target=target, daemon=True,
                                      name=f"retrain-{workspace_id}")
            self._threads[workspace_id] = thread
            thread.start()
            return True

    def join_all(self, timeout: float | None = None) -> None:
        with self._lock:
            threads = list(self._threads.values())
        for t in threads:
            t.join(timeout)


def create_app(data_dir: str | Path) -> FastAPI:
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise ContractError(f"data directory {data_dir} does not exist")
    app = FastAPI(title="relation extraction workbench")
    # the review UI is served from its own origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    jobs = JobRegistry()
    app.state.data_dir = data_dir
    app.state.jobs = jobs

    def load_workspace(workspace_id: str) -> Workspace:
        root = data_dir / workspace_id
        if not (root / "workspace.json").exists():
            raise _not_found(f"workspace {workspace_id} does not exist")
        ws = Workspace.load(root)
        status = ws.read_status()
        if status["state"] == STATE_TRAINING and not jobs.is_running(workspace_id):
            ws.write_status(STATE_FAILED, reason="interrupted before completion")
        return ws

    def status_payload(ws: Workspace) -> dict:
        status = ws.read_status()
        if status["state"] != STATE_TRAINING and jobs.is_running(ws.workspace_id):
            # a finishing worker writes its terminal state before its
            # thread exits; keep reporting training until a new job
            # would be accepted, so idle always means retrain-ready
            status["state"] = STATE_TRAINING
        status["current_round"] = status["rounds"] - 1 if status["rounds"] else None
        return status

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RexloopError)
    async def handle_domain_error(request: Request, exc: RexloopError):
        status, code = 400, "bad_request"
        if isinstance(exc, StaleRoundError):
            status, code = 409, "stale_round"
        elif isinstance(exc, EmptiedRelationError):
            status, code = 409, "emptied_relation"
        elif isinstance(exc, (FormatError, SchemaError, LengthError)):
            code = "format_error"
        elif isinstance(exc, ContractError):
            code = "contract_error"
        return JSONResponse(status_code=status,
                            content={"code": code, "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "bad_request", "message": str(exc)})

    def workspace_summary(ws: Workspace) -> dict:
        status = status_payload(ws)
        return {
            "id": ws.workspace_id,
            "created": ws.meta.get("created"),
            "rounds": status["rounds"],
            "state": status["state"],
            "relations": list(ws.schema.class_labels()),
        }

    @app.get("/workspaces")
    def list_workspaces() -> list[dict]:
        out = []
        for child in sorted(data_dir.iterdir()):
            if (child / "workspace.json").exists():
                out.append(workspace_summary(load_workspace(child.name)))
        return out

    @app.post("/workspaces", status_code=201)
    def create_workspace(payload: dict = Body(...)) -> dict:
        for key in ("train", "test", "schema"):
            if key not in payload:
                raise ApiError(400, "bad_request", f"missing field {key!r}")
        workspace_id = payload.get("id") or f"ws-{len(list(data_dir.iterdir())):03d}"
        if not _ID_PATTERN.match(workspace_id):
            raise ApiError(400, "bad_request",
                           "workspace id must be alphanumeric with - or _")
        root = data_dir / workspace_id
        if (root / "workspace.json").exists():
            raise ApiError(409, "conflict", f"workspace {workspace_id} already exists")

        raw_schema: Union[str, dict] = payload["schema"]
        schema = (RelationSchema.from_dict(raw_schema) if isinstance(raw_schema, dict)
                  else load_schema(raw_schema))
        hyper = Hyperparams.from_dict({**Hyperparams().to_dict(), **payload.get("hyper", {})})
        train = read_tagged(payload["train"], schema=schema)
        test = read_tagged(payload["test"], schema=schema)
        bags = build_bags(train) if hyper.mil else None
        ws = Workspace.create(
            root, train, test, schema, hyper, bags=bags,
            workspace_id=workspace_id,
            top_k=int(payload.get("top_k", 20)),
            scope=payload.get("scope", "relation"),
        )
        return workspace_summary(ws)

    @app.get("/workspaces/{workspace_id}/rounds")
    def list_rounds(workspace_id: str) -> list[dict]:
        ws = load_workspace(workspace_id)
        return [ws.read_record(k).to_dict() for k in range(ws.num_rounds())]

    def require_round(ws: Workspace, k: int) -> None:
        if not 0 <= k < ws.num_rounds():
            raise _not_found(f"round {k} does not exist")

    @app.get("/workspaces/{workspace_id}/rounds/{k}/trigrams")
    def round_trigrams(workspace_id: str, k: int, relation: str | None = None,
                       top: int | None = None) -> list[dict]:
        ws = load_workspace(workspace_id)
        require_round(ws, k)
        tables = trigrams_from_jsonl(
            (ws.round_dir(k) / "trigrams.jsonl").read_text(encoding="utf-8"))
        if relation is not None:
            if relation not in ws.schema.class_labels():
                raise _not_found(f"unknown relation {relation}")
            tables = {relation: tables.get(relation, [])}
        rows = []
        for label in sorted(tables):
            ranked = tables[label]
            if top is not None:
                ranked = ranked[:max(top, 0)]
            rows.extend(r.to_dict() for r in ranked)
        return rows

    @app.get("/workspaces/{workspace_id}/rounds/{k}/metrics")
    def round_metrics(workspace_id: str, k: int) -> dict:
        ws = load_workspace(workspace_id)
        require_round(ws, k)
        return json.loads((ws.round_dir(k) / "metrics.json").read_text(encoding="utf-8"))

    @app.get("/workspaces/{workspace_id}/rounds/{k}/samples")
    def round_samples(workspace_id: str, k: int, relation: str,
                      trigram: str, limit: int = 5) -> list[dict]:
        ws = load_workspace(workspace_id)
        require_round(ws, k)
        tokens = tuple(trigram.split())
        if len(tokens) != 3:
            raise ApiError(400, "bad_request", "trigram must be 3 space-separated tokens")
        retained, _ = read_dataset(ws.round_dir(k) / "retained", schema=ws.schema)
        hits = find_trigram_samples(retained, relation, tokens, limit=limit)
        out = []
        for ex, window in hits:
            out.append({
                "id": ex.sentence.id,
                "tokens": list(ex.sentence.surfaces),
                "window": window,
                "e1": [ex.span_e1.start, ex.span_e1.end],
                "e2": [ex.span_e2.start, ex.span_e2.end],
                "label": ex.label,
            })
        return out

    @app.get("/workspaces/{workspace_id}/verdicts")
    def get_verdicts(workspace_id: str, round: int | None = None) -> dict:
        ws = load_workspace(workspace_id)
        if ws.num_rounds() == 0:
            return {"round": None, "verdicts": []}
        k = ws.num_rounds() - 1 if round is None else round
        return {"round": k, "verdicts": [v.to_dict() for v in ws.get_verdicts(k)]}

    @app.post("/workspaces/{workspace_id}/verdicts")
    def post_verdicts(workspace_id: str, payload: dict = Body(...)) -> dict:
        ws = load_workspace(workspace_id)
        if jobs.is_running(workspace_id):
            raise ApiError(409, "conflict", "training in progress; verdicts are frozen")
        if "round" not in payload or "verdicts" not in payload:
            raise ApiError(400, "bad_request", "expected fields 'round' and 'verdicts'")
        labels = set(ws.schema.class_labels())
        verdicts = []
        for item in payload["verdicts"]:
            if item.get("relation") not in labels:
                raise ApiError(400, "bad_request",
                               f"unknown relation {item.get('relation')!r}")
            verdicts.append(Verdict(
                relation=item["relation"],
                trigram=tuple(item.get("trigram", ())),
                decision=item.get("decision", ""),
                reviewer=item.get("reviewer", ""),
                timestamp=_utcnow(),
            ))
        stored = ws.record_verdicts(int(payload["round"]), verdicts)
        return {"round": int(payload["round"]),
                "verdicts": [v.to_dict() for v in stored]}

    @app.post("/workspaces/{workspace_id}/retrain", status_code=202)
    def retrain(workspace_id: str) -> dict:
        ws = load_workspace(workspace_id)
        next_round = ws.num_rounds()
        banned = ws.banned_from_verdicts(next_round - 1) if next_round else set()

        def job():
            try:
                ws.write_status(STATE_TRAINING,
                                progress={"epoch": 0, "total_epochs": ws.hyper.epochs})

                def on_epoch(epoch: int, total: int) -> None:
                    ws.write_status(STATE_TRAINING,
                                    progress={"epoch": epoch, "total_epochs": total})

                ws.run_round(banned, on_epoch=on_epoch)
                ws.write_status(STATE_IDLE)
            except Exception as exc:
                ws.write_status(STATE_FAILED, reason=str(exc))

        if not jobs.try_start(workspace_id, job):
            raise ApiError(409, "conflict", "a training job is already running")
        return {"accepted": True, "round": next_round}

    @app.get("/workspaces/{workspace_id}/status")
    def get_status(workspace_id: str) -> dict:
        ws = load_workspace(workspace_id)
        return status_payload(ws)

    return app


def serve(port: int, data_dir: str | Path) -> None:
    """Run the service until interrupted."""
    app = create_app(data_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
