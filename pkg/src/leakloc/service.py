"""HTTP service for interactive field campaigns.

One JSON document per campaign in a directory store, written atomically.
Mutations are guarded by an optimistic version check: a submit must carry
the version it is based on, and exactly one of two racing submits wins.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .balance import MultipleLeaksInSingleLeakMode, NoLeakDetected
from .network import NetworkError, network_from_dict
from .protocol import (CampaignComplete, CampaignState, FlowReading, LeakMode,
                       PipeStrategy, ProtocolError, QueryPlan, ReadingMismatch,
                       _finding_to_dict, _point_from_key, apply_readings,
                       new_campaign, plan_stage, settle, state_from_dict,
                       state_to_dict, whole_network_imbalance)


class ConflictError(Exception):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"version conflict: expected {expected}, have {actual}")
        self.expected = expected
        self.actual = actual


class CampaignStore:
    """Directory of campaign documents with atomic check-and-set updates."""

    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, campaign_id: str) -> Path:
        if not campaign_id.replace("-", "").isalnum():
            raise HTTPException(404, f"unknown campaign {campaign_id!r}")
        return self.dir / f"{campaign_id}.json"

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.dir.glob("*.json"))

    def load(self, campaign_id: str) -> dict:
        path = self._path(campaign_id)
        if not path.exists():
            raise HTTPException(404, f"unknown campaign {campaign_id!r}")
        return json.loads(path.read_text())

    def _write(self, campaign_id: str, doc: dict):
        path = self._path(campaign_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, sort_keys=True))
        os.replace(tmp, path)

    def create(self, doc: dict):
        with self._lock:
            self._write(doc["campaign_id"], doc)

    def update(self, campaign_id: str, expected_version: int, mutate):
        """Apply ``mutate(doc) -> doc`` iff the stored version matches."""
        with self._lock:
            doc = self.load(campaign_id)
            if doc["version"] != expected_version:
                raise ConflictError(expected_version, doc["version"])
            doc = mutate(doc)
            self._write(campaign_id, doc)
            return doc


class CreateCampaignRequest(BaseModel):
    network: dict
    method: str = "ilp-gp"
    gamma: float = 0.1
    delta: int = 1
    mode: str = "node"
    multi_leak: bool = False
    pipe_strategy: str = "center"
    force: bool = False


class ReadingIn(BaseModel):
    edge_id: int
    point: str = "center"
    value: float


class SubmitReadingsRequest(BaseModel):
    expected_version: int
    readings: list[ReadingIn] = Field(default_factory=list)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _plan_to_dict(state: CampaignState, plan: QueryPlan) -> dict:
    part = plan.partition
    return {
        "status": "active",
        "version": state.version,
        "stage": state.stage,
        "partition": {
            "s_nodes": sorted(part.s_nodes),
            "sbar_nodes": sorted(part.sbar_nodes),
            "cut_edges": sorted(part.cut_edges),
            "cut_cost": part.cut_cost,
        },
        "required_readings": [{"edge_id": eid, "point": pt.key}
                              for eid, pt in plan.required_readings],
        "known_values": [{"edge_id": eid, "point": pt.key, "value": v}
                         for eid, pt, v in plan.known_values],
        "planned_cost": plan.planned_cost,
    }


def _completion_doc(state: CampaignState) -> dict:
    return {"status": "complete", "version": state.version,
            "leaky_set": [_finding_to_dict(f) for f in state.leaky_set],
            "total_cost": state.total_cost}


def _summary(doc: dict) -> dict:
    state = state_from_dict(doc["state"])
    from .protocol import candidate_size
    return {
        "campaign_id": doc["campaign_id"],
        "version": doc["version"],
        "status": "complete" if state.done else "active",
        "stage": state.stage,
        "total_cost": state.total_cost,
        "candidate_size": candidate_size(state),
        "candidate_nodes": sorted(state.candidate.node_ids)
        if state.candidate else [],
        "candidate_edges": sorted(state.candidate.edge_ids)
        if state.candidate else [],
        "leaky_set": [_finding_to_dict(f) for f in state.leaky_set],
        "method": doc["method"],
        "created": doc["created"],
        "updated": doc["updated"],
    }


def create_app(data_dir: str | Path) -> FastAPI:
    app = FastAPI(title="leakloc campaign service", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    store = CampaignStore(data_dir)
    app.state.store = store

    @app.exception_handler(ConflictError)
    async def conflict(_, exc: ConflictError):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=409, content={
            "status": "conflict", "expected_version": exc.expected,
            "actual_version": exc.actual})

    @app.get("/campaigns")
    def list_campaigns():
        return {"campaigns": [_summary(store.load(cid))
                              for cid in store.list_ids()]}

    @app.post("/campaigns", status_code=201)
    def create_campaign(req: CreateCampaignRequest):
        try:
            net = network_from_dict(req.network)
        except NetworkError as exc:
            raise HTTPException(400, f"invalid network: {exc}")
        if req.method not in ("ilp-gp", "ilp-lex", "spectral"):
            raise HTTPException(400, f"unknown method {req.method!r}")
        try:
            state = new_campaign(net, delta=req.delta,
                                 mode=LeakMode(req.mode),
                                 multi_leak=req.multi_leak,
                                 pipe_strategy=PipeStrategy(req.pipe_strategy))
        except (ValueError, ProtocolError) as exc:
            raise HTTPException(400, str(exc))
        imbalance = whole_network_imbalance(net)
        if abs(imbalance) <= state.tolerance and not req.force:
            raise HTTPException(
                422, "no leak detected: the whole-network balance holds "
                     "(pass force=true to create anyway)")
        state = settle(state)
        campaign_id = uuid.uuid4().hex
        now = _now()
        doc = {"campaign_id": campaign_id, "version": state.version,
               "created": now, "updated": now, "method": req.method,
               "gamma": req.gamma, "network": net.to_dict(),
               "params": {"delta": req.delta, "mode": req.mode,
                          "multi_leak": req.multi_leak,
                          "pipe_strategy": req.pipe_strategy},
               "state": state_to_dict(state),
               "readings_log": []}
        store.create(doc)
        return {"campaign_id": campaign_id, "version": state.version,
                "initial_imbalance": imbalance}

    @app.get("/campaigns/{campaign_id}")
    def get_campaign(campaign_id: str):
        return _summary(store.load(campaign_id))

    @app.get("/campaigns/{campaign_id}/state")
    def get_state(campaign_id: str):
        doc = store.load(campaign_id)
        return doc

    @app.get("/campaigns/{campaign_id}/plan")
    def get_plan(campaign_id: str):
        doc = store.load(campaign_id)
        state = state_from_dict(doc["state"])
        if state.done:
            return _completion_doc(state)
        plan = plan_stage(state, method=doc["method"], gamma=doc["gamma"])
        return _plan_to_dict(state, plan)

    @app.post("/campaigns/{campaign_id}/readings")
    def submit_readings(campaign_id: str, req: SubmitReadingsRequest):
        outcome: dict = {}

        def mutate(doc):
            state = state_from_dict(doc["state"])
            if state.done:
                raise HTTPException(409, "campaign is already complete")
            plan = plan_stage(state, method=doc["method"], gamma=doc["gamma"])
            readings = [FlowReading(r.edge_id, _point_from_key(r.point),
                                    r.value, 0.0, state.stage)
                        for r in req.readings]
            try:
                new_state = apply_readings(state, plan, readings)
            except ReadingMismatch as exc:
                raise HTTPException(400, str(exc))
            except (NoLeakDetected, MultipleLeaksInSingleLeakMode) as exc:
                raise HTTPException(422, detail={
                    "status": "inconsistent-readings", "message": str(exc)})
            doc = dict(doc)
            doc["state"] = state_to_dict(new_state)
            doc["version"] = new_state.version
            doc["updated"] = _now()
            doc["readings_log"] = doc["readings_log"] + [
                [{"edge_id": r.edge_id, "point": r.point.key, "value": r.value}
                 for r in readings]]
            outcome.update(_summary(doc))
            outcome["applied_cost"] = plan.planned_cost
            return doc

        store.update(campaign_id, req.expected_version, mutate)
        return outcome

    return app


def replay_state(doc: dict) -> CampaignState:
    """Rebuild the campaign state from its creation parameters and the
    append-only readings log (the event-sourcing consistency check)."""
    net = network_from_dict(doc["network"], strict_kinds=False)
    params = doc["params"]
    state = settle(new_campaign(net, delta=params["delta"],
                                mode=LeakMode(params["mode"]),
                                multi_leak=params["multi_leak"],
                                pipe_strategy=PipeStrategy(
                                    params["pipe_strategy"])))
    for batch in doc["readings_log"]:
        plan = plan_stage(state, method=doc["method"], gamma=doc["gamma"])
        readings = [FlowReading(r["edge_id"], _point_from_key(r["point"]),
                                r["value"], 0.0, state.stage) for r in batch]
        state = apply_readings(state, plan, readings)
    return state
