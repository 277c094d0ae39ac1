"""HTTP experiment service for browser-based (human) observers.

Exposes the session lifecycle over REST and writes the same response CSV
stream as the subprocess runner. One active session per observer; posting a
response twice for the same trial is rejected, which makes client retries
and page reloads safe.
"""

import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from bandmask.records import RecordWriter, make_record, read_records
from bandmask.session.runner import BlockPlan
from bandmask.records import BLOCK_TRAINING
from bandmask.taxonomy import CATEGORIES

DEFAULT_INSTRUCTIONS = (
    "On each trial, click the + to reveal an image, then click the button "
    "naming the object category you saw. Training trials show feedback; "
    "test trials do not."
)


class NewSessionRequest(BaseModel):
    observer_id: str
    kind: str = "human"


class ResponseRequest(BaseModel):
    stimulus_id: str
    category: str


@dataclass
class SessionState:
    session_id: str
    observer_id: str
    kind: str
    cursor: int = 0
    answered: set = field(default_factory=set)


def _err(status, reason):
    return JSONResponse(status_code=status, content={"error": reason})


def create_app(manifest, records_dir, stimuli_dir=None, block_plan=None,
               instructions=None):
    instructions = instructions or DEFAULT_INSTRUCTIONS
    plan = block_plan or BlockPlan()
    plan.validate(len(manifest))
    records_dir.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="bandmask experiment")
    # the runner UI may be served from a different origin (e.g. a dev server)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions = {}
    by_observer = {}

    def record_path(observer_id):
        return records_dir / f"{observer_id}.csv"

    def resume_state(observer_id):
        answered = set()
        path = record_path(observer_id)
        if path.exists() and path.stat().st_size > 0:
            answered = {r.stimulus_id for r in read_records(path)}
        cursor = 0
        while cursor < plan.total_trials and manifest.entries[cursor].stimulus_id in answered:
            cursor += 1
        return cursor, answered

    @app.get("/experiment/config")
    def experiment_config():
        return {
            "instructions": instructions,
            "labels": list(CATEGORIES),
            "block_plan": plan.to_dict(),
            "total_trials": plan.total_trials,
        }

    @app.post("/session")
    def new_session(req: NewSessionRequest):
        if not req.observer_id.strip():
            return _err(400, "observer_id must be non-empty")
        if req.kind not in ("human", "network"):
            return _err(400, f"kind {req.kind!r} not in ('human', 'network')")
        old = by_observer.pop(req.observer_id, None)
        if old is not None:
            sessions.pop(old, None)
        cursor, answered = resume_state(req.observer_id)
        sid = uuid.uuid4().hex
        sessions[sid] = SessionState(
            session_id=sid,
            observer_id=req.observer_id,
            kind=req.kind,
            cursor=cursor,
            answered=answered,
        )
        by_observer[req.observer_id] = sid
        return {
            "session_id": sid,
            "block_plan": plan.to_dict(),
            "labels": list(CATEGORIES),
            "total_trials": plan.total_trials,
            "completed": cursor,
        }

    @app.get("/session/{sid}/trial")
    def next_trial(sid: str):
        state = sessions.get(sid)
        if state is None:
            return _err(404, "unknown session")
        if state.cursor >= plan.total_trials:
            return {"done": True, "completed": state.cursor}
        entry = manifest.entries[state.cursor]
        block, block_number = plan.block_of(state.cursor)
        return {
            "done": False,
            "stimulus_id": entry.stimulus_id,
            "stimulus_url": f"/stimuli/{entry.stimulus_id}.png",
            "labels": list(CATEGORIES),
            "block": block,
            "block_number": block_number,
            "index": state.cursor,
            "total_trials": plan.total_trials,
        }

    @app.post("/session/{sid}/response")
    def post_response(sid: str, req: ResponseRequest):
        state = sessions.get(sid)
        if state is None:
            return _err(404, "unknown session")
        if state.cursor >= plan.total_trials:
            return _err(409, "session already complete")
        entry = manifest.entries[state.cursor]
        if req.stimulus_id in state.answered:
            return _err(409, f"response for {req.stimulus_id} already recorded")
        if req.stimulus_id != entry.stimulus_id:
            return _err(409, f"expected response for {entry.stimulus_id}")
        if req.category not in CATEGORIES:
            return _err(400, f"unknown category {req.category!r}")
        block, _ = plan.block_of(state.cursor)
        with RecordWriter(record_path(state.observer_id)) as writer:
            writer.write(make_record(state.observer_id, entry, req.category, block))
        state.answered.add(entry.stimulus_id)
        state.cursor += 1
        feedback = None
        if block == BLOCK_TRAINING and plan.feedback_in_training:
            feedback = {
                "correct": req.category == entry.category,
                "true_category": entry.category,
            }
        return {"recorded": True, "feedback": feedback, "completed": state.cursor}

    @app.get("/session/{sid}/progress")
    def progress(sid: str):
        state = sessions.get(sid)
        if state is None:
            return _err(404, "unknown session")
        block, block_number = plan.block_of(min(state.cursor, plan.total_trials - 1))
        return {
            "completed": state.cursor,
            "total": plan.total_trials,
            "next_index": state.cursor,
            "block": block,
            "block_number": block_number,
            "done": state.cursor >= plan.total_trials,
        }

    @app.get("/stimuli/{stimulus_id}.png")
    def stimulus_png(stimulus_id: str):
        if stimuli_dir is None:
            return _err(404, "no stimuli directory configured")
        path = stimuli_dir / f"{stimulus_id}.png"
        if not path.exists():
            return _err(404, f"no stimulus {stimulus_id}")
        return FileResponse(path, media_type="image/png")

    return app
