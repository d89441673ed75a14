"""Event-sourced interactive testing sessions.

One append-only JSON-lines file per session: a header line (schema
version, n, q, mode, plan notation) followed by one line per applied
outcome. Replaying a file through a fresh engine reproduces the session
state exactly; files are flushed and fsynced before any reply, so a crash
never loses an acknowledged event.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .executor import Mode, NoPendingTest, StepEngine, step_begin
from .optimizer import PlanTable, build_table, plan_structure
from .structure import Structure, notation, parse, structure_value, test_value

SCHEMA_VERSION = 1


class UnknownSession(KeyError):
    pass


def _unit_expected(node, q) -> float:
    total = float(node.size)
    for sub in node.iter_nodes():
        if sub.is_test:
            total += test_value(sub.size, [c.size for c in sub.children], q)
    return total


@dataclass
class SessionEvent:
    ts: float
    span: tuple[int, int]
    positive: bool
    deduced: tuple[str, ...]
    replan: Optional[dict] = None

    def to_json(self) -> dict:
        return {
            "ts": self.ts,
            "span": {"start": self.span[0], "end": self.span[1]},
            "positive": self.positive,
            "deduced": list(self.deduced),
            "replan": self.replan,
        }


class Session:
    """A live pooled-testing run driven one outcome at a time."""

    def __init__(self, sid: str, n: int, q: float, mode: Mode, plan: Structure,
                 table: Optional[PlanTable] = None):
        self.id = sid
        self.n = n
        self.q = q
        self.mode = mode
        self.plan_notation = notation(plan)
        self.expected_total = n + structure_value(plan, q).total_value
        replanner = (lambda m: plan_structure(m, q, table)) if mode is Mode.RESTRUCTURING else None
        self.engine: StepEngine = step_begin(plan, mode, q, replanner)
        self.events: list[SessionEvent] = []
        self.handed_out = False
        self.lock = threading.Lock()

    @property
    def done(self) -> bool:
        return self.engine.step_next() is None

    def next_action(self) -> dict:
        span = self.engine.step_next()
        self.handed_out = span is not None
        if span is None:
            return {"done": {"positives": self.engine.positives()}}
        return {"test": {"start": span[0], "end": span[1]}}

    def apply_result(self, positive: bool) -> SessionEvent:
        span = self.engine.step_next()
        if span is None:
            raise NoPendingTest("session is done")
        if not self.handed_out:
            raise NoPendingTest("no pending test; fetch the next test first")
        replans_before = len(self.engine.replans)
        self.engine.step_apply(positive)
        self.handed_out = False
        replan = None
        if len(self.engine.replans) > replans_before:
            event = self.engine.replans[-1]
            replan = {"from": event.position, "plan": notation(event.plan)}
        record = SessionEvent(
            time.time(),
            span,
            positive,
            self.engine.performed[-1].deduced,
            replan,
        )
        self.events.append(record)
        return record

    def view(self) -> dict:
        engine = self.engine
        nxt = engine.step_next()
        pending_expected = 0.0
        for unit in engine.units:
            status = engine.state.test_status[unit.span]
            if status.value == "pending":
                pending_expected += _unit_expected(unit, self.q)
        tests = [
            {"start": node.start, "end": node.end,
             "status": engine.state.test_status[node.span].value}
            for unit in engine.units
            for node in unit.iter_nodes()
        ]
        return {
            "id": self.id,
            "n": self.n,
            "q": self.q,
            "mode": self.mode.value,
            "status": "done" if nxt is None else "active",
            "plan": self.plan_notation,
            "current_plan": notation(engine.current_plan()),
            "replans": [
                {"from": ev.position, "plan": notation(ev.plan)}
                for ev in engine.replans
            ],
            "next": None if nxt is None else {"start": nxt[0], "end": nxt[1]},
            "samples": [st.value for st in engine.state.sample_status],
            "tests": tests,
            "positives": engine.positives(),
            "tests_performed": engine.performed_count,
            "samples_resolved": sum(
                1 for st in engine.state.sample_status if st.value != "unknown"
            ),
            "expected_total": self.expected_total,
            "expected_remaining": pending_expected,
            "events": [ev.to_json() for ev in self.events],
        }


class SessionStore:
    """Registry plus per-session JSONL persistence under a data directory."""

    def __init__(self, data_dir: Optional[os.PathLike | str] = None):
        if data_dir is None:
            data_dir = os.environ.get("POOLTEST_DATA_DIR", "./pooltest-data")
        self.data_dir = Path(data_dir)
        self.sessions_dir = self.data_dir / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._tables: dict[float, PlanTable] = {}
        self._lock = threading.Lock()
        self._load_existing()

    # -- plan tables shared across sessions --------------------------------

    def table_for(self, q: float, n: int) -> PlanTable:
        with self._lock:
            table = self._tables.get(q)
            if table is None or table.size < n:
                table = build_table(n, q)
                self._tables[q] = table
            return table

    # -- lifecycle ----------------------------------------------------------

    def create(self, n: int, q: float, mode: str | Mode) -> Session:
        mode = Mode(mode) if isinstance(mode, str) else mode
        if n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= q < 1:
            raise ValueError("q must lie in [0, 1)")
        table = self.table_for(q, n)
        plan = table.structure(n)
        sid = secrets.token_hex(8)
        session = Session(sid, n, q, mode, plan, table)
        with self._lock:
            self._sessions[sid] = session
        self._write_header(session)
        return session

    def get(self, sid: str) -> Session:
        with self._lock:
            session = self._sessions.get(sid)
        if session is None:
            raise UnknownSession(sid)
        return session

    def list_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)

    # -- persistence ----------------------------------------------------------

    def _path(self, sid: str) -> Path:
        return self.sessions_dir / f"{sid}.jsonl"

    def _append(self, sid: str, payload: dict) -> None:
        with open(self._path(sid), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(payload) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _write_header(self, session: Session) -> None:
        self._append(
            session.id,
            {
                "schema": SCHEMA_VERSION,
                "id": session.id,
                "n": session.n,
                "q": session.q,
                "mode": session.mode.value,
                "plan": session.plan_notation,
                "created": time.time(),
            },
        )

    def record(self, session: Session, event: SessionEvent) -> None:
        self._append(session.id, event.to_json())

    def _load_existing(self) -> None:
        for path in sorted(self.sessions_dir.glob("*.jsonl")):
            try:
                session = self._replay(path)
            except Exception as err:  # unreadable log: skip, never crash startup
                print(f"warning: could not replay {path.name}: {err}")
                continue
            self._sessions[session.id] = session

    def _replay(self, path: Path) -> Session:
        with open(path, encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if not lines:
            raise ValueError("empty session file")
        head = lines[0]
        if head.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported session schema {head.get('schema')}")
        mode = Mode(head["mode"])
        plan = parse(head["plan"])
        table = self.table_for(head["q"], head["n"]) if mode is Mode.RESTRUCTURING else None
        session = Session(head["id"], head["n"], head["q"], mode, plan, table)
        for raw in lines[1:]:
            span = (raw["span"]["start"], raw["span"]["end"])
            expected = session.engine.step_next()
            if expected != span:
                raise ValueError(f"log span {span} does not match replay {expected}")
            session.handed_out = True
            event = session.apply_result(raw["positive"])
            if raw.get("replan") != event.replan:
                raise ValueError("replayed replan differs from log")
            event.ts = raw["ts"]  # keep logged wall time, not replay time
        return session
