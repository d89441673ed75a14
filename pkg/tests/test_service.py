"""Session service: API flows, deductions over HTTP, persistence, replay
determinism, and session isolation."""

import hashlib
import itertools
import json
import threading

import pytest
from fastapi.testclient import TestClient

from pooltest.executor import execute_fixed
from pooltest.optimizer import build_table
from pooltest.service import create_app
from pooltest.sessions import SessionStore


@pytest.fixture()
def client(tmp_path):
    app = create_app(str(tmp_path))
    with TestClient(app) as tc:
        yield tc


def make(client, n, q, mode="fixed"):
    resp = client.post("/sessions", json={"n": n, "q": q, "mode": mode})
    assert resp.status_code == 201, resp.text
    return resp.json()


def view_hash(view: dict) -> str:
    trimmed = {k: v for k, v in view.items() if k != "id"}
    return hashlib.sha256(json.dumps(trimmed, sort_keys=True).encode()).hexdigest()


# -- creation ------------------------------------------------------------------


def test_create_seven_sample_plan(client):
    view = make(client, 7, 0.9999)
    assert view["plan"] == "[[xx][[xx][x[xx]]]]"  # top split (2, 5)
    assert view["status"] == "active"
    assert view["samples"] == ["unknown"] * 7


def test_create_below_threshold_plan_is_individual(client):
    view = make(client, 3, 0.5)
    assert view["plan"] == "xxx"


def test_create_single_sample(client):
    view = make(client, 1, 0.9)
    assert view["plan"] == "x"
    nxt = client.get(f"/sessions/{view['id']}/next").json()
    assert nxt == {"test": {"start": 0, "end": 1}}


def test_create_validates(client):
    assert client.post("/sessions", json={"n": 0, "q": 0.5, "mode": "fixed"}).status_code == 422
    assert client.post("/sessions", json={"n": 5, "q": 1.5, "mode": "fixed"}).status_code == 422
    assert client.post("/sessions", json={"n": 5, "q": 0.5, "mode": "nope"}).status_code == 422


# -- the canonical pair flows ------------------------------------------------------


def test_pair_negative_then_done(client):
    view = make(client, 2, 0.9)
    sid = view["id"]
    assert client.get(f"/sessions/{sid}/next").json() == {"test": {"start": 0, "end": 2}}
    after = client.post(f"/sessions/{sid}/result", json={"positive": False}).json()
    assert after["status"] == "done"
    assert after["samples"] == ["negative", "negative"]
    nxt = client.get(f"/sessions/{sid}/next").json()
    assert nxt == {"done": {"positives": []}}


def test_pair_positive_then_first_negative_frees_second(client):
    view = make(client, 2, 0.9)
    sid = view["id"]
    client.get(f"/sessions/{sid}/next")
    client.post(f"/sessions/{sid}/result", json={"positive": True})
    assert client.get(f"/sessions/{sid}/next").json() == {"test": {"start": 0, "end": 1}}
    after = client.post(f"/sessions/{sid}/result", json={"positive": False}).json()
    assert after["status"] == "done"
    assert after["samples"] == ["negative", "positive"]
    assert after["tests_performed"] == 2
    assert client.get(f"/sessions/{sid}/next").json() == {"done": {"positives": [1]}}


# -- errors -------------------------------------------------------------------------


def test_unknown_session_404(client):
    resp = client.get("/sessions/deadbeef")
    assert resp.status_code == 404
    assert resp.json()["code"] == "unknown_session"


def test_double_post_conflict(client):
    view = make(client, 2, 0.9)
    sid = view["id"]
    client.get(f"/sessions/{sid}/next")
    assert client.post(f"/sessions/{sid}/result", json={"positive": False}).status_code == 200
    resp = client.post(f"/sessions/{sid}/result", json={"positive": False})
    assert resp.status_code == 409
    assert resp.json()["code"] == "no_pending_test"


def test_post_without_get_next_conflict(client):
    view = make(client, 2, 0.9)
    resp = client.post(f"/sessions/{view['id']}/result", json={"positive": True})
    assert resp.status_code == 409


# -- restructuring over the API -------------------------------------------------------


def test_restructuring_replan_notice(client):
    view = make(client, 4, 0.9999, mode="restructuring")
    sid = view["id"]
    client.get(f"/sessions/{sid}/next")
    client.post(f"/sessions/{sid}/result", json={"positive": True})  # whole pool
    client.get(f"/sessions/{sid}/next")
    after = client.post(f"/sessions/{sid}/result", json={"positive": True}).json()
    assert after["replan"] is not None
    assert after["replans"], "replan must be retained in state"
    assert after["current_plan"] != after["plan"]
    state = client.get(f"/sessions/{sid}").json()
    assert state["replans"] == after["replans"]


def test_fixed_mode_same_events_no_replan(client):
    view = make(client, 4, 0.9999, mode="fixed")
    sid = view["id"]
    client.get(f"/sessions/{sid}/next")
    client.post(f"/sessions/{sid}/result", json={"positive": True})
    client.get(f"/sessions/{sid}/next")
    after = client.post(f"/sessions/{sid}/result", json={"positive": True}).json()
    assert after["replan"] is None
    assert after["replans"] == []
    assert after["current_plan"] == after["plan"]


# -- persistence and replay ------------------------------------------------------------


def test_replay_reproduces_state(tmp_path):
    app = create_app(str(tmp_path))
    with TestClient(app) as tc:
        view = make(tc, 5, 0.99, mode="restructuring")
        sid = view["id"]
        for outcome in (True, True, False, True):
            nxt = tc.get(f"/sessions/{sid}/next").json()
            if "done" in nxt:
                break
            tc.post(f"/sessions/{sid}/result", json={"positive": outcome})
        before = tc.get(f"/sessions/{sid}").json()

    # a brand-new process over the same data dir rebuilds the session
    app2 = create_app(str(tmp_path))
    with TestClient(app2) as tc2:
        after = tc2.get(f"/sessions/{sid}").json()
        assert view_hash(after) == view_hash(before)
        assert after == before


def test_session_file_layout(tmp_path):
    store = SessionStore(tmp_path)
    session = store.create(2, 0.9, "fixed")
    session.next_action()
    store.record(session, session.apply_result(False))
    path = tmp_path / "sessions" / f"{session.id}.jsonl"
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert lines[0]["schema"] == 1
    assert lines[0]["plan"] == "[xx]"
    assert lines[1]["span"] == {"start": 0, "end": 2}
    assert lines[1]["positive"] is False


def test_finished_session_event_count(client):
    view = make(client, 2, 0.9)
    sid = view["id"]
    client.get(f"/sessions/{sid}/next")
    client.post(f"/sessions/{sid}/result", json={"positive": False})
    state = client.get(f"/sessions/{sid}").json()
    assert state["status"] == "done"
    assert state["tests_performed"] == len(state["events"]) == 1


# -- simulated operator: API counts match the batch engine ------------------------------


def _run_operator(client, sid, o):
    performed = 0
    while True:
        nxt = client.get(f"/sessions/{sid}/next").json()
        if "done" in nxt:
            return performed, nxt["done"]["positives"]
        span = nxt["test"]
        positive = any(o[i] for i in range(span["start"], span["end"]))
        client.post(f"/sessions/{sid}/result", json={"positive": positive})
        performed += 1


def test_api_counts_match_batch_engine(client):
    q = 0.9
    table = build_table(6, q)
    s = table.structure(6)
    for o in itertools.product((False, True), repeat=6):
        view = make(client, 6, q)
        performed, positives = _run_operator(client, view["id"], o)
        batch = execute_fixed(s, o)
        assert performed == batch.test_count
        assert positives == [i for i, v in enumerate(o) if v]


def test_api_counts_match_batch_engine_sampled_ten(client):
    import random

    q = 0.9
    table = build_table(10, q)
    s = table.structure(10)
    rng = random.Random(77)
    outcomes = {tuple(rng.random() < 0.3 for _ in range(10)) for _ in range(40)}
    for o in outcomes:
        view = make(client, 10, q)
        performed, positives = _run_operator(client, view["id"], o)
        batch = execute_fixed(s, o)
        assert performed == batch.test_count
        assert positives == [i for i, v in enumerate(o) if v]


# -- isolation ----------------------------------------------------------------------------


def test_interleaved_sessions_do_not_interfere(client):
    a = make(client, 2, 0.9)["id"]
    b = make(client, 2, 0.9)["id"]
    client.get(f"/sessions/{a}/next")
    client.get(f"/sessions/{b}/next")
    client.post(f"/sessions/{a}/result", json={"positive": True})
    client.post(f"/sessions/{b}/result", json={"positive": False})
    sa = client.get(f"/sessions/{a}").json()
    sb = client.get(f"/sessions/{b}").json()
    assert sa["status"] == "active" and sb["status"] == "done"
    assert sa["samples"] == ["unknown", "unknown"]
    assert sb["samples"] == ["negative", "negative"]


def test_concurrent_requests_across_sessions(client):
    ids = [make(client, 2, 0.9)["id"] for _ in range(8)]
    errors = []

    def finish(sid):
        try:
            client.get(f"/sessions/{sid}/next")
            client.post(f"/sessions/{sid}/result", json={"positive": False})
            state = client.get(f"/sessions/{sid}").json()
            assert state["status"] == "done"
        except Exception as err:  # pragma: no cover
            errors.append(err)

    threads = [threading.Thread(target=finish, args=(sid,)) for sid in ids]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
