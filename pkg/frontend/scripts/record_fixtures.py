#!/usr/bin/env python3
"""Record operator-console test fixtures from the live session service.

Run from the repository root with the Python package installed:

    python3 frontend/scripts/record_fixtures.py

Regenerates frontend/tests/fixtures/*.json by driving real sessions
through the HTTP API (in-process TestClient), so every fixture is a
genuine server payload.
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from pooltest.service import create_app

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def save(name: str, payload: dict) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(tmp)
        with TestClient(app) as client:
            # fresh two-sample session
            fresh = client.post(
                "/sessions", json={"n": 2, "q": 0.9, "mode": "fixed"}
            ).json()
            save("fresh_pair", fresh)

            # pool positive, first sample negative: second sample is
            # identified positive without ever being tested
            sid = fresh["id"]
            client.get(f"/sessions/{sid}/next")
            client.post(f"/sessions/{sid}/result", json={"positive": True})
            client.get(f"/sessions/{sid}/next")
            client.post(f"/sessions/{sid}/result", json={"positive": False})
            save("deduced_positive_done", client.get(f"/sessions/{sid}").json())

            # restructuring session that replans after a nested positive
            restr = client.post(
                "/sessions", json={"n": 4, "q": 0.9999, "mode": "restructuring"}
            ).json()
            rid = restr["id"]
            client.get(f"/sessions/{rid}/next")
            client.post(f"/sessions/{rid}/result", json={"positive": True})
            client.get(f"/sessions/{rid}/next")
            replanned = client.post(
                f"/sessions/{rid}/result", json={"positive": True}
            ).json()
            save("replanned", replanned)

            # mid-session state with a pending pool (larger plan)
            mid = client.post(
                "/sessions", json={"n": 7, "q": 0.9999, "mode": "fixed"}
            ).json()
            mid_id = mid["id"]
            client.get(f"/sessions/{mid_id}/next")
            client.post(f"/sessions/{mid_id}/result", json={"positive": True})
            client.get(f"/sessions/{mid_id}/next")
            save("mid_session", client.get(f"/sessions/{mid_id}").json())


if __name__ == "__main__":
    main()
