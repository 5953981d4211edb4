"""Regenerate the viewer test fixtures from the engine.

Run from frontend/:  python3 scripts/gen_fixtures.py
Produces a handshake, an initial snapshot, and a scripted interaction
transcript (request + response frame pairs) on a small deterministic
study. The engine is deterministic, so fixtures change only when engine
output intentionally changes.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from marv.ingest import demo_spec, generate_synthetic  # noqa: E402
from marv.session import Session  # noqa: E402

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "fixtures"

SCRIPT = [
    {"type": "extract_chrono", "attribute": "Diameter"},
    {"type": "click_chrono_quad", "chartId": "chrono-a006",
     "binIndex": 2, "timePair": [0, 1]},
    {"type": "click_chrono_quad", "chartId": "chrono-a006",
     "binIndex": 3, "timePair": [1, 2]},
    {"type": "sk_select", "cell": [1, 1]},
    {"type": "sk_select", "cell": [0, 0]},
    {"type": "set_representation", "chartId": "mdd0", "repr": "TET"},
    {"type": "set_representation", "chartId": "mdd0", "repr": "MDD"},
    {"type": "dismiss_chrono", "chartId": "chrono-a006"},
]


def main() -> None:
    spec, binding = demo_spec(steps=3, records=150)
    session = Session(generate_synthetic(spec, seed=23), binding)
    FIXTURE_DIR.mkdir(exist_ok=True)

    (FIXTURE_DIR / "handshake.json").write_text(
        json.dumps(session.handshake(), indent=1, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    (FIXTURE_DIR / "snapshot.json").write_text(
        json.dumps(session.snapshot_frame(), sort_keys=True) + "\n",
        encoding="utf-8",
    )
    transcript = []
    for request in SCRIPT:
        response = session.apply_request(request)
        transcript.append({"request": request, "response": response})
    (FIXTURE_DIR / "transcript.json").write_text(
        json.dumps(transcript, sort_keys=True) + "\n", encoding="utf-8"
    )
    for name in ("handshake.json", "snapshot.json", "transcript.json"):
        print(f"wrote fixtures/{name}")


if __name__ == "__main__":
    main()
