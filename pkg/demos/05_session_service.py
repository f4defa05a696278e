#!/usr/bin/env python3
"""Drive the HTTP session service end to end in-process: ingest recordings,
score them, follow a recovery trend, and run a simulated live session."""

import json
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from swallowmon import (
    ModelConfig,
    Network,
    SubjectProfile,
    TrainConfig,
    make_corpus,
    save_checkpoint,
    synth_swallow,
    train,
)
from swallowmon.service.app import create_app

workdir = Path(tempfile.mkdtemp(prefix="swallowmon-demo-"))
print(f"working in {workdir}")

# A quick model so the /score endpoint has something to run.
net = Network(ModelConfig(seed=2))
train(net, make_corpus(3, 3, 6, seed=21), TrainConfig(iterations=30, batch_size=8, seed=9))
ckpt = workdir / "model.json"
save_checkpoint(net, ckpt, training_seed=9)

app = create_app(workdir / "data", checkpoint_path=ckpt)
client = TestClient(app)
print("healthz:", client.get("/healthz").json())

# A patient's course: three sessions over three days, improving amplitude.
session_ids = []
for day, seed in enumerate((31, 32, 33)):
    seg = synth_swallow(SubjectProfile.dysphagic() if day == 0 else SubjectProfile.healthy(),
                        10, duration_s=6.0, seed=seed)
    r = client.post("/sessions", json={
        "subject_id": "P042",
        "sample_rate_hz": 250.0,
        "channels": seg.channels.tolist(),
        "volume_ml": 10,
        "recorded_at": f"2026-08-{10 + day:02d}T09:00:00.000Z",
    })
    session_ids.append(r.json()["session_id"])
    scored = client.post(f"/sessions/{session_ids[-1]}/score").json()
    print(f"day {day}: session {scored['session_id'][:18]}...  "
          f"health index {scored['health_index']:.3f}")

trend = client.get("/subjects/P042/trend").json()
print("\ntrend points:")
for p in trend["points"]:
    print(f"  {p['recorded_at']}  {p['health_index']:.3f}")

# Waveform access with min-max downsampling for plotting.
wf = client.get(f"/sessions/{session_ids[0]}/waveform",
                params={"points": 200, "kind": "envelope"}).json()
print(f"\nwaveform: mode={wf['mode']}, "
      f"{len(wf.get('bucket_times_s', wf.get('times_s')))} plot points "
      f"from {wf['source_samples']} samples")

# Live panel lifecycle: start -> poll windows -> stop ingests one session.
client.post("/live/start", json={"subject_id": "P042", "profile": "healthy",
                                 "volume_ml": 10, "seed": 5, "duration_s": 2.0})
time.sleep(0.3)
window = client.get("/live/window", params={"seconds": 1.0}).json()
print(f"\nlive window: {len(window['times_s'])} samples after "
      f"{window['elapsed_s']:.2f} s (done={window['done']})")
rec = client.post("/live/stop").json()
print(f"live stop ingested session with {rec['n_samples']} samples")

listing = client.get("/sessions", params={"limit": 10}).json()
print(f"\n{len(listing['sessions'])} sessions on record:")
for s in listing["sessions"]:
    hi = "unscored" if s["health_index"] is None else f"{s['health_index']:.3f}"
    print(f"  {s['recorded_at']}  {s['subject_id']:6s}  {hi}")
