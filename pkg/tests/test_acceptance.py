"""Acceptance gate: one test per top-level criterion, each at its stated
tolerance and runtime budget, each printing a single [PASS]/[FAIL] line."""

import json
import os
import signal
import subprocess
import sys
import threading
import time
from contextlib import contextmanager

import numpy as np
import pytest
from fastapi.testclient import TestClient

from swallowmon.acquisition import SampleFrame, decode_stream, encode_frames, stream_session
from swallowmon.classifier import (
    Model2DConfig,
    ModelConfig,
    Network,
    Network2D,
    TrainConfig,
    compare_models,
    evaluate,
    gradient_check,
    metrics_from_scores,
    save_checkpoint,
    train,
)
from swallowmon.dsp import (
    apply_filter,
    design_butterworth_highpass,
    moving_rms,
    preprocess_pipeline,
)
from swallowmon.service.app import create_app
from swallowmon.service.store import SessionStore
from swallowmon.signal_model import (
    LabeledDataset,
    NoiseConfig,
    SubjectProfile,
    add_noise,
    make_corpus,
    synth_swallow,
)


_capture_manager = None


@pytest.fixture(autouse=True)
def _live_criterion_output(request):
    global _capture_manager
    _capture_manager = request.config.pluginmanager.getplugin("capturemanager")
    yield


def _emit(line: str) -> None:
    # Route around pytest's fd-level capture so the line reaches the real
    # stdout (and any tee) even without -s.
    if _capture_manager is not None:
        with _capture_manager.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)


@contextmanager
def criterion(name: str):
    """Emit exactly one [PASS]/[FAIL] line per criterion, with wall time."""
    t0 = time.monotonic()
    try:
        yield
    except BaseException:
        _emit(f"[FAIL] {name}")
        raise
    _emit(f"[PASS] {name} ({time.monotonic() - t0:.1f} s)")


# ---------------------------------------------------------------------------
# signal chain
# ---------------------------------------------------------------------------


def test_criterion_filter_fidelity():
    with criterion("filter fidelity: 8th-order high-pass vs closed-form oracle"):
        t0 = time.monotonic()
        fs, fc, order = 250.0, 100.0, 8
        hp = design_butterworth_highpass(fc, fs, order)

        freqs = np.linspace(0.5, 124.5, 100)
        ratio = np.tan(np.pi * fc / fs) / np.tan(np.pi * freqs / fs)
        oracle = 1.0 / np.sqrt(1.0 + ratio ** (2 * order))
        assert np.max(np.abs(hp.magnitude(freqs, fs) - oracle)) < 1e-9

        assert abs(hp.magnitude([fc], fs)[0] - 1.0 / np.sqrt(2.0)) < 1e-9
        assert hp.magnitude([0.0], fs)[0] <= 1e-12
        for section in hp.sections:
            assert np.all(np.abs(section.poles()) < 1.0)
        assert time.monotonic() - t0 < 1.0


def test_criterion_envelope_correctness():
    with criterion("envelope: moving RMS vs brute force at 1e-12 on 1e4 samples"):
        rng = np.random.default_rng(7)
        n, window = 10_000, 50
        x = rng.standard_normal((2, n)) * rng.uniform(0.1, 10.0, (2, 1))
        got = moving_rms(x, window)
        brute = np.empty_like(x)
        for c in range(x.shape[0]):
            for i in range(n):
                lo = max(0, i - window + 1)
                brute[c, i] = np.sqrt(np.mean(x[c, lo : i + 1] ** 2))
        assert got.shape == x.shape
        assert np.max(np.abs(got - brute)) < 1e-12

        const = np.full((1, 400), 0.5)
        assert np.array_equal(moving_rms(const, 32), const)

        fs_sine, f_sine, amp = 1000.0, 50.0, 2.0
        t = np.arange(2000) / fs_sine
        sine = amp * np.sin(2 * np.pi * f_sine * t)[None, :]
        period = int(fs_sine / f_sine)
        steady = moving_rms(sine, 5 * period)[0, 5 * period :]
        assert np.max(np.abs(steady - amp / np.sqrt(2.0))) < 1e-12


def test_criterion_noise_rejection():
    with criterion("noise rejection: >=40 dB on 60 Hz line and sub-5 Hz drift"):
        t0 = time.monotonic()
        fs, drift_hz = 250.0, 1.0
        clean = synth_swallow(
            SubjectProfile.healthy(), 10, duration_s=16.0, sample_rate_hz=fs, seed=3
        )
        noisy = add_noise(
            clean,
            NoiseConfig(
                white_noise_rms_mv=0.02,
                powerline_hz=60.0,
                powerline_amplitude_mv=1.0,
                baseline_drift_amplitude_mv=20.0,
                baseline_drift_hz=drift_hz,
            ),
            seed=4,
        )
        env = preprocess_pipeline(noisy)
        n = noisy.n_samples

        def line_mag(x, f_hz):
            return np.abs(np.fft.rfft(x))[int(round(f_hz * n / fs))]

        for f_hz in (60.0, drift_hz):
            for ch in range(4):
                before = line_mag(noisy.channels[ch], f_hz)
                after = line_mag(env.values[ch], f_hz)
                assert 20.0 * np.log10(after / before) <= -40.0
        assert time.monotonic() - t0 < 10.0


# ---------------------------------------------------------------------------
# acquisition protocol
# ---------------------------------------------------------------------------


def test_criterion_protocol():
    with criterion("protocol: 1e6-frame round trip, 1e7-byte fuzz, conservation"):
        t0 = time.monotonic()
        rng = np.random.default_rng(11)

        n = 1_000_000
        seqs = np.arange(n, dtype=np.uint32) % 65536
        samples = rng.integers(0, 4096, size=(n, 4), dtype=np.uint16)
        wire = encode_frames(seqs, samples)
        assert len(wire) == 13 * n
        frames, resyncs = decode_stream(wire)
        assert resyncs == 0 and len(frames) == n
        got_seqs = np.array([f.seq for f in frames], dtype=np.uint32)
        got_samples = np.array([f.raw for f in frames], dtype=np.uint16)
        assert np.array_equal(got_seqs, seqs)
        assert np.array_equal(got_samples, samples)

        fuzz = rng.bytes(10_000_000)
        frames, resyncs = decode_stream(fuzz)
        assert resyncs >= 0
        for f in frames[:100]:
            assert 0 <= f.seq < 65536 and all(v <= 0x0FFF for v in f.raw)

        def run(n_frames, capacity, rate):
            src = (SampleFrame(seq=i % 65536, raw=(0, 0, 0, 0)) for i in range(n_frames))
            consumed = []
            return stream_session(src, consumed.append, capacity, rate), consumed

        for capacity, rate in ((16, 1.0), (8, 0.25), (64, 2.0), (4, 0.9)):
            report, consumed = run(500, capacity, rate)
            assert report.frames_produced == 500
            assert report.frames_consumed + report.frames_lost == report.frames_produced
            assert report.frames_consumed == len(consumed)
        report, _ = run(500, 16, 1.0)
        assert report.frames_lost == 0
        assert time.monotonic() - t0 < 60.0


# ---------------------------------------------------------------------------
# learning
# ---------------------------------------------------------------------------


def test_criterion_learning_correctness():
    with criterion("learning: gradient check, lr-0 no-op, bit-exact reruns"):
        rng = np.random.default_rng(0)
        net1 = Network(ModelConfig(seed=1))
        x1 = rng.standard_normal((4, 4, 1000))
        y1 = rng.integers(0, 2, 4).astype(np.float64)
        err1 = gradient_check(net1, x1, y1, n_samples=200, seed=0)
        assert err1 < 1e-4

        net2 = Network2D(Model2DConfig(seed=1))
        x2 = rng.standard_normal(
            (4, 4, net2.cfg.input_frames, net2.cfg.input_bins)
        )
        y2 = rng.integers(0, 2, 4).astype(np.float64)
        err2 = gradient_check(net2, x2, y2, n_samples=100, seed=0)
        assert err2 < 1e-4

        ds = make_corpus(2, 2, 4, seed=5)
        frozen = TrainConfig(iterations=3, batch_size=8, learning_rate=0.0, seed=2)
        net = Network(ModelConfig(seed=3))
        before = {k: v.copy() for k, v in net.parameter_items()}
        log0 = train(net, ds, frozen)
        for key, arr in net.parameter_items():
            assert np.array_equal(arr, before[key])
        assert all(v == log0.initial_train_loss for v in log0.train_loss)

        tc = TrainConfig(iterations=3, batch_size=8, seed=2)
        log_a = train(Network(ModelConfig(seed=3)), ds, tc)
        log_b = train(Network(ModelConfig(seed=3)), ds, tc)
        assert log_a == log_b


def _subject_subset(ds: LabeledDataset, subjects) -> LabeledDataset:
    wanted = set(subjects)
    return LabeledDataset(
        items=[it for it in ds.items if it.subject_id in wanted],
        split_seed=ds.split_seed,
    )


def test_criterion_end_to_end_training():
    with criterion(
        "end-to-end: 7+7 subjects x 20 events, 200 iterations, val acc/AUC >= 0.95"
    ):
        t0 = time.monotonic()
        ds = make_corpus(7, 7, 20, seed=101)
        assert len(ds.items) == (7 + 7) * 20
        net = Network(ModelConfig(seed=0))
        log = train(net, ds, TrainConfig(iterations=200, batch_size=16, seed=0))

        assert set(log.train_subjects).isdisjoint(log.val_subjects)
        val = _subject_subset(ds, log.val_subjects)
        m = evaluate(net, val)
        assert m.accuracy >= 0.95
        assert m.auc >= 0.95

        first20 = np.array(log.train_loss[:20])
        iters = np.arange(20)
        slope = np.polyfit(iters, first20, 1)[0]
        assert slope < 0.0
        assert first20[-1] < log.initial_train_loss
        assert time.monotonic() - t0 < 300.0


def test_criterion_model_comparison_table():
    with criterion("model comparison: both rows, metrics recomputed to 1e-12"):
        ds = make_corpus(3, 3, 6, seed=31)
        report = compare_models(
            ds, model_seed=1, train_config=TrainConfig(iterations=25, batch_size=8, seed=4)
        )
        assert [row.name for row in report.rows] == ["cnn_1d", "cnn_2d"]
        assert report.metric_names == ("accuracy", "auc", "precision", "sensitivity", "f1")
        for row in report.rows:
            m = metrics_from_scores(
                np.array(row.val_scores), np.array(row.val_labels, dtype=int)
            )
            for stored, fresh in (
                (row.accuracy, m.accuracy),
                (row.auc, m.auc),
                (row.precision, m.precision),
                (row.sensitivity, m.recall),
                (row.f1, m.f1),
            ):
                assert abs(stored - fresh) <= 1e-12
        for name, winner in report.winner_by_metric.items():
            assert name in report.metric_names
            assert winner in ("cnn_1d", "cnn_2d", "tie")


def test_criterion_volume_sensitivity():
    with criterion("sensitivity: envelope peak ordering 5 < 10 < 15 mL, 100/100"):
        ordered = 0
        for case in range(100):
            profile = (
                SubjectProfile.healthy() if case % 2 == 0 else SubjectProfile.dysphagic()
            )
            duration = 4.0 if case % 2 == 0 else 6.0
            peaks = []
            for volume in (5, 10, 15):
                seg = synth_swallow(profile, volume, duration_s=duration, seed=case)
                peaks.append(float(preprocess_pipeline(seg).values.max()))
            if peaks[0] < peaks[1] < peaks[2]:
                ordered += 1
        assert ordered == 100


# ---------------------------------------------------------------------------
# service
# ---------------------------------------------------------------------------

_CRASH_WRITER = r"""
import sys
import numpy as np
from swallowmon.service.store import SessionStore
from swallowmon.signal_model import SignalSegment

store = SessionStore(sys.argv[1])
rng = np.random.default_rng(0)
i = 0
while True:
    seg = SignalSegment(sample_rate_hz=250.0, channels=rng.standard_normal((4, 2000)))
    rec = store.ingest(subject_id=f"C{i % 3}", segment=seg, envelope=np.abs(seg.channels))
    print(rec.session_id, flush=True)
    i += 1
"""


def test_criterion_service(tmp_path):
    with criterion("service: round trip, restart durability, crash consistency"):
        ds = make_corpus(3, 3, 6, seed=41)
        net = Network(ModelConfig(seed=2))
        train(net, ds, TrainConfig(iterations=30, batch_size=8, seed=6))
        ckpt = tmp_path / "model.json"
        save_checkpoint(net, ckpt, training_seed=6)

        data_dir = tmp_path / "data"
        seg = synth_swallow(SubjectProfile.healthy(), 10, seed=77)
        with TestClient(create_app(data_dir, checkpoint_path=ckpt)) as client:
            r = client.post(
                "/sessions",
                json={
                    "subject_id": "P1",
                    "sample_rate_hz": 250.0,
                    "channels": seg.channels.tolist(),
                    "volume_ml": 10,
                },
            )
            assert r.status_code == 201
            sid = r.json()["session_id"]
            scored = client.post(f"/sessions/{sid}/score")
            assert scored.status_code == 200
            hi = scored.json()["health_index"]
            assert 0.0 <= hi <= 1.0
            trend = client.get("/subjects/P1/trend").json()
            assert [p["session_id"] for p in trend["points"]] == [sid]
            assert trend["points"][0]["health_index"] == hi

        with TestClient(create_app(data_dir, checkpoint_path=ckpt)) as client:
            again = client.get(f"/sessions/{sid}").json()
            assert again["health_index"] == hi
            wf = client.get(f"/sessions/{sid}/waveform", params={"points": 2000}).json()
            assert wf["session_id"] == sid

        crash_dir = tmp_path / "crash"
        proc = subprocess.Popen(
            [sys.executable, "-c", _CRASH_WRITER, str(crash_dir)],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        time.sleep(1.5)
        os.kill(proc.pid, signal.SIGKILL)
        out, _ = proc.communicate(timeout=30)
        acked = [line for line in out.strip().split("\n") if line]
        assert len(acked) >= 5
        store = SessionStore(crash_dir)
        listed = {r.session_id for r in store.list_records()}
        for s in acked:
            assert s in listed
            assert store.load_raw(s).channels.shape == (4, 2000)
        for line in (crash_dir / "index.jsonl").read_bytes().split(b"\n")[:-1]:
            if line:
                json.loads(line)
