"""HTTP API over the session store.

Endpoints::

    GET  /healthz                       liveness + store/model summary
    POST /sessions                      ingest a recording (JSON channels or
                                        base64 wire frames)
    GET  /sessions                      newest-first listing, keyset paging
    GET  /sessions/{id}                 one record
    GET  /sessions/{id}/waveform        raw or envelope, min-max downsampled
    POST /sessions/{id}/score           synchronous scoring, persists result
    GET  /subjects/{id}/trend           scored sessions, oldest first
    POST /live/start                    begin a simulated bedside recording
    GET  /live/window                   most recent seconds of the live feed
    POST /live/stop                     finish + ingest exactly one session

Every error body is ``{"code", "message"}``.  Scores are recomputed on
demand from the stored raw signal, so re-scoring is idempotent for a fixed
model checkpoint.
"""

from __future__ import annotations

import base64
import binascii
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from swallowmon.acquisition import AdcConfig, decode_stream, frames_to_segment
from swallowmon.classifier import health_index, load_checkpoint
from swallowmon.classifier.network import model_version
from swallowmon.dsp import preprocess_pipeline
from swallowmon.service.store import SessionRecord, SessionStore
from swallowmon.signal_model import N_CHANNELS, SignalSegment, SubjectProfile, synth_swallow

DEFAULT_MODEL_SAMPLE_RATE_HZ = 250.0
MAX_WAVEFORM_POINTS = 200_000


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class IngestPayload(BaseModel):
    subject_id: str = Field(min_length=1)
    sample_rate_hz: float = 250.0
    channels: list[list[float]] | None = None
    frames_b64: str | None = None
    volume_ml: int | None = None
    recorded_at: str | None = None


class LiveStartPayload(BaseModel):
    subject_id: str = Field(min_length=1)
    profile: str
    volume_ml: int = 10
    seed: int = 0
    duration_s: float = 8.0


class _LiveState:
    def __init__(self, payload: LiveStartPayload, segment: SignalSegment):
        self.payload = payload
        self.segment = segment
        self.started_at_monotonic = time.monotonic()
        self.started_at = _now_iso()

    def elapsed_s(self) -> float:
        return time.monotonic() - self.started_at_monotonic


def _now_iso() -> str:
    from swallowmon.service.store import _utc_now_iso

    return _utc_now_iso()


def _segment_from_payload(payload: IngestPayload) -> tuple[SignalSegment, int]:
    """Build a segment from either JSON channels or base64 wire frames."""
    has_channels = payload.channels is not None
    has_frames = payload.frames_b64 is not None
    if has_channels == has_frames:
        raise ApiError(
            400, "bad_payload", "provide exactly one of 'channels' or 'frames_b64'"
        )
    if has_channels:
        rows = payload.channels
        if len(rows) != N_CHANNELS:
            raise ApiError(
                400, "channel_count", f"expected {N_CHANNELS} channels, got {len(rows)}"
            )
        lengths = {len(r) for r in rows}
        if len(lengths) != 1 or 0 in lengths:
            raise ApiError(400, "bad_payload", "channels must be equal-length and non-empty")
        channels = np.array(rows, dtype=np.float64)
        return SignalSegment(payload.sample_rate_hz, channels), 0
    try:
        wire = base64.b64decode(payload.frames_b64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ApiError(400, "bad_payload", f"frames_b64 is not valid base64: {exc}")
    frames, resyncs = decode_stream(wire)
    if not frames:
        raise ApiError(400, "bad_payload", "no valid frames in wire data")
    cfg = AdcConfig(sample_rate_hz=payload.sample_rate_hz)
    return frames_to_segment(frames, cfg), resyncs


def _record_json(record: SessionRecord) -> dict:
    return record.to_json_dict()


def _minmax_downsample(values: np.ndarray, fs: float, points: int) -> dict:
    """Per-bucket min/max decimation preserving every channel's extremes."""
    n = values.shape[1]
    if n <= points:
        times = (np.arange(n) / fs).tolist()
        return {
            "mode": "samples",
            "times_s": times,
            "channels": values.tolist(),
        }
    buckets = points // 2
    edges = np.linspace(0, n, buckets + 1).astype(int)
    lo = np.empty((values.shape[0], buckets))
    hi = np.empty((values.shape[0], buckets))
    centers = np.empty(buckets)
    for b in range(buckets):
        chunk = values[:, edges[b] : edges[b + 1]]
        lo[:, b] = chunk.min(axis=1)
        hi[:, b] = chunk.max(axis=1)
        centers[b] = 0.5 * (edges[b] + edges[b + 1] - 1) / fs
    return {
        "mode": "minmax",
        "bucket_times_s": centers.tolist(),
        "channels_min": lo.tolist(),
        "channels_max": hi.tolist(),
    }


def create_app(
    data_dir: str | Path,
    checkpoint_path: str | Path | None = None,
    model_sample_rate_hz: float = DEFAULT_MODEL_SAMPLE_RATE_HZ,
) -> FastAPI:
    """Wire up the API around a store directory and optional model checkpoint."""
    store = SessionStore(data_dir)
    net = load_checkpoint(checkpoint_path) if checkpoint_path is not None else None
    net_version = model_version(net) if net is not None else None

    app = FastAPI(title="swallowmon service", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.live = None

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"code": "bad_payload", "message": str(exc.errors())}
        )

    def get_record_or_404(session_id: str) -> SessionRecord:
        try:
            return store.get(session_id)
        except KeyError:
            raise ApiError(404, "not_found", f"no session {session_id!r}")

    def ingest_segment(
        subject_id: str,
        segment: SignalSegment,
        volume_ml: int | None,
        recorded_at: str | None,
        resync_events: int,
    ) -> SessionRecord:
        try:
            envelope = preprocess_pipeline(segment).values
            return store.ingest(
                subject_id=subject_id,
                segment=segment,
                envelope=envelope,
                volume_ml=volume_ml,
                recorded_at=recorded_at,
                resync_events=resync_events,
            )
        except ValueError as exc:
            raise ApiError(400, "bad_payload", str(exc))

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "sessions": len(store.list_records()),
            "model_version": net_version,
        }

    @app.post("/sessions", status_code=201)
    def ingest(payload: IngestPayload):
        segment, resyncs = _segment_from_payload(payload)
        record = ingest_segment(
            payload.subject_id, segment, payload.volume_ml, payload.recorded_at, resyncs
        )
        return _record_json(record)

    @app.get("/sessions")
    def list_sessions(
        subject_id: str | None = None,
        t_from: str | None = Query(default=None, alias="from"),
        t_to: str | None = Query(default=None, alias="to"),
        limit: int = Query(default=50, ge=1, le=500),
        cursor: str | None = None,
    ):
        records = store.list_records(subject_id=subject_id, t_from=t_from, t_to=t_to)
        if cursor is not None:
            if "~" not in cursor:
                raise ApiError(400, "bad_cursor", f"malformed cursor {cursor!r}")
            c_ts, c_id = cursor.split("~", 1)
            records = [
                r for r in records if (r.recorded_at, r.session_id) < (c_ts, c_id)
            ]
        page = records[:limit]
        next_cursor = None
        if len(records) > limit and page:
            last = page[-1]
            next_cursor = f"{last.recorded_at}~{last.session_id}"
        return {"sessions": [_record_json(r) for r in page], "next_cursor": next_cursor}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _record_json(get_record_or_404(session_id))

    @app.get("/sessions/{session_id}/waveform")
    def waveform(
        session_id: str,
        points: int = Query(default=2000),
        kind: str = Query(default="raw"),
    ):
        record = get_record_or_404(session_id)
        if not 2 <= points <= MAX_WAVEFORM_POINTS:
            raise ApiError(
                400, "bad_payload", f"points must be in [2, {MAX_WAVEFORM_POINTS}]"
            )
        if kind == "raw":
            segment = store.load_raw(session_id)
            values, fs = segment.channels, segment.sample_rate_hz
        elif kind == "envelope":
            fs, values = store.load_envelope(session_id)
        else:
            raise ApiError(400, "bad_payload", "kind must be 'raw' or 'envelope'")
        body = _minmax_downsample(values, fs, points)
        body.update(
            session_id=session_id,
            kind=kind,
            sample_rate_hz=fs,
            source_samples=record.n_samples,
        )
        return body

    @app.post("/sessions/{session_id}/score")
    def score(session_id: str):
        get_record_or_404(session_id)
        if net is None:
            raise ApiError(409, "no_model", "service started without a model checkpoint")
        segment = store.load_raw(session_id)
        if segment.sample_rate_hz != model_sample_rate_hz:
            raise ApiError(
                409,
                "incompatible_model",
                f"model expects {model_sample_rate_hz} Hz, "
                f"session recorded at {segment.sample_rate_hz} Hz",
            )
        p = net.forward(net.prepare_segment(segment))
        updated = store.set_score(session_id, health_index(p).value, net_version)
        return _record_json(updated)

    @app.get("/subjects/{subject_id}/trend")
    def trend(subject_id: str):
        if subject_id not in store.subjects():
            raise ApiError(404, "unknown_subject", f"no sessions for {subject_id!r}")
        scored = [
            r
            for r in store.list_records(subject_id=subject_id)
            if r.health_index is not None
        ]
        scored.sort(key=lambda r: (r.recorded_at, r.session_id))
        return {
            "subject_id": subject_id,
            "points": [
                {
                    "session_id": r.session_id,
                    "recorded_at": r.recorded_at,
                    "health_index": r.health_index,
                    "volume_ml": r.volume_ml,
                }
                for r in scored
            ],
        }

    @app.post("/live/start")
    def live_start(payload: LiveStartPayload):
        if app.state.live is not None:
            raise ApiError(409, "live_active", "a live recording is already running")
        profiles = {
            "healthy": SubjectProfile.healthy,
            "dysphagic": SubjectProfile.dysphagic,
        }
        if payload.profile not in profiles:
            raise ApiError(
                400, "bad_payload", f"profile must be one of {sorted(profiles)}"
            )
        try:
            segment = synth_swallow(
                profiles[payload.profile](),
                payload.volume_ml,
                duration_s=payload.duration_s,
                seed=payload.seed,
            )
        except ValueError as exc:
            raise ApiError(400, "bad_payload", str(exc))
        app.state.live = _LiveState(payload, segment)
        return {
            "subject_id": payload.subject_id,
            "profile": payload.profile,
            "volume_ml": payload.volume_ml,
            "duration_s": payload.duration_s,
            "sample_rate_hz": segment.sample_rate_hz,
            "started_at": app.state.live.started_at,
        }

    @app.get("/live/window")
    def live_window(seconds: float = Query(default=2.0, gt=0)):
        live: _LiveState | None = app.state.live
        if live is None:
            raise ApiError(409, "no_live", "no live recording is running")
        fs = live.segment.sample_rate_hz
        total = live.segment.n_samples
        elapsed = live.elapsed_s()
        available = min(int(elapsed * fs), total)
        start = max(0, available - int(round(seconds * fs)))
        window = live.segment.channels[:, start:available]
        return {
            "elapsed_s": elapsed,
            "duration_s": total / fs,
            "done": available >= total,
            "times_s": (np.arange(start, available) / fs).tolist(),
            "channels": window.tolist(),
        }

    @app.post("/live/stop", status_code=201)
    def live_stop():
        live: _LiveState | None = app.state.live
        if live is None:
            raise ApiError(409, "no_live", "no live recording is running")
        record = ingest_segment(
            live.payload.subject_id,
            live.segment,
            live.payload.volume_ml,
            None,
            resync_events=0,
        )
        app.state.live = None
        return _record_json(record)

    return app
