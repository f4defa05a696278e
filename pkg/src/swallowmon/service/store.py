"""Durable session storage.

Layout on disk::

    data_dir/
        index.jsonl          append-only metadata log, one JSON object per line
        blobs/<id>.bin       raw multichannel recording
        blobs/<id>_env.bin   envelope computed at ingest time

Each blob is a single JSON header line (dtype, shape, sample rate, origin
time) followed by the raw C-order float64 bytes.  Writes happen in a fixed
order — blob bytes are flushed and fsynced before the index line that
references them is appended and fsynced — so a crash at any point leaves
either a complete record or an orphan blob that the loader never surfaces.

The index is replayed on open and folded last-wins by session id.  A final
line cut short by a crash fails to parse and is skipped; every earlier line
is terminated by the newline of its successor and therefore complete.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import asdict, dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from swallowmon.signal_model import SignalSegment

ALLOWED_VOLUMES_ML = (5, 10, 15)

_HEADER_DTYPE = "<f8"


def _utc_now_iso() -> str:
    return (
        datetime.now(timezone.utc)
        .isoformat(timespec="milliseconds")
        .replace("+00:00", "Z")
    )


def _validate_timestamp(value: str) -> str:
    try:
        datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ValueError(f"not an ISO-8601 timestamp: {value!r}") from exc
    return value


@dataclass(frozen=True)
class SessionRecord:
    """Metadata for one stored recording session."""

    session_id: str
    subject_id: str
    recorded_at: str
    sample_rate_hz: float
    n_channels: int
    n_samples: int
    volume_ml: int | None = None
    health_index: float | None = None
    model_version: str | None = None
    resync_events: int = 0

    def to_json_dict(self) -> dict:
        return asdict(self)


class SessionStore:
    """Append-only session store with atomic-per-record crash semantics."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.blob_dir = self.data_dir / "blobs"
        self.index_path = self.data_dir / "index.jsonl"
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._counter = 0
        self._records: dict[str, SessionRecord] = {}
        self._needs_newline = False
        self._replay_index()

    # ------------------------------------------------------------------
    # index replay

    def _replay_index(self) -> None:
        if not self.index_path.exists():
            return
        raw = self.index_path.read_bytes()
        # A file that does not end in a newline was torn mid-append; start the
        # next append on a fresh line so the fragment stays isolated.
        self._needs_newline = bool(raw) and not raw.endswith(b"\n")
        lines = raw.split(b"\n")
        # Unparseable lines are torn fragments — either the final line of
        # this generation, or a fragment from an earlier crash that recovery
        # isolated on its own line.  Complete records always parse.
        for line in lines:
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                continue
            self._fold(entry)

    def _fold(self, entry: dict) -> None:
        sid = entry["session_id"]
        if entry.get("op") == "score":
            existing = self._records.get(sid)
            if existing is not None:
                self._records[sid] = replace(
                    existing,
                    health_index=entry["health_index"],
                    model_version=entry["model_version"],
                )
            return
        entry = {k: v for k, v in entry.items() if k != "op"}
        self._records[sid] = SessionRecord(**entry)

    # ------------------------------------------------------------------
    # writes

    def _new_session_id(self) -> str:
        ms = int(time.time() * 1000)
        self._counter = (self._counter + 1) % 10_000
        return f"s{ms:013d}{self._counter:04d}{secrets.token_hex(2)}"

    def _append_index(self, entry: dict) -> None:
        line = json.dumps(entry, separators=(",", ":")) + "\n"
        if self._needs_newline:
            line = "\n" + line
            self._needs_newline = False
        with open(self.index_path, "a", encoding="utf-8") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())

    def _write_blob(
        self, path: Path, values: np.ndarray, sample_rate_hz: float, t0: str
    ) -> None:
        data = np.ascontiguousarray(values, dtype=np.float64)
        header = json.dumps(
            {
                "dtype": _HEADER_DTYPE,
                "shape": list(data.shape),
                "sample_rate_hz": sample_rate_hz,
                "t0": t0,
            },
            separators=(",", ":"),
        )
        with open(path, "wb") as fh:
            fh.write(header.encode("utf-8") + b"\n")
            fh.write(data.tobytes())
            fh.flush()
            os.fsync(fh.fileno())

    def _read_blob(self, path: Path) -> tuple[dict, np.ndarray]:
        with open(path, "rb") as fh:
            header_line = fh.readline()
            header = json.loads(header_line)
            payload = fh.read()
        shape = tuple(header["shape"])
        expected = int(np.prod(shape)) * 8
        if len(payload) != expected:
            raise ValueError(f"blob {path.name} truncated: {len(payload)}/{expected} bytes")
        values = np.frombuffer(payload, dtype=header["dtype"]).reshape(shape)
        return header, values.copy()

    def ingest(
        self,
        subject_id: str,
        segment: SignalSegment,
        envelope: np.ndarray,
        volume_ml: int | None = None,
        recorded_at: str | None = None,
        resync_events: int = 0,
    ) -> SessionRecord:
        """Persist a recording and its envelope; returns the stored record.

        The record is durable once this returns: both blobs and the index
        line that references them have been fsynced.
        """
        if not subject_id:
            raise ValueError("subject_id must be non-empty")
        if volume_ml is not None and volume_ml not in ALLOWED_VOLUMES_ML:
            raise ValueError(
                f"volume_ml must be one of {ALLOWED_VOLUMES_ML}, got {volume_ml}"
            )
        envelope = np.asarray(envelope, dtype=np.float64)
        if envelope.shape != segment.channels.shape:
            raise ValueError(
                f"envelope shape {envelope.shape} != signal shape {segment.channels.shape}"
            )
        ts = _utc_now_iso() if recorded_at is None else _validate_timestamp(recorded_at)

        with self._lock:
            sid = self._new_session_id()
            self._write_blob(
                self.blob_dir / f"{sid}.bin", segment.channels, segment.sample_rate_hz, ts
            )
            self._write_blob(
                self.blob_dir / f"{sid}_env.bin", envelope, segment.sample_rate_hz, ts
            )
            record = SessionRecord(
                session_id=sid,
                subject_id=subject_id,
                recorded_at=ts,
                sample_rate_hz=segment.sample_rate_hz,
                n_channels=segment.channels.shape[0],
                n_samples=segment.channels.shape[1],
                volume_ml=volume_ml,
                resync_events=resync_events,
            )
            self._append_index(record.to_json_dict())
            self._records[sid] = record
        return record

    def set_score(
        self, session_id: str, health_index: float, model_version: str
    ) -> SessionRecord:
        """Attach a score to an existing session (last write wins)."""
        if not (0.0 <= health_index <= 1.0):
            raise ValueError(f"health_index must be within [0, 1], got {health_index}")
        if not model_version:
            raise ValueError("model_version must be non-empty")
        with self._lock:
            existing = self._records.get(session_id)
            if existing is None:
                raise KeyError(session_id)
            self._append_index(
                {
                    "op": "score",
                    "session_id": session_id,
                    "health_index": float(health_index),
                    "model_version": model_version,
                }
            )
            updated = replace(
                existing, health_index=float(health_index), model_version=model_version
            )
            self._records[session_id] = updated
        return updated

    # ------------------------------------------------------------------
    # reads

    def get(self, session_id: str) -> SessionRecord:
        record = self._records.get(session_id)
        if record is None:
            raise KeyError(session_id)
        return record

    def subjects(self) -> set[str]:
        return {r.subject_id for r in self._records.values()}

    def list_records(
        self,
        subject_id: str | None = None,
        t_from: str | None = None,
        t_to: str | None = None,
    ) -> list[SessionRecord]:
        """All matching records, newest first (recorded_at desc, id desc)."""
        out = []
        for record in self._records.values():
            if subject_id is not None and record.subject_id != subject_id:
                continue
            if t_from is not None and record.recorded_at < t_from:
                continue
            if t_to is not None and record.recorded_at > t_to:
                continue
            out.append(record)
        out.sort(key=lambda r: (r.recorded_at, r.session_id), reverse=True)
        return out

    def load_raw(self, session_id: str) -> SignalSegment:
        self.get(session_id)
        header, values = self._read_blob(self.blob_dir / f"{session_id}.bin")
        return SignalSegment(sample_rate_hz=header["sample_rate_hz"], channels=values)

    def load_envelope(self, session_id: str) -> tuple[float, np.ndarray]:
        self.get(session_id)
        header, values = self._read_blob(self.blob_dir / f"{session_id}_env.bin")
        return header["sample_rate_hz"], values
