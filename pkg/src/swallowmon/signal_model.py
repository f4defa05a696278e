"""Synthetic generator for swallow-related surface-EMG recordings.

A swallow event is modelled as one or more bursts of band-limited stochastic
muscle activity (20-120 Hz) shaped by a raised-cosine envelope.  Bolus volume
enters purely multiplicatively -- the envelope peak scales with
``1 + 0.08 * volume_ml`` -- so larger sips always produce larger envelope
peaks for the same random draw.  Impaired swallows are modelled as several
weaker bursts spread over a longer event, which is what separates the two
classes for the downstream classifier.

All randomness flows through ``numpy.random.default_rng`` seeded by the
caller: the same seed always yields bit-identical float64 output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ALLOWED_VOLUMES_ML = (5, 10, 15)
VOLUME_GAIN_PER_ML = 0.08
BURST_BAND_HZ = (20.0, 120.0)
DEFAULT_CHANNEL_GAINS = (1.0, 0.8, 0.9, 0.7)
N_CHANNELS = 4

# Class defaults: impaired swallows show several weaker bursts over roughly
# twice the healthy event duration (60 % amplitude, 2-5 bursts).
_HEALTHY_AMPLITUDE_MV = 0.5
_HEALTHY_DURATION_S = 1.0
_DYSPHAGIC_AMPLITUDE_RATIO = 0.6
_DYSPHAGIC_DURATION_RATIO = 2.0
_DYSPHAGIC_BURST_RANGE = (2, 5)


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubjectProfile:
    """Generation parameters for one simulated subject.

    ``kind`` is ``"healthy"`` or ``"dysphagic"``.  Healthy subjects produce a
    single burst per event; dysphagic subjects at least two.
    """

    kind: str
    burst_count_range: tuple[int, int]
    burst_amplitude_mv: float
    event_duration_s: float
    per_channel_gain: tuple[float, ...] = DEFAULT_CHANNEL_GAINS

    def __post_init__(self):
        if self.kind not in ("healthy", "dysphagic"):
            raise ValueError(f"unknown subject kind: {self.kind!r}")
        lo, hi = self.burst_count_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad burst_count_range: {self.burst_count_range}")
        if self.kind == "healthy" and (lo, hi) != (1, 1):
            raise ValueError("healthy profiles emit exactly one burst per event")
        if self.kind == "dysphagic" and lo < 2:
            raise ValueError("dysphagic profiles emit at least two bursts per event")
        if self.burst_amplitude_mv < 0:
            raise ValueError("burst_amplitude_mv must be >= 0")
        if self.event_duration_s <= 0:
            raise ValueError("event_duration_s must be positive")
        if len(self.per_channel_gain) != N_CHANNELS:
            raise ValueError(f"expected {N_CHANNELS} channel gains")
        if any(g <= 0 for g in self.per_channel_gain):
            raise ValueError("channel gains must be positive")

    @classmethod
    def healthy(cls) -> "SubjectProfile":
        return cls(
            kind="healthy",
            burst_count_range=(1, 1),
            burst_amplitude_mv=_HEALTHY_AMPLITUDE_MV,
            event_duration_s=_HEALTHY_DURATION_S,
        )

    @classmethod
    def dysphagic(cls) -> "SubjectProfile":
        return cls(
            kind="dysphagic",
            burst_count_range=_DYSPHAGIC_BURST_RANGE,
            burst_amplitude_mv=_HEALTHY_AMPLITUDE_MV * _DYSPHAGIC_AMPLITUDE_RATIO,
            event_duration_s=_HEALTHY_DURATION_S * _DYSPHAGIC_DURATION_RATIO,
        )


@dataclass(frozen=True)
class NoiseConfig:
    """Additive contamination: wideband noise, mains hum, electrode drift."""

    white_noise_rms_mv: float
    powerline_hz: float
    powerline_amplitude_mv: float
    baseline_drift_amplitude_mv: float
    baseline_drift_hz: float

    def __post_init__(self):
        if self.white_noise_rms_mv < 0:
            raise ValueError("white_noise_rms_mv must be >= 0")
        if self.powerline_hz not in (50.0, 60.0, 50, 60):
            raise ValueError("powerline_hz must be 50 or 60")
        if self.powerline_amplitude_mv < 0:
            raise ValueError("powerline_amplitude_mv must be >= 0")
        if self.baseline_drift_amplitude_mv < 0:
            raise ValueError("baseline_drift_amplitude_mv must be >= 0")
        if not 0 < self.baseline_drift_hz < 5.0:
            raise ValueError("baseline_drift_hz must lie in (0, 5)")

    @classmethod
    def zero(cls) -> "NoiseConfig":
        return cls(0.0, 60.0, 0.0, 0.0, 1.0)

    @classmethod
    def typical(cls) -> "NoiseConfig":
        """Moderate bench-top contamination used by the default corpus."""
        return cls(
            white_noise_rms_mv=0.05,
            powerline_hz=60.0,
            powerline_amplitude_mv=0.5,
            baseline_drift_amplitude_mv=2.0,
            baseline_drift_hz=0.8,
        )


@dataclass
class SignalSegment:
    """A multi-channel recording in millivolts, shape (n_channels, n_samples)."""

    sample_rate_hz: float
    channels: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        self.channels = np.asarray(self.channels, dtype=np.float64)
        if self.channels.ndim != 2:
            raise ValueError("channels must be a 2-D (n_channels, n_samples) array")

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def n_samples(self) -> int:
        return self.channels.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


@dataclass(frozen=True)
class CorpusItem:
    segment: SignalSegment
    label: int  # 0 = healthy, 1 = dysphagic
    volume_ml: int
    subject_id: str


@dataclass
class LabeledDataset:
    items: list[CorpusItem]
    split_seed: int

    def subjects(self) -> dict[str, list[CorpusItem]]:
        out: dict[str, list[CorpusItem]] = {}
        for it in self.items:
            out.setdefault(it.subject_id, []).append(it)
        return out


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def _band_limited_noise(rng: np.random.Generator, n: int, fs: float) -> np.ndarray:
    """Unit-RMS noise whose spectrum is confined to the 20-120 Hz EMG band."""
    n_bins = n // 2 + 1
    spec = rng.standard_normal(n_bins) + 1j * rng.standard_normal(n_bins)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    lo, hi = BURST_BAND_HZ
    spec[(freqs < lo) | (freqs > hi)] = 0.0
    x = np.fft.irfft(spec, n=n)
    rms = np.sqrt(np.mean(x**2))
    if rms == 0.0:
        raise ValueError(f"burst of {n} samples at {fs} Hz has no usable band")
    return x / rms


def _raised_cosine(n: int) -> np.ndarray:
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * (k + 1) / (n + 1)))


def synth_swallow(
    profile: SubjectProfile,
    volume_ml: int,
    duration_s: float = 4.0,
    sample_rate_hz: float = 250.0,
    seed: int | np.random.SeedSequence = 0,
) -> SignalSegment:
    """Generate one clean (noise-free) swallow event.

    The random stream is consumed identically for every volume, so for a
    fixed profile and seed the three volumes differ only by the amplitude
    scalar ``profile.burst_amplitude_mv * (1 + 0.08 * volume_ml)``.
    """
    if volume_ml not in ALLOWED_VOLUMES_ML:
        raise ValueError(f"volume_ml must be one of {ALLOWED_VOLUMES_ML}, got {volume_ml}")
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    margin_s = 0.05 * duration_s
    if profile.event_duration_s + 2 * margin_s > duration_s:
        raise ValueError(
            f"event of {profile.event_duration_s} s does not fit into {duration_s} s"
        )

    fs = float(sample_rate_hz)
    n = int(round(duration_s * fs))
    rng = np.random.default_rng(seed)

    lo, hi = profile.burst_count_range
    n_bursts = int(rng.integers(lo, hi + 1))
    event_start_s = margin_s + rng.random() * (duration_s - profile.event_duration_s - 2 * margin_s)
    slot_s = profile.event_duration_s / n_bursts

    channels = np.zeros((N_CHANNELS, n))
    for b in range(n_bursts):
        busy = rng.uniform(0.55, 0.95)
        offset = rng.uniform(0.0, 1.0 - busy)
        peak = rng.uniform(0.8, 1.2)
        start = int(round((event_start_s + (b + offset) * slot_s) * fs))
        length = max(int(round(busy * slot_s * fs)), 4)
        stop = min(start + length, n)
        length = stop - start
        env = peak * _raised_cosine(length)
        for c in range(N_CHANNELS):
            channels[c, start:stop] += env * _band_limited_noise(rng, length, fs)

    # Amplitude applies last so that volume scaling is exactly multiplicative.
    amp = profile.burst_amplitude_mv * (1.0 + VOLUME_GAIN_PER_ML * volume_ml)
    channels *= amp * np.asarray(profile.per_channel_gain)[:, None]
    return SignalSegment(sample_rate_hz=fs, channels=channels)


def add_noise(
    segment: SignalSegment,
    noise: NoiseConfig,
    seed: int | np.random.SeedSequence = 0,
) -> SignalSegment:
    """Return a new segment with contamination added on top of ``segment``.

    White noise is drawn independently per channel; mains hum and baseline
    drift are injected common-mode (the same waveform on every channel), the
    way shared-reference interference couples into a multi-lead front end.
    """
    rng = np.random.default_rng(seed)
    fs = segment.sample_rate_hz
    t = np.arange(segment.n_samples) / fs

    out = segment.channels.copy()
    out += rng.normal(0.0, noise.white_noise_rms_mv, size=out.shape)
    phase_pl = rng.uniform(0.0, 2.0 * np.pi)
    phase_dr = rng.uniform(0.0, 2.0 * np.pi)
    out += noise.powerline_amplitude_mv * np.sin(
        2.0 * np.pi * noise.powerline_hz * t + phase_pl
    )
    out += noise.baseline_drift_amplitude_mv * np.sin(
        2.0 * np.pi * noise.baseline_drift_hz * t + phase_dr
    )
    return SignalSegment(sample_rate_hz=fs, channels=out, t0=segment.t0)


def make_corpus(
    n_healthy: int,
    n_patient: int,
    events_per_subject: int,
    seed: int,
    duration_s: float = 4.0,
    sample_rate_hz: float = 250.0,
    noise: NoiseConfig | None = None,
    volumes: Sequence[int] = ALLOWED_VOLUMES_ML,
) -> LabeledDataset:
    """Simulate a labelled cohort.

    Per-subject profiles are drawn around the class defaults (amplitude and
    event duration jittered +-15 %), bolus volumes round-robin through
    ``volumes`` within each subject, and every event carries subject id,
    label and volume.  Deterministic for a fixed seed.
    """
    if n_healthy < 1 or n_patient < 1:
        raise ValueError("need at least one subject per class")
    if events_per_subject < 1:
        raise ValueError("events_per_subject must be >= 1")
    for v in volumes:
        if v not in ALLOWED_VOLUMES_ML:
            raise ValueError(f"volume {v} not in {ALLOWED_VOLUMES_ML}")
    if noise is None:
        noise = NoiseConfig.typical()

    root = np.random.SeedSequence(seed)
    subject_seeds = root.spawn(n_healthy + n_patient)
    roster = [("healthy", f"H{i + 1:02d}", 0) for i in range(n_healthy)]
    roster += [("dysphagic", f"P{i + 1:02d}", 1) for i in range(n_patient)]

    items: list[CorpusItem] = []
    for (kind, subject_id, label), sseq in zip(roster, subject_seeds):
        rng = np.random.default_rng(sseq)
        base = SubjectProfile.healthy() if kind == "healthy" else SubjectProfile.dysphagic()
        profile = SubjectProfile(
            kind=kind,
            burst_count_range=base.burst_count_range,
            burst_amplitude_mv=base.burst_amplitude_mv * rng.uniform(0.85, 1.15),
            event_duration_s=base.event_duration_s * rng.uniform(0.85, 1.15),
            per_channel_gain=base.per_channel_gain,
        )
        event_seeds = sseq.spawn(2 * events_per_subject)
        for e in range(events_per_subject):
            volume = int(volumes[e % len(volumes)])
            seg = synth_swallow(
                profile,
                volume,
                duration_s=duration_s,
                sample_rate_hz=sample_rate_hz,
                seed=event_seeds[2 * e],
            )
            seg = add_noise(seg, noise, seed=event_seeds[2 * e + 1])
            items.append(
                CorpusItem(segment=seg, label=label, volume_ml=volume, subject_id=subject_id)
            )
    return LabeledDataset(items=items, split_seed=seed)


# ---------------------------------------------------------------------------
# JSON-lines corpus files
# ---------------------------------------------------------------------------


def save_corpus(dataset: LabeledDataset, path: str | Path) -> None:
    """Write one JSON object per event: subject_id, label, volume_ml, fs, channels."""
    path = Path(path)
    with path.open("w") as fh:
        for it in dataset.items:
            rec = {
                "subject_id": it.subject_id,
                "label": int(it.label),
                "volume_ml": int(it.volume_ml),
                "fs": float(it.segment.sample_rate_hz),
                "channels": [list(map(float, ch)) for ch in it.segment.channels],
            }
            fh.write(json.dumps(rec) + "\n")


def load_corpus(path: str | Path) -> LabeledDataset:
    path = Path(path)
    items: list[CorpusItem] = []
    with path.open() as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: not valid JSON: {exc}") from exc
            items.append(_item_from_record(rec, where=f"{path}:{line_no}"))
    return LabeledDataset(items=items, split_seed=0)


def _item_from_record(rec: dict, where: str = "<record>") -> CorpusItem:
    for key in ("subject_id", "label", "volume_ml", "fs", "channels"):
        if key not in rec:
            raise ValueError(f"{where}: missing field {key!r}")
    if rec["label"] not in (0, 1):
        raise ValueError(f"{where}: label must be 0 or 1")
    if rec["volume_ml"] not in ALLOWED_VOLUMES_ML:
        raise ValueError(f"{where}: volume_ml must be one of {ALLOWED_VOLUMES_ML}")
    channels = rec["channels"]
    if len(channels) != N_CHANNELS:
        raise ValueError(f"{where}: expected {N_CHANNELS} channels, got {len(channels)}")
    lengths = {len(ch) for ch in channels}
    if len(lengths) != 1:
        raise ValueError(f"{where}: channels have unequal lengths {sorted(lengths)}")
    seg = SignalSegment(
        sample_rate_hz=float(rec["fs"]),
        channels=np.asarray(channels, dtype=np.float64),
    )
    return CorpusItem(
        segment=seg,
        label=int(rec["label"]),
        volume_ml=int(rec["volume_ml"]),
        subject_id=str(rec["subject_id"]),
    )
