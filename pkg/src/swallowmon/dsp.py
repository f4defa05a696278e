"""Preprocessing chain for swallow sEMG: filters, envelope, SNR, STFT.

The high-pass stage is a cascaded-biquad Butterworth designed from the analog
prototype through the bilinear transform with frequency prewarping.  At the
operating point used here (100 Hz cutoff at a 250 Hz rate, i.e. 0.8 of
Nyquist) a naive direct-form transfer function is numerically fragile, which
is why design and application stay in second-order sections throughout.

Filters are applied as direct-form II transposed, one section at a time,
with zero initial state.  All math is float64 and deterministic.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from swallowmon.signal_model import SignalSegment

PIPELINE_STAGES = ("highpass", "rectify", "rms", "notch")


# ---------------------------------------------------------------------------
# filter types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Biquad:
    """One second-order section, normalized so a0 == 1."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def response(self, freqs_hz, sample_rate_hz: float) -> np.ndarray:
        """Complex frequency response at the given frequencies (Hz)."""
        w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=float) / sample_rate_hz
        z1 = np.exp(-1j * w)
        z2 = z1 * z1
        num = self.b0 + self.b1 * z1 + self.b2 * z2
        den = 1.0 + self.a1 * z1 + self.a2 * z2
        return num / den

    def poles(self) -> np.ndarray:
        return np.roots([1.0, self.a1, self.a2])

    def is_stable(self, margin: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0 - margin))


@dataclass(frozen=True)
class FilterCascade:
    """Ordered biquad sections; the response is their product times a gain."""

    sections: tuple[Biquad, ...]
    overall_gain: float

    def response(self, freqs_hz, sample_rate_hz: float) -> np.ndarray:
        out = np.full(np.asarray(freqs_hz, dtype=float).shape, self.overall_gain, dtype=complex)
        for sec in self.sections:
            out = out * sec.response(freqs_hz, sample_rate_hz)
        return out

    def magnitude(self, freqs_hz, sample_rate_hz: float) -> np.ndarray:
        return np.abs(self.response(freqs_hz, sample_rate_hz))

    def is_stable(self, margin: float = 0.0) -> bool:
        return all(sec.is_stable(margin) for sec in self.sections)


# ---------------------------------------------------------------------------
# design
# ---------------------------------------------------------------------------


def design_butterworth_highpass(
    cutoff_hz: float, sample_rate_hz: float, order: int = 8
) -> FilterCascade:
    """Design an even-order Butterworth high-pass as cascaded biquads.

    Route: analog low-pass prototype poles on the unit circle, low-pass to
    high-pass transform at the prewarped cutoff ``tan(pi*fc/fs)``, bilinear
    transform ``s = (1 - z^-1) / (1 + z^-1)``, then conjugate pole pairs are
    grouped into sections ordered by ascending Q (pole radius), which keeps
    intermediate stage gain small.  Every section keeps the double zero at
    z = +1, so the DC gain is exactly zero.
    """
    if order < 2 or order % 2 != 0:
        raise ValueError(f"order must be a positive even integer, got {order}")
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    if not 0.0 < cutoff_hz < sample_rate_hz / 2.0:
        raise ValueError(
            f"cutoff must lie strictly inside (0, fs/2) = (0, {sample_rate_hz / 2}), "
            f"got {cutoff_hz}"
        )

    n = order
    warped = math.tan(math.pi * cutoff_hz / sample_rate_hz)

    # Butterworth low-pass prototype: n poles on the unit circle, left half-plane.
    k = np.arange(1, n + 1)
    p_lp = np.exp(1j * np.pi * (2 * k + n - 1) / (2 * n))
    # low-pass -> high-pass (s -> warped/s): poles move, n zeros appear at s=0
    p_hp = warped / p_lp
    # bilinear transform: z = (1 + s) / (1 - s); the s=0 zeros land on z=+1
    p_z = (1.0 + p_hp) / (1.0 - p_hp)
    gain_c = 1.0 / np.prod(1.0 - p_hp)
    if abs(gain_c.imag) > 1e-9 * abs(gain_c):
        raise AssertionError("cascade gain should be real for conjugate pole sets")
    gain = float(gain_c.real)

    # pair each upper-half-plane pole with its conjugate, lowest radius first
    upper = sorted((p for p in p_z if p.imag > 0), key=abs)
    if 2 * len(upper) != n:
        raise AssertionError("even-order design should yield conjugate pairs only")
    sections = tuple(
        Biquad(b0=1.0, b1=-2.0, b2=1.0, a1=-2.0 * p.real, a2=abs(p) ** 2) for p in upper
    )
    return FilterCascade(sections=sections, overall_gain=gain)


def design_notch(notch_hz: float, q: float, sample_rate_hz: float) -> Biquad:
    """Unity-gain notch biquad with a prescribed -3 dB width of f0/q.

    Gain is exactly 1 at DC and Nyquist; the zero pair sits on the unit
    circle at the notch frequency, so the center gain is numerically zero.
    The bandwidth parameter is prewarped (``beta = tan(delta_w / 2)``), which
    keeps the -3 dB width equal to ``notch_hz / q`` even for notches placed
    close to Nyquist, where the small-angle parametrization falls short.
    """
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    if not 0.0 < notch_hz < sample_rate_hz / 2.0:
        raise ValueError(
            f"notch frequency must lie strictly inside (0, fs/2), got {notch_hz}"
        )
    if q <= 0:
        raise ValueError("q must be positive")
    w0 = 2.0 * math.pi * notch_hz / sample_rate_hz
    half_width = w0 / (2.0 * q)
    if half_width >= math.pi / 2.0:
        raise ValueError(f"q={q} is too small for a notch at {notch_hz} Hz")
    beta = math.tan(half_width)
    cw = math.cos(w0)
    a0 = 1.0 + beta
    return Biquad(
        b0=1.0 / a0,
        b1=-2.0 * cw / a0,
        b2=1.0 / a0,
        a1=-2.0 * cw / a0,
        a2=(1.0 - beta) / a0,
    )


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------


def _sections_and_gain(filt) -> tuple[list[tuple[float, float, float, float, float]], float]:
    if isinstance(filt, Biquad):
        return [(filt.b0, filt.b1, filt.b2, filt.a1, filt.a2)], 1.0
    if isinstance(filt, FilterCascade):
        return (
            [(s.b0, s.b1, s.b2, s.a1, s.a2) for s in filt.sections],
            float(filt.overall_gain),
        )
    raise TypeError(f"expected Biquad or FilterCascade, got {type(filt).__name__}")


def apply_filter(filt, x):
    """Run a filter over a segment or array with zero initial state.

    Accepts a :class:`SignalSegment` (returns a new segment), a 1-D array,
    or a 2-D (rows, samples) array filtered row-wise.  Direct-form II
    transposed per section; the cascade gain multiplies the final output.
    """
    if isinstance(x, SignalSegment):
        return SignalSegment(
            sample_rate_hz=x.sample_rate_hz,
            channels=apply_filter(filt, x.channels),
            t0=x.t0,
        )
    sections, gain = _sections_and_gain(filt)
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise ValueError("expected a 1-D or 2-D array")
    squeeze = arr.ndim == 1
    y = np.atleast_2d(arr).copy()
    rows, n = y.shape
    for (b0, b1, b2, a1, a2) in sections:
        s1 = np.zeros(rows)
        s2 = np.zeros(rows)
        out = np.empty_like(y)
        for i in range(n):
            xn = y[:, i]
            yn = b0 * xn + s1
            s1 = b1 * xn - a1 * yn + s2
            s2 = b2 * xn - a2 * yn
            out[:, i] = yn
        y = out
    y *= gain
    return y[0] if squeeze else y


def rectify(x):
    """Full-wave rectification (absolute value); idempotent."""
    if isinstance(x, SignalSegment):
        return SignalSegment(
            sample_rate_hz=x.sample_rate_hz, channels=np.abs(x.channels), t0=x.t0
        )
    return np.abs(np.asarray(x, dtype=np.float64))


def rms_window_samples(window_ms: float, sample_rate_hz: float) -> int:
    """Convert an RMS window length from milliseconds to samples (rounded)."""
    if window_ms <= 0:
        raise ValueError("window_ms must be positive")
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    w = int(round(window_ms * sample_rate_hz / 1000.0))
    if w < 1:
        raise ValueError(
            f"window of {window_ms} ms is shorter than one sample at {sample_rate_hz} Hz"
        )
    return w


def moving_rms(x, window_samples: int):
    """Causal sliding-window RMS along the last axis.

    The leading edge uses a truncated, growing window (the first output is
    ``|x[0]|``), so the output has the same length as the input.  Window sums
    are recomputed per output sample rather than kept as a running total, so
    there is no accumulated drift to guard against.
    """
    if not isinstance(window_samples, (int, np.integer)) or window_samples < 1:
        raise ValueError(f"window_samples must be a positive integer, got {window_samples}")
    arr = np.asarray(x, dtype=np.float64)
    squeeze = arr.ndim == 1
    y = np.atleast_2d(arr)
    n = y.shape[-1]
    w = int(window_samples)
    x2 = y * y
    out = np.empty_like(y)
    for i in range(min(w - 1, n)):
        out[..., i] = np.sqrt(np.mean(x2[..., : i + 1], axis=-1))
    if n >= w:
        windows = np.lib.stride_tricks.sliding_window_view(x2, w, axis=-1)
        out[..., w - 1 :] = np.sqrt(windows.mean(axis=-1))
    return out[0] if squeeze else out


def snr_db(segment: SignalSegment, active: tuple[int, int], baseline: tuple[int, int]) -> np.ndarray:
    """Per-channel 20*log10(RMS_active / RMS_baseline) over sample ranges.

    Ranges are half-open ``(start, stop)`` sample indices and must be
    non-empty, in-bounds, and non-overlapping; a silent baseline is an error.
    """
    n = segment.n_samples
    for name, (start, stop) in (("active", active), ("baseline", baseline)):
        if not (0 <= start < stop <= n):
            raise ValueError(f"{name} range {start, stop} invalid for {n} samples")
    a0, a1 = active
    b0, b1 = baseline
    if a0 < b1 and b0 < a1:
        raise ValueError("active and baseline ranges overlap")
    rms_a = np.sqrt(np.mean(segment.channels[:, a0:a1] ** 2, axis=-1))
    rms_b = np.sqrt(np.mean(segment.channels[:, b0:b1] ** 2, axis=-1))
    if np.any(rms_b == 0.0):
        raise ValueError("baseline RMS is zero on at least one channel")
    return 20.0 * np.log10(rms_a / rms_b)


# ---------------------------------------------------------------------------
# spectrogram
# ---------------------------------------------------------------------------


@dataclass
class Spectrogram:
    """Magnitude STFT, shape (n_channels, n_frames, window_len // 2 + 1)."""

    magnitudes: np.ndarray
    window_len: int
    hop: int
    sample_rate_hz: float

    def bin_frequencies_hz(self) -> np.ndarray:
        return np.fft.rfftfreq(self.window_len, 1.0 / self.sample_rate_hz)

    def frame_times_s(self) -> np.ndarray:
        n_frames = self.magnitudes.shape[1]
        return (np.arange(n_frames) * self.hop + self.window_len / 2.0) / self.sample_rate_hz


def stft_spectrogram(segment: SignalSegment, window_len: int = 64, hop: int = 32) -> Spectrogram:
    """Hann-windowed magnitude STFT of every channel.

    ``window_len`` must be a power of two no longer than the signal;
    frame count is ``(n - window_len) // hop + 1``.  Magnitudes are raw
    (unnormalized) rfft moduli, so for each windowed frame x_w:
    ``sum(x_w**2) == (|X_0|^2 + 2*sum |X_k|^2 + |X_N/2|^2) / window_len``.
    """
    if window_len < 4 or (window_len & (window_len - 1)) != 0:
        raise ValueError(f"window_len must be a power of two >= 4, got {window_len}")
    if hop < 1:
        raise ValueError("hop must be a positive integer")
    if window_len > segment.n_samples:
        raise ValueError(
            f"window_len {window_len} exceeds segment length {segment.n_samples}"
        )
    w = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(window_len) / window_len))
    frames = np.lib.stride_tricks.sliding_window_view(
        segment.channels, window_len, axis=-1
    )[:, ::hop, :]
    mags = np.abs(np.fft.rfft(frames * w, axis=-1))
    return Spectrogram(
        magnitudes=mags,
        window_len=window_len,
        hop=hop,
        sample_rate_hz=segment.sample_rate_hz,
    )


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PreprocessConfig:
    """Stage parameters and execution order for the envelope pipeline."""

    highpass_cutoff_hz: float = 100.0
    highpass_order: int = 8
    notch_hz: float = 60.0
    notch_q: float = 30.0
    rms_window_ms: float = 200.0
    stage_order: tuple[str, ...] = PIPELINE_STAGES

    def __post_init__(self):
        if sorted(self.stage_order) != sorted(PIPELINE_STAGES):
            raise ValueError(
                f"stage_order must be a permutation of {PIPELINE_STAGES}, "
                f"got {self.stage_order}"
            )
        if self.highpass_cutoff_hz <= 0:
            raise ValueError("highpass_cutoff_hz must be positive")
        if self.highpass_order < 2 or self.highpass_order % 2:
            raise ValueError("highpass_order must be a positive even integer")
        if self.notch_hz <= 0:
            raise ValueError("notch_hz must be positive")
        if self.notch_q <= 0:
            raise ValueError("notch_q must be positive")
        if self.rms_window_ms <= 0:
            raise ValueError("rms_window_ms must be positive")


@dataclass
class FeatureSeries:
    """Envelope output of the pipeline, kept at the input sample rate."""

    sample_rate_hz: float
    values: np.ndarray
    t0: float = 0.0

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


def preprocess_pipeline(
    segment: SignalSegment, config: PreprocessConfig | None = None
) -> FeatureSeries:
    """High-pass, rectify, moving RMS and notch a segment into an envelope.

    Stage order follows ``config.stage_order``.  Output values are clamped
    at zero: running the notch after rectification/RMS can undershoot
    slightly, and the envelope is nonnegative by definition.
    """
    cfg = config if config is not None else PreprocessConfig()
    fs = segment.sample_rate_hz
    x = segment.channels
    for stage in cfg.stage_order:
        if stage == "highpass":
            hp = design_butterworth_highpass(cfg.highpass_cutoff_hz, fs, cfg.highpass_order)
            x = apply_filter(hp, x)
        elif stage == "rectify":
            x = np.abs(x)
        elif stage == "rms":
            x = moving_rms(x, rms_window_samples(cfg.rms_window_ms, fs))
        elif stage == "notch":
            notch = design_notch(cfg.notch_hz, cfg.notch_q, fs)
            x = apply_filter(notch, x)
    x = np.maximum(x, 0.0)
    return FeatureSeries(sample_rate_hz=fs, values=x, t0=segment.t0)


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------


def filter_to_json(filt) -> str:
    """Serialize a Biquad or FilterCascade to a JSON string."""
    sections, gain = _sections_and_gain(filt)
    payload = {
        "kind": "biquad" if isinstance(filt, Biquad) else "cascade",
        "overall_gain": gain,
        "sections": [
            {"b0": b0, "b1": b1, "b2": b2, "a1": a1, "a2": a2}
            for (b0, b1, b2, a1, a2) in sections
        ],
    }
    return json.dumps(payload, indent=2)


def filter_from_json(blob: str):
    data = json.loads(blob)
    sections = tuple(
        Biquad(b0=s["b0"], b1=s["b1"], b2=s["b2"], a1=s["a1"], a2=s["a2"])
        for s in data["sections"]
    )
    if data.get("kind") == "biquad":
        if len(sections) != 1:
            raise ValueError("biquad payload must carry exactly one section")
        return sections[0]
    return FilterCascade(sections=sections, overall_gain=float(data["overall_gain"]))


def _write_csv(path: str | Path, header: str, rows) -> None:
    with Path(path).open("w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{float(v)!r}" for v in row) + "\n")


def save_envelope_csv(env: FeatureSeries, path: str | Path) -> None:
    """Write the envelope as CSV: t_s,ch1..chC with full float precision."""
    n_ch, n = env.values.shape
    header = "t_s," + ",".join(f"ch{i + 1}" for i in range(n_ch))
    t = np.arange(n) / env.sample_rate_hz
    _write_csv(path, header, np.column_stack([t, env.values.T]))


def save_spectrogram_csv(spec: Spectrogram, path: str | Path, channel: int = 0) -> None:
    """Write one channel's magnitude STFT as CSV: t_s,<bin freqs...>."""
    if not 0 <= channel < spec.magnitudes.shape[0]:
        raise ValueError(f"channel {channel} out of range")
    freqs = spec.bin_frequencies_hz()
    header = "t_s," + ",".join(f"{f:.6g}" for f in freqs)
    t = spec.frame_times_s()
    _write_csv(path, header, np.column_stack([t, spec.magnitudes[channel]]))
