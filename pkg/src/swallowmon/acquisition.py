"""ADC emulation, wire protocol, and double-buffered streaming.

Frame layout (13 bytes, little-endian fields)::

    offset  size  field
    0       2     sync marker 0xAA 0x55
    2       2     sequence number, uint16, wraps at 65536
    4       8     4 channel samples, uint16 each, 12-bit right-aligned
    12      1     XOR checksum over the 10 payload bytes (seq + samples)

The decoder never trusts the stream: frames whose checksum or sample range
is wrong are dropped, one resync event is counted, and scanning resumes at
the next sync marker.  Arbitrary byte garbage therefore cannot crash it.

Streaming reproduces a DMA-style double buffer: the producer fills one
buffer while the consumer drains the other; a buffer raises its complete
flag when full and the roles swap.  If the standby buffer is still awaiting
the consumer at swap time, its remaining frames are counted lost (overrun)
and the buffer is reused.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from swallowmon.signal_model import SignalSegment

SYNC = b"\xaa\x55"
FRAME_LEN = 13
PAYLOAD_LEN = 10
SEQ_MOD = 65536


@dataclass(frozen=True)
class AdcConfig:
    """Front-end parameters: bipolar input, offset-binary code mapping."""

    resolution_bits: int = 12
    vref_mv: float = 3300.0
    gain: float = 1.0
    sample_rate_hz: float = 250.0
    n_channels: int = 4

    def __post_init__(self):
        if not 8 <= self.resolution_bits <= 12:
            raise ValueError("resolution_bits must be in [8, 12] for this wire format")
        if self.vref_mv <= 0:
            raise ValueError("vref_mv must be positive")
        if self.gain <= 0:
            raise ValueError("gain must be positive")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")

    @property
    def full_scale(self) -> int:
        return 1 << self.resolution_bits

    @property
    def max_code(self) -> int:
        return self.full_scale - 1


@dataclass(frozen=True)
class SampleFrame:
    """One acquisition instant: sequence number plus one code per channel."""

    seq: int
    raw: tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.seq < SEQ_MOD:
            raise ValueError(f"seq must be in [0, {SEQ_MOD}), got {self.seq}")
        if len(self.raw) != 4:
            raise ValueError(f"expected 4 channel codes, got {len(self.raw)}")
        for x in self.raw:
            if not 0 <= x <= 0x0FFF:
                raise ValueError(f"sample code {x} outside 12-bit range")


# ---------------------------------------------------------------------------
# conversion
# ---------------------------------------------------------------------------


def quantize(segment: SignalSegment, cfg: AdcConfig, start_seq: int = 0) -> list[SampleFrame]:
    """Convert a millivolt segment into ADC frames.

    code = clamp(round(v * gain / vref * 2^bits + 2^(bits-1)), 0, 2^bits - 1);
    the sequence number increments by one per frame and wraps at 65536.
    """
    if segment.n_channels != cfg.n_channels:
        raise ValueError(
            f"segment has {segment.n_channels} channels, config expects {cfg.n_channels}"
        )
    if not 0 <= start_seq < SEQ_MOD:
        raise ValueError(f"start_seq must be in [0, {SEQ_MOD})")
    mid = cfg.full_scale // 2
    x = segment.channels * (cfg.gain / cfg.vref_mv) * cfg.full_scale + mid
    codes = np.clip(np.rint(x), 0, cfg.max_code).astype(np.uint16)
    return [
        SampleFrame(seq=(start_seq + i) % SEQ_MOD, raw=tuple(int(c) for c in codes[:, i]))
        for i in range(codes.shape[1])
    ]


def raw_to_millivolts(code, cfg: AdcConfig):
    """Invert the code mapping: v = (code - 2^(bits-1)) * vref / (2^bits * gain)."""
    arr = np.asarray(code)
    if np.any(arr < 0) or np.any(arr > cfg.max_code):
        raise ValueError(f"code outside [0, {cfg.max_code}]")
    mid = cfg.full_scale // 2
    out = (arr.astype(np.float64) - mid) * cfg.vref_mv / (cfg.full_scale * cfg.gain)
    return float(out) if np.isscalar(code) else out


def frames_to_segment(frames: Iterable[SampleFrame], cfg: AdcConfig) -> SignalSegment:
    """Rebuild a millivolt segment from decoded frames (order preserved)."""
    frames = list(frames)
    if not frames:
        raise ValueError("no frames to convert")
    codes = np.array([f.raw for f in frames], dtype=np.uint16).T
    return SignalSegment(
        sample_rate_hz=cfg.sample_rate_hz,
        channels=raw_to_millivolts(codes, cfg),
    )


# ---------------------------------------------------------------------------
# wire protocol
# ---------------------------------------------------------------------------


def encode_frames(seqs, samples) -> bytes:
    """Encode many frames at once.

    Args:
        seqs: (n,) sequence numbers, each in [0, 65536).
        samples: (n, 4) sample codes, each in [0, 4096).

    Returns:
        The concatenated 13-byte frames.
    """
    seqs = np.asarray(seqs)
    samples = np.asarray(samples)
    if seqs.ndim != 1 or samples.shape != (seqs.shape[0], 4):
        raise ValueError("expected seqs (n,) and samples (n, 4)")
    if seqs.size and (seqs.min() < 0 or seqs.max() >= SEQ_MOD):
        raise ValueError("sequence number outside [0, 65536)")
    if samples.size and (samples.min() < 0 or samples.max() > 0x0FFF):
        raise ValueError("sample code outside 12-bit range")
    n = seqs.shape[0]
    seqs16 = seqs.astype(np.uint16)
    samp16 = samples.astype(np.uint16)
    out = np.empty((n, FRAME_LEN), dtype=np.uint8)
    out[:, 0] = 0xAA
    out[:, 1] = 0x55
    out[:, 2] = seqs16 & 0xFF
    out[:, 3] = seqs16 >> 8
    for c in range(4):
        out[:, 4 + 2 * c] = samp16[:, c] & 0xFF
        out[:, 5 + 2 * c] = samp16[:, c] >> 8
    out[:, 12] = np.bitwise_xor.reduce(out[:, 2:12], axis=1)
    return out.tobytes()


def encode_frame(frame: SampleFrame) -> bytes:
    """Encode a single frame (sync, seq LE, 4 samples LE, XOR checksum)."""
    return encode_frames(np.array([frame.seq]), np.array([frame.raw]))


def decode_frames(data: bytes) -> tuple[np.ndarray, np.ndarray, int]:
    """Scan a byte stream for valid frames.

    Returns ``(seqs, samples, resync_events)`` where seqs is (n,) uint16 and
    samples is (n, 4) uint16.  A candidate frame (sync marker found) that
    fails the checksum or the 12-bit sample range counts one resync event and
    scanning resumes right after its sync marker.  A sync marker too close to
    the end of the stream (truncated frame) is ignored.
    """
    buf = np.frombuffer(data, dtype=np.uint8)
    empty = (np.empty(0, np.uint16), np.empty((0, 4), np.uint16), 0)
    if buf.size < FRAME_LEN:
        return empty
    cand = np.flatnonzero((buf[:-1] == 0xAA) & (buf[1:] == 0x55))
    cand = cand[cand <= buf.size - FRAME_LEN]
    if cand.size == 0:
        return empty
    rows = buf[cand[:, None] + np.arange(FRAME_LEN)[None, :]]
    checksum_ok = np.bitwise_xor.reduce(rows[:, 2:12], axis=1) == rows[:, 12]
    range_ok = np.all(rows[:, 5:12:2] & 0xF0 == 0, axis=1)
    valid = checksum_ok & range_ok

    accepted: list[int] = []
    resync = 0
    pos = 0
    for i in range(cand.size):
        start = int(cand[i])
        if start < pos:
            continue
        if valid[i]:
            accepted.append(i)
            pos = start + FRAME_LEN
        else:
            resync += 1
            pos = start + 2
    if not accepted:
        return empty[0], empty[1], resync
    acc = rows[np.asarray(accepted)]
    seqs = acc[:, 2].astype(np.uint16) | (acc[:, 3].astype(np.uint16) << 8)
    samples = (acc[:, 4:12:2].astype(np.uint16)) | (acc[:, 5:12:2].astype(np.uint16) << 8)
    return seqs, samples, resync


def decode_stream(data: bytes) -> tuple[list[SampleFrame], int]:
    """Like :func:`decode_frames` but returns SampleFrame objects."""
    seqs, samples, resync = decode_frames(data)
    frames = [
        SampleFrame(seq=int(s), raw=tuple(int(x) for x in row))
        for s, row in zip(seqs, samples)
    ]
    return frames, resync


# ---------------------------------------------------------------------------
# frame files
# ---------------------------------------------------------------------------


def write_frame_file(frames: Iterable[SampleFrame], path: str | Path) -> None:
    """Persist frames as a flat binary file of concatenated wire frames."""
    frames = list(frames)
    seqs = np.array([f.seq for f in frames], dtype=np.uint16)
    samples = np.array([f.raw for f in frames], dtype=np.uint16).reshape(len(frames), 4)
    Path(path).write_bytes(encode_frames(seqs, samples))


def read_frame_file(path: str | Path) -> tuple[list[SampleFrame], int]:
    """Read a frame file tolerantly; returns (frames, resync_events)."""
    return decode_stream(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# double-buffered streaming
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StreamReport:
    frames_produced: int
    frames_consumed: int
    frames_lost: int
    overruns: int
    buffer_capacity: int
    consumer_rate: float


def stream_session(
    source: Iterable[SampleFrame],
    sink: Callable[[SampleFrame], None],
    buffer_capacity: int = 64,
    consumer_rate: float = 1.0,
) -> StreamReport:
    """Run a producer/consumer session over a simulated double buffer.

    One simulated tick produces one frame; the consumer then drains whole
    frames from the completed buffer at ``consumer_rate`` frames per tick
    (fractional rates accumulate; idle time while no buffer is complete is
    not banked).  After the source ends, the partial buffer is flushed to
    any consumer that drains at all; a fully stalled consumer loses it.

    Guarantees ``frames_consumed + frames_lost == frames_produced``.
    """
    if buffer_capacity < 1:
        raise ValueError("buffer_capacity must be >= 1")
    if consumer_rate < 0:
        raise ValueError("consumer_rate must be >= 0")

    bufs: list[list[SampleFrame]] = [[], []]
    complete = [False, False]
    pending: deque[int] = deque()  # buffers awaiting drain, completion order
    write_idx = 0
    drain_pos = 0  # consumed prefix of the front pending buffer
    produced = consumed = lost = overruns = 0
    budget = 0.0

    def drain_one():
        nonlocal consumed, drain_pos
        i = pending[0]
        sink(bufs[i][drain_pos])
        consumed += 1
        drain_pos += 1
        if drain_pos == len(bufs[i]):
            bufs[i] = []
            complete[i] = False
            pending.popleft()
            drain_pos = 0

    for frame in source:
        bufs[write_idx].append(frame)
        produced += 1
        if len(bufs[write_idx]) == buffer_capacity:
            complete[write_idx] = True
            pending.append(write_idx)
            other = 1 - write_idx
            if complete[other]:
                # overrun: the standby buffer was never (fully) drained
                overruns += 1
                if pending and pending[0] == other:
                    lost += len(bufs[other]) - drain_pos
                    pending.popleft()
                    drain_pos = 0
                bufs[other] = []
                complete[other] = False
            write_idx = other
        budget += consumer_rate
        if not pending:
            budget = 0.0
        while budget >= 1.0 and pending:
            drain_one()
            budget -= 1.0

    if bufs[write_idx]:
        complete[write_idx] = True
        pending.append(write_idx)
    if consumer_rate > 0:
        while pending:
            drain_one()
    else:
        while pending:
            i = pending.popleft()
            lost += len(bufs[i]) - drain_pos
            drain_pos = 0
            bufs[i] = []
            complete[i] = False

    return StreamReport(
        frames_produced=produced,
        frames_consumed=consumed,
        frames_lost=lost,
        overruns=overruns,
        buffer_capacity=buffer_capacity,
        consumer_rate=consumer_rate,
    )
