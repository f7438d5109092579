"""Sensor wire protocol, PPG heart-rate estimation and synthetic signals.

The wire format is one ASCII line per sample: ``TAG,timestamp_ms,value``.
Two tags exist: ``PG`` carries the raw photoplethysmogram green channel,
``HR`` carries a device-precomputed heart rate in bpm.
"""

from __future__ import annotations

import math
from bisect import insort
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    BadProfile,
    BadSampleRate,
    InsufficientData,
    MalformedLine,
    NonFinite,
    SampleRangeError,
    UnknownTag,
    WindowTooShort,
)

TAG_PPG = "PG"
TAG_HR = "HR"
KNOWN_TAGS = (TAG_PPG, TAG_HR)

HR_MIN_BPM = 20.0
HR_MAX_BPM = 250.0

MIN_SAMPLE_RATE_HZ = 10.0


@dataclass(frozen=True, slots=True)
class BiometricSample:
    """One timestamped sensor reading from the wire."""

    tag: str
    timestamp_ms: float
    value: float


@dataclass(frozen=True, slots=True)
class HeartRateEstimate:
    """A heart-rate figure derived from a sample window (or passed through)."""

    timestamp_ms: float
    bpm: float
    confidence: float
    n_peaks: int
    window_s: float


@dataclass(frozen=True, slots=True)
class EstimatorConfig:
    """Tunables for the peak-counting heart-rate estimator.

    The detrender subtracts a 1 s centered moving average; a short
    second average (``smooth_s``) suppresses sample-scale noise spurs
    before peak picking. Peaks are local maxima of the detrended
    signal above ``peak_fraction`` times its ``peak_percentile``-th
    percentile, at least ``refractory_s`` apart. Both averages are
    linear, so estimates are invariant to uniform amplitude scaling.
    """

    window_s: float = 10.0
    detrend_s: float = 1.0
    smooth_s: float = 0.16
    refractory_s: float = 0.33
    peak_fraction: float = 0.5
    peak_percentile: float = 90.0
    min_peaks: int = 4


def _fmt_number(x: float) -> str:
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def format_sensor_line(sample: BiometricSample) -> str:
    """Render a sample back into its wire line (inverse of parse)."""
    return f"{sample.tag},{_fmt_number(sample.timestamp_ms)},{_fmt_number(sample.value)}"


def parse_sensor_line(line: Union[bytes, str]) -> BiometricSample:
    """Decode one wire line into a sample.

    Raises MalformedLine, UnknownTag, NonFinite or SampleRangeError.
    """
    if isinstance(line, bytes):
        try:
            line = line.decode("ascii")
        except UnicodeDecodeError as exc:
            raise MalformedLine(f"non-ASCII payload: {exc}") from None
    text = line.strip()
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise MalformedLine(f"expected 3 fields, got {len(parts)}: {text!r}")
    tag, ts_raw, value_raw = parts
    if tag not in KNOWN_TAGS:
        raise UnknownTag(f"unknown tag {tag!r}")
    try:
        timestamp_ms = float(ts_raw)
        value = float(value_raw)
    except ValueError:
        raise MalformedLine(f"non-numeric field in {text!r}") from None
    if not math.isfinite(timestamp_ms) or timestamp_ms < 0:
        raise MalformedLine(f"bad timestamp {ts_raw!r}")
    if not math.isfinite(value):
        raise NonFinite(f"non-finite value in {text!r}")
    if tag == TAG_HR and not (HR_MIN_BPM < value < HR_MAX_BPM):
        raise SampleRangeError(f"HR {value} outside ({HR_MIN_BPM}, {HR_MAX_BPM})")
    return BiometricSample(tag=tag, timestamp_ms=timestamp_ms, value=value)


# -- synthetic PPG ------------------------------------------------------------

ProfileSegment = tuple[float, float]  # (bpm, duration_s)
Profile = Union[float, Sequence[ProfileSegment]]


def _normalize_profile(profile: Profile) -> list[ProfileSegment]:
    if isinstance(profile, (int, float)):
        segments = [(float(profile), math.inf)]
    else:
        segments = [(float(b), float(d)) for b, d in profile]
    if not segments:
        raise BadProfile("empty bpm profile")
    for bpm, dur in segments:
        if not (HR_MIN_BPM < bpm < HR_MAX_BPM):
            raise BadProfile(f"bpm {bpm} outside ({HR_MIN_BPM}, {HR_MAX_BPM})")
        if dur < 0:
            raise BadProfile(f"negative segment duration {dur}")
    return segments


def synth_ppg(
    bpm_profile: Profile,
    fs: float,
    noise_std: float,
    seed: int,
    duration_s: float,
) -> list[BiometricSample]:
    """Generate a deterministic synthetic PPG stream.

    The clean signal is a unit-amplitude raised cosine pulse train,
    one pulse per beat at the instantaneous rate, plus seeded Gaussian
    noise. Timestamps are exactly 1000/fs ms apart starting at 0.
    The last profile segment extends to cover any remaining duration.
    """
    if fs < MIN_SAMPLE_RATE_HZ:
        raise BadSampleRate(f"fs {fs} < {MIN_SAMPLE_RATE_HZ}")
    segments = _normalize_profile(bpm_profile)
    n = int(round(duration_s * fs))
    if n <= 0:
        return []

    dt = 1.0 / fs
    freqs = np.empty(n)
    seg_idx = 0
    seg_end = segments[0][1]
    for i in range(n):
        t = i * dt
        while seg_idx < len(segments) - 1 and t >= seg_end:
            seg_idx += 1
            seg_end += segments[seg_idx][1]
        freqs[i] = segments[seg_idx][0] / 60.0

    # phase integrates the instantaneous frequency; a pulse peaks once per beat
    phase = np.concatenate(([0.0], np.cumsum(freqs[:-1] * dt)))
    clean = 0.5 - 0.5 * np.cos(2.0 * math.pi * phase)
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        clean = clean + rng.normal(0.0, noise_std, size=n)

    step_ms = 1000.0 / fs
    return [
        BiometricSample(tag=TAG_PPG, timestamp_ms=i * step_ms, value=float(clean[i]))
        for i in range(n)
    ]


# -- heart-rate estimation ----------------------------------------------------

def _centered_moving_average(values: np.ndarray, half: int) -> np.ndarray:
    """Mean over [i-half, i+half], truncated at the edges."""
    n = len(values)
    csum = np.concatenate(([0.0], np.cumsum(values)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half, n - 1)
    return (csum[hi + 1] - csum[lo]) / (hi - lo + 1)


def _local_maxima(values: np.ndarray) -> np.ndarray:
    """Indexes strictly above their left neighbor and not below their
    right one, so the earliest sample of a flat top wins."""
    left = values[1:-1] > values[:-2]
    right = values[1:-1] >= values[2:]
    return np.nonzero(left & right)[0] + 1


def _enforce_refractory(
    candidates: np.ndarray, values: np.ndarray, times_s: np.ndarray, refractory_s: float
) -> list[float]:
    """Greedy acceptance by descending amplitude: the tallest maximum
    claims its refractory window, which suppresses noise spurs on pulse
    shoulders without shadowing genuine fast beats."""
    order = sorted(range(len(candidates)), key=lambda k: (-values[candidates[k]], candidates[k]))
    accepted: list[float] = []
    for k in order:
        t = float(times_s[candidates[k]])
        if all(abs(t - a) >= refractory_s for a in accepted):
            accepted.append(t)
    accepted.sort()
    return accepted


def estimate_heart_rate(
    window: Sequence[BiometricSample],
    sample_rate_hz: float,
    cfg: EstimatorConfig | None = None,
) -> HeartRateEstimate:
    """Estimate bpm from a time-ordered PPG window by counting pulse peaks.

    bpm = 60 * (n_peaks - 1) / (t_last_peak - t_first_peak).
    Confidence is min(1, n/10) scaled down by the coefficient of
    variation of the inter-peak intervals. The peak threshold is
    percentile-relative, so the result is invariant to uniform
    amplitude scaling of the window.
    """
    cfg = cfg or EstimatorConfig()
    if sample_rate_hz < MIN_SAMPLE_RATE_HZ:
        raise BadSampleRate(f"sample rate {sample_rate_hz} < {MIN_SAMPLE_RATE_HZ}")
    if len(window) < 2:
        raise WindowTooShort("fewer than 2 samples")
    times_s = np.array([s.timestamp_ms for s in window]) / 1000.0
    span = times_s[-1] - times_s[0]
    # each sample covers one period, so n samples at fs span n/fs seconds
    coverage = span + 1.0 / sample_rate_hz
    if coverage + 1e-9 < cfg.window_s:
        raise WindowTooShort(f"window covers {coverage:.3f}s < {cfg.window_s}s")

    values = np.array([s.value for s in window], dtype=float)
    half = max(1, int(round(0.5 * cfg.detrend_s * sample_rate_hz)))
    detrended = values - _centered_moving_average(values, half)
    smooth_half = int(round(0.5 * cfg.smooth_s * sample_rate_hz))
    if smooth_half > 0:
        detrended = _centered_moving_average(detrended, smooth_half)

    threshold = cfg.peak_fraction * float(np.percentile(detrended, cfg.peak_percentile))
    maxima = _local_maxima(detrended)
    maxima = maxima[detrended[maxima] > threshold]
    peak_times = _enforce_refractory(maxima, detrended, times_s, cfg.refractory_s)

    n_peaks = len(peak_times)
    if n_peaks < cfg.min_peaks:
        raise InsufficientData(f"{n_peaks} peaks < {cfg.min_peaks}")

    beat_span = peak_times[-1] - peak_times[0]
    bpm = 60.0 * (n_peaks - 1) / beat_span
    if not (HR_MIN_BPM < bpm < HR_MAX_BPM):
        raise SampleRangeError(f"estimated bpm {bpm:.1f} outside plausible range")

    intervals = np.diff(peak_times)
    mean_iv = float(np.mean(intervals))
    cv = float(np.std(intervals) / mean_iv) if mean_iv > 0 else 1.0
    confidence = min(1.0, n_peaks / 10.0) * max(0.0, 1.0 - cv)
    return HeartRateEstimate(
        timestamp_ms=float(window[-1].timestamp_ms),
        bpm=float(bpm),
        confidence=float(confidence),
        n_peaks=n_peaks,
        window_s=float(span),
    )


# -- arrival buffering ---------------------------------------------------------

@dataclass
class SampleBuffer:
    """Time-sorted per-tag sample buffer tolerant of UDP reordering.

    Samples are insertion-sorted by timestamp. Exact-duplicate
    timestamps and samples older than the eviction horizon are dropped
    and counted, so shuffled arrival inside the retention span yields
    the same buffer contents as in-order arrival.
    """

    retention_s: float = 20.0
    _times: list[float] = field(default_factory=list)
    _samples: list[BiometricSample] = field(default_factory=list)
    _seen: set[float] = field(default_factory=set)
    _horizon_ms: float = -math.inf
    dropped_duplicate: int = 0
    dropped_late: int = 0

    def add(self, sample: BiometricSample) -> bool:
        """Insert a sample; returns False when it was dropped."""
        ts = sample.timestamp_ms
        if ts <= self._horizon_ms:
            self.dropped_late += 1
            return False
        if ts in self._seen:
            self.dropped_duplicate += 1
            return False
        if not self._times or ts >= self._times[-1]:
            self._times.append(ts)
            self._samples.append(sample)
        else:
            insort(self._times, ts)
            self._samples.insert(self._times.index(ts), sample)
        self._seen.add(ts)
        self._evict()
        return True

    def _evict(self) -> None:
        limit = self._times[-1] - self.retention_s * 1000.0
        while self._times and self._times[0] < limit:
            self._horizon_ms = max(self._horizon_ms, self._times[0])
            self._seen.discard(self._times[0])
            self._times.pop(0)
            self._samples.pop(0)

    def window(self, span_s: float) -> list[BiometricSample]:
        """Samples within span_s of the newest one, oldest first."""
        if not self._times:
            return []
        cut = self._times[-1] - span_s * 1000.0
        i = 0
        while self._times[i] < cut:
            i += 1
        return self._samples[i:]

    def span_s(self) -> float:
        if len(self._times) < 2:
            return 0.0
        return (self._times[-1] - self._times[0]) / 1000.0

    @property
    def newest_ms(self) -> float | None:
        return self._times[-1] if self._times else None

    def __len__(self) -> int:
        return len(self._samples)
