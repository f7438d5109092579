"""Baseline calibration, short-horizon heart-rate trend and arousal levels.

The classifier compares a trend-predicted bpm against a threshold
derived from the calibrated resting baseline. Transitions toward
Aroused are immediate; transitions back down carry hysteresis so the
level cannot chatter around the threshold.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .biometric import HR_MAX_BPM, HR_MIN_BPM, HeartRateEstimate
from .errors import EmptyInput, NotCalibrated


class ArousalLevel(enum.IntEnum):
    NEUTRAL = 0
    NEAR_THRESHOLD = 1
    AROUSED = 2


@dataclass(frozen=True, slots=True)
class Baseline:
    """Resting heart-rate statistics gathered during calibration."""

    mu_bpm: float
    sigma_bpm: float
    n_samples: int
    calibrated: bool


@dataclass(frozen=True, slots=True)
class ArousalState:
    """Classifier output plus the numbers that produced it."""

    level: ArousalLevel
    predicted_bpm: float
    threshold_bpm: float
    near_band_bpm: float
    at_ms: float


@dataclass(frozen=True, slots=True)
class ArousalConfig:
    k: float = 1.5
    sigma_floor_bpm: float = 2.0
    near_band_bpm: float = 3.0
    hysteresis_bpm: float = 2.0
    trend_window: int = 8
    min_baseline_estimates: int = 5
    calibration_s: float = 30.0


def calibrate_baseline(
    estimates: Sequence[HeartRateEstimate],
    min_estimates: int = 5,
) -> Baseline:
    """Mean and population standard deviation of the calibration bpm values."""
    if not estimates:
        raise EmptyInput("no estimates to calibrate from")
    values = [e.bpm for e in estimates]
    n = len(values)
    mu = sum(values) / n
    var = sum((v - mu) ** 2 for v in values) / n
    return Baseline(
        mu_bpm=mu,
        sigma_bpm=var ** 0.5,
        n_samples=n,
        calibrated=n >= min_estimates,
    )


def fit_hr_trend(
    recent: Sequence[HeartRateEstimate],
    now_ms: float,
) -> tuple[float, float]:
    """Ordinary least squares of bpm against time, evaluated at ``now_ms``.

    Returns (slope in bpm/s, predicted bpm now). A single point or
    coincident timestamps degenerate to slope 0 and the last bpm.
    The prediction is clamped to the plausible bpm range.
    """
    if not recent:
        raise EmptyInput("no estimates to fit")
    times = [e.timestamp_ms / 1000.0 for e in recent]
    values = [e.bpm for e in recent]
    n = len(times)
    t_mean = sum(times) / n
    v_mean = sum(values) / n
    sxx = sum((t - t_mean) ** 2 for t in times)
    if n == 1 or sxx == 0.0:
        slope = 0.0
        predicted = values[-1]
    else:
        sxy = sum((t - t_mean) * (v - v_mean) for t, v in zip(times, values))
        slope = sxy / sxx
        predicted = v_mean + slope * (now_ms / 1000.0 - t_mean)
    predicted = min(max(predicted, HR_MIN_BPM), HR_MAX_BPM)
    return slope, predicted


def arousal_threshold(baseline: Baseline, cfg: ArousalConfig) -> float:
    return baseline.mu_bpm + cfg.k * max(baseline.sigma_bpm, cfg.sigma_floor_bpm)


def _raw_level(p: float, theta: float, delta: float) -> ArousalLevel:
    if p >= theta:
        return ArousalLevel.AROUSED
    if p >= theta - delta:
        return ArousalLevel.NEAR_THRESHOLD
    return ArousalLevel.NEUTRAL


def classify_arousal(
    predicted_bpm: float,
    baseline: Baseline,
    prev: ArousalState | None,
    cfg: ArousalConfig,
    at_ms: float = 0.0,
) -> ArousalState:
    """Classify a predicted bpm against the baseline threshold.

    Upward moves apply immediately. Leaving Aroused requires the
    prediction to fall below threshold - hysteresis; leaving
    NearThreshold for Neutral requires it below
    threshold - near_band - hysteresis. Otherwise the previous level
    is retained.
    """
    if not baseline.calibrated:
        raise NotCalibrated("baseline not calibrated")
    theta = arousal_threshold(baseline, cfg)
    delta = cfg.near_band_bpm
    h = cfg.hysteresis_bpm
    raw = _raw_level(predicted_bpm, theta, delta)

    if prev is None or raw >= prev.level:
        level = raw
    elif prev.level == ArousalLevel.AROUSED:
        level = raw if predicted_bpm < theta - h else prev.level
    else:  # NEAR_THRESHOLD -> NEUTRAL
        level = raw if predicted_bpm < theta - delta - h else prev.level

    return ArousalState(
        level=level,
        predicted_bpm=predicted_bpm,
        threshold_bpm=theta,
        near_band_bpm=delta,
        at_ms=at_ms,
    )
