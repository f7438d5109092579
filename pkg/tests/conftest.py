"""Shared helpers: fast configs and seeded random scenario generation."""

from __future__ import annotations

import random

FAST_CONFIG = {
    "arousal": {"calibration_s": 8.0, "min_baseline_estimates": 5},
    "canvas": {"width_mm": 120.0, "height_mm": 96.0, "px_per_mm": 1.0},
}

PROMPTS = [
    "draw a flower",
    "draw a grid",
    "paint a star please",
    "circle",
    "a brown vase",
    "draw a dog",          # rejected by the pattern library
    "good job",            # feedback, also rejected
]


def random_scenario(seed: int, duration_s: int = 22, use_ppg: bool = False) -> dict:
    """A seeded random session: HR profile, prompts, strokes, moves."""
    rng = random.Random(seed)
    cfg = {
        "arousal": dict(FAST_CONFIG["arousal"]),
        "canvas": dict(FAST_CONFIG["canvas"]),
        "seed": seed,
    }
    w, h = cfg["canvas"]["width_mm"], cfg["canvas"]["height_mm"]
    events: list[dict] = []

    # heart rate: calm baseline, then a few random plateaus that may
    # cross the arousal threshold, then usually a return to calm
    if use_ppg:
        t = 0
        base = rng.uniform(62, 75)
        events.append({"t_ms": 0, "kind": "ppg_profile", "bpm": round(base, 1),
                       "duration_s": 10, "noise_std": 0.05, "seed": seed})
        t = 10_000
        while t < duration_s * 1000:
            bpm = round(min(140.0, base + rng.choice([0, 0, 5, 10, 16])), 1)
            seg = rng.choice([3, 4, 5])
            events.append({"t_ms": t, "kind": "ppg_profile", "bpm": bpm,
                           "duration_s": seg, "noise_std": 0.05, "seed": seed})
            t += seg * 1000
    else:
        base = rng.uniform(62, 75)
        bpm = base
        for sec in range(duration_s):
            if sec > 10 and rng.random() < 0.15:
                bpm = base + rng.choice([0.0, 6.0, 12.0, 18.0])
            if sec > 10 and rng.random() < 0.2:
                bpm = base
            events.append({"t_ms": sec * 1000, "kind": "hr", "bpm": round(bpm, 1)})

    extras: list[dict] = []
    for _ in range(rng.randint(1, 3)):
        t = rng.randint(500, duration_s * 1000 - 1000)
        extras.append({"t_ms": t, "kind": "command", "text": rng.choice(PROMPTS)})
    for _ in range(rng.randint(1, 3)):
        t = rng.randint(500, duration_s * 1000 - 1000)
        x0, y0 = rng.uniform(5, w - 25), rng.uniform(5, h - 25)
        pts = [[x0, y0]]
        for _ in range(rng.randint(1, 4)):
            pts.append([
                min(w - 1, max(1, pts[-1][0] + rng.uniform(-15, 15))),
                min(h - 1, max(1, pts[-1][1] + rng.uniform(-15, 15))),
            ])
        if len(pts) < 2:
            pts.append([x0 + 2, y0 + 2])
        extras.append({"t_ms": t, "kind": "artist_stroke", "path": pts,
                       "width_mm": 1.0, "color": [10, 10, 10]})
    if rng.random() < 0.4:
        t = rng.randint(duration_s * 500, duration_s * 1000 - 500)
        if rng.random() < 0.5:
            extras.append({"t_ms": t, "kind": "robot_move", "outside": True})
        else:
            extras.append({"t_ms": t, "kind": "robot_move",
                           "x_mm": rng.uniform(5, w - 5), "y_mm": rng.uniform(5, h - 5)})
    if rng.random() < 0.3:
        t = rng.randint(duration_s * 500, duration_s * 1000 - 500)
        extras.append({"t_ms": t, "kind": "command",
                       "text": rng.choice(["stop", "pause", "resume", "change colors",
                                           "move away", "come back"])})

    events.extend(extras)
    events.sort(key=lambda e: e["t_ms"])
    return {
        "name": f"random-{seed}",
        "config": cfg,
        "duration_ms": duration_s * 1000,
        "events": events,
    }
