"""Synthetic pose-clip generator with exact ground truth.

Clips are animated by a control parameter u that ramps 0 -> 1 into the
exercise hold, sits at 1 (duration jittered per rep), and ramps back to 0,
with resting spans before, between, and after reps. Joint positions come
from a small forward-kinematics body model, so hold-phase angles hit the
exercise tables exactly and mistake classes shift their designated angles
by exactly the configured delta. Everything is deterministic per seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .exercises import SEGMENT_KEYS, ExerciseDef, get_exercise
from .skeleton import COCO17, ClipSequence, KeypointFrame, joint_angle

# Body proportions in normalized image units.
TORSO_LEN = 0.22
HEAD_LEN = 0.10
HIP_HALF = 0.035
SHOULDER_HALF = 0.055
UPPER_ARM_LEN = 0.13
FOREARM_LEN = 0.12
THIGH_LEN = 0.17
SHANK_LEN = 0.16

HOLD_JITTER = 0.2  # +/- fraction applied to hold_ms per rep


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for one synthesized clip."""

    exercise: str
    class_index: int
    reps: int
    hold_ms: float = 2000.0
    noise_sigma: float = 0.0
    seed: int = 0
    fps: float = 30.0
    entry_ms: float = 700.0
    exit_ms: float = 700.0
    rest_ms: float = 900.0
    lead_ms: float = 1000.0

    def __post_init__(self) -> None:
        if not 0 <= self.class_index < 3:
            raise ValueError("class_index must be 0, 1, or 2")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.hold_ms <= 0 or self.entry_ms <= 0 or self.exit_ms <= 0:
            raise ValueError("phase durations must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.fps <= 0:
            raise ValueError("fps must be positive")


@dataclass(frozen=True)
class SynthRep:
    """Ground-truth frame indices for one repetition (all inclusive)."""

    start: int
    end: int
    peak: int
    hold_start: int
    hold_end: int


@dataclass(frozen=True)
class SynthResult:
    clip: ClipSequence
    reps: tuple[SynthRep, ...]
    label: str
    class_index: int
    spec: SynthSpec

    @property
    def rep_clips(self) -> tuple[ClipSequence, ...]:
        return tuple(self.clip.slice(r.start, r.end) for r in self.reps)


def smoothstep(x: np.ndarray | float) -> np.ndarray | float:
    """Cubic ease 3x^2 - 2x^3, clamped to [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _dir(deg: np.ndarray) -> np.ndarray:
    rad = np.radians(deg)
    return np.stack([np.cos(rad), np.sin(rad)], axis=-1)


def _fk(pelvis: np.ndarray, ori: dict[str, np.ndarray]) -> np.ndarray:
    """Joint positions (n, 17, 2) from pelvis anchors and orientations.

    ``pelvis`` has shape (n, 2); each orientation is an (n,) array of
    degrees. Joint order follows the coco17 profile.
    """
    d = {k: _dir(v) for k, v in ori.items()}
    perp = _dir(np.asarray(ori["torso"]) + 90.0)
    n = pelvis.shape[0]

    neck = pelvis + TORSO_LEN * d["torso"]
    nose = neck + 0.8 * HEAD_LEN * d["torso"]
    ear_base = neck + 0.55 * HEAD_LEN * d["torso"]

    pts = np.empty((n, 17, 2), dtype=np.float64)
    pts[:, 0] = nose
    pts[:, 1] = nose + 0.012 * d["torso"] + 0.018 * perp
    pts[:, 2] = nose + 0.012 * d["torso"] - 0.018 * perp
    pts[:, 3] = ear_base + 0.042 * perp
    pts[:, 4] = ear_base - 0.042 * perp
    pts[:, 5] = neck + SHOULDER_HALF * perp
    pts[:, 6] = neck - SHOULDER_HALF * perp
    pts[:, 7] = pts[:, 5] + UPPER_ARM_LEN * d["l_upper_arm"]
    pts[:, 8] = pts[:, 6] + UPPER_ARM_LEN * d["r_upper_arm"]
    pts[:, 9] = pts[:, 7] + FOREARM_LEN * d["l_forearm"]
    pts[:, 10] = pts[:, 8] + FOREARM_LEN * d["r_forearm"]
    pts[:, 11] = pelvis + HIP_HALF * perp
    pts[:, 12] = pelvis - HIP_HALF * perp
    pts[:, 13] = pts[:, 11] + THIGH_LEN * d["l_thigh"]
    pts[:, 14] = pts[:, 12] + THIGH_LEN * d["r_thigh"]
    pts[:, 15] = pts[:, 13] + SHANK_LEN * d["l_shank"]
    pts[:, 16] = pts[:, 14] + SHANK_LEN * d["r_shank"]
    return pts


def hold_pose(exercise: str, class_index: int = 0) -> KeypointFrame:
    """The exact hold-phase pose (u = 1) for one exercise class."""
    ex = get_exercise(exercise)
    deltas = ex.class_deltas(class_index)
    ori = {
        k: np.array([ex.hold.orientations[k] + deltas.get(k, 0.0)]) for k in SEGMENT_KEYS
    }
    pts = _fk(np.array([ex.hold.pelvis], dtype=np.float64), ori)
    return KeypointFrame(0.0, pts[0], np.ones(17))


def hold_targets(exercise: str, class_index: int = 0) -> dict[str, float]:
    """Hold-phase angle (degrees) for every coco17 triplet of one class."""
    frame = hold_pose(exercise, class_index)
    return {t.label: joint_angle(frame, t) for t in COCO17.angle_triplets}


def synthesize(spec: SynthSpec) -> SynthResult:
    """Generate one clip plus its ground-truth repetition segments.

    Rep boundaries in the ground truth are the resting frames adjacent to
    the motion: ``start`` is the last frame before the entry ramp begins
    and ``end`` the first frame after the exit ramp settles.
    """
    ex = get_exercise(spec.exercise)
    rng = np.random.default_rng(spec.seed)
    hold_spans = spec.hold_ms * (1.0 + rng.uniform(-HOLD_JITTER, HOLD_JITTER, spec.reps))

    events = []  # (entry_start, hold_start, exit_start, exit_end) in ms
    t = spec.lead_ms
    for span in hold_spans:
        entry_start = t
        hold_start = entry_start + spec.entry_ms
        exit_start = hold_start + span
        exit_end = exit_start + spec.exit_ms
        events.append((entry_start, hold_start, exit_start, exit_end))
        t = exit_end + spec.rest_ms
    total_ms = events[-1][3] + spec.lead_ms

    period = 1000.0 / spec.fps
    n = int(np.floor(total_ms / period)) + 1
    times = np.arange(n, dtype=np.float64) * period

    u = np.zeros(n, dtype=np.float64)
    for a, b, c, e in events:
        rising = (times >= a) & (times < b)
        u[rising] = smoothstep((times[rising] - a) / spec.entry_ms)
        u[(times >= b) & (times < c)] = 1.0
        falling = (times >= c) & (times < e)
        u[falling] = smoothstep(1.0 - (times[falling] - c) / spec.exit_ms)

    deltas = ex.class_deltas(spec.class_index)
    ori = {}
    for key in SEGMENT_KEYS:
        base = ex.stance.orientations[key]
        target = ex.hold.orientations[key] + deltas.get(key, 0.0)
        ori[key] = base + (target - base) * u
    stance_pelvis = np.asarray(ex.stance.pelvis, dtype=np.float64)
    hold_pelvis = np.asarray(ex.hold.pelvis, dtype=np.float64)
    pelvis = stance_pelvis[None, :] + (hold_pelvis - stance_pelvis)[None, :] * u[:, None]

    pts = _fk(pelvis, ori)
    if spec.noise_sigma > 0:
        pts = pts + rng.normal(0.0, spec.noise_sigma, pts.shape)

    reps = []
    for a, b, c, e in events:
        start = int(np.searchsorted(times, a, side="right")) - 1
        end = int(np.searchsorted(times, e, side="left"))
        hold_first = int(np.searchsorted(times, b, side="left"))
        hold_last = int(np.searchsorted(times, c, side="right")) - 1
        reps.append(
            SynthRep(
                start=start,
                end=min(end, n - 1),
                peak=(hold_first + hold_last) // 2,
                hold_start=hold_first,
                hold_end=hold_last,
            )
        )

    label = ex.classes[spec.class_index]
    clip = ClipSequence(
        COCO17,
        times,
        pts,
        np.ones((n, 17), dtype=np.float64),
        label=label,
        exercise=ex.name,
    )
    return SynthResult(
        clip=clip, reps=tuple(reps), label=label, class_index=spec.class_index, spec=spec
    )


def dataset_specs(
    exercise: str,
    clips_per_class: int,
    reps_per_clip: int,
    noise_sigma: float,
    seed: int,
    hold_ms: float = 2000.0,
    fps: float = 30.0,
) -> Iterator[SynthSpec]:
    """Specs for a balanced per-class clip grid with distinct seeds."""
    for class_index in range(3):
        for c in range(clips_per_class):
            clip_seed = (seed * 1_000_003 + class_index * 10_007 + c) % (2**63)
            yield SynthSpec(
                exercise=exercise,
                class_index=class_index,
                reps=reps_per_clip,
                hold_ms=hold_ms,
                noise_sigma=noise_sigma,
                seed=clip_seed,
                fps=fps,
            )
