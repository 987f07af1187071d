"""Skeleton profiles, keypoint frames, and joint-angle geometry.

Coordinates are normalized image coordinates (x to the right, y down,
nominally inside [0, 1]). Angles are planar turn angles between the two
bone vectors of a joint triplet, expressed in degrees on [0, 360).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

# Below this vector norm a bone direction is considered undefined.
DEGENERATE_NORM = 1e-9


class DegenerateTriplet(ValueError):
    """Raised when a triplet's joints coincide and the angle is undefined."""


class AllFramesDegenerate(ValueError):
    """Raised when no frame of a clip yields a valid angle for a triplet."""


@dataclass(frozen=True)
class AngleTriplet:
    """Ordered joint indices (i, j, k) whose angle is measured at j."""

    i: int
    j: int
    k: int
    label: str

    def indices(self) -> tuple[int, int, int]:
        return (self.i, self.j, self.k)


@dataclass(frozen=True)
class SkeletonProfile:
    """Named joint ordering plus the angle triplets defined on it."""

    name: str
    joint_names: tuple[str, ...]
    angle_triplets: tuple[AngleTriplet, ...]

    def __post_init__(self) -> None:
        if not self.joint_names:
            raise ValueError("profile needs at least one joint")
        if len(set(self.joint_names)) != len(self.joint_names):
            raise ValueError("joint names must be unique")
        labels = [t.label for t in self.angle_triplets]
        if len(set(labels)) != len(labels):
            raise ValueError("triplet labels must be unique")
        for t in self.angle_triplets:
            idx = t.indices()
            if len(set(idx)) != 3:
                raise ValueError(f"triplet {t.label} repeats a joint index")
            if any(not 0 <= i < self.joint_count for i in idx):
                raise ValueError(f"triplet {t.label} indexes outside the profile")

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    def joint_index(self, name: str) -> int:
        return self.joint_names.index(name)

    def triplet(self, label: str) -> AngleTriplet:
        for t in self.angle_triplets:
            if t.label == label:
                return t
        raise KeyError(f"profile {self.name!r} has no triplet {label!r}")

    def to_manifest(self) -> dict:
        return {
            "name": self.name,
            "joint_names": list(self.joint_names),
            "angle_triplets": [[t.i, t.j, t.k, t.label] for t in self.angle_triplets],
        }

    @classmethod
    def from_manifest(cls, data: dict) -> "SkeletonProfile":
        triplets = tuple(
            AngleTriplet(int(i), int(j), int(k), str(label))
            for i, j, k, label in data["angle_triplets"]
        )
        return cls(
            name=str(data["name"]),
            joint_names=tuple(str(n) for n in data["joint_names"]),
            angle_triplets=triplets,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_manifest(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SkeletonProfile":
        return cls.from_manifest(json.loads(Path(path).read_text()))


def _standard_triplets(names: Sequence[str], prefix: str = "") -> tuple[AngleTriplet, ...]:
    """Elbow, shoulder, hip, and knee triplets for a left/right joint naming."""

    def idx(name: str) -> int:
        return names.index(prefix + name)

    spec = [
        ("left_elbow", "left_shoulder", "left_elbow", "left_wrist"),
        ("right_elbow", "right_shoulder", "right_elbow", "right_wrist"),
        ("left_shoulder", "left_elbow", "left_shoulder", "left_hip"),
        ("right_shoulder", "right_elbow", "right_shoulder", "right_hip"),
        ("left_hip", "left_shoulder", "left_hip", "left_knee"),
        ("right_hip", "right_shoulder", "right_hip", "right_knee"),
        ("left_knee", "left_hip", "left_knee", "left_ankle"),
        ("right_knee", "right_hip", "right_knee", "right_ankle"),
    ]
    return tuple(AngleTriplet(idx(a), idx(b), idx(c), label) for label, a, b, c in spec)


_COCO_NAMES = (
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)

COCO17 = SkeletonProfile(
    name="coco17",
    joint_names=_COCO_NAMES,
    angle_triplets=_standard_triplets(_COCO_NAMES),
)

_LANDMARK33_NAMES = (
    "nose",
    "left_eye_inner",
    "left_eye",
    "left_eye_outer",
    "right_eye_inner",
    "right_eye",
    "right_eye_outer",
    "left_ear",
    "right_ear",
    "mouth_left",
    "mouth_right",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_pinky",
    "right_pinky",
    "left_index",
    "right_index",
    "left_thumb",
    "right_thumb",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "left_heel",
    "right_heel",
    "left_foot_index",
    "right_foot_index",
)

LANDMARK33 = SkeletonProfile(
    name="landmark33",
    joint_names=_LANDMARK33_NAMES,
    angle_triplets=_standard_triplets(_LANDMARK33_NAMES),
)

BUILTIN_PROFILES = {p.name: p for p in (COCO17, LANDMARK33)}


class KeypointFrame:
    """One pose estimate: a timestamp plus per-joint position and confidence."""

    __slots__ = ("time_ms", "points", "confidence")

    def __init__(self, time_ms: float, points: np.ndarray, confidence: np.ndarray):
        points = np.asarray(points, dtype=np.float64)
        confidence = np.asarray(confidence, dtype=np.float64)
        if time_ms < 0:
            raise ValueError("time_ms must be non-negative")
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValueError("points must have shape (joints, 2)")
        if confidence.shape != (points.shape[0],):
            raise ValueError("confidence length must match point count")
        if np.any(confidence < 0) or np.any(confidence > 1):
            raise ValueError("confidence values must lie in [0, 1]")
        self.time_ms = float(time_ms)
        self.points = points
        self.confidence = confidence

    @property
    def joint_count(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KeypointFrame):
            return NotImplemented
        return (
            self.time_ms == other.time_ms
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.confidence, other.confidence)
        )

    def __repr__(self) -> str:
        return f"KeypointFrame(t={self.time_ms:.1f}ms, joints={self.joint_count})"


class ClipSequence:
    """A time-ordered run of keypoint frames for one skeleton profile.

    Frames are stored as stacked arrays (times ``(n,)``, points
    ``(n, joints, 2)``, confidence ``(n, joints)``) so per-triplet math can
    stay vectorized; ``frames`` exposes the per-frame view.
    """

    def __init__(
        self,
        profile: SkeletonProfile,
        times: np.ndarray,
        points: np.ndarray,
        confidence: np.ndarray,
        label: str | None = None,
        exercise: str | None = None,
    ):
        times = np.asarray(times, dtype=np.float64)
        points = np.asarray(points, dtype=np.float64)
        confidence = np.asarray(confidence, dtype=np.float64)
        n = times.shape[0]
        if n < 1:
            raise ValueError("a clip needs at least one frame")
        if points.shape != (n, profile.joint_count, 2):
            raise ValueError("points shape does not match profile and frame count")
        if confidence.shape != (n, profile.joint_count):
            raise ValueError("confidence shape does not match points")
        if times[0] < 0 or np.any(np.diff(times) <= 0):
            raise ValueError("frame times must be non-negative and strictly increasing")
        self.profile = profile
        self.times = times
        self.points = points
        self.confidence = confidence
        self.label = label
        self.exercise = exercise

    @classmethod
    def from_frames(
        cls,
        profile: SkeletonProfile,
        frames: Sequence[KeypointFrame],
        label: str | None = None,
        exercise: str | None = None,
    ) -> "ClipSequence":
        if not frames:
            raise ValueError("a clip needs at least one frame")
        times = np.array([f.time_ms for f in frames], dtype=np.float64)
        points = np.stack([f.points for f in frames])
        confidence = np.stack([f.confidence for f in frames])
        return cls(profile, times, points, confidence, label=label, exercise=exercise)

    def __len__(self) -> int:
        return self.times.shape[0]

    def frame(self, i: int) -> KeypointFrame:
        return KeypointFrame(self.times[i], self.points[i], self.confidence[i])

    def iter_frames(self) -> Iterator[KeypointFrame]:
        for i in range(len(self)):
            yield self.frame(i)

    @property
    def frames(self) -> tuple[KeypointFrame, ...]:
        return tuple(self.iter_frames())

    def slice(self, start: int, end: int) -> "ClipSequence":
        """Sub-clip over frame indices [start, end] inclusive."""
        if not 0 <= start <= end < len(self):
            raise IndexError(f"slice [{start}, {end}] outside clip of {len(self)} frames")
        return ClipSequence(
            self.profile,
            self.times[start : end + 1],
            self.points[start : end + 1],
            self.confidence[start : end + 1],
            label=self.label,
            exercise=self.exercise,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClipSequence):
            return NotImplemented
        return (
            self.profile == other.profile
            and self.label == other.label
            and self.exercise == other.exercise
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.confidence, other.confidence)
        )

    def __repr__(self) -> str:
        return (
            f"ClipSequence(profile={self.profile.name!r}, frames={len(self)}, "
            f"label={self.label!r}, exercise={self.exercise!r})"
        )


def _turn_angles(v1: np.ndarray, v2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed turn from v1 to v2 mapped onto [0, 360), plus a validity mask.

    Works on stacked rows: v1 and v2 have shape (n, 2). Entries where either
    vector is shorter than DEGENERATE_NORM are flagged invalid.
    """
    cross = v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0]
    dot = v1[:, 0] * v2[:, 0] + v1[:, 1] * v2[:, 1]
    degrees = np.degrees(np.arctan2(cross, dot))
    degrees = np.where(degrees < 0, degrees + 360.0, degrees)
    # A tiny negative angle plus 360 can round to exactly 360.0, which
    # would escape the [0, 360) codomain; wrap it back to zero.
    degrees = np.where(degrees >= 360.0, 0.0, degrees)
    valid = (np.linalg.norm(v1, axis=1) > DEGENERATE_NORM) & (
        np.linalg.norm(v2, axis=1) > DEGENERATE_NORM
    )
    return degrees, valid


def joint_angle(frame: KeypointFrame, triplet: AngleTriplet) -> float:
    """Angle at joint j of the (i, j, k) triplet, in degrees on [0, 360).

    The angle is the signed turn from the bone vector i->j to the bone
    vector j->k (atan2 of their cross and dot products), shifted by 360
    when negative. It is invariant under translation, rotation, and
    uniform scaling of the frame.

    Raises:
        DegenerateTriplet: if either bone vector is shorter than
            DEGENERATE_NORM.
    """
    pts = frame.points
    v1 = pts[triplet.j] - pts[triplet.i]
    v2 = pts[triplet.k] - pts[triplet.j]
    degrees, valid = _turn_angles(v1[None, :], v2[None, :])
    if not valid[0]:
        raise DegenerateTriplet(
            f"triplet {triplet.label!r} degenerate at t={frame.time_ms:.1f}ms"
        )
    return float(degrees[0])


def angle_series(clip: ClipSequence, triplet: AngleTriplet) -> np.ndarray:
    """Per-frame triplet angles for a clip, aligned with ``clip.times``.

    Degenerate frames are filled by linear interpolation (over time)
    between the nearest valid neighbors; leading and trailing gaps hold
    the nearest valid value.

    Raises:
        AllFramesDegenerate: if no frame yields a valid angle.
    """
    v1 = clip.points[:, triplet.j] - clip.points[:, triplet.i]
    v2 = clip.points[:, triplet.k] - clip.points[:, triplet.j]
    degrees, valid = _turn_angles(v1, v2)
    if not valid.any():
        raise AllFramesDegenerate(f"triplet {triplet.label!r} degenerate on every frame")
    if valid.all():
        return degrees
    filled = np.interp(clip.times, clip.times[valid], degrees[valid])
    filled[valid] = degrees[valid]
    return filled
