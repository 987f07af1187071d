"""Pose CSV clips and dataset manifests.

A clip file holds one header row ``frame,time_ms,j0_x,j0_y,j0_c,...`` and
one row per frame, with coordinates and confidences serialized at six
decimal places. A dataset manifest is a JSON file listing clip paths with
their class index and subject id for one exercise.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .skeleton import BUILTIN_PROFILES, ClipSequence, SkeletonProfile

log = logging.getLogger(__name__)

# Coordinates outside this window are treated as estimator overshoot.
COORD_MIN = -0.5
COORD_MAX = 1.5


class SchemaMismatch(ValueError):
    """CSV header or row shape does not match the expected profile."""


class NonMonotonicTime(ValueError):
    """Frame timestamps fail to increase strictly."""


class EmptyFile(ValueError):
    """The clip file contains no data rows."""


class IoFailure(OSError):
    """Reading or writing the file failed at the OS level."""


def csv_header(joint_count: int) -> list[str]:
    cols = ["frame", "time_ms"]
    for i in range(joint_count):
        cols += [f"j{i}_x", f"j{i}_y", f"j{i}_c"]
    return cols


def write_clip(clip: ClipSequence, path: str | Path) -> None:
    """Write a clip to CSV with six-decimal float serialization."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(csv_header(clip.profile.joint_count))
            for idx in range(len(clip)):
                row = [str(idx), f"{clip.times[idx]:.6f}"]
                for j in range(clip.profile.joint_count):
                    row.append(f"{clip.points[idx, j, 0]:.6f}")
                    row.append(f"{clip.points[idx, j, 1]:.6f}")
                    row.append(f"{clip.confidence[idx, j]:.6f}")
                writer.writerow(row)
    except OSError as exc:
        raise IoFailure(f"cannot write clip to {path}: {exc}") from exc


def read_clip(
    path: str | Path,
    profile: SkeletonProfile,
    label: str | None = None,
    exercise: str | None = None,
) -> ClipSequence:
    """Read a Pose CSV into a clip, validating it against ``profile``.

    Coordinates are clamped to [COORD_MIN, COORD_MAX]; the number of
    clamped values is reported through a single log warning. Confidences
    are clamped to [0, 1] the same way.

    Raises:
        SchemaMismatch: header/row widths do not fit the profile.
        NonMonotonicTime: timestamps do not strictly increase.
        EmptyFile: no data rows.
        IoFailure: underlying read error.
    """
    path = Path(path)
    expected = csv_header(profile.joint_count)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise EmptyFile(f"{path} is empty")
            if header != expected:
                raise SchemaMismatch(
                    f"{path}: header does not match profile {profile.name!r} "
                    f"({len(header)} columns, expected {len(expected)})"
                )
            rows = list(reader)
    except OSError as exc:
        raise IoFailure(f"cannot read clip from {path}: {exc}") from exc

    if not rows:
        raise EmptyFile(f"{path} has a header but no frames")

    n = len(rows)
    j = profile.joint_count
    data = np.empty((n, 2 + 3 * j), dtype=np.float64)
    for r, row in enumerate(rows):
        if len(row) != len(expected):
            raise SchemaMismatch(f"{path}: row {r} has {len(row)} columns")
        try:
            data[r] = [float(v) for v in row]
        except ValueError as exc:
            raise SchemaMismatch(f"{path}: row {r} has a non-numeric value") from exc

    frame_idx = data[:, 0]
    if frame_idx[0] != 0 or np.any(np.diff(frame_idx) != 1):
        raise SchemaMismatch(f"{path}: frame indices must count up from 0")
    times = data[:, 1]
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise NonMonotonicTime(f"{path}: time_ms must increase strictly")

    body = data[:, 2:].reshape(n, j, 3)
    points = body[:, :, :2]
    confidence = body[:, :, 2]

    clamped = int(np.sum((points < COORD_MIN) | (points > COORD_MAX)))
    clamped += int(np.sum((confidence < 0.0) | (confidence > 1.0)))
    if clamped:
        log.warning("%s: clamped %d out-of-range values", path, clamped)
        points = np.clip(points, COORD_MIN, COORD_MAX)
        confidence = np.clip(confidence, 0.0, 1.0)

    return ClipSequence(profile, times, points, confidence, label=label, exercise=exercise)


@dataclass(frozen=True)
class ManifestClip:
    path: str
    class_index: int
    subject_id: str


@dataclass(frozen=True)
class DatasetManifest:
    """One exercise's clip inventory: paths, class indices, subjects."""

    exercise: str
    classes: tuple[str, ...]
    profile: str
    clips: tuple[ManifestClip, ...]

    def __post_init__(self) -> None:
        if len(self.classes) != 3:
            raise ValueError("expected one correct class and two mistake classes")
        if self.classes[0] != "correct":
            raise ValueError("classes[0] must be 'correct'")
        for clip in self.clips:
            if not 0 <= clip.class_index < len(self.classes):
                raise ValueError(f"clip {clip.path} has class index {clip.class_index}")

    def to_json(self) -> dict:
        return {
            "exercise": self.exercise,
            "classes": list(self.classes),
            "profile": self.profile,
            "clips": [
                {"path": c.path, "class_index": c.class_index, "subject_id": c.subject_id}
                for c in self.clips
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "DatasetManifest":
        return cls(
            exercise=str(data["exercise"]),
            classes=tuple(str(c) for c in data["classes"]),
            profile=str(data["profile"]),
            clips=tuple(
                ManifestClip(str(c["path"]), int(c["class_index"]), str(c["subject_id"]))
                for c in data["clips"]
            ),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        return cls.from_json(json.loads(Path(path).read_text()))

    def skeleton_profile(self) -> SkeletonProfile:
        try:
            return BUILTIN_PROFILES[self.profile]
        except KeyError:
            raise ValueError(f"unknown skeleton profile {self.profile!r}") from None

    def iter_clips(self, root: str | Path) -> Iterator[tuple[ClipSequence, ManifestClip]]:
        """Read every listed clip, resolving paths relative to ``root``."""
        profile = self.skeleton_profile()
        root = Path(root)
        for entry in self.clips:
            clip = read_clip(
                root / entry.path,
                profile,
                label=self.classes[entry.class_index],
                exercise=self.exercise,
            )
            yield clip, entry
