"""Built-in isometric exercise definitions.

Each exercise names its three form classes (one correct, two mistakes),
the angle triplets used as features, the joint coordinate that drives rep
segmentation, and the body configuration tables the synthetic generator
animates between. Poses are described by absolute segment orientations in
degrees (0 points image-right, 90 points image-down) plus a pelvis anchor.
"""

from __future__ import annotations

from dataclasses import dataclass

# Segment keys understood by the forward-kinematics pose builder.
SEGMENT_KEYS = (
    "torso",
    "l_upper_arm",
    "r_upper_arm",
    "l_forearm",
    "r_forearm",
    "l_thigh",
    "r_thigh",
    "l_shank",
    "r_shank",
)

# Feature triplet labels shared by every built-in exercise.
FEATURE_TRIPLETS = (
    "left_elbow",
    "right_elbow",
    "left_shoulder",
    "right_shoulder",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
)

DEFAULT_MISTAKE_DELTA = 30.0


class UnknownExercise(KeyError):
    """Raised when an exercise name is not in the registry."""


@dataclass(frozen=True)
class PoseTable:
    """Pelvis anchor plus absolute orientation (degrees) per segment."""

    pelvis: tuple[float, float]
    orientations: dict[str, float]

    def __post_init__(self) -> None:
        missing = set(SEGMENT_KEYS) - set(self.orientations)
        if missing:
            raise ValueError(f"pose table missing segments: {sorted(missing)}")


@dataclass(frozen=True)
class MistakeSpec:
    """A mistake class: orientation deltas and the triplets they shift.

    ``segment_deltas`` are added to the hold-pose orientations. The
    ``designated`` triplet labels are the ones whose hold angle moves by
    exactly the late delta magnitude relative to the correct hold.
    """

    label: str
    segment_deltas: tuple[tuple[str, float], ...]
    designated: tuple[str, ...]


@dataclass(frozen=True)
class ExerciseDef:
    name: str
    stance: PoseTable
    hold: PoseTable
    mistakes: tuple[MistakeSpec, MistakeSpec]
    signal_joint: str
    signal_axis: str
    # True when the tracked joint rises during the hold (smaller image y),
    # so the segmentation signal must be flipped to make reps peaks.
    signal_invert: bool = False

    @property
    def classes(self) -> tuple[str, str, str]:
        return ("correct", self.mistakes[0].label, self.mistakes[1].label)

    @property
    def feature_triplets(self) -> tuple[str, ...]:
        return FEATURE_TRIPLETS

    def class_deltas(self, class_index: int) -> dict[str, float]:
        """Hold-pose orientation deltas for one class (empty for correct)."""
        if class_index == 0:
            return {}
        spec = self.mistakes[class_index - 1]
        return dict(spec.segment_deltas)

    def signal_source(self):
        """SignalSource for this exercise on the COCO17 profile."""
        from .segmentation import SignalSource
        from .skeleton import COCO17

        return SignalSource.coord(
            COCO17.joint_index(self.signal_joint), self.signal_axis, self.signal_invert
        )


def _pose(pelvis, torso, l_ua, r_ua, l_fa, r_fa, l_th, r_th, l_sh, r_sh) -> PoseTable:
    return PoseTable(
        pelvis=pelvis,
        orientations={
            "torso": torso,
            "l_upper_arm": l_ua,
            "r_upper_arm": r_ua,
            "l_forearm": l_fa,
            "r_forearm": r_fa,
            "l_thigh": l_th,
            "r_thigh": r_th,
            "l_shank": l_sh,
            "r_shank": r_sh,
        },
    )


_D = DEFAULT_MISTAKE_DELTA

EXERCISES: dict[str, ExerciseDef] = {
    "tree": ExerciseDef(
        name="tree",
        stance=_pose((0.50, 0.55), -90.0, 80.0, 100.0, 80.0, 100.0, 90.0, 90.0, 90.0, 90.0),
        hold=_pose((0.50, 0.55), -90.0, -70.0, -110.0, -80.0, -100.0, 90.0, 135.0, 90.0, 15.0),
        mistakes=(
            MistakeSpec(
                label="hands_not_above_head",
                segment_deltas=(
                    ("l_upper_arm", _D),
                    ("l_forearm", _D),
                    ("r_upper_arm", -_D),
                    ("r_forearm", -_D),
                ),
                designated=("left_shoulder", "right_shoulder"),
            ),
            MistakeSpec(
                label="right_foot_not_at_left_knee",
                segment_deltas=(("r_shank", _D),),
                designated=("right_knee",),
            ),
        ),
        signal_joint="left_wrist",
        signal_axis="y",
        signal_invert=True,
    ),
    "cobra": ExerciseDef(
        name="cobra",
        stance=_pose((0.58, 0.78), 185.0, 170.0, 174.0, 160.0, 164.0, 3.0, -3.0, 2.0, -2.0),
        hold=_pose((0.58, 0.78), 230.0, 95.0, 85.0, 92.0, 88.0, 3.0, -3.0, 2.0, -2.0),
        mistakes=(
            MistakeSpec(
                label="rising_on_hands",
                segment_deltas=(("l_forearm", -_D), ("r_forearm", _D)),
                designated=("left_elbow", "right_elbow"),
            ),
            MistakeSpec(
                label="feet_above_ground",
                segment_deltas=(
                    ("l_thigh", -_D),
                    ("l_shank", -_D),
                    ("r_thigh", -_D),
                    ("r_shank", -_D),
                ),
                designated=("left_hip", "right_hip"),
            ),
        ),
        signal_joint="nose",
        signal_axis="y",
        signal_invert=True,
    ),
    "triangle": ExerciseDef(
        name="triangle",
        stance=_pose((0.50, 0.52), -90.0, 0.0, 180.0, 0.0, 180.0, 70.0, 110.0, 70.0, 110.0),
        hold=_pose((0.50, 0.52), -140.0, -55.0, 115.0, -50.0, 110.0, 70.0, 110.0, 70.0, 110.0),
        mistakes=(
            MistakeSpec(
                label="right_hand_not_reaching_ankle",
                segment_deltas=(("r_upper_arm", -_D), ("r_forearm", -_D)),
                designated=("right_shoulder",),
            ),
            MistakeSpec(
                label="right_knee_bending",
                segment_deltas=(("r_shank", _D),),
                designated=("right_knee",),
            ),
        ),
        signal_joint="right_wrist",
        signal_axis="y",
    ),
    "warrior2": ExerciseDef(
        name="warrior2",
        stance=_pose((0.50, 0.54), -90.0, 85.0, 95.0, 85.0, 95.0, 75.0, 105.0, 75.0, 105.0),
        hold=_pose((0.50, 0.54), -90.0, 0.0, 180.0, 0.0, 180.0, 65.0, 125.0, 65.0, 95.0),
        mistakes=(
            MistakeSpec(
                label="hands_not_parallel",
                segment_deltas=(
                    ("l_upper_arm", _D),
                    ("l_forearm", _D),
                    ("r_upper_arm", -_D),
                    ("r_forearm", -_D),
                ),
                designated=("left_shoulder", "right_shoulder"),
            ),
            MistakeSpec(
                label="right_knee_bending_forward",
                segment_deltas=(("r_shank", -_D),),
                designated=("right_knee",),
            ),
        ),
        signal_joint="left_wrist",
        signal_axis="y",
        signal_invert=True,
    ),
    "plank": ExerciseDef(
        name="plank",
        stance=_pose((0.60, 0.50), 260.0, 95.0, 99.0, 95.0, 99.0, 55.0, 59.0, 95.0, 99.0),
        hold=_pose((0.50, 0.60), 200.0, 88.0, 92.0, 88.0, 92.0, 28.0, 32.0, 32.0, 36.0),
        mistakes=(
            MistakeSpec(
                label="hips_too_high",
                segment_deltas=(
                    ("l_thigh", -_D),
                    ("l_shank", -_D),
                    ("r_thigh", -_D),
                    ("r_shank", -_D),
                ),
                designated=("left_hip", "right_hip"),
            ),
            MistakeSpec(
                label="hips_too_low",
                segment_deltas=(
                    ("l_thigh", _D),
                    ("l_shank", _D),
                    ("r_thigh", _D),
                    ("r_shank", _D),
                ),
                designated=("left_hip", "right_hip"),
            ),
        ),
        signal_joint="nose",
        signal_axis="y",
    ),
    "superman": ExerciseDef(
        name="superman",
        stance=_pose((0.55, 0.75), 184.0, 186.0, 182.0, 186.0, 182.0, 4.0, 0.0, 4.0, 0.0),
        hold=_pose((0.55, 0.75), 196.0, 225.0, 221.0, 225.0, 221.0, -14.0, -18.0, -10.0, -14.0),
        mistakes=(
            MistakeSpec(
                label="knees_bending",
                segment_deltas=(("l_shank", _D), ("r_shank", _D)),
                designated=("left_knee", "right_knee"),
            ),
            MistakeSpec(
                label="hands_not_level",
                segment_deltas=(("r_upper_arm", -_D), ("r_forearm", -_D)),
                designated=("right_shoulder",),
            ),
        ),
        signal_joint="left_wrist",
        signal_axis="y",
        signal_invert=True,
    ),
}


def get_exercise(name: str) -> ExerciseDef:
    try:
        return EXERCISES[name]
    except KeyError:
        raise UnknownExercise(
            f"unknown exercise {name!r}; available: {sorted(EXERCISES)}"
        ) from None
