from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isoform.skeleton import (
    BUILTIN_PROFILES,
    COCO17,
    LANDMARK33,
    AllFramesDegenerate,
    AngleTriplet,
    ClipSequence,
    DegenerateTriplet,
    KeypointFrame,
    SkeletonProfile,
    angle_series,
    joint_angle,
)

from conftest import TRI, tri_clip, tri_frame

ABC = TRI.angle_triplets[0]


class TestJointAngle:
    def test_collinear_points_give_zero(self):
        frame = tri_frame((0, 0), (1, 0), (2, 0))
        assert joint_angle(frame, ABC) == 0.0

    def test_perpendicular_turn_gives_ninety(self):
        frame = tri_frame((0, 0), (1, 0), (1, 1))
        assert joint_angle(frame, ABC) == pytest.approx(90.0)

    def test_opposite_turn_wraps_into_upper_range(self):
        frame = tri_frame((0, 0), (1, 0), (1, -1))
        assert joint_angle(frame, ABC) == pytest.approx(270.0)

    def test_reversal_gives_180(self):
        frame = tri_frame((0, 0), (1, 0), (0, 0))
        assert joint_angle(frame, ABC) == pytest.approx(180.0)

    def test_tiny_negative_turn_wraps_to_zero_not_360(self):
        # atan2 of a tiny negative cross product plus 360 rounds to exactly
        # 360.0 in floats; the codomain contract is [0, 360).
        frame = tri_frame((0, 0), (1, 0), (2, -1e-18))
        angle = joint_angle(frame, ABC)
        assert 0.0 <= angle < 360.0
        assert angle == 0.0

    def test_coincident_joints_raise(self):
        frame = tri_frame((0.5, 0.5), (0.5, 0.5), (1, 1))
        with pytest.raises(DegenerateTriplet):
            joint_angle(frame, ABC)

    def test_near_zero_bone_raises(self):
        frame = tri_frame((0, 0), (1e-10, 0), (1, 1))
        with pytest.raises(DegenerateTriplet):
            joint_angle(frame, ABC)

    @settings(max_examples=100, deadline=None)
    @given(
        pts=st.lists(
            st.tuples(
                st.floats(-1, 1, allow_nan=False, width=32),
                st.floats(-1, 1, allow_nan=False, width=32),
            ),
            min_size=3,
            max_size=3,
        ),
        theta=st.floats(0, 2 * math.pi, allow_nan=False),
        scale=st.floats(0.1, 10.0, allow_nan=False),
        tx=st.floats(-5, 5, allow_nan=False),
        ty=st.floats(-5, 5, allow_nan=False),
    )
    def test_invariant_under_rigid_transform_and_scale(self, pts, theta, scale, tx, ty):
        p = np.array(pts, dtype=np.float64)
        v1 = p[1] - p[0]
        v2 = p[2] - p[1]
        if np.linalg.norm(v1) < 1e-3 or np.linalg.norm(v2) < 1e-3:
            return
        base = joint_angle(tri_frame(*p), ABC)
        rot = np.array(
            [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
        )
        q = scale * (p @ rot.T) + np.array([tx, ty])
        moved = joint_angle(tri_frame(*q), ABC)
        diff = abs(moved - base)
        diff = min(diff, 360.0 - diff)
        assert diff < 1e-9


class TestAngleSeries:
    def test_rotating_bone_matches_constructed_trajectory(self):
        # Joint k sweeps around j by a known turn angle; the series must
        # reproduce that trajectory to float precision.
        truth = np.linspace(0.0, 180.0, 19)
        frames = []
        for t, theta in enumerate(truth):
            rad = math.radians(theta)
            k = (1.0 + math.cos(rad), math.sin(rad))
            frames.append(tri_frame((0, 0), (1, 0), k, time_ms=t * 33.0))
        series = angle_series(tri_clip(frames), ABC)
        # theta=0 is collinear, angle 0; each following sample equals theta.
        assert np.allclose(series, truth, atol=1e-6)

    def test_static_right_angle_is_constant(self):
        frames = [tri_frame((0, 0), (1, 0), (1, 1), time_ms=i * 33.0) for i in range(10)]
        series = angle_series(tri_clip(frames), ABC)
        assert np.allclose(series, 90.0)

    def test_degenerate_middle_frame_interpolates(self):
        def angled(theta_deg, t):
            rad = math.radians(theta_deg)
            return tri_frame((0, 0), (1, 0), (1 + math.cos(rad), math.sin(rad)), time_ms=t)

        frames = [
            angled(80.0, 0.0),
            tri_frame((0, 0), (1, 0), (1, 0), time_ms=10.0),  # k on j: degenerate
            angled(100.0, 20.0),
        ]
        series = angle_series(tri_clip(frames), ABC)
        assert series[1] == pytest.approx(90.0, abs=1e-9)

    def test_leading_and_trailing_gaps_hold_nearest(self):
        good = tri_frame((0, 0), (1, 0), (1, 1), time_ms=10.0)
        bad0 = tri_frame((0, 0), (1, 0), (1, 0), time_ms=0.0)
        bad2 = tri_frame((0, 0), (1, 0), (1, 0), time_ms=20.0)
        series = angle_series(tri_clip([bad0, good, bad2]), ABC)
        assert np.allclose(series, 90.0)

    def test_all_degenerate_raises(self):
        frames = [tri_frame((0, 0), (1, 0), (1, 0), time_ms=i * 10.0) for i in range(4)]
        with pytest.raises(AllFramesDegenerate):
            angle_series(tri_clip(frames), ABC)


class TestTypes:
    def test_frame_validation(self):
        with pytest.raises(ValueError):
            KeypointFrame(-1.0, np.zeros((3, 2)), np.ones(3))
        with pytest.raises(ValueError):
            KeypointFrame(0.0, np.zeros((3, 3)), np.ones(3))
        with pytest.raises(ValueError):
            KeypointFrame(0.0, np.zeros((3, 2)), np.ones(2))
        with pytest.raises(ValueError):
            KeypointFrame(0.0, np.zeros((3, 2)), np.array([0.5, 1.0, 1.5]))

    def test_clip_requires_increasing_times(self):
        f0 = tri_frame((0, 0), (1, 0), (1, 1), time_ms=10.0)
        f1 = tri_frame((0, 0), (1, 0), (1, 1), time_ms=10.0)
        with pytest.raises(ValueError):
            ClipSequence.from_frames(TRI, [f0, f1])

    def test_clip_slice_inclusive(self):
        frames = [tri_frame((0, 0), (1, 0), (1, 1), time_ms=i * 10.0) for i in range(5)]
        clip = tri_clip(frames)
        sub = clip.slice(1, 3)
        assert len(sub) == 3
        assert sub.times[0] == 10.0 and sub.times[-1] == 30.0
        with pytest.raises(IndexError):
            clip.slice(3, 5)

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            SkeletonProfile("p", ("a", "a"), ())
        with pytest.raises(ValueError):
            SkeletonProfile("p", ("a", "b"), (AngleTriplet(0, 1, 2, "t"),))
        with pytest.raises(ValueError):
            SkeletonProfile("p", ("a", "b", "c"), (AngleTriplet(0, 0, 2, "t"),))

    def test_profile_manifest_round_trip(self, tmp_path):
        path = tmp_path / "coco17.json"
        COCO17.save(path)
        loaded = SkeletonProfile.load(path)
        assert loaded == COCO17

    def test_builtin_profiles(self):
        assert COCO17.joint_count == 17
        assert LANDMARK33.joint_count == 33
        assert set(BUILTIN_PROFILES) == {"coco17", "landmark33"}
        for profile in BUILTIN_PROFILES.values():
            labels = {t.label for t in profile.angle_triplets}
            assert {"left_knee", "right_knee", "left_shoulder", "right_shoulder"} <= labels

    def test_triplet_lookup(self):
        t = COCO17.triplet("right_knee")
        assert t.indices() == (
            COCO17.joint_index("right_hip"),
            COCO17.joint_index("right_knee"),
            COCO17.joint_index("right_ankle"),
        )
        with pytest.raises(KeyError):
            COCO17.triplet("nope")
