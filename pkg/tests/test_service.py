"""Live session engine tests.

The end-to-end expectations come from the synthetic clip generator: a
clip built with N repetitions of a known class must produce N feedback
events carrying that class's verdict, and the streaming path must agree
with the batch pipeline run over the same clip.
"""

import numpy as np
import pytest

from isoform.classifier import ClassPrediction, predict
from isoform.exercises import get_exercise
from isoform.features import feature_vector
from isoform.segmentation import (
    OutOfOrderFrame,
    SegmenterConfig,
    detect_reps,
    extract_signal,
)
from isoform.service import (
    UNCERTAIN,
    ModelMissing,
    UnknownExercise,
    classify_verdict,
    session_end,
    session_frame,
    session_start,
)
from isoform.skeleton import KeypointFrame
from isoform.synth import SynthSpec, hold_pose, hold_targets, synthesize


def make_clip(class_index: int, seed: int = 5, reps: int = 5, noise: float = 0.01):
    return synthesize(
        SynthSpec(
            exercise="tree",
            class_index=class_index,
            reps=reps,
            noise_sigma=noise,
            seed=seed,
        )
    ).clip


def stream(state, clip):
    events = []
    for frame in clip.frames:
        _, new_events = session_frame(state, frame)
        events.extend(new_events)
    return events


class TestSessionStart:
    def test_fresh_state_has_empty_log(self, tree_bundle):
        state = session_start("tree", tree_bundle)
        assert state.rep_log == []
        assert state.frames == []
        assert state.dropped_frames == 0
        assert state.exercise.name == "tree"

    def test_session_ids_are_unique(self, tree_bundle):
        a = session_start("tree", tree_bundle)
        b = session_start("tree", tree_bundle)
        assert a.session_id != b.session_id

    def test_unknown_exercise_rejected(self, tree_bundle):
        with pytest.raises(UnknownExercise):
            session_start("jumping_jack", tree_bundle)

    def test_missing_bundle_rejected(self):
        with pytest.raises(ModelMissing):
            session_start("tree", None)

    def test_bundle_for_other_exercise_rejected(self, tree_bundle):
        with pytest.raises(ModelMissing, match="trained for"):
            session_start("plank", tree_bundle)


class TestVerdicts:
    CLASSES = ("correct", "m1", "m2")

    def pred(self, probs):
        return ClassPrediction(probs=np.array(probs))

    def test_confident_correct(self):
        assert classify_verdict(self.pred([0.8, 0.1, 0.1]), self.CLASSES, 0.5) == "correct"

    def test_correct_argmax_never_uncertain(self):
        # The uncertainty rule only applies to mistake predictions.
        verdict = classify_verdict(self.pred([0.4, 0.35, 0.25]), self.CLASSES, 0.5)
        assert verdict == "correct"

    def test_confident_mistake_keeps_label(self):
        assert classify_verdict(self.pred([0.1, 0.6, 0.3]), self.CLASSES, 0.5) == "m1"

    def test_low_confidence_mistake_is_uncertain(self):
        verdict = classify_verdict(self.pred([0.34, 0.36, 0.30]), self.CLASSES, 0.5)
        assert verdict == UNCERTAIN

    def test_tie_at_tau_counts_as_confident(self):
        # Max mistake probability exactly tau must not be uncertain.
        verdict = classify_verdict(self.pred([0.2, 0.5, 0.3]), self.CLASSES, 0.5)
        assert verdict == "m1"


class TestSessionFrame:
    def test_correct_clip_emits_one_event_per_rep(self, tree_bundle):
        state = session_start("tree", tree_bundle)
        events = stream(state, make_clip(class_index=0))
        assert len(events) == 5
        assert [e.verdict for e in events] == ["correct"] * 5
        assert [e.rep_index for e in events] == list(range(5))
        for event in events:
            assert int(np.argmax(event.probs)) == 0

    def test_mistake_clip_events_name_the_mistake(self, tree_bundle):
        mistake_label = get_exercise("tree").classes[1]
        state = session_start("tree", tree_bundle)
        events = stream(state, make_clip(class_index=1, seed=6))
        assert len(events) == 5
        for event in events:
            assert event.verdict == mistake_label
            assert int(np.argmax(event.probs)) == 1

    def test_no_motion_emits_nothing(self, tree_bundle):
        pose = hold_pose("tree")
        state = session_start("tree", tree_bundle)
        for i in range(300):
            frame = KeypointFrame(
                time_ms=i * 1000.0 / 30.0,
                points=pose.points,
                confidence=pose.confidence,
            )
            _, events = session_frame(state, frame)
            assert events == []
        assert state.rep_log == []

    def test_out_of_order_frame_dropped_and_counted(self, tree_bundle):
        clip = make_clip(class_index=0)
        state = session_start("tree", tree_bundle)
        for frame in clip.frames[:10]:
            session_frame(state, frame)
        stale = KeypointFrame(
            time_ms=clip.times[0],
            points=clip.points[0],
            confidence=clip.confidence[0],
        )
        with pytest.raises(OutOfOrderFrame):
            session_frame(state, stale)
        assert state.dropped_frames == 1
        assert len(state.frames) == 10  # the stale frame was not kept
        for frame in clip.frames[10:]:
            session_frame(state, frame)
        report = session_end(state)
        assert report.dropped_frames == 1
        assert report.rep_count == 5

    def test_interleaved_sessions_match_isolated_runs(self, tree_bundle):
        clip_a = make_clip(class_index=0, seed=7)
        clip_b = make_clip(class_index=2, seed=8)

        solo_a = session_start("tree", tree_bundle)
        events_solo_a = stream(solo_a, clip_a)
        solo_b = session_start("tree", tree_bundle)
        events_solo_b = stream(solo_b, clip_b)

        mixed_a = session_start("tree", tree_bundle)
        mixed_b = session_start("tree", tree_bundle)
        events_mixed_a, events_mixed_b = [], []
        for frame_a, frame_b in zip(clip_a.frames, clip_b.frames):
            events_mixed_a.extend(session_frame(mixed_a, frame_a)[1])
            events_mixed_b.extend(session_frame(mixed_b, frame_b)[1])
        assert events_mixed_a == events_solo_a
        assert events_mixed_b == events_solo_b

    def test_streaming_matches_batch_pipeline(self, tree_bundle):
        clip = make_clip(class_index=1, seed=9)
        exercise = get_exercise("tree")
        state = session_start("tree", tree_bundle)
        events = stream(state, clip)

        signal = extract_signal(clip, exercise.signal_source(), SegmenterConfig())
        segments = detect_reps(signal, SegmenterConfig())
        assert len(events) == len(segments)
        for event, record, segment in zip(events, state.rep_log, segments):
            assert abs(record.segment.start_index - segment.start_index) <= 2
            assert abs(record.segment.end_index - segment.end_index) <= 2
            rep_clip = clip.slice(segment.start_index, segment.end_index)
            feature = feature_vector(rep_clip, state.triplets, state.feature_config)
            batch = predict(tree_bundle.mlp, feature)
            assert int(np.argmax(event.probs)) == batch.predicted_class

    def test_emission_latency_within_budget(self, tree_bundle):
        config = SegmenterConfig()
        frame_period = 1000.0 / 30.0
        budget = (
            config.online_confirm_frames + config.smoothing_window // 2
        ) * frame_period + 50.0
        state = session_start("tree", tree_bundle)
        events = stream(state, make_clip(class_index=0, seed=10))
        assert events
        for event in events:
            assert 0.0 <= event.latency_ms <= budget


class TestSessionEnd:
    def test_empty_session_report(self, tree_bundle):
        state = session_start("tree", tree_bundle)
        report = session_end(state)
        assert report.rep_count == 0
        assert all(count == 0 for count in report.totals.values())
        assert report.dominant_mistake is None
        assert report.uncertain_percent == 0.0
        assert report.mean_deviation == {}
        assert report.timeline == ()

    def test_totals_sum_to_rep_count_and_keys_cover_verdicts(self, tree_bundle):
        classes = get_exercise("tree").classes
        state = session_start("tree", tree_bundle)
        stream(state, make_clip(class_index=0, seed=11))
        report = session_end(state)
        assert set(report.totals) == set(classes) | {UNCERTAIN}
        assert sum(report.totals.values()) == report.rep_count == 5
        assert report.totals["correct"] == 5

    def test_idempotent(self, tree_bundle):
        state = session_start("tree", tree_bundle)
        stream(state, make_clip(class_index=2, seed=12))
        first = session_end(state)
        second = session_end(state)
        assert first == second

    def test_dominant_mistake_reported(self, tree_bundle):
        classes = get_exercise("tree").classes
        state = session_start("tree", tree_bundle)
        stream(state, make_clip(class_index=2, seed=13))
        report = session_end(state)
        assert report.totals[classes[2]] == 5
        assert report.dominant_mistake == classes[2]

    def test_mean_deviation_tracks_the_injected_error(self, tree_bundle):
        # The hold targets of mistake 1 differ from the correct pose by a
        # known amount per triplet; the session's mean deviations should
        # point the same way and recover most of the magnitude.
        correct_targets = hold_targets("tree", 0)
        mistake_targets = hold_targets("tree", 1)
        expected = {
            label: (mistake_targets[label] - correct_targets[label] + 180.0) % 360.0
            - 180.0
            for label in correct_targets
        }
        state = session_start("tree", tree_bundle)
        stream(state, make_clip(class_index=1, seed=14))
        report = session_end(state)
        displaced = {k: v for k, v in expected.items() if abs(v) > 5.0}
        assert displaced, "mistake 1 should displace at least one tracked angle"
        for label, delta in displaced.items():
            measured = report.mean_deviation[label]
            assert np.sign(measured) == np.sign(delta)
            assert abs(measured) >= abs(delta) / 2.0

    def test_timeline_mirrors_events(self, tree_bundle):
        state = session_start("tree", tree_bundle)
        events = stream(state, make_clip(class_index=0, seed=15))
        report = session_end(state)
        assert report.timeline == tuple(events)
