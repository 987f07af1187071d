"""Live feedback engine: stream keypoint frames, get per-rep verdicts.

A session wires the online segmenter to the feature extractor and the
trained models for one exercise. Each completed repetition immediately
produces a FeedbackEvent; ending the session produces a SessionReport
summarizing verdicts, the dominant mistake, and per-joint deviations.

The classifier's argmax decides each verdict. Band grading runs on every
rep too, but only to name which angles drifted and by how much; it never
overrides the classifier. A rep whose strongest mistake probability
stays below the confidence threshold is reported as "uncertain" rather
than guessed at.
"""

from __future__ import annotations

import math
import uuid
from dataclasses import dataclass, field

import numpy as np

from .classifier import (
    BandViolation,
    ClassPrediction,
    GradeResult,
    ModelBundle,
    grade,
    predict,
    wrap_degrees,
)
from .exercises import ExerciseDef, UnknownExercise, get_exercise
from .features import AngleFeatureVector, FeatureConfig, feature_vector, resolve_triplets
from .segmentation import (
    OnlineSegmenter,
    OutOfOrderFrame,
    RepSegment,
    SegmenterConfig,
)
from .skeleton import (
    BUILTIN_PROFILES,
    AngleTriplet,
    ClipSequence,
    KeypointFrame,
    SkeletonProfile,
)

__all__ = [
    "FeedbackEvent",
    "ModelMissing",
    "OutOfOrderFrame",
    "RepRecord",
    "SessionReport",
    "SessionState",
    "UNCERTAIN",
    "UnknownExercise",
    "classify_verdict",
    "session_end",
    "session_frame",
    "session_start",
]

UNCERTAIN = "uncertain"
DEFAULT_TAU = 0.5


class ModelMissing(LookupError):
    """No trained model bundle is available for the requested exercise."""


@dataclass(frozen=True)
class FeedbackEvent:
    """Immediate per-rep feedback, emitted as soon as the rep confirms."""

    rep_index: int
    verdict: str
    probs: tuple[float, float, float]
    violations: tuple[BandViolation, ...]
    latency_ms: float
    start_ms: float
    end_ms: float


@dataclass(frozen=True)
class RepRecord:
    """One logged repetition: segment, prediction, grade, and verdict."""

    segment: RepSegment
    prediction: ClassPrediction
    grade: GradeResult
    feature: AngleFeatureVector
    verdict: str
    latency_ms: float
    start_ms: float
    end_ms: float


@dataclass(frozen=True)
class SessionReport:
    """Post-session assessment derived from the rep log."""

    exercise: str
    rep_count: int
    totals: dict
    dominant_mistake: str | None
    mean_deviation: dict
    uncertain_percent: float
    timeline: tuple[FeedbackEvent, ...]
    dropped_frames: int


@dataclass
class SessionState:
    """All mutable state for one live session.

    Frames are processed strictly in arrival order; the rep log is
    append-only. Everything shared across sessions (the model bundle) is
    immutable, so concurrent sessions only need their own SessionState.
    """

    session_id: str
    exercise: ExerciseDef
    bundle: ModelBundle
    tau: float
    segmenter: OnlineSegmenter
    triplets: tuple[AngleTriplet, ...]
    feature_config: FeatureConfig
    frames: list[KeypointFrame] = field(default_factory=list)
    rep_log: list[RepRecord] = field(default_factory=list)
    dropped_frames: int = 0
    last_time_ms: float = -math.inf

    @property
    def profile(self) -> SkeletonProfile:
        return BUILTIN_PROFILES[self.bundle.profile]


def session_start(
    exercise: str,
    bundle: ModelBundle | None,
    tau: float = DEFAULT_TAU,
    segmenter_config: SegmenterConfig = SegmenterConfig(),
) -> SessionState:
    """Create a fresh session for one exercise from its model bundle.

    Raises UnknownExercise for names outside the registry and
    ModelMissing when no bundle is given or the bundle was trained for a
    different exercise.
    """
    definition = get_exercise(exercise)
    if bundle is None:
        raise ModelMissing(f"no model bundle for exercise {exercise!r}")
    if bundle.exercise != definition.name:
        raise ModelMissing(
            f"bundle was trained for {bundle.exercise!r}, not {definition.name!r}"
        )
    profile = BUILTIN_PROFILES.get(bundle.profile)
    if profile is None:
        raise ModelMissing(f"bundle references unknown profile {bundle.profile!r}")
    return SessionState(
        session_id=uuid.uuid4().hex,
        exercise=definition,
        bundle=bundle,
        tau=tau,
        segmenter=OnlineSegmenter(definition.signal_source(), segmenter_config),
        triplets=resolve_triplets(profile, bundle.triplet_labels),
        feature_config=FeatureConfig(bin_count=bundle.bin_count),
    )


def classify_verdict(
    prediction: ClassPrediction, classes: tuple[str, str, str], tau: float
) -> str:
    """Verdict for one rep: a class label, or uncertain below threshold.

    A rep is uncertain exactly when the argmax names a mistake but no
    mistake probability reaches tau; a confident argmax (correct or
    mistake) keeps its class label. A tie at exactly tau counts as
    confident.
    """
    index = prediction.predicted_class
    if index != 0 and prediction.max_mistake_prob < tau:
        return UNCERTAIN
    return classes[index]


def _assess_rep(state: SessionState, segment: RepSegment, now_ms: float) -> RepRecord:
    rep_frames = state.frames[segment.start_index : segment.end_index + 1]
    clip = ClipSequence.from_frames(state.profile, rep_frames)
    feature = feature_vector(clip, state.triplets, state.feature_config)
    prediction = predict(state.bundle.mlp, feature)
    graded = grade(feature, state.bundle.bands, level="standard")
    end_ms = float(clip.times[-1])
    return RepRecord(
        segment=segment,
        prediction=prediction,
        grade=graded,
        feature=feature,
        verdict=classify_verdict(prediction, state.exercise.classes, state.tau),
        latency_ms=now_ms - end_ms,
        start_ms=float(clip.times[0]),
        end_ms=end_ms,
    )


def _event(index: int, record: RepRecord) -> FeedbackEvent:
    return FeedbackEvent(
        rep_index=index,
        verdict=record.verdict,
        probs=tuple(float(p) for p in record.prediction.probs),
        violations=record.grade.violations,
        latency_ms=record.latency_ms,
        start_ms=record.start_ms,
        end_ms=record.end_ms,
    )


def session_frame(
    state: SessionState, frame: KeypointFrame
) -> tuple[SessionState, list[FeedbackEvent]]:
    """Feed one frame; return the state and any newly completed reps.

    The state is updated in place and returned for call-site chaining.
    A frame whose timestamp does not advance is dropped: the session's
    dropped-frame counter is incremented and OutOfOrderFrame is raised
    without any other state change.
    """
    try:
        segments = state.segmenter.step(frame)
    except OutOfOrderFrame:
        state.dropped_frames += 1
        raise
    state.frames.append(frame)
    state.last_time_ms = frame.time_ms
    events: list[FeedbackEvent] = []
    for segment in segments:
        record = _assess_rep(state, segment, frame.time_ms)
        state.rep_log.append(record)
        events.append(_event(len(state.rep_log) - 1, record))
    return state, events


def session_end(state: SessionState) -> SessionReport:
    """Summarize the session; pure over the state, so calling it again
    (or calling it on an untouched state) returns an equal report."""
    classes = state.exercise.classes
    totals = {classes[0]: 0, classes[1]: 0, classes[2]: 0, UNCERTAIN: 0}
    for record in state.rep_log:
        totals[record.verdict] += 1

    dominant = None
    mistake_counts = [(totals[label], label) for label in classes[1:]]
    best = max(count for count, _ in mistake_counts)
    if best > 0:
        dominant = next(label for count, label in mistake_counts if count == best)

    labels = state.bundle.bands.triplet_labels
    if state.rep_log:
        stacked = np.stack(
            [
                wrap_degrees(record.feature.values - state.bundle.bands.means)
                for record in state.rep_log
            ]
        )
        per_triplet = stacked.mean(axis=0)
        mean_deviation = {label: float(d) for label, d in zip(labels, per_triplet)}
    else:
        mean_deviation = {}

    count = len(state.rep_log)
    uncertain_percent = 100.0 * totals[UNCERTAIN] / count if count else 0.0
    return SessionReport(
        exercise=state.exercise.name,
        rep_count=count,
        totals=totals,
        dominant_mistake=dominant,
        mean_deviation=mean_deviation,
        uncertain_percent=uncertain_percent,
        timeline=tuple(_event(i, r) for i, r in enumerate(state.rep_log)),
        dropped_frames=state.dropped_frames,
    )
