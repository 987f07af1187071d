"""Repetition segmentation driven by topographic peak prominence.

A clip is reduced to a one-dimensional signal (a joint coordinate or a
joint angle), smoothed with a centered moving average, and min-max
normalized. Local maxima whose topographic prominence exceeds a threshold
mark repetition holds; rep boundaries are the first sufficiently deep
local minima on either side of each retained peak.

The online segmenter replays the same computation incrementally: smoothed
samples finalize once the centered window is complete, and a rep is
emitted after its end minimum has been followed by a configurable number
of confirming frames. Offline and online runs therefore agree on rep
counts and boundaries for any clip that does not end mid-rep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .skeleton import (
    AngleTriplet,
    ClipSequence,
    DegenerateTriplet,
    KeypointFrame,
    angle_series,
    joint_angle,
)


class NotALocalMax(ValueError):
    """prominence() was asked about an index that is not a local maximum."""


class OutOfOrderFrame(ValueError):
    """A streamed frame's timestamp did not advance past its predecessor."""


@dataclass(frozen=True)
class SegmenterConfig:
    """Tuning for rep detection; defaults fit 30 fps pose streams."""

    prominence_threshold: float = 0.2
    smoothing_window: int = 5
    search_horizon_ms: float = 5000.0
    min_rep_ms: float = 800.0
    online_confirm_frames: int = 8
    # A rep boundary must return to within this fraction of the peak
    # height above the floor preceding the rep.
    boundary_return_band: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.prominence_threshold < 1.0:
            raise ValueError("prominence_threshold must lie in (0, 1)")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ValueError("smoothing_window must be a positive odd number")
        if self.search_horizon_ms <= 0 or self.min_rep_ms < 0:
            raise ValueError("time windows must be positive")
        if self.online_confirm_frames < 1:
            raise ValueError("online_confirm_frames must be at least 1")
        if not 0.0 < self.boundary_return_band < 1.0:
            raise ValueError("boundary_return_band must lie in (0, 1)")


@dataclass(frozen=True)
class SignalSource:
    """Where a segmentation signal comes from: a coordinate or an angle.

    ``invert`` flips the signal so exercises whose tracked joint rises
    during a hold (smaller image y) still present reps as peaks.
    """

    kind: str  # "coord" or "angle"
    joint: int = -1
    axis: str = "y"
    triplet: AngleTriplet | None = None
    invert: bool = False

    @classmethod
    def coord(cls, joint: int, axis: str, invert: bool = False) -> "SignalSource":
        if axis not in ("x", "y"):
            raise ValueError("axis must be 'x' or 'y'")
        return cls(kind="coord", joint=joint, axis=axis, invert=invert)

    @classmethod
    def angle(cls, triplet: AngleTriplet, invert: bool = False) -> "SignalSource":
        return cls(kind="angle", triplet=triplet, invert=invert)

    def describe(self) -> str:
        flip = ":inv" if self.invert else ""
        if self.kind == "coord":
            return f"coord:{self.joint}:{self.axis}{flip}"
        return f"angle:{self.triplet.label}{flip}"


@dataclass(frozen=True)
class SignalSeries:
    """A smoothed, min-max normalized segmentation signal."""

    times: np.ndarray
    values: np.ndarray
    source: SignalSource

    def __post_init__(self) -> None:
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must align")


@dataclass(frozen=True)
class Peak:
    index: int
    value: float
    prominence: float


@dataclass(frozen=True)
class RepSegment:
    """One detected repetition, inclusive frame indices into the signal."""

    start_index: int
    end_index: int
    peak_index: int
    prominence: float

    def __post_init__(self) -> None:
        if not self.start_index < self.peak_index < self.end_index:
            raise ValueError("expected start < peak < end")


def _seq_sum(values: Iterable[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with windows truncated at the edges.

    The window must be odd so centering is symmetric. Full windows are
    summed left-to-right in a fixed order, so identical windows produce
    bit-identical means; constant spans stay exactly flat and the online
    path can reproduce every sample.
    """
    if window % 2 == 0:
        raise ValueError("window must be odd")
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if window <= 1 or n == 0:
        return values.copy()
    half = window // 2
    out = np.empty(n, dtype=np.float64)
    if n >= window:
        acc = values[: n - window + 1].copy()
        for k in range(1, window):
            acc += values[k : k + n - window + 1]
        out[half : half + n - window + 1] = acc / window
    for i in range(min(half, n)):
        hi = min(i + half + 1, n)
        out[i] = _seq_sum(values[0:hi]) / hi
    for i in range(max(n - half, min(half, n)), n):
        lo = max(i - half, 0)
        out[i] = _seq_sum(values[lo:n]) / (n - lo)
    return out


def normalize(values: np.ndarray) -> np.ndarray:
    """Min-max rescale onto [0, 1]; constant input maps to all zeros."""
    lo = values.min()
    hi = values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def auto_source(clip: ClipSequence) -> SignalSource:
    """The joint coordinate with maximal temporal variance in the clip."""
    var = clip.points.var(axis=0)  # (joints, 2)
    joint, axis = np.unravel_index(np.argmax(var), var.shape)
    return SignalSource.coord(int(joint), "xy"[axis])


def raw_signal(clip: ClipSequence, source: SignalSource) -> np.ndarray:
    if source.kind == "coord":
        axis = 0 if source.axis == "x" else 1
        values = clip.points[:, source.joint, axis].copy()
    else:
        values = angle_series(clip, source.triplet)
    return -values if source.invert else values


def extract_signal(
    clip: ClipSequence,
    source: SignalSource | None = None,
    config: SegmenterConfig = SegmenterConfig(),
) -> SignalSeries:
    """Smoothed, normalized segmentation signal for a clip.

    Without an explicit source the joint/axis with maximal temporal
    variance is used.
    """
    if source is None:
        source = auto_source(clip)
    raw = raw_signal(clip, source)
    smoothed = moving_average(raw, config.smoothing_window)
    return SignalSeries(times=clip.times.copy(), values=normalize(smoothed), source=source)


def local_maxima(values: np.ndarray) -> list[int]:
    """Indices of local maxima, one per plateau (its left-middle sample).

    A run of equal values counts as a maximum only when both adjacent
    samples are strictly lower; runs touching either end of the series do
    not qualify.
    """
    n = len(values)
    maxima = []
    run_start = 0
    for i in range(1, n + 1):
        if i < n and values[i] == values[run_start]:
            continue
        # run [run_start, i-1] closed
        if (
            run_start > 0
            and i < n
            and values[run_start - 1] < values[run_start]
            and values[i] < values[run_start]
        ):
            maxima.append(run_start + (i - 1 - run_start) // 2)
        run_start = i
    return maxima


def _walk_saddle(values: np.ndarray, k: int, step: int) -> float:
    """Minimum along one side of k up to the first strictly higher sample.

    Returns -inf when the walk has no samples (k on the series edge).
    """
    n = len(values)
    y = values[k]
    saddle = math.inf
    i = k + step
    while 0 <= i < n and values[i] <= y:
        if values[i] < saddle:
            saddle = float(values[i])
        i += step
    return saddle if saddle != math.inf else -math.inf


def prominence(values: np.ndarray, k: int) -> float:
    """Topographic prominence of the local maximum at index k.

    Walking left and right from k until a strictly higher sample (or the
    series end), the key saddle on each side is the minimum over the
    walked range; the prominence is the peak height above the higher of
    the two saddles. The globally highest sample instead measures its
    height above the global minimum. A side with no walked samples
    contributes no saddle.

    Raises:
        NotALocalMax: if any immediate neighbor is strictly higher.
    """
    n = len(values)
    if not 0 <= k < n:
        raise IndexError(f"index {k} outside series of length {n}")
    y = float(values[k])
    if (k > 0 and values[k - 1] > y) or (k < n - 1 and values[k + 1] > y):
        raise NotALocalMax(f"index {k} has a strictly higher neighbor")
    if y == values.max():
        return y - float(values.min())
    return y - max(_walk_saddle(values, k, -1), _walk_saddle(values, k, 1))


def scored_peaks(signal: SignalSeries) -> list[Peak]:
    """Every local maximum of the signal with its prominence."""
    values = signal.values
    return [Peak(k, float(values[k]), prominence(values, k)) for k in local_maxima(values)]


def _boundary_qualifies(
    values: np.ndarray, i: int, forward: bool, threshold: float
) -> bool:
    """Is index i an acceptable rep boundary given a return threshold?

    The sample must be a local minimum (the series start counts on the
    backward side, the series end never counts) and must have returned to
    the threshold level, i.e. near the floor the rep ascended from. The
    return requirement keeps shallow minima on ramps and inside noisy
    holds from closing a rep early.
    """
    n = len(values)
    if values[i] > threshold:
        return False
    if forward:
        if i >= n - 1:
            return False
        return values[i] <= values[i - 1] and values[i] <= values[i + 1]
    if i == 0:
        return values[0] <= values[1]
    return values[i] <= values[i - 1] and values[i] <= values[i + 1]


def _return_threshold(peak_value: float, floor: float, config: SegmenterConfig) -> float:
    return floor + config.boundary_return_band * (peak_value - floor)


def _find_boundary(
    values: np.ndarray,
    times: np.ndarray,
    peak: int,
    floor: float,
    forward: bool,
    config: SegmenterConfig,
) -> int | None:
    """First qualifying boundary on one side of a peak, or None.

    ``floor`` is the key saddle on the peak's left (the level the rep
    rose from); both boundaries must descend back into a narrow band
    above it. The scan is limited to the search horizon.
    """
    threshold = _return_threshold(float(values[peak]), floor, config)
    indices = range(peak + 1, len(values)) if forward else range(peak - 1, -1, -1)
    for i in indices:
        if abs(times[i] - times[peak]) > config.search_horizon_ms:
            return None
        if _boundary_qualifies(values, i, forward, threshold):
            return i
    return None


def detect_reps(
    signal: SignalSeries, config: SegmenterConfig = SegmenterConfig()
) -> list[RepSegment]:
    """Detect repetitions in a segmentation signal.

    Retains local maxima whose prominence exceeds the configured
    threshold, walks out to boundary minima on both sides, and drops
    segments shorter than min_rep_ms. When two retained peaks produce
    overlapping segments they describe the same repetition, so only the
    earlier one is kept.
    """
    values = signal.values
    times = signal.times
    if len(values) < 3:
        return []
    retained = [
        (k, prom)
        for k in local_maxima(values)
        if (prom := prominence(values, k)) > config.prominence_threshold
    ]
    segments: list[RepSegment] = []
    for peak, prom in retained:
        floor = _walk_saddle(values, peak, -1)
        start = _find_boundary(values, times, peak, floor, False, config)
        end = _find_boundary(values, times, peak, floor, True, config)
        if start is None or end is None:
            continue
        if times[end] - times[start] < config.min_rep_ms:
            continue
        if segments and start < segments[-1].end_index:
            continue
        segments.append(
            RepSegment(start_index=start, end_index=end, peak_index=peak, prominence=prom)
        )
    return segments


def segment_clips(clip: ClipSequence, segments: Iterable[RepSegment]) -> list[ClipSequence]:
    """Slice a clip into one sub-clip per detected segment."""
    return [clip.slice(seg.start_index, seg.end_index) for seg in segments]


# Relative growth of the observed value range (per confirmation window)
# below which the online range is treated as settled.
_SPAN_SETTLE = 0.05


@dataclass
class _PendingPeak:
    index: int
    value: float
    left_saddle: float  # -inf when no walked samples on the left
    right_min: float = math.inf
    right_walled: bool = False


class OnlineSegmenter:
    """Streaming rep detector mirroring detect_reps() frame by frame.

    Smoothed samples finalize once their centered window is complete
    (half-window lag); a rep is emitted when its end boundary has been
    followed by ``online_confirm_frames`` finalized frames. All
    comparisons run on the same smoothed values the offline pass sees, so
    decisions match detect_reps() for any clip with a resting tail.
    """

    def __init__(self, source: SignalSource, config: SegmenterConfig = SegmenterConfig()):
        self.source = source
        self.config = config
        self._raw: list[float] = []
        self._times: list[float] = []
        self._smoothed = np.empty(256, dtype=np.float64)
        self._stimes = np.empty(256, dtype=np.float64)
        self._count = 0  # finalized smoothed samples
        self._run_min = math.inf
        self._run_max = -math.inf
        self._run_start = 0  # current plateau run start (finalized indexing)
        self._peaks: list[_PendingPeak] = []
        self._cursor = 0  # first peak not yet resolved
        self._scan_peak: int | None = None  # peaks index being boundary-scanned
        self._scan_pos = 0
        self._scan_start: int | None = None
        self._last_end = -1  # end index of the last emitted segment
        self._spans: list[float] = []  # value range after each finalized sample
        self._last_time = -math.inf
        self._last_valid_value: float | None = None
        self.emitted: list[RepSegment] = []

    # -- frame ingestion -------------------------------------------------

    def _frame_value(self, frame: KeypointFrame) -> float:
        if self.source.kind == "coord":
            axis = 0 if self.source.axis == "x" else 1
            value = float(frame.points[self.source.joint, axis])
        else:
            try:
                value = joint_angle(frame, self.source.triplet)
            except DegenerateTriplet:
                value = self._last_valid_value if self._last_valid_value is not None else 0.0
            self._last_valid_value = value
        return -value if self.source.invert else value

    def step(self, frame: KeypointFrame) -> tuple[RepSegment, ...]:
        """Ingest one frame; return any repetitions completed by it."""
        if frame.time_ms <= self._last_time:
            raise OutOfOrderFrame(
                f"frame at {frame.time_ms}ms after {self._last_time}ms"
            )
        self._last_time = frame.time_ms
        self._raw.append(self._frame_value(frame))
        self._times.append(frame.time_ms)
        emitted: list[RepSegment] = []
        t = len(self._raw) - 1
        half = self.config.smoothing_window // 2
        if t - half >= 0:
            self._finalize(t - half)
            emitted.extend(self._advance())
        return tuple(emitted)

    def _finalize(self, i: int) -> None:
        half = self.config.smoothing_window // 2
        lo = max(i - half, 0)
        hi = min(i + half + 1, len(self._raw))
        value = _seq_sum(self._raw[lo:hi]) / (hi - lo)
        if self._count == len(self._smoothed):
            self._smoothed = np.concatenate([self._smoothed, np.empty_like(self._smoothed)])
            self._stimes = np.concatenate([self._stimes, np.empty_like(self._stimes)])
        self._smoothed[self._count] = value
        self._stimes[self._count] = self._times[i]
        self._count += 1
        self._run_min = min(self._run_min, value)
        self._run_max = max(self._run_max, value)
        self._spans.append(self._run_max - self._run_min)
        self._track_runs()
        self._update_pending(value)

    # -- incremental peak bookkeeping -------------------------------------

    def _track_runs(self) -> None:
        """Close the current equal-value run if the new sample breaks it."""
        m = self._count
        y = self._smoothed
        if m < 2:
            return
        new = y[m - 1]
        run_value = y[self._run_start]
        if new == run_value:
            return
        run_start, run_end = self._run_start, m - 2
        self._run_start = m - 1
        if run_start == 0 or new >= run_value:
            return
        if y[run_start - 1] >= run_value:
            return
        peak = run_start + (run_end - run_start) // 2
        self._peaks.append(
            _PendingPeak(
                index=peak,
                value=float(run_value),
                left_saddle=_walk_saddle(self._smoothed[: self._count], peak, -1),
            )
        )

    def _update_pending(self, new_value: float) -> None:
        for peak in self._peaks[self._cursor :]:
            if not peak.right_walled:
                if new_value > peak.value:
                    peak.right_walled = True
                elif new_value < peak.right_min:
                    peak.right_min = new_value

    def _prominence_now(self, peak: _PendingPeak) -> float:
        if peak.value == self._run_max:
            return peak.value - self._run_min
        right = peak.right_min if peak.right_min != math.inf else -math.inf
        return peak.value - max(peak.left_saddle, right)

    # -- emission ----------------------------------------------------------

    def _range_settled(self) -> bool:
        """True once the observed value range has stopped growing.

        Early in a stream the signal range is dominated by noise, which
        makes every wiggle look prominent. Holding emissions until the
        range is stable over a confirmation window reproduces the offline
        pass, which always normalizes against the full recording.
        """
        d = self.config.online_confirm_frames
        if len(self._spans) <= d:
            return False
        return self._spans[-1] <= self._spans[-1 - d] * (1.0 + _SPAN_SETTLE)

    def _advance(self) -> list[RepSegment]:
        if not self._range_settled():
            return []
        emitted: list[RepSegment] = []
        config = self.config
        y = self._smoothed[: self._count]
        times = self._stimes[: self._count]
        span = self._run_max - self._run_min
        j = self._cursor
        while j < len(self._peaks):
            peak = self._peaks[j]
            prom = self._prominence_now(peak)
            if span <= 0 or prom / span <= config.prominence_threshold:
                j += 1  # tentative skip; revisited until a later rep resolves
                continue
            if self._scan_peak != j:
                self._scan_peak = j
                self._scan_pos = peak.index + 1
                self._scan_start = _find_boundary(
                    y, times, peak.index, peak.left_saddle, False, config
                )
            if self._scan_start is None:
                self._resolve(j)
                j = self._cursor
                continue
            end = self._scan_end(y, times, peak, config)
            if end == -1:
                break  # waiting for more finalized frames
            if end is None:
                self._resolve(j)
                j = self._cursor
                continue
            duration_ok = times[end] - times[self._scan_start] >= config.min_rep_ms
            if duration_ok and self._scan_start >= self._last_end:
                seg = RepSegment(
                    start_index=self._scan_start,
                    end_index=end,
                    peak_index=peak.index,
                    prominence=prom / span,
                )
                emitted.append(seg)
                self.emitted.append(seg)
                self._last_end = end
            self._resolve(j)
            j = self._cursor
        return emitted

    def _scan_end(
        self, y: np.ndarray, times: np.ndarray, peak: _PendingPeak, config: SegmenterConfig
    ) -> int | None:
        """Advance the end scan; -1 means blocked on future data."""
        d = config.online_confirm_frames
        threshold = _return_threshold(peak.value, peak.left_saddle, config)
        while self._scan_pos + d <= self._count - 1:
            i = self._scan_pos
            if times[i] - times[peak.index] > config.search_horizon_ms:
                return None
            if _boundary_qualifies(y, i, True, threshold):
                return i
            self._scan_pos += 1
        return -1

    def _resolve(self, j: int) -> None:
        """Mark peak j handled; earlier tentative skips become permanent."""
        self._cursor = j + 1
        self._scan_peak = None
        self._scan_start = None


def online_step(segmenter: OnlineSegmenter, frame: KeypointFrame) -> RepSegment | None:
    """Single-frame convenience wrapper around OnlineSegmenter.step()."""
    reps = segmenter.step(frame)
    return reps[0] if reps else None
