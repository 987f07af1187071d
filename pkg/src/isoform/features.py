"""Angle-histogram features summarizing one repetition.

Each configured angle triplet contributes a single number: the center of
the most populated bin in that angle's histogram over the rep. Ten-degree
bins absorb keypoint jitter while still separating mistake-sized
orientation shifts, and the argmax naturally favors the long hold phase
over the entry and exit transitions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .skeleton import AngleTriplet, ClipSequence, SkeletonProfile, angle_series


@dataclass(frozen=True)
class FeatureConfig:
    """Histogram layout shared by feature extraction and band fitting."""

    bin_count: int = 36

    def __post_init__(self) -> None:
        if self.bin_count < 4:
            raise ValueError("bin_count must be at least 4")

    @property
    def bin_width(self) -> float:
        return 360.0 / self.bin_count

    @property
    def bin_edges(self) -> np.ndarray:
        return self.bin_width * np.arange(self.bin_count + 1)


@dataclass(frozen=True)
class AngleHistogram:
    """Bin counts of one triplet's angle over a repetition."""

    triplet_label: str
    bin_edges: np.ndarray  # length bin_count + 1, spans [0, 360]
    counts: np.ndarray  # integer counts, one per bin

    def __post_init__(self) -> None:
        if len(self.bin_edges) != len(self.counts) + 1:
            raise ValueError("need exactly one more edge than bins")

    @property
    def sample_count(self) -> int:
        return int(self.counts.sum())

    def peak_bin_center(self) -> float:
        """Center of the most populated bin; ties go to the lowest bin."""
        k = int(np.argmax(self.counts))
        return float((self.bin_edges[k] + self.bin_edges[k + 1]) / 2.0)


@dataclass(frozen=True)
class AngleFeatureVector:
    """One histogram-peak angle (degrees) per configured triplet."""

    triplet_labels: tuple[str, ...]
    values: np.ndarray  # degrees, on the bin-center lattice

    def __post_init__(self) -> None:
        if len(self.triplet_labels) != len(self.values):
            raise ValueError("one value per triplet required")

    def normalized(self) -> np.ndarray:
        """Model-facing scaling of the degree values onto [0, 1)."""
        return self.values / 360.0


def histogram(
    rep_clip: ClipSequence, triplet: AngleTriplet, config: FeatureConfig = FeatureConfig()
) -> AngleHistogram:
    """Histogram of one triplet's angle over a repetition sub-clip.

    Bin k covers [edges[k], edges[k+1]); angles live on [0, 360) so every
    sample lands in a bin and the counts sum to the rep's frame count.
    """
    angles = angle_series(rep_clip, triplet)
    edges = config.bin_edges
    bins = np.searchsorted(edges, angles, side="right") - 1
    counts = np.bincount(bins, minlength=config.bin_count)
    return AngleHistogram(triplet_label=triplet.label, bin_edges=edges, counts=counts)


def feature_vector(
    rep_clip: ClipSequence,
    triplets: tuple[AngleTriplet, ...],
    config: FeatureConfig = FeatureConfig(),
) -> AngleFeatureVector:
    """Histogram-peak angle per triplet for one repetition sub-clip."""
    values = np.array(
        [histogram(rep_clip, t, config).peak_bin_center() for t in triplets]
    )
    return AngleFeatureVector(
        triplet_labels=tuple(t.label for t in triplets), values=values
    )


def resolve_triplets(
    profile: SkeletonProfile, labels: tuple[str, ...]
) -> tuple[AngleTriplet, ...]:
    """Look up the profile's triplet definition for each label."""
    return tuple(profile.triplet(label) for label in labels)


def feature_matrix(
    rep_clips: list[ClipSequence],
    triplets: tuple[AngleTriplet, ...],
    config: FeatureConfig = FeatureConfig(),
) -> np.ndarray:
    """Stacked feature vectors (degrees), one row per repetition."""
    if not rep_clips:
        return np.empty((0, len(triplets)))
    return np.vstack([feature_vector(c, triplets, config).values for c in rep_clips])
