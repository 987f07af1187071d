from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from isoform.classifier import ModelBundle, TrainConfig, fit_bands, save_bundle, train_mlp
from isoform.exercises import get_exercise
from isoform.features import feature_matrix, resolve_triplets
from isoform.skeleton import COCO17, AngleTriplet, ClipSequence, KeypointFrame, SkeletonProfile
from isoform.synth import SynthSpec, synthesize

# Minimal three-joint profile for geometry-only tests.
TRI = SkeletonProfile(
    name="tri",
    joint_names=("a", "b", "c"),
    angle_triplets=(AngleTriplet(0, 1, 2, "abc"),),
)


def tri_frame(pi, pj, pk, time_ms=0.0) -> KeypointFrame:
    points = np.array([pi, pj, pk], dtype=np.float64)
    return KeypointFrame(time_ms, points, np.ones(3))


def tri_clip(frames) -> ClipSequence:
    return ClipSequence.from_frames(TRI, frames)


@pytest.fixture
def coco_profile() -> SkeletonProfile:
    return COCO17


@pytest.fixture(scope="session")
def tree_bundle() -> ModelBundle:
    """A model bundle trained once on synthetic tree-pose clips."""
    exercise = get_exercise("tree")
    labels = exercise.feature_triplets
    triplets = resolve_triplets(COCO17, labels)
    blocks = []
    for class_index in range(3):
        rows = []
        for seed in range(5):
            result = synthesize(
                SynthSpec(
                    exercise="tree",
                    class_index=class_index,
                    reps=5,
                    noise_sigma=0.01,
                    seed=1000 + 100 * class_index + seed,
                )
            )
            rows.append(feature_matrix(list(result.rep_clips), triplets))
        blocks.append(np.vstack(rows))
    features = np.vstack(blocks)
    class_labels = np.repeat([0, 1, 2], [len(b) for b in blocks])
    config = TrainConfig(epochs=400, learning_rate=0.02, seed=7)
    return ModelBundle(
        exercise="tree",
        profile="coco17",
        classes=exercise.classes,
        triplet_labels=labels,
        bin_count=36,
        mlp=train_mlp(features, class_labels, config),
        bands=fit_bands(blocks[0], labels),
    )


@pytest.fixture(scope="session")
def models_dir(tmp_path_factory, tree_bundle) -> Path:
    """A models directory holding the tree bundle under its wire name."""
    directory = tmp_path_factory.mktemp("models")
    save_bundle(tree_bundle, directory / "tree.json")
    return directory
