"""The OCON model: an ordered bank of independently trained one-class MLPs.

All members share one topology and one scaling record.  Joint inference runs
every member on the (scaled) input and takes the first occurrence of the
maximum of the per-class probability vector.  Members are independently
retrainable; saving writes one checkpoint per member plus a JSON manifest, so
swapping a single member never touches the others' bytes.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DimensionMismatch,
    ManifestMismatch,
    MissingMember,
    PartialEnsemble,
)
from .features import SPEAKER_CLASS_NAMES, FeatureSetKind, ScalingRecord
from .mlp import load_model, save_model
from .training import train_one_class
from .util import derive_seed, sha256_file

ENSEMBLE_VERSION = 1
MANIFEST_NAME = "ensemble.json"


@dataclass
class OconModel:
    """Ordered member bank plus the shared feature-space provenance."""

    class_names: tuple
    members: list                     # MlpModel per class, label order
    scaling: ScalingRecord
    feature_set: FeatureSetKind
    f0_mode: str = "raw"

    def __post_init__(self):
        if len(self.members) != len(self.class_names):
            raise ManifestMismatch("one member required per class")
        want = self.scaling.content_hash()
        for name, member in zip(self.class_names, self.members):
            if member.config.input_dim != self.feature_set.dim:
                raise ManifestMismatch(
                    f"member {name!r} input dim {member.config.input_dim} != "
                    f"{self.feature_set.dim}")
            if member.scaling_hash and member.scaling_hash != want:
                raise ManifestMismatch(f"member {name!r} trained with different scaling")

    @property
    def n_classes(self):
        return len(self.class_names)


def _train_member(matrix, class_id, mlp_config, train_config, task):
    member_mlp = replace(mlp_config, seed=derive_seed(mlp_config.seed, "member", class_id))
    member_tc = replace(train_config, seed=derive_seed(train_config.seed, "member", class_id))
    return train_one_class(matrix, class_id, member_mlp, member_tc, task=task)


def train_ensemble(matrix, mlp_config, train_config, workers=1, task="phoneme"):
    """Train one member per class; returns (OconModel, reports).

    Member seeds derive from (master seed, class id), so any level of
    parallelism produces identical results.  If any member diverges the
    whole bank is rejected with PartialEnsemble naming the failures.
    """
    class_names = SPEAKER_CLASS_NAMES if task == "speaker" else matrix.class_names
    class_ids = list(range(len(class_names)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_train_member, matrix, cid, mlp_config,
                                   train_config, task) for cid in class_ids]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_train_member(matrix, cid, mlp_config, train_config, task)
                    for cid in class_ids]

    members = [model for model, _ in outcomes]
    reports = [report for _, report in outcomes]
    failures = [r.class_name for r in reports if r.stop_reason == "diverged"]
    if failures:
        raise PartialEnsemble(failures, reports=reports)
    model = OconModel(class_names=tuple(class_names), members=members,
                      scaling=matrix.scaling, feature_set=matrix.feature_set,
                      f0_mode=matrix.f0_mode)
    return model, reports


def retrain_member(model, matrix, class_id, mlp_config, train_config, task="phoneme"):
    """Retrain a single member in place; other members are untouched."""
    member, report = _train_member(matrix, class_id, mlp_config, train_config, task)
    if report.stop_reason == "diverged":
        raise PartialEnsemble([report.class_name], reports=[report])
    model.members[class_id] = member
    return report


def infer(model, vector, scaled=False):
    """Per-class probability vector and the first-max predicted label.

    ``vector`` may be one feature vector or a (B, d) batch; raw inputs are
    passed through the shared scaling (clamped) unless ``scaled=True``.
    """
    x = np.asarray(vector, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.feature_set.dim:
        raise DimensionMismatch(
            f"input width {x.shape[1]} != feature dim {model.feature_set.dim}")
    if not scaled:
        x = model.scaling.apply(x)
    logits = np.column_stack([m.predict_proba(x) for m in model.members])
    predicted = np.argmax(logits, axis=1)  # first occurrence on ties
    if single:
        return logits[0], int(predicted[0])
    return logits, predicted


@dataclass
class EnsembleEvaluation:
    per_class_accuracy: dict          # class name -> binary accuracy, percent
    argmax_accuracy: float            # percent
    confusion: np.ndarray             # (K, K), rows true, cols predicted
    scores: np.ndarray                # (N, K) member probabilities

    @property
    def average_accuracy(self):
        return sum(self.per_class_accuracy.values()) / len(self.per_class_accuracy)


def _task_labels(model, matrix):
    if tuple(model.class_names) == SPEAKER_CLASS_NAMES:
        from .balancer import speaker_labels
        return speaker_labels(matrix)
    return matrix.labels


def evaluate_ensemble(model, matrix):
    """Whole-dataset evaluation: per-member accuracy at threshold 0.5,
    joint first-max accuracy, and the K x K confusion matrix."""
    if model.scaling.content_hash() != matrix.scaling.content_hash():
        raise ManifestMismatch("matrix scaling differs from the ensemble's")
    labels = _task_labels(model, matrix)
    scores, predicted = infer(model, matrix.values, scaled=True)
    k = model.n_classes

    per_class = {}
    for c, name in enumerate(model.class_names):
        truth = labels == c
        hit = (scores[:, c] >= 0.5) == truth
        per_class[name] = 100.0 * float(np.mean(hit))

    argmax_accuracy = 100.0 * float(np.mean(predicted == labels))
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (labels, predicted), 1)
    return EnsembleEvaluation(per_class_accuracy=per_class,
                              argmax_accuracy=argmax_accuracy,
                              confusion=confusion, scores=scores)


def save_ensemble(model, dirpath):
    """Write member checkpoints plus the manifest into a directory."""
    os.makedirs(dirpath, exist_ok=True)
    entries = []
    for name, member in zip(model.class_names, model.members):
        fname = f"member_{name}.ocmdl"
        save_model(member, os.path.join(dirpath, fname))
        entries.append({"class": name, "file": fname,
                        "sha256": sha256_file(os.path.join(dirpath, fname))})
    manifest = {
        "version": ENSEMBLE_VERSION,
        "class_names": list(model.class_names),
        "feature_set": model.feature_set.value,
        "f0_mode": model.f0_mode,
        "scaling": model.scaling.to_dict(),
        "scaling_hash": model.scaling.content_hash(),
        "members": entries,
    }
    with open(os.path.join(dirpath, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def load_ensemble(dirpath):
    """Load and validate an ensemble directory (hashes, topology, scaling)."""
    manifest_path = os.path.join(dirpath, MANIFEST_NAME)
    if not os.path.exists(manifest_path):
        raise ManifestMismatch(f"no {MANIFEST_NAME} in {dirpath}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("version", 0) > ENSEMBLE_VERSION:
        raise ManifestMismatch(f"ensemble version {manifest.get('version')} unsupported")

    scaling = ScalingRecord.from_dict(manifest["scaling"])
    if scaling.content_hash() != manifest["scaling_hash"]:
        raise ManifestMismatch("scaling record does not match its recorded hash")

    members = []
    topology = None
    for entry in manifest["members"]:
        path = os.path.join(dirpath, entry["file"])
        if not os.path.exists(path):
            raise MissingMember(entry["class"])
        if sha256_file(path) != entry["sha256"]:
            raise ManifestMismatch(f"member file {entry['file']} hash mismatch")
        member = load_model(path)
        shape = (member.config.input_dim, member.config.hidden_layers)
        if topology is None:
            topology = shape
        elif shape != topology:
            raise ManifestMismatch(f"member {entry['class']!r} topology differs")
        members.append(member)

    return OconModel(class_names=tuple(manifest["class_names"]), members=members,
                     scaling=scaling, feature_set=FeatureSetKind(manifest["feature_set"]),
                     f0_mode=manifest["f0_mode"])
