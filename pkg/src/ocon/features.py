"""Feature transforms: F0-ratio normalization, min-max scaling, matrix files.

The pipeline is ratio-first: each formant frequency is divided by the
utterance's steady-state F0, then the whole feature set is min-max scaled
into [0, 1].  Scaling is fit on the full processed dataset before any split
(this reproduces the reference pipeline; the train/test leakage this implies
is deliberate and documented).  Z-score standardization exists behind a flag
but is off by default since the ratio distributions are strongly skewed.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import container
from .dataset import ARPABET_CODES, filter_usable
from .errors import ConstantColumn, DimensionMismatch, UnusableRecord
from .util import sha256_json

MATRIX_KIND = "feature_matrix"
MATRIX_VERSION = 1

_TIMEPOINTS = ("10", "50", "ss", "80")


class FeatureSetKind(Enum):
    """Which feature vector is built from a record.

    - ``SS3``: F1/F0, F2/F0, F3/F0 at the vowel steady state (dim 3).
    - ``SS4``: SS3 plus a trailing F0 channel, raw Hz or constant 1.0 (dim 4).
    - ``TT12``: F1..F3/F0 at 10%, 50%, steady state, 80% (dim 12), ordered
      formant-major: (F1@10, F1@50, F1@SS, F1@80, F2@10, ..., F3@80).
    """

    SS3 = "ss3"
    SS4 = "ss4"
    TT12 = "tt12"

    @property
    def dim(self):
        return {"ss3": 3, "ss4": 4, "tt12": 12}[self.value]

    @property
    def ratio_keys(self):
        """Formant fields divided by F0, in output-component order."""
        if self in (FeatureSetKind.SS3, FeatureSetKind.SS4):
            return ("f1_ss", "f2_ss", "f3_ss")
        return tuple(f"f{fmt}_{tp}" for fmt in (1, 2, 3) for tp in _TIMEPOINTS)

    @property
    def required_keys(self):
        return ("f0_ss",) + self.ratio_keys

    @property
    def component_names(self):
        names = [f"{k}/f0" for k in self.ratio_keys]
        if self is FeatureSetKind.SS4:
            names.append("f0")
        return tuple(names)


def normalize_by_f0(record, kind, f0_mode="raw"):
    """Ratio feature vector for one record.

    Every component is Fi(t)/F0 with the single steady-state F0; the SS4
    variant appends an F0 channel (raw Hz when ``f0_mode="raw"``, constant 1.0
    when ``"unit"``).  Raises UnusableRecord if any required field is <= 0.
    """
    f0 = record.value("f0_ss")
    values = [record.value(k) for k in kind.required_keys]
    if any(v <= 0 for v in values):
        raise UnusableRecord(f"record {record.filename} has non-positive required fields")
    out = np.array([record.value(k) / f0 for k in kind.ratio_keys], dtype=np.float64)
    if kind is FeatureSetKind.SS4:
        channel = f0 if f0_mode == "raw" else 1.0
        out = np.append(out, channel)
    return out


@dataclass(frozen=True)
class ScalingRecord:
    """Per-column affine scaling actually used to produce a matrix.

    ``mode="minmax"``: lo/hi are the fitted per-column min and max, and
    application clamps into [0, 1].  ``mode="zscore"``: lo/hi hold mean and
    standard deviation, and application does not clamp.
    """

    lo: np.ndarray
    hi: np.ndarray
    mode: str = "minmax"

    @property
    def dim(self):
        return len(self.lo)

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} columns, got {x.shape[-1]}")
        if self.mode == "minmax":
            scaled = (x - self.lo) / (self.hi - self.lo)
            return np.clip(scaled, 0.0, 1.0)
        return (x - self.lo) / self.hi

    def to_dict(self):
        return {"mode": self.mode, "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["lo"], dtype=np.float64),
                   np.asarray(d["hi"], dtype=np.float64), d["mode"])

    def content_hash(self):
        return sha256_json(self.to_dict())


def fit_minmax(matrix):
    """Per-column (min, max) over the full ratio matrix.

    Requires at least 2 rows and spread in every column; a constant column
    raises ConstantColumn with its index.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError("min-max fit needs a 2-D matrix with at least 2 rows")
    lo = matrix.min(axis=0)
    hi = matrix.max(axis=0)
    flat = np.flatnonzero(hi <= lo)
    if flat.size:
        raise ConstantColumn(int(flat[0]))
    return ScalingRecord(lo=lo, hi=hi, mode="minmax")


def apply_minmax(x, scaling):
    """Scale into [0, 1] per column; values outside the fit range clamp."""
    if scaling.mode != "minmax":
        raise ValueError("scaling record is not min-max")
    return scaling.apply(x)


def fit_zscore(matrix):
    """Per-column (mean, std).  Off the default path; see module docstring."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError("z-score fit needs a 2-D matrix with at least 2 rows")
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    flat = np.flatnonzero(std == 0)
    if flat.size:
        raise ConstantColumn(int(flat[0]))
    return ScalingRecord(lo=mean, hi=std, mode="zscore")


#: Label table for the speaker-group task (children = boys + girls).
SPEAKER_CLASS_NAMES = ("male", "female", "children")


@dataclass(frozen=True)
class FeatureMatrix:
    """Scaled feature vectors with labels and transform provenance.

    ``labels`` index into ``class_names`` (phoneme codes by default);
    ``groups`` keep the raw speaker-group code of each row so the 3-class
    speaker task can be derived from the same matrix.
    """

    values: np.ndarray          # (N, d) float64, scaled
    labels: np.ndarray          # (N,) int64
    groups: np.ndarray          # (N,) int64 speaker-group codes
    scaling: ScalingRecord
    feature_set: FeatureSetKind
    class_names: tuple = ARPABET_CODES
    f0_mode: str = "raw"

    def __post_init__(self):
        n, d = self.values.shape
        if d != self.feature_set.dim:
            raise DimensionMismatch(
                f"matrix width {d} != {self.feature_set.value} dim {self.feature_set.dim}")
        if len(self.labels) != n or len(self.groups) != n:
            raise DimensionMismatch("labels/groups length != row count")
        if self.scaling.dim != d:
            raise DimensionMismatch("scaling record width != matrix width")

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_classes(self):
        return len(self.class_names)

    def class_name(self, label_id):
        return self.class_names[label_id]

    def take(self, indices):
        """Row-sliced matrix sharing this one's scaling and provenance.

        Lets any evaluation run on a subset (e.g. a held-out split) instead
        of the whole dataset.
        """
        indices = np.asarray(indices)
        return FeatureMatrix(values=self.values[indices], labels=self.labels[indices],
                             groups=self.groups[indices], scaling=self.scaling,
                             feature_set=self.feature_set,
                             class_names=self.class_names, f0_mode=self.f0_mode)


def build_feature_matrix(records, kind, scaling=None, f0_mode="raw", zscore=False):
    """Filter, normalize, scale, and stack records into a FeatureMatrix.

    When ``scaling`` is given it is applied as-is (inference path); otherwise
    it is fit on these rows.  Returns (matrix, dropped_records).
    """
    kept, dropped = filter_usable(records, kind)
    if not kept:
        raise ValueError("no usable records for this feature set")
    raw = np.stack([normalize_by_f0(rec, kind, f0_mode) for rec in kept])
    if scaling is None:
        scaling = fit_zscore(raw) if zscore else fit_minmax(raw)
    values = scaling.apply(raw)
    labels = np.array([rec.phoneme.label_id for rec in kept], dtype=np.int64)
    groups = np.array([rec.group.code for rec in kept], dtype=np.int64)
    matrix = FeatureMatrix(values=values, labels=labels, groups=groups,
                           scaling=scaling, feature_set=kind, f0_mode=f0_mode)
    return matrix, dropped


def save_matrix(matrix, path):
    """Write a matrix file; the round-trip is bit-exact."""
    meta = {
        "feature_set": matrix.feature_set.value,
        "f0_mode": matrix.f0_mode,
        "class_names": list(matrix.class_names),
        "scaling_mode": matrix.scaling.mode,
        "rows": int(matrix.n_rows),
        "dim": int(matrix.feature_set.dim),
    }
    container.write_container(path, MATRIX_KIND, MATRIX_VERSION, meta, {
        "values": matrix.values,
        "labels": matrix.labels,
        "groups": matrix.groups,
        "scaling_lo": matrix.scaling.lo,
        "scaling_hi": matrix.scaling.hi,
    })


def load_matrix(path):
    _, meta, arrays = container.read_container(path, MATRIX_KIND, MATRIX_VERSION)
    scaling = ScalingRecord(lo=arrays["scaling_lo"], hi=arrays["scaling_hi"],
                            mode=meta["scaling_mode"])
    return FeatureMatrix(
        values=arrays["values"],
        labels=arrays["labels"],
        groups=arrays["groups"],
        scaling=scaling,
        feature_set=FeatureSetKind(meta["feature_set"]),
        class_names=tuple(meta["class_names"]),
        f0_mode=meta["f0_mode"],
    )


def projection_2d(records, kind=FeatureSetKind.SS3):
    """(F1-based, F2-based) 2-D projections, unscaled ratios and scaled.

    Returns (labels, raw_points, scaled_points); used by the report command
    to emit both variants of the class-separation scatter.
    """
    matrix, _ = build_feature_matrix(records, kind)
    kept, _ = filter_usable(records, kind)
    raw = np.stack([normalize_by_f0(rec, kind) for rec in kept])
    return matrix.labels, raw[:, :2], matrix.values[:, :2]
