"""Shared fixtures: synthetic corpora, reference class counts, real-data path.

The quantitative acceptance checks need the public /hVd/ measurement file
(the 1668-row table with F0 and F1..F3 tracks).  Point OCON_HGCW_DATA at it,
or drop it at data/bigdata.dat; without it those tests skip with a message.
"""

import os

import numpy as np
import pytest

from ocon.dataset import ARPABET_CODES
from ocon.features import FeatureMatrix, FeatureSetKind, ScalingRecord, build_feature_matrix
from ocon.synth import synth_records

#: Published usable-sample counts: phoneme -> (samples, boys, girls, men, women).
REFERENCE_CLASS_COUNTS = {
    "ae": (134, 25, 17, 45, 47),
    "ah": (135, 24, 19, 45, 47),
    "aw": (133, 24, 18, 45, 46),
    "eh": (139, 27, 19, 45, 48),
    "er": (118, 26, 18, 37, 37),
    "ei": (126, 25, 17, 43, 41),
    "ih": (139, 27, 19, 45, 48),
    "iy": (124, 20, 18, 43, 43),
    "oa": (136, 25, 19, 45, 47),
    "oo": (139, 27, 19, 45, 48),
    "uh": (138, 26, 19, 45, 48),
    "uw": (136, 25, 19, 44, 48),
}
REFERENCE_TOTALS = (1597, 301, 221, 527, 548)


def hgcw_data_path():
    candidates = [os.environ.get("OCON_HGCW_DATA", "")]
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates += [os.path.join(here, "data", "bigdata.dat")]
    for path in candidates:
        if path and os.path.exists(path):
            return path
    return None


def require_hgcw():
    path = hgcw_data_path()
    if path is None:
        pytest.skip("public /hVd/ measurement file not found; set OCON_HGCW_DATA "
                    "or place it at data/bigdata.dat")
    return path


@pytest.fixture(scope="session")
def synth_corpus():
    return synth_records(seed=11)


@pytest.fixture(scope="session")
def synth_matrix(synth_corpus):
    matrix, _ = build_feature_matrix(synth_corpus, FeatureSetKind.TT12)
    return matrix


@pytest.fixture(scope="session")
def synth_matrix_ss3(synth_corpus):
    matrix, _ = build_feature_matrix(synth_corpus, FeatureSetKind.SS3)
    return matrix


def matrix_from_labels(labels, groups=None, dim=3, n_classes=None, seed=0):
    """Tiny matrix with prescribed labels for balancer/split tests."""
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    rng = np.random.default_rng(seed)
    values = rng.random((n, dim))
    if groups is None:
        groups = np.zeros(n, dtype=np.int64)
    k = n_classes if n_classes is not None else int(labels.max()) + 1
    names = tuple(ARPABET_CODES[:k]) if k <= 12 else tuple(f"c{i}" for i in range(k))
    scaling = ScalingRecord(lo=np.zeros(dim), hi=np.ones(dim))
    return FeatureMatrix(values=values, labels=labels,
                         groups=np.asarray(groups, dtype=np.int64),
                         scaling=scaling, feature_set=FeatureSetKind.SS3
                         if dim == 3 else FeatureSetKind(
                             {4: "ss4", 12: "tt12"}[dim]),
                         class_names=names)


def reference_label_distribution():
    """Labels array whose per-class counts match the published statistics."""
    labels = []
    for label_id, code in enumerate(ARPABET_CODES):
        labels += [label_id] * REFERENCE_CLASS_COUNTS[code][0]
    return np.array(labels, dtype=np.int64)


def reference_group_distribution():
    """(labels, groups) matching the published per-group class statistics."""
    labels, groups = [], []
    order = (1, 3, 0, 2)  # counts tuple lists boys, girls, men, women
    for label_id, code in enumerate(ARPABET_CODES):
        _, boys, girls, men, women = REFERENCE_CLASS_COUNTS[code]
        for group_code, count in zip(order, (boys, girls, men, women)):
            labels += [label_id] * count
            groups += [group_code] * count
    return np.array(labels, dtype=np.int64), np.array(groups, dtype=np.int64)
