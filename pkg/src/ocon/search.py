"""Informed iterative grid search over architecture and learning HPs.

Each stage fixes part of the configuration, sweeps a small grid over the
rest, scores every combination on every class with k-fold validation, and
ranks by mean accuracy (ties: lower mean training time, then grid order).
The winning values are inherited by later stages; ``narrow_grid`` refines a
numeric hyperparameter around the current best.  The four preset stages
mirror the reference experiment ladder: topology/optimizer/learning-rate,
dropout, batch-norm with a learning-rate recheck, and L2 weight decay.

Grid cells are embarrassingly parallel; each cell derives its own seed from
(stage seed, combination, class), so results are identical for any worker
count or scheduling order.
"""

import csv
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .configfile import load_config, parse_config_text
from .errors import NonNumericHp
from .features import SPEAKER_CLASS_NAMES
from .mlp import MlpConfig
from .training import TrainConfig, k_fold_evaluate
from .util import derive_seed

#: Hyperparameters refined on a log scale; everything else numeric is linear.
GEOMETRIC_HPS = frozenset({"learning_rate", "l2_lambda"})

#: Valid domains for narrowable hyperparameters: (low, high, integer?).
HP_DOMAINS = {
    "learning_rate": (0.0, None, False),
    "l2_lambda": (0.0, None, False),
    "hidden_nodes": (1, None, True),
    "hidden_layers": (1, None, True),
    "batch_size": (1, None, True),
    "dropout_keep_input": (0.0, 1.0, False),
    "dropout_keep_hidden": (0.0, 1.0, False),
}

_MLP_KEYS = {"activation", "dropout_keep_input", "dropout_keep_hidden", "batch_norm",
             "l2_lambda", "optimizer", "learning_rate", "batch_size", "loss"}


@dataclass(frozen=True)
class SearchStage:
    """One heuristic stage: fixed HP fragment plus a grid to sweep."""

    name: str
    fixed: dict
    grid: dict              # hp name -> list of candidate values, order kept
    k_folds: int
    epochs: int

    def __post_init__(self):
        if not self.grid or any(len(v) == 0 for v in self.grid.values()):
            raise ValueError("grid must be non-empty")

    @property
    def n_combinations(self):
        n = 1
        for values in self.grid.values():
            n *= len(values)
        return n

    def cycle_count(self, n_classes):
        return self.n_combinations * n_classes * self.k_folds

    def combinations(self):
        """Grid points in declared-key lexicographic order."""
        keys = list(self.grid)
        for values in itertools.product(*(self.grid[k] for k in keys)):
            yield dict(zip(keys, values))

    @classmethod
    def from_file(cls, path):
        return cls._from_dict(load_config(path))

    @classmethod
    def from_text(cls, text):
        return cls._from_dict(parse_config_text(text))

    @classmethod
    def _from_dict(cls, raw):
        grid = {k: (v if isinstance(v, list) else [v]) for k, v in raw.get("grid", {}).items()}
        return cls(name=raw.get("name", "custom"), fixed=raw.get("fixed", {}),
                   grid=grid, k_folds=int(raw.get("k_folds", 3)),
                   epochs=int(raw.get("epochs", 1000)))


def desk_scale(stage, factor):
    """Shrink folds and epochs by ``factor`` for desk-scale runs (CI, demos)."""
    if factor <= 1:
        return stage
    return replace(stage, k_folds=max(2, stage.k_folds // factor),
                   epochs=max(1, stage.epochs // factor))


def stage_presets():
    """The four-stage heuristic ladder with inherited best estimates."""
    stage1 = SearchStage(
        name="stage1_topology_optimizer_lr",
        fixed={"hidden_layers": 1, "batch_size": 32, "batch_norm": False,
               "dropout_keep_input": 1.0, "dropout_keep_hidden": 1.0, "l2_lambda": 0.0},
        grid={"hidden_nodes": [10, 50, 100],
              "optimizer": ["adam", "rmsprop"],
              "learning_rate": [1e-3, 1e-4, 1e-5]},
        k_folds=3, epochs=1000)
    stage2 = SearchStage(
        name="stage2_dropout",
        fixed={"hidden_layers": 1, "hidden_nodes": 100, "optimizer": "adam",
               "learning_rate": 1e-4, "batch_size": 32, "batch_norm": False,
               "l2_lambda": 0.0},
        grid={"dropout_keep_input": [0.8, 0.9],
              "dropout_keep_hidden": [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]},
        k_folds=6, epochs=3000)
    stage3 = SearchStage(
        name="stage3_batch_norm_lr",
        fixed={"hidden_layers": 1, "hidden_nodes": 100, "optimizer": "adam",
               "batch_size": 32, "dropout_keep_input": 0.8,
               "dropout_keep_hidden": 0.5, "l2_lambda": 0.0},
        grid={"learning_rate": [1e-3, 1e-4, 1e-5], "batch_norm": [True]},
        k_folds=10, epochs=1000)
    stage4 = SearchStage(
        name="stage4_l2",
        fixed={"hidden_layers": 1, "hidden_nodes": 100, "optimizer": "adam",
               "learning_rate": 1e-4, "batch_size": 32, "batch_norm": True,
               "dropout_keep_input": 0.8, "dropout_keep_hidden": 0.5},
        grid={"l2_lambda": [1e-2, 1e-3, 1e-4]},
        k_folds=10, epochs=1000)
    return (stage1, stage2, stage3, stage4)


def hp_to_mlp_config(hps, input_dim, seed=0):
    """Flat hp dict -> MlpConfig.  ``hidden_nodes``/``hidden_layers`` expand
    into the hidden width tuple."""
    layers = int(hps.get("hidden_layers", 1))
    nodes = int(hps.get("hidden_nodes", 100))
    kwargs = {k: v for k, v in hps.items() if k in _MLP_KEYS}
    return MlpConfig(input_dim=input_dim, hidden_layers=(nodes,) * layers,
                     seed=seed, **kwargs)


@dataclass
class CombinationResult:
    index: int
    hps: dict
    mean_accuracy: float            # -inf when any cell diverged
    mean_time: float
    per_class: dict                 # class name -> (accuracy, time)
    diverged: bool


@dataclass
class SearchResult:
    stage_name: str
    rows: list

    @property
    def ranked(self):
        """Rows by descending accuracy; equal accuracies keep grid order.

        Wall-clock time deliberately does not influence this ordering so the
        persisted CSV is byte-identical across reruns and worker counts.
        """
        return sorted(self.rows, key=lambda r: (-r.mean_accuracy, r.index))

    @property
    def selected(self):
        """Winning combination: best accuracy, ties by lower mean training
        time, then grid order."""
        return min(self.rows, key=lambda r: (-r.mean_accuracy, r.mean_time, r.index))

    def selected_hps(self):
        """Winning values, ready to inherit into the next stage."""
        return dict(self.selected.hps)

    def to_csv_text(self):
        """Ranked CSV of the deterministic columns (no wall-clock values)."""
        out = io.StringIO()
        hp_names = list(self.rows[0].hps) if self.rows else []
        class_names = sorted(self.rows[0].per_class) if self.rows else []
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["rank", "combo_index", *hp_names, "mean_accuracy",
                         "diverged", *(f"acc_{c}" for c in class_names)])
        for rank, row in enumerate(self.ranked, start=1):
            writer.writerow([
                rank, row.index, *(repr(row.hps[k]) for k in hp_names),
                repr(row.mean_accuracy), int(row.diverged),
                *(repr(row.per_class[c][0]) for c in class_names)])
        return out.getvalue()

    def times_csv_text(self):
        """Measured mean training seconds per combination (nondeterministic)."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["combo_index", "mean_time_sec"])
        for row in sorted(self.rows, key=lambda r: r.index):
            writer.writerow([row.index, repr(row.mean_time)])
        return out.getvalue()

    def write_csv(self, path, times_path=None):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_text())
        if times_path:
            with open(times_path, "w", encoding="utf-8") as fh:
                fh.write(self.times_csv_text())


def _cell_seedstamp(stage_seed, combo_index, class_id):
    return derive_seed(stage_seed, "cell", combo_index, class_id)


def _run_cell(matrix, stage, hps, combo_index, class_id, stage_seed, task,
              max_batch_sets, early_stop):
    cell_seed = _cell_seedstamp(stage_seed, combo_index, class_id)
    mlp_cfg = hp_to_mlp_config(hps, matrix.feature_set.dim, seed=derive_seed(cell_seed, "init"))
    train_cfg = TrainConfig(
        epochs_per_batch_set=stage.epochs, max_batch_sets=max_batch_sets,
        early_stop=early_stop, k_folds=stage.k_folds,
        seed=derive_seed(cell_seed, "train"), reencode_per_batch_set=False)
    try:
        result = k_fold_evaluate(matrix, class_id, mlp_cfg, train_cfg,
                                 k=stage.k_folds, task=task)
        if result.diverged:
            return combo_index, class_id, float("-inf"), result.mean_seconds, True
        return combo_index, class_id, result.mean_accuracy, result.mean_seconds, False
    except Exception:
        # cell failures must not kill the stage; they rank last
        return combo_index, class_id, float("-inf"), 0.0, True


def run_stage(matrix, stage, inherited=None, seed=0, workers=1, task="phoneme",
              max_batch_sets=1, early_stop=None):
    """Sweep a stage's grid over every class and rank the combinations.

    ``inherited`` carries best estimates from earlier stages; explicit stage
    fixed values override it, grid values override both.  Heuristic cycles
    run a single batch-set of ``stage.epochs`` epochs with no early stopping
    unless overridden.  Failed cells score -inf instead of aborting.
    """
    base = dict(inherited or {})
    base.update(stage.fixed)
    combos = []
    for hps in stage.combinations():
        merged = dict(base)
        merged.update(hps)
        combos.append(merged)

    if task == "speaker":
        class_ids = list(range(len(SPEAKER_CLASS_NAMES)))
        class_names = SPEAKER_CLASS_NAMES
    else:
        class_ids = list(range(matrix.n_classes))
        class_names = matrix.class_names

    cells = [(ci, cid) for ci in range(len(combos)) for cid in class_ids]
    outcomes = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_cell, matrix, stage, combos[ci], ci, cid, seed,
                            task, max_batch_sets, early_stop)
                for ci, cid in cells]
            for fut in futures:
                ci, cid, acc, secs, div = fut.result()
                outcomes[(ci, cid)] = (acc, secs, div)
    else:
        for ci, cid in cells:
            ci, cid, acc, secs, div = _run_cell(
                matrix, stage, combos[ci], ci, cid, seed, task, max_batch_sets,
                early_stop)
            outcomes[(ci, cid)] = (acc, secs, div)

    grid_keys = list(stage.grid)
    rows = []
    for ci, merged in enumerate(combos):
        per_class = {class_names[cid]: (outcomes[(ci, cid)][0], outcomes[(ci, cid)][1])
                     for cid in class_ids}
        diverged = any(outcomes[(ci, cid)][2] for cid in class_ids)
        accs = [outcomes[(ci, cid)][0] for cid in class_ids]
        times = [outcomes[(ci, cid)][1] for cid in class_ids]
        mean_acc = float("-inf") if diverged else sum(accs) / len(accs)
        rows.append(CombinationResult(
            index=ci, hps={k: merged[k] for k in grid_keys},
            mean_accuracy=mean_acc, mean_time=sum(times) / len(times),
            per_class=per_class, diverged=diverged))
    return SearchResult(stage_name=stage.name, rows=rows)


def narrow_grid(result, hp, factor):
    """New candidate list centered on the winning value of ``hp``.

    Learning-rate-like HPs refine geometrically ({best/f, best, best*f});
    counts and rates refine arithmetically with step ``factor``.  Values are
    clipped to the hyperparameter's valid domain and deduplicated.
    """
    best = result.selected.hps.get(hp)
    if not isinstance(best, (int, float)) or isinstance(best, bool):
        raise NonNumericHp(f"hyperparameter {hp!r} has non-numeric value {best!r}")
    if hp in GEOMETRIC_HPS:
        raw = [best / factor, best, best * factor]
    else:
        raw = [best - factor, best, best + factor]

    low, high, integer = HP_DOMAINS.get(hp, (None, None, False))
    out = []
    for v in raw:
        if integer:
            v = int(round(v))
        if low is not None and v <= low and not integer:
            continue
        if integer and low is not None and v < low:
            continue
        if high is not None and v > high:
            v = high
        if v not in out:
            out.append(v)
    return out or [best]
