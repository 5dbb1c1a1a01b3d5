"""Training the full one-class bank and evaluating it.

Trains all 12 members on a synthetic corpus, runs joint first-max inference,
prints the per-class accuracy and DET/AUC tables, and shows that saving,
loading, and single-member retraining leave every other member untouched.
"""

import os
import tempfile
import warnings

import numpy as np

from ocon.balancer import BalanceWarning
from ocon.ensemble import infer, load_ensemble, save_ensemble, train_ensemble
from ocon.features import FeatureSetKind, build_feature_matrix
from ocon.metrics import report_tables
from ocon.mlp import MlpConfig
from ocon.synth import synth_records
from ocon.training import EarlyStopRule, TrainConfig

warnings.simplefilter("ignore", BalanceWarning)

matrix, _ = build_feature_matrix(synth_records(seed=11), FeatureSetKind.TT12)

# A light budget keeps the demo quick; raise epochs_per_batch_set to 1000
# and max_batch_sets to 10 for a full phoneme-recognition run.
mlp = MlpConfig.tuned(matrix.feature_set.dim, seed=0)
tc = TrainConfig(epochs_per_batch_set=120, max_batch_sets=3,
                 early_stop=EarlyStopRule(0.15, 95.0), seed=0)

print("training 12 one-class members...")
model, reports = train_ensemble(matrix, mlp, tc)
for r in reports:
    print(f"  {r.class_name:<4} acc={r.test_accuracy:6.2f}%  "
          f"epochs={r.epochs_run:<5d} {r.stop_reason}")

# Joint inference: run every member, take the first occurrence of the max.
sample = matrix.values[matrix.labels == 7][0]          # an iy row
logits, predicted = infer(model, sample, scaled=True)
print(f"\niy sample -> predicted {model.class_names[predicted]}, "
      f"logits max {logits.max():.3f}")

tables = report_tables(model, matrix)
print("\nwhole-dataset evaluation:\n")
print(tables.accuracy_text())
print(tables.det_text())

# Persistence: one checkpoint per member plus a manifest.
out = os.path.join(tempfile.gettempdir(), "ocon_demo_ensemble")
save_ensemble(model, out)
back = load_ensemble(out)
a, _ = infer(model, matrix.values[:5], scaled=True)
b, _ = infer(back, matrix.values[:5], scaled=True)
print("save/load inference identical:", np.array_equal(a, b))
print(f"ensemble directory: {sorted(os.listdir(out))[:3]} ...")
