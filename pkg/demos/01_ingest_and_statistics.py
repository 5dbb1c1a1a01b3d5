"""Ingesting a measurement file and reading its class statistics.

Generates a synthetic /hVd/ measurement table in the public distribution's
column layout (drop the real one at data/bigdata.dat to use it instead),
decodes every filename, filters unusable rows, and prints the per-class
statistics table.
"""

import os
import tempfile

from ocon.dataset import ColumnLayout, class_statistics, filter_usable, load_dataset
from ocon.features import FeatureSetKind
from ocon.synth import write_synth_dat

data_path = os.path.join("data", "bigdata.dat")
if not os.path.exists(data_path):
    data_path = os.path.join(tempfile.gettempdir(), "ocon_demo.dat")
    print(f"real measurement file not found; writing synthetic data to {data_path}")
    write_synth_dat(data_path, seed=7, zero_rate=0.04)

# The default layout matches the public distribution: a 43-line prose header,
# then filename, duration, F0, F1..F3 at steady state, and F1..F3 tracks.
records = load_dataset(data_path, ColumnLayout.hgcw_bigdata())
print(f"\nloaded {len(records)} rows")
print(f"first record: {records[0].filename} "
      f"(group={records[0].group.name}, phoneme={records[0].phoneme.arpabet}, "
      f"F0={records[0].f0_ss:.0f} Hz)")

# Zero-valued cells mark upstream extraction failures; each feature set has
# its own usability requirements.
for kind in FeatureSetKind:
    kept, dropped = filter_usable(records, kind)
    print(f"feature set {kind.value:>5}: {len(kept)} usable, {len(dropped)} dropped")

kept, _ = filter_usable(records, FeatureSetKind.TT12)
print("\nusable-sample statistics (time-tracks requirements):\n")
print(class_statistics(kept).format_table())
