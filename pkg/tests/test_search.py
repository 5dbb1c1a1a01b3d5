import numpy as np
import pytest

from ocon.errors import NonNumericHp
from ocon.mlp import MlpConfig
from ocon.search import (
    SearchStage,
    desk_scale,
    hp_to_mlp_config,
    narrow_grid,
    run_stage,
    stage_presets,
)
from ocon.training import TrainConfig, k_fold_evaluate
from ocon.util import derive_seed
from tests.test_training import blob_matrix


def tiny_stage(**overrides):
    base = dict(name="tiny",
                fixed={"hidden_layers": 1, "batch_size": 16, "batch_norm": False,
                       "dropout_keep_input": 1.0, "dropout_keep_hidden": 1.0,
                       "l2_lambda": 0.0, "optimizer": "adam"},
                grid={"hidden_nodes": [4, 8], "learning_rate": [3e-3]},
                k_folds=2, epochs=8)
    base.update(overrides)
    return SearchStage(**base)


class TestPresets:
    def test_stage_shapes_and_cycle_counts(self):
        s1, s2, s3, s4 = stage_presets()
        assert s1.n_combinations == 18
        assert s1.cycle_count(12) == 648
        assert s2.n_combinations == 12
        assert s2.cycle_count(12) == 864
        assert s3.n_combinations == 3
        assert s3.cycle_count(12) == 360
        assert s4.n_combinations == 3
        assert s4.cycle_count(12) == 360

    def test_stage1_grid_contents(self):
        s1 = stage_presets()[0]
        assert s1.grid["hidden_nodes"] == [10, 50, 100]
        assert s1.grid["optimizer"] == ["adam", "rmsprop"]
        assert s1.grid["learning_rate"] == [1e-3, 1e-4, 1e-5]
        assert s1.k_folds == 3 and s1.epochs == 1000
        assert s1.fixed["hidden_layers"] == 1
        assert s1.fixed["batch_size"] == 32

    def test_inheritance_chain(self):
        _, s2, s3, s4 = stage_presets()
        # stage 2 inherits the stage-1 winner
        assert s2.fixed["hidden_nodes"] == 100
        assert s2.fixed["optimizer"] == "adam"
        assert s2.fixed["learning_rate"] == 1e-4
        assert s2.k_folds == 6 and s2.epochs == 3000
        assert s2.grid["dropout_keep_input"] == [0.8, 0.9]
        assert s2.grid["dropout_keep_hidden"] == [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
        # stage 3 inherits the dropout winner and rechecks the learning rate
        assert s3.fixed["dropout_keep_input"] == 0.8
        assert s3.fixed["dropout_keep_hidden"] == 0.5
        assert s3.grid["learning_rate"] == [1e-3, 1e-4, 1e-5]
        # stage 4 sweeps the decay strength
        assert s4.fixed["batch_norm"] is True
        assert s4.grid["l2_lambda"] == [1e-2, 1e-3, 1e-4]

    def test_final_tuned_config_reflects_stage4_winner(self):
        cfg = MlpConfig.tuned(input_dim=12)
        assert cfg.l2_lambda == 1e-4
        assert cfg.hidden_layers == (100,)
        assert cfg.optimizer == "adam"
        assert cfg.learning_rate == 1e-4
        assert cfg.dropout_keep_input == 0.8
        assert cfg.dropout_keep_hidden == 0.5
        assert cfg.batch_norm is True
        assert cfg.batch_size == 32

    def test_desk_scale(self):
        s2 = stage_presets()[1]
        small = desk_scale(s2, 3)
        assert small.k_folds == 2 and small.epochs == 1000
        assert small.grid == s2.grid


class TestStageFiles:
    def test_parse_stage_text(self):
        text = """
        name = custom_stage
        k_folds = 4
        epochs = 250
        fixed.hidden_layers = 1
        fixed.optimizer = adam
        grid.hidden_nodes = [10, 20]
        grid.learning_rate = [1e-3, 1e-4]
        """
        stage = SearchStage.from_text(text)
        assert stage.name == "custom_stage"
        assert stage.k_folds == 4 and stage.epochs == 250
        assert stage.fixed == {"hidden_layers": 1, "optimizer": "adam"}
        assert stage.n_combinations == 4

    def test_combinations_lexicographic(self):
        stage = tiny_stage(grid={"a": [1, 2], "b": ["x", "y"]})
        combos = list(stage.combinations())
        assert combos == [{"a": 1, "b": "x"}, {"a": 1, "b": "y"},
                          {"a": 2, "b": "x"}, {"a": 2, "b": "y"}]


class TestRunStage:
    def test_ranked_and_selected(self):
        matrix = blob_matrix(n_per_class=40, n_classes=2, seed=7)
        result = run_stage(matrix, tiny_stage(), seed=3)
        assert len(result.rows) == 2
        ranked = result.ranked
        assert ranked[0].mean_accuracy >= ranked[1].mean_accuracy
        assert set(result.selected.hps) == {"hidden_nodes", "learning_rate"}

    def test_singleton_grid_matches_plain_kfold(self):
        matrix = blob_matrix(n_per_class=40, n_classes=2, seed=7)
        stage = tiny_stage(grid={"hidden_nodes": [6]})
        stage_seed = 11
        result = run_stage(matrix, stage, seed=stage_seed)
        row = result.rows[0]

        accs = []
        for class_id in range(2):
            cell_seed = derive_seed(stage_seed, "cell", 0, class_id)
            mlp = hp_to_mlp_config({**stage.fixed, "hidden_nodes": 6},
                                   matrix.feature_set.dim,
                                   seed=derive_seed(cell_seed, "init"))
            tc = TrainConfig(epochs_per_batch_set=stage.epochs, max_batch_sets=1,
                             early_stop=None, k_folds=stage.k_folds,
                             seed=derive_seed(cell_seed, "train"),
                             reencode_per_batch_set=False)
            accs.append(k_fold_evaluate(matrix, class_id, mlp, tc,
                                        k=stage.k_folds).mean_accuracy)
        assert row.mean_accuracy == pytest.approx(sum(accs) / 2)

    def test_parallel_csv_identical(self, tmp_path):
        matrix = blob_matrix(n_per_class=30, n_classes=2, seed=2)
        stage = tiny_stage()
        serial = run_stage(matrix, stage, seed=5, workers=1)
        parallel = run_stage(matrix, stage, seed=5, workers=3)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        serial.write_csv(str(a))
        parallel.write_csv(str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_inherited_values_used_and_overridden(self):
        matrix = blob_matrix(n_per_class=20, n_classes=2, seed=2)
        stage = tiny_stage(fixed={"batch_size": 16},
                           grid={"hidden_nodes": [4]})
        inherited = {"optimizer": "rmsprop", "batch_size": 64,
                     "learning_rate": 2e-3}
        result = run_stage(matrix, stage, inherited=inherited, seed=1)
        assert len(result.rows) == 1  # stage fixed wins over inherited

    def test_diverged_cell_scores_neg_inf(self):
        matrix = blob_matrix(n_per_class=20, n_classes=2, seed=2)
        matrix.values[3] = np.nan
        result = run_stage(matrix, tiny_stage(), seed=1)
        assert all(r.mean_accuracy == float("-inf") for r in result.rows)
        assert all(r.diverged for r in result.rows)

    def test_selection_deterministic_tiebreak(self):
        from ocon.search import CombinationResult, SearchResult
        rows = [
            CombinationResult(0, {"x": 1}, 90.0, 2.0, {}, False),
            CombinationResult(1, {"x": 2}, 95.0, 5.0, {}, False),
            CombinationResult(2, {"x": 3}, 95.0, 3.0, {}, False),
            CombinationResult(3, {"x": 4}, 95.0, 3.0, {}, False),
        ]
        result = SearchResult(stage_name="t", rows=rows)
        assert result.selected.index == 2  # best acc, best time, lowest index
        # persisted ranking ignores wall-clock so files are reproducible
        assert [r.index for r in result.ranked] == [1, 2, 3, 0]


class TestNarrowGrid:
    def result_with(self, hps):
        from ocon.search import CombinationResult, SearchResult
        return SearchResult(stage_name="t",
                            rows=[CombinationResult(0, hps, 90.0, 1.0, {}, False)])

    def test_geometric_learning_rate(self):
        result = self.result_with({"learning_rate": 1e-4})
        assert narrow_grid(result, "learning_rate", 2) == [5e-5, 1e-4, 2e-4]

    def test_arithmetic_keep_probability(self):
        result = self.result_with({"dropout_keep_hidden": 0.5})
        got = narrow_grid(result, "dropout_keep_hidden", 0.05)
        assert got == pytest.approx([0.45, 0.5, 0.55])

    def test_clip_at_domain_edge(self):
        result = self.result_with({"dropout_keep_hidden": 1.0})
        got = narrow_grid(result, "dropout_keep_hidden", 0.05)
        assert got == pytest.approx([0.95, 1.0])

    def test_arithmetic_hidden_nodes(self):
        result = self.result_with({"hidden_nodes": 100})
        assert narrow_grid(result, "hidden_nodes", 25) == [75, 100, 125]

    def test_non_numeric_hp(self):
        result = self.result_with({"optimizer": "adam"})
        with pytest.raises(NonNumericHp):
            narrow_grid(result, "optimizer", 2)
