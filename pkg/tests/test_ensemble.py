import os

import numpy as np
import pytest

from ocon.ensemble import (
    OconModel,
    evaluate_ensemble,
    infer,
    load_ensemble,
    retrain_member,
    save_ensemble,
    train_ensemble,
)
from ocon.errors import (
    DimensionMismatch,
    ManifestMismatch,
    MissingMember,
    PartialEnsemble,
)
from ocon.features import FeatureSetKind
from ocon.mlp import MlpConfig, MlpModel, init_params
from ocon.training import TrainConfig
from tests.test_training import blob_matrix


def constant_member(logit_bias, scaling_hash=""):
    """Member whose probability is sigmoid(bias) regardless of input."""
    config = MlpConfig(input_dim=3, hidden_layers=(), seed=0)
    params = init_params(config)
    params.weights[0][:] = 0.0
    params.biases[0][:] = logit_bias
    return MlpModel(config=config, params=params, scaling_hash=scaling_hash)


def linear_member(weights, bias, scaling_hash=""):
    config = MlpConfig(input_dim=3, hidden_layers=(), seed=0)
    params = init_params(config)
    params.weights[0][:] = np.asarray(weights, dtype=np.float64)
    params.biases[0][:] = bias
    return MlpModel(config=config, params=params, scaling_hash=scaling_hash)


def two_class_model(matrix):
    h = matrix.scaling.content_hash()
    members = [linear_member([-40.0, 0.0, 0.0], 20.0, h),
               linear_member([40.0, 0.0, 0.0], -20.0, h)]
    return OconModel(class_names=tuple(matrix.class_names), members=members,
                     scaling=matrix.scaling, feature_set=matrix.feature_set)


def quick_configs(seed=0, epochs=40):
    mlp = MlpConfig(input_dim=3, hidden_layers=(8,), learning_rate=3e-3, seed=seed)
    tc = TrainConfig(epochs_per_batch_set=epochs, max_batch_sets=1,
                     early_stop=None, seed=seed)
    return mlp, tc


class TestInfer:
    def test_first_occurrence_of_maximum(self):
        from ocon.features import ScalingRecord
        scaling = ScalingRecord(lo=np.zeros(3), hi=np.ones(3))
        logits = [np.log(0.2 / 0.8), np.log(0.9 / 0.1), np.log(0.9 / 0.1)]
        model = OconModel(class_names=("a", "b", "c"),
                          members=[constant_member(z, scaling.content_hash())
                                   for z in logits],
                          scaling=scaling, feature_set=FeatureSetKind.SS3)
        probs, predicted = infer(model, np.array([0.3, 0.3, 0.3]))
        assert np.allclose(probs, [0.2, 0.9, 0.9])
        assert predicted == 1

    def test_degenerate_tie_picks_index_zero(self):
        from ocon.features import ScalingRecord
        scaling = ScalingRecord(lo=np.zeros(3), hi=np.ones(3))
        model = OconModel(class_names=("a", "b", "c"),
                          members=[constant_member(0.0, scaling.content_hash())
                                   for _ in range(3)],
                          scaling=scaling, feature_set=FeatureSetKind.SS3)
        probs, predicted = infer(model, np.zeros(3))
        assert np.all(probs == 0.5)
        assert predicted == 0

    def test_batch_and_scaling(self):
        matrix = blob_matrix(n_per_class=20, seed=3)
        model = two_class_model(matrix)
        probs, predicted = infer(model, matrix.values, scaled=True)
        assert probs.shape == (40, 2)
        assert np.array_equal(predicted, matrix.labels)

    def test_dimension_mismatch(self):
        matrix = blob_matrix(n_per_class=5)
        model = two_class_model(matrix)
        with pytest.raises(DimensionMismatch):
            infer(model, np.zeros(5))

    def test_pure_function(self):
        matrix = blob_matrix(n_per_class=10, seed=1)
        model = two_class_model(matrix)
        a, _ = infer(model, matrix.values[0], scaled=True)
        b, _ = infer(model, matrix.values[0], scaled=True)
        assert np.array_equal(a, b)

    def test_argmax_invariant_under_increasing_maps(self):
        rng = np.random.default_rng(8)
        matrix = blob_matrix(n_per_class=12, seed=2)
        model = two_class_model(matrix)
        logits, predicted = infer(model, matrix.values, scaled=True)
        for _ in range(20):
            a = rng.uniform(0.1, 5.0)
            b = rng.uniform(-2.0, 2.0)
            assert np.array_equal(np.argmax(a * logits + b, axis=1), predicted)


class TestEvaluate:
    def test_perfect_members(self):
        matrix = blob_matrix(n_per_class=25, seed=5)
        model = two_class_model(matrix)
        ev = evaluate_ensemble(model, matrix)
        assert all(acc == 100.0 for acc in ev.per_class_accuracy.values())
        assert ev.argmax_accuracy == 100.0
        assert np.array_equal(ev.confusion, np.diag([25, 25]))

    def test_scaling_mismatch_rejected(self):
        matrix = blob_matrix(n_per_class=10, seed=5)
        other = blob_matrix(n_per_class=10, seed=5)
        object.__setattr__(other.scaling, "lo", other.scaling.lo + 0.1)
        model = two_class_model(matrix)
        with pytest.raises(ManifestMismatch):
            evaluate_ensemble(model, other)


class TestTrainEnsemble:
    def test_members_and_reports(self):
        matrix = blob_matrix(n_per_class=60, n_classes=3, seed=9)
        mlp, tc = quick_configs()
        model, reports = train_ensemble(matrix, mlp, tc)
        assert len(model.members) == 3 and len(reports) == 3
        assert [r.class_name for r in reports] == list(matrix.class_names)
        ev = evaluate_ensemble(model, matrix)
        assert ev.argmax_accuracy > 60.0

    def test_parallel_workers_identical_results(self, tmp_path):
        matrix = blob_matrix(n_per_class=30, n_classes=3, seed=4)
        mlp, tc = quick_configs(epochs=10)
        serial, _ = train_ensemble(matrix, mlp, tc, workers=1)
        parallel, _ = train_ensemble(matrix, mlp, tc, workers=3)
        save_ensemble(serial, str(tmp_path / "a"))
        save_ensemble(parallel, str(tmp_path / "b"))
        for name in serial.class_names:
            fa = (tmp_path / "a" / f"member_{name}.ocmdl").read_bytes()
            fb = (tmp_path / "b" / f"member_{name}.ocmdl").read_bytes()
            assert fa == fb

    def test_speaker_task_trains_three_members(self, synth_matrix):
        mlp = MlpConfig(input_dim=12, hidden_layers=(4,), learning_rate=1e-3, seed=0)
        tc = TrainConfig(epochs_per_batch_set=2, max_batch_sets=1,
                         early_stop=None, seed=0)
        model, reports = train_ensemble(synth_matrix, mlp, tc, task="speaker")
        assert model.class_names == ("male", "female", "children")
        assert len(model.members) == 3 and len(reports) == 3
        ev = evaluate_ensemble(model, synth_matrix)
        assert ev.confusion.shape == (3, 3)
        assert ev.confusion.sum() == synth_matrix.n_rows

    def test_partial_ensemble_on_divergence(self):
        matrix = blob_matrix(n_per_class=20, n_classes=3, seed=4)
        matrix.values[5] = np.nan
        mlp, tc = quick_configs(epochs=5)
        with pytest.raises(PartialEnsemble) as err:
            train_ensemble(matrix, mlp, tc)
        assert err.value.failures

    def test_retrain_member_isolation(self, tmp_path):
        matrix = blob_matrix(n_per_class=40, n_classes=3, seed=1)
        mlp, tc = quick_configs(epochs=15)
        model, _ = train_ensemble(matrix, mlp, tc)
        save_ensemble(model, str(tmp_path / "before"))
        from dataclasses import replace
        retrain_member(model, matrix, 1, mlp, replace(tc, seed=123))
        save_ensemble(model, str(tmp_path / "after"))
        for name in model.class_names:
            before = (tmp_path / "before" / f"member_{name}.ocmdl").read_bytes()
            after = (tmp_path / "after" / f"member_{name}.ocmdl").read_bytes()
            if name == model.class_names[1]:
                assert before != after
            else:
                assert before == after


class TestSaveLoad:
    def make_model(self, tmp_path):
        matrix = blob_matrix(n_per_class=30, n_classes=2, seed=7)
        mlp, tc = quick_configs(epochs=10)
        model, _ = train_ensemble(matrix, mlp, tc)
        path = str(tmp_path / "ensemble")
        save_ensemble(model, path)
        return matrix, model, path

    def test_roundtrip_identical_inference(self, tmp_path):
        matrix, model, path = self.make_model(tmp_path)
        back = load_ensemble(path)
        a, pa = infer(model, matrix.values, scaled=True)
        b, pb = infer(back, matrix.values, scaled=True)
        assert np.array_equal(a.view(np.uint64), b.view(np.uint64))
        assert np.array_equal(pa, pb)

    def test_missing_member(self, tmp_path):
        _, model, path = self.make_model(tmp_path)
        os.remove(os.path.join(path, f"member_{model.class_names[0]}.ocmdl"))
        with pytest.raises(MissingMember):
            load_ensemble(path)

    def test_tampered_member(self, tmp_path):
        _, model, path = self.make_model(tmp_path)
        target = os.path.join(path, f"member_{model.class_names[1]}.ocmdl")
        blob = bytearray(open(target, "rb").read())
        blob[-10] ^= 0xFF
        open(target, "wb").write(bytes(blob))
        with pytest.raises(ManifestMismatch):
            load_ensemble(path)

    def test_swapped_member_updates_manifest(self, tmp_path):
        matrix, model, path = self.make_model(tmp_path)
        import json
        manifest_before = json.load(open(os.path.join(path, "ensemble.json")))
        mlp, tc = quick_configs(epochs=10)
        from dataclasses import replace
        retrain_member(model, matrix, 0, mlp, replace(tc, seed=55))
        save_ensemble(model, path)
        manifest_after = json.load(open(os.path.join(path, "ensemble.json")))
        assert manifest_before["members"][0]["sha256"] != \
            manifest_after["members"][0]["sha256"]
        assert manifest_before["members"][1]["sha256"] == \
            manifest_after["members"][1]["sha256"]
        load_ensemble(path)  # still consistent
