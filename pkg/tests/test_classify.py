import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_raster
from landcover.classify import (
    ForestParams,
    ProbabilityMap,
    TrainingSet,
    _grow_tree,
    _Tree,
    _tree_proba,
    classify_raster,
    classify_raster_per_scale,
    export_probabilities,
    import_probabilities,
    load_model,
    predict_proba,
    save_model,
    train_forest,
)
from landcover.errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    MalformedHeader,
    NonStochasticRow,
)
from landcover.features import FeatureRecipe
from landcover.fusion import sum_scales


def blobs(seed=3, n=100, d=6, gap=4.0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n, d)), rng.normal(gap, 1, (n, d))])
    y = np.array([1] * n + [2] * n)
    return TrainingSet(X, y, 2)


class TestTrainForest:
    def test_single_category_leaves(self):
        ts = TrainingSet(np.random.default_rng(0).normal(size=(20, 3)),
                         np.ones(20, dtype=int), 3)
        model = train_forest(ts, ForestParams(5, 4, 1), 0)
        for tree in model.trees:
            leaf = tree.feature < 0
            np.testing.assert_array_equal(tree.leaf_dist[leaf][:, 0], 1.0)

    def test_deterministic_given_seed(self):
        ts = blobs()
        probe = np.random.default_rng(9).normal(2, 2, (30, 6))
        a = predict_proba(train_forest(ts, ForestParams(10, 6, 2), 5), probe)
        b = predict_proba(train_forest(ts, ForestParams(10, 6, 2), 5), probe)
        np.testing.assert_array_equal(a, b)

    def test_separable_blobs_high_accuracy(self):
        ts = blobs(n=200)
        model = train_forest(ts, ForestParams(50, 10, 2), 11)
        pred = np.argmax(predict_proba(model, ts.features), axis=1) + 1
        assert (pred == ts.labels).mean() >= 0.99

    def test_empty_training_set(self):
        with pytest.raises(EmptyTrainingSet):
            TrainingSet(np.zeros((0, 3)), np.zeros(0, dtype=int), 2)

    def test_zero_feature_dimension(self):
        with pytest.raises(DimensionMismatch):
            TrainingSet(np.zeros((4, 0)), np.ones(4, dtype=int), 2)

    def test_model_json_roundtrip(self, tmp_path):
        model = train_forest(blobs(), ForestParams(4, 4, 2), 1)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        probe = np.random.default_rng(2).normal(2, 2, (20, 6))
        np.testing.assert_array_equal(predict_proba(model, probe),
                                      predict_proba(back, probe))


class TestPredictProba:
    def test_single_category_one_hot(self):
        ts = TrainingSet(np.random.default_rng(0).normal(size=(10, 2)),
                         np.full(10, 2, dtype=int), 3)
        model = train_forest(ts, ForestParams(3, 3, 1), 0)
        np.testing.assert_array_equal(predict_proba(model, np.zeros(2)), [0, 1, 0])

    def test_two_tree_averaging(self):
        def leaf_tree(dist):
            return _Tree(np.array([-1]), np.array([0.0]), np.array([-1]),
                         np.array([-1]), np.array([dist]))

        from landcover.classify import ForestModel
        model = ForestModel([leaf_tree([1.0, 0.0]), leaf_tree([0.0, 1.0])],
                            ForestParams(2, 1, 1), 3, 2, 0)
        np.testing.assert_allclose(predict_proba(model, np.zeros(3)), [0.5, 0.5])

    def test_dimension_mismatch(self):
        model = train_forest(blobs(), ForestParams(2, 2, 1), 0)
        with pytest.raises(DimensionMismatch):
            predict_proba(model, np.zeros(7))

    @settings(max_examples=20)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_outputs_are_distributions(self, seed):
        model = train_forest(blobs(), ForestParams(5, 4, 2), 0)
        probe = np.random.default_rng(seed).normal(2, 3, (5, 6))
        out = predict_proba(model, probe)
        assert (out >= 0).all() and (out <= 1).all()
        np.testing.assert_allclose(out.sum(axis=1), 1.0)


class _FixedRng:
    """Stand-in RNG that always offers a fixed candidate-feature set."""

    def __init__(self, candidates):
        self.candidates = np.array(candidates)

    def choice(self, d, size, replace):
        return self.candidates[:size]


class TestDuplicatedFeatureInvariance:
    def test_single_tree_ignores_duplicate_dimension(self):
        ts = blobs(n=60, d=4)
        X2 = np.hstack([ts.features, ts.features[:, :1]])
        rng_a = _FixedRng([0, 1])
        rng_b = _FixedRng([0, 1])
        ta = _grow_tree(ts.features, ts.labels.astype(np.int64), 2,
                        ForestParams(1, 6, 2), rng_a)
        tb = _grow_tree(X2, ts.labels.astype(np.int64), 2,
                        ForestParams(1, 6, 2), rng_b)
        for row in np.vstack([ts.features, ts.features + 0.5]):
            np.testing.assert_array_equal(_tree_proba(ta, row),
                                          _tree_proba(tb, np.append(row, row[0])))


class TestClassifyRaster:
    def test_grid_arithmetic(self, rng):
        r = make_raster(rng.integers(0, 256, (448, 448, 3)))
        ts = blobs(d=159)
        model = train_forest(ts, ForestParams(2, 2, 1), 0)
        pm = classify_raster(r, model, FeatureRecipe(), [224])
        assert (pm.grid_h, pm.grid_w) == (2, 2)
        np.testing.assert_allclose(pm.probs.sum(axis=2), 1.0)

    def test_constant_raster_uniform_cells(self):
        r = make_raster(np.full((112, 112, 3), 80))
        model = train_forest(blobs(d=159), ForestParams(3, 3, 1), 0)
        pm = classify_raster(r, model, FeatureRecipe(canonical_size=56), [56])
        np.testing.assert_array_equal(pm.probs[0, 0], pm.probs[0, 1])
        np.testing.assert_array_equal(pm.probs[0, 0], pm.probs[1, 1])

    def test_duplicate_scale_same_argmax(self, rng):
        r = make_raster(rng.integers(0, 256, (112, 112, 3)))
        model = train_forest(blobs(d=159), ForestParams(3, 4, 1), 0)
        recipe = FeatureRecipe(canonical_size=56)
        a = classify_raster(r, model, recipe, [56])
        b = classify_raster(r, model, recipe, [56, 56])
        np.testing.assert_array_equal(np.argmax(a.probs, 2), np.argmax(b.probs, 2))

    def test_multi_scale_fusion_matches_recomputation(self, rng):
        r = make_raster(rng.integers(0, 256, (112, 112, 3)))
        model = train_forest(blobs(d=159), ForestParams(3, 4, 1), 0)
        recipe = FeatureRecipe(canonical_size=56)
        per_scale = classify_raster_per_scale(r, model, recipe, [56, 112])
        fused = classify_raster(r, model, recipe, [56, 112])
        manual = (per_scale[0].probs + per_scale[1].probs) / 2
        np.testing.assert_allclose(fused.probs, manual)
        np.testing.assert_array_equal(np.argmax(fused.probs, 2),
                                      np.argmax(manual, 2))


def random_map(seed, grid=(4, 5), c=5, stride=8):
    rng = np.random.default_rng(seed)
    probs = rng.random((grid[0], grid[1], c))
    probs /= probs.sum(axis=2, keepdims=True)
    # quantize to float32 so in-memory and on-file values coincide; the
    # resulting row sums stay well within the 1e-6 stochastic tolerance
    probs = probs.astype(np.float32).astype(np.float64)
    return ProbabilityMap(probs, stride, grid[1] * stride, grid[0] * stride)


class TestProbabilityFile:
    def test_roundtrip_bit_identical(self, tmp_path):
        pm = random_map(0)
        path = tmp_path / "p.pgrd"
        export_probabilities(pm, path)
        back = import_probabilities(path)
        data_a = pm.probs.astype("<f4").tobytes()
        data_b = back.probs.astype("<f4").tobytes()
        assert data_a == data_b
        assert (back.cell_stride, back.width, back.height) == \
            (pm.cell_stride, pm.width, pm.height)

    def test_reexport_bit_identical(self, tmp_path):
        path_a = tmp_path / "a.pgrd"
        path_b = tmp_path / "b.pgrd"
        export_probabilities(random_map(1), path_a)
        export_probabilities(import_probabilities(path_a), path_b)
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "t.pgrd"
        path.write_bytes(b"PGRD\x01")
        with pytest.raises(MalformedHeader):
            import_probabilities(path)

    def test_wrong_payload_size(self, tmp_path):
        # header advertises 5 classes but rows carry 4 values
        pm = random_map(2, c=4)
        path = tmp_path / "w.pgrd"
        export_probabilities(pm, path)
        raw = bytearray(path.read_bytes())
        raw[18:20] = (5).to_bytes(2, "little")  # num_classes field
        path.write_bytes(bytes(raw))
        (tmp_path / "w.pgrd.json").unlink()
        with pytest.raises(MalformedHeader):
            import_probabilities(path)

    def test_bad_magic(self, tmp_path):
        pm = random_map(3)
        path = tmp_path / "m.pgrd"
        export_probabilities(pm, path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(MalformedHeader):
            import_probabilities(path)

    def test_non_stochastic_row(self, tmp_path):
        pm = random_map(4)
        path = tmp_path / "n.pgrd"
        export_probabilities(pm, path)
        raw = bytearray(path.read_bytes())
        bad = np.array([0.1] * 5, dtype="<f4").tobytes()  # sums to 0.5
        header = 20
        raw[header:header + len(bad)] = bad
        path.write_bytes(bytes(raw))
        with pytest.raises(NonStochasticRow):
            import_probabilities(path)

    def test_extent_mismatch(self, tmp_path):
        pm = random_map(5)
        path = tmp_path / "e.pgrd"
        export_probabilities(pm, path)
        with pytest.raises(DimensionMismatch):
            import_probabilities(path, width=9999, height=9999)

    def test_sidecar_written(self, tmp_path):
        import json

        pm = random_map(6)
        path = tmp_path / "s.pgrd"
        export_probabilities(pm, path)
        doc = json.loads((tmp_path / "s.pgrd.json").read_text())
        assert doc["grid_w"] == pm.grid_w and doc["num_classes"] == pm.num_classes


class TestProbabilityMapInvariants:
    def test_rejects_non_stochastic(self):
        probs = np.full((2, 2, 2), 0.4)
        with pytest.raises(NonStochasticRow):
            ProbabilityMap(probs, 8, 16, 16)
