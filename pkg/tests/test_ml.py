import itertools
import json

import numpy as np
import pytest

from flowline_risk.ml import (
    AdaBoostClassifier,
    DecisionTreeClassifier,
    GBDTClassifier,
    KMeansModel,
    KNNClassifier,
    KTooLarge,
    LinearSVM,
    LogisticRegressionGD,
    NotFitted,
    RandomForestClassifier,
    SingleClass,
    best_gini_split,
    fit_kmeans,
    gini_impurity,
    logistic_loss_and_grad,
    model_from_dict,
    model_to_dict,
)

from conftest import disk_blob

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0, 1, 1, 0])


def blobs(seed=0, n=40, gap=4.0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal((-gap, -gap), 0.5, (n, 2)), rng.normal((gap, gap), 0.5, (n, 2))])
    return X, np.array([0] * n + [1] * n)


class TestLogistic:
    def test_separable_1d(self):
        X = np.array([[-1.0]] * 20 + [[1.0]] * 20)
        y = np.array([0] * 20 + [1] * 20)
        model = LogisticRegressionGD().fit(X, y)
        assert np.mean(model.predict(X) == y) == 1.0

    def test_all_zero_features_predict_majority(self):
        X = np.zeros((50, 3))
        y = np.array([0] * 40 + [1] * 10)
        model = LogisticRegressionGD().fit(X, y)
        assert np.all(model.predict(X) == 0)

    def test_gradient_against_finite_differences(self):
        rng = np.random.default_rng(61)
        X = rng.normal(size=(60, 4))
        y = (rng.random(60) < 0.4).astype(int)
        l2 = 1e-3
        h = 1e-6
        for _ in range(10):
            w = rng.normal(size=4)
            b = float(rng.normal())
            _, grad_w, grad_b = logistic_loss_and_grad(w, b, X, y, l2)
            for i in range(4):
                e = np.zeros(4)
                e[i] = h
                up = logistic_loss_and_grad(w + e, b, X, y, l2)[0]
                dn = logistic_loss_and_grad(w - e, b, X, y, l2)[0]
                numeric = (up - dn) / (2 * h)
                assert abs(numeric - grad_w[i]) / max(1e-8, abs(grad_w[i])) < 1e-6
            numeric_b = (logistic_loss_and_grad(w, b + h, X, y, l2)[0]
                         - logistic_loss_and_grad(w, b - h, X, y, l2)[0]) / (2 * h)
            assert abs(numeric_b - grad_b) / max(1e-8, abs(grad_b)) < 1e-6

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            LogisticRegressionGD().fit(np.zeros((5, 2)), np.zeros(5, dtype=int))

    def test_xor_stays_weak(self):
        model = LogisticRegressionGD().fit(XOR_X, XOR_Y)
        assert np.mean(model.predict(XOR_X) == XOR_Y) <= 0.6

    def test_probabilities_in_range(self):
        X, y = blobs(62)
        p = LogisticRegressionGD().fit(X, y).predict_proba(X)
        assert np.all((p >= 0.0) & (p <= 1.0))


class TestKNN:
    def test_memorizes_with_k1(self):
        X, y = blobs(63)
        model = KNNClassifier(1).fit(X, y)
        assert np.array_equal(model.predict(X), y)

    def test_global_vote_with_k_equals_n(self):
        rng = np.random.default_rng(64)
        X = rng.normal(size=(100, 2))
        y = np.array([0] * 99 + [1])
        model = KNNClassifier(100).fit(X, y)
        assert np.all(model.predict(X) == 0)

    def test_matches_exhaustive_scan_oracle(self):
        rng = np.random.default_rng(65)
        X = rng.normal(size=(200, 3))
        y = (rng.random(200) < 0.5).astype(int)
        queries = rng.normal(size=(50, 3))
        k = 7
        model = KNNClassifier(k).fit(X, y)
        got = model.predict(queries)
        for qi, q in enumerate(queries):
            dist = [(float(np.linalg.norm(X[i] - q)), i) for i in range(200)]
            dist.sort()
            votes = sum(y[i] for _, i in dist[:k])
            assert got[qi] == (1 if votes > k / 2 else 0)

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            KNNClassifier(11).fit(np.zeros((10, 2)), np.array([0] * 5 + [1] * 5))

    def test_tie_goes_to_class_zero(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0, 1])
        model = KNNClassifier(2).fit(X, y)
        assert model.predict(np.array([[0.5]]))[0] == 0


class TestLinearSVM:
    def test_separable_blobs(self):
        X, y = blobs(66)
        model = LinearSVM().fit(X, y)
        assert np.mean(model.predict(X) == y) == 1.0
        s = 2.0 * y - 1.0
        assert np.all(s * model.decision_function(X) >= 0.0)

    def test_objective_trace_non_increasing(self):
        X, y = blobs(67, n=60, gap=2.0)
        model = LinearSVM().fit(X, y)
        trace = model.objective_trace
        tol = 1e-3 * max(1.0, trace[0])
        assert all(b <= a + tol for a, b in zip(trace, trace[1:]))

    def test_four_point_grid_oracle(self):
        X = np.array([[-1.0, -1.0], [-1.5, -0.5], [1.0, 1.0], [1.5, 0.5]])
        y = np.array([0, 0, 1, 1])
        model = LinearSVM(C=10.0, epochs=500).fit(X, y)

        # exhaustive grid over (w, b): best hinge objective wins
        s = 2.0 * y - 1.0
        grid = np.linspace(-2.0, 2.0, 17)
        best = None
        for w1, w2, b in itertools.product(grid, grid, grid):
            w = np.array([w1, w2])
            obj = 0.5 * w @ w + 10.0 * np.sum(np.maximum(0.0, 1.0 - s * (X @ w + b)))
            if best is None or obj < best[0]:
                best = (obj, w, b)
        _, gw, gb = best
        grid_pred = (X @ gw + gb > 0).astype(int)
        assert np.array_equal(model.predict(X), grid_pred)

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            LinearSVM().fit(np.zeros((4, 2)), np.ones(4, dtype=int))


class TestDecisionTree:
    def test_pure_input_single_leaf(self):
        X = np.array([[0.0], [1.0], [2.0]])
        tree = DecisionTreeClassifier().fit(X, np.zeros(3, dtype=int))
        assert tree.root.is_leaf
        assert np.all(tree.predict(X) == 0)

    def test_xor_depth_two(self):
        tree = DecisionTreeClassifier(max_depth=2, min_leaf=1).fit(XOR_X, XOR_Y)
        assert np.mean(tree.predict(XOR_X) == XOR_Y) == 1.0

    def test_root_split_matches_brute_force_oracle(self):
        rng = np.random.default_rng(68)
        for _ in range(10):
            X = rng.normal(size=(50, 3))
            y = (rng.random(50) < 0.5).astype(int)
            weights = np.full(50, 1.0 / 50)
            got = best_gini_split(X, y, weights, min_leaf=1)

            best = None
            parent = gini_impurity(y, weights)
            for f in range(3):
                for thr in np.unique(X[:, f])[:-1]:
                    # midpoint thresholds, same candidate family as the impl
                    upper = np.min(X[X[:, f] > thr, f])
                    mid = (thr + upper) / 2.0
                    mask = X[:, f] <= mid
                    wl, wr = mask.sum() / 50, (~mask).sum() / 50
                    gl = gini_impurity(y[mask], np.full(mask.sum(), 1.0))
                    gr = gini_impurity(y[~mask], np.full((~mask).sum(), 1.0))
                    gain = parent - (wl * gl + wr * gr)
                    cand = (-gain, f, mid)
                    if best is None or cand < best:
                        best = cand
            assert got[0] == best[1]
            assert got[1] == pytest.approx(best[2])
            assert -best[0] == pytest.approx(got[2], abs=1e-12)

    def test_predict_before_fit(self):
        with pytest.raises(NotFitted):
            DecisionTreeClassifier().predict(np.zeros((1, 2)))


class TestGBDT:
    def test_single_stump_equivalent(self):
        X = np.array([[-2.0]] * 10 + [[2.0]] * 10)
        y = np.array([0] * 10 + [1] * 10)
        gbdt = GBDTClassifier(n_trees=1, max_depth=1, shrinkage=1.0, min_leaf=1).fit(X, y)
        stump = DecisionTreeClassifier(max_depth=1, min_leaf=1).fit(X, y)
        assert np.array_equal(gbdt.predict(X), stump.predict(X))

    def test_stage_losses_non_increasing(self):
        rng = np.random.default_rng(69)
        X = rng.normal(size=(120, 4))
        y = ((X[:, 0] + X[:, 1] * X[:, 2]) > 0).astype(int)
        gbdt = GBDTClassifier(n_trees=40, max_depth=3).fit(X, y)
        losses = gbdt.stage_losses
        assert len(losses) == 41
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_xor(self):
        gbdt = GBDTClassifier(n_trees=10, max_depth=2, shrinkage=0.5, min_leaf=1).fit(XOR_X, XOR_Y)
        assert np.mean(gbdt.predict(XOR_X) == XOR_Y) == 1.0

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            GBDTClassifier().fit(np.zeros((4, 2)), np.zeros(4, dtype=int))


class TestAdaBoost:
    def test_first_round_weights_uniform(self):
        X, y = blobs(70)
        model = AdaBoostClassifier(5).fit(X, y)
        assert np.allclose(model.initial_weights, 1.0 / len(y))

    def test_separable_stops_after_one_round(self):
        X = np.array([[-1.0]] * 15 + [[1.0]] * 15)
        y = np.array([0] * 15 + [1] * 15)
        model = AdaBoostClassifier(50).fit(X, y)
        assert len(model.stumps) == 1
        assert model.round_errors[0] == 0.0
        assert np.mean(model.predict(X) == y) == 1.0

    def test_exponential_bound_non_increasing_and_binding(self):
        rng = np.random.default_rng(71)
        X = rng.normal(size=(150, 3))
        y = ((X[:, 0] + 0.5 * X[:, 1] ** 2) > 0.2).astype(int)
        model = AdaBoostClassifier(60).fit(X, y)
        bounds = model.bound_trace
        assert all(b <= a + 1e-12 for a, b in zip(bounds, bounds[1:]))
        train_error = float(np.mean(model.predict(X) != y))
        assert train_error <= bounds[-1] + 1e-12


class TestRandomForest:
    def test_degenerate_forest_equals_cart(self):
        rng = np.random.default_rng(72)
        X = rng.normal(size=(100, 5))
        y = ((X[:, 0] - X[:, 3]) > 0).astype(int)
        rf = RandomForestClassifier(n_trees=1, max_depth=6, mtry=5, seed=3,
                                    bootstrap=False).fit(X, y)
        cart = DecisionTreeClassifier(max_depth=6, min_leaf=2).fit(X, y)
        probe = rng.normal(size=(200, 5))
        assert np.array_equal(rf.predict(probe), cart.predict(probe))

    def test_seed_determinism(self):
        X, y = blobs(73, n=60, gap=1.5)
        a = RandomForestClassifier(n_trees=15, seed=5).fit(X, y)
        b = RandomForestClassifier(n_trees=15, seed=5).fit(X, y)
        probe = np.random.default_rng(1).normal(size=(50, 2))
        assert np.array_equal(a.predict(probe), b.predict(probe))

    def test_separable_blobs_accuracy(self):
        X, y = blobs(74, n=100, gap=3.0)
        train = np.r_[0:80, 100:180]
        test = np.r_[80:100, 180:200]
        rf = RandomForestClassifier(n_trees=25, seed=2).fit(X[train], y[train])
        assert np.mean(rf.predict(X[test]) == y[test]) >= 0.95


class TestKMeans:
    def test_k1_centroid_is_mean(self):
        rng = np.random.default_rng(75)
        X = rng.normal(size=(80, 3))
        model = fit_kmeans(X, 1, seed=0)
        assert np.allclose(model.centroids[0], X.mean(axis=0))
        expected = float(np.sum((X - X.mean(axis=0)) ** 2))
        assert model.inertia == pytest.approx(expected)

    def test_two_blob_recovery(self):
        rng = np.random.default_rng(76)
        X = np.vstack([disk_blob(rng, (0, 0), 1.0, 60), disk_blob(rng, (10, 0), 1.0, 60)])
        truth = np.array([0] * 60 + [1] * 60)
        model = fit_kmeans(X, 2, seed=1)
        agreement = np.mean(model.assignments == truth)
        assert max(agreement, 1.0 - agreement) == 1.0  # up to label swap

    def test_inertia_history_non_increasing(self):
        rng = np.random.default_rng(77)
        X = rng.normal(size=(300, 4))
        model = fit_kmeans(X, 5, seed=4)
        hist = model.inertia_history
        assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))

    def test_assignments_are_nearest(self):
        rng = np.random.default_rng(78)
        X = rng.normal(size=(100, 2))
        model = fit_kmeans(X, 3, seed=2)
        d2 = ((X[:, None, :] - model.centroids[None]) ** 2).sum(axis=2)
        assert np.array_equal(model.assignments, np.argmin(d2, axis=1))
        assert model.inertia == pytest.approx(
            float(np.sum(d2[np.arange(100), model.assignments])))

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            fit_kmeans(np.zeros((3, 2)), 4, seed=0)

    def test_seed_determinism(self):
        rng = np.random.default_rng(79)
        X = rng.normal(size=(120, 3))
        a = fit_kmeans(X, 4, seed=11)
        b = fit_kmeans(X, 4, seed=11)
        assert np.array_equal(a.assignments, b.assignments)
        assert a.inertia == b.inertia


class TestSerialization:
    @pytest.mark.parametrize("factory", [
        lambda: LogisticRegressionGD(epochs=50),
        lambda: KNNClassifier(3),
        lambda: LinearSVM(epochs=50),
        lambda: DecisionTreeClassifier(max_depth=4),
        lambda: GBDTClassifier(n_trees=10),
        lambda: AdaBoostClassifier(n_stumps=10),
        lambda: RandomForestClassifier(n_trees=10, seed=1),
    ])
    def test_json_round_trip(self, factory):
        X, y = blobs(80, n=40, gap=2.0)
        model = factory().fit(X, y)
        doc = json.loads(json.dumps(model_to_dict(model, seed=1)))
        back = model_from_dict(doc)
        probe = np.random.default_rng(2).normal(size=(60, 2))
        assert np.array_equal(back.predict(probe), model.predict(probe))

    def test_document_carries_seed_and_schema_hash(self):
        from flowline_risk.features import ColumnMeta
        from flowline_risk.ml import schema_hash

        X, y = blobs(81, n=30, gap=2.0)
        meta = [ColumnMeta("a", "numeric"), ColumnMeta("fluid=GAS", "one-hot", "fluid", "GAS")]
        doc = model_to_dict(KNNClassifier(3).fit(X, y), seed=9, column_meta=meta)
        assert doc["seed"] == 9
        assert doc["schema_hash"] == schema_hash(meta)
        assert doc["kind"] == "KNN"
        reordered = [meta[1], meta[0]]
        assert schema_hash(reordered) != doc["schema_hash"]
