"""Model-by-model correctness checks against independent oracles.

kNN and Gaussian NB are verified by re-deriving the prediction in plain
Python; the convex trainers are verified where it counts, at the gradient,
against central finite differences of the loss.
"""

import json
import math

import numpy as np
import pytest

from veritrace.classifiers import (
    KINDS, ClassicModel, KnnHyper, LogRegHyper, ModelVersionError, SvmHyper,
    load_model, loss_gradient, loss_value, predict, predict_batch, save_model,
    train,
)
from veritrace.forest import DecisionTree


def blobs(n, d, seed, spread=1.0):
    """Two noisy clusters, labels by cluster."""
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.5).astype(np.int64)
    X = rng.normal(size=(n, d)) * spread + 2.0 * y[:, None]
    return X, y


# ---------------------------------------------------------------------------
# kNN against a brute-force oracle (200 points)
# ---------------------------------------------------------------------------


def knn_oracle(X_train, y_train, x, k):
    mean = X_train.mean(axis=0)
    std = X_train.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    Z = (X_train - mean) / std
    z = (x - mean) / std
    dists = [math.sqrt(sum((a - b) ** 2 for a, b in zip(row, z))) for row in Z]
    order = sorted(range(len(dists)), key=lambda i: (dists[i], i))
    votes = [int(y_train[i]) for i in order[:k]]
    frac = sum(votes) / k
    return (1 if frac >= 0.5 else 0), frac


def test_knn_matches_brute_force_on_200_points():
    X, y = blobs(200, 5, seed=101)
    model = train("knn", X, y, KnnHyper(k=5))
    queries = np.random.default_rng(202).normal(size=(50, 5)) + 1.0
    for q in queries:
        want = knn_oracle(X, y, q, 5)
        got = predict(model, q)
        assert got[0] == want[0]
        assert got[1] == pytest.approx(want[1], abs=0)


def test_knn_k1_returns_training_point_label():
    X, y = blobs(30, 3, seed=7)
    model = train("knn", X, y, KnnHyper(k=1))
    for i in range(len(y)):
        label, score = predict(model, X[i])
        assert label == y[i] and score == float(y[i])


def test_knn_k_larger_than_train_set_uses_all_points():
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([1, 1, 0])
    model = train("knn", X, y, KnnHyper(k=50))
    _, score = predict(model, np.array([0.5]))
    assert score == pytest.approx(2 / 3)


def test_knn_standardization_gives_scale_invariance():
    X, y = blobs(60, 2, seed=5)
    scale = np.array([1000.0, 1.0])
    m_raw = train("knn", X, y, KnnHyper(k=3))
    m_scaled = train("knn", X * scale, y, KnnHyper(k=3))
    queries = np.random.default_rng(6).normal(size=(20, 2)) + 1.0
    for q in queries:
        assert predict(m_raw, q)[0] == predict(m_scaled, q * scale)[0]


# ---------------------------------------------------------------------------
# Gaussian NB against a 12-point enumeration oracle
# ---------------------------------------------------------------------------


def nb_oracle(X, y, x, var_floor=1e-9):
    lp = []
    n = len(y)
    for c in (0, 1):
        rows = [X[i] for i in range(n) if y[i] == c]
        prior = len(rows) / n
        total = math.log(prior)
        for f in range(len(x)):
            vals = [r[f] for r in rows]
            mean = sum(vals) / len(vals)
            var = max(sum((v - mean) ** 2 for v in vals) / len(vals), var_floor)
            total -= 0.5 * (math.log(2 * math.pi * var) + (x[f] - mean) ** 2 / var)
        lp.append(total)
    return 1 if lp[1] >= lp[0] else 0, lp


def test_naive_bayes_matches_enumeration_oracle():
    # 12 points, 2 features, deliberately unbalanced priors (largest-8/4)
    X = np.array([
        [0.1, 1.0], [0.3, 1.2], [0.2, 0.8], [0.4, 1.1],
        [0.0, 0.9], [0.2, 1.3], [0.1, 1.1], [0.3, 0.7],
        [2.0, 3.0], [2.2, 3.4], [1.9, 2.8], [2.1, 3.1],
    ])
    y = np.array([0] * 8 + [1] * 4)
    model = train("naive_bayes", X, y)
    for q in (np.array([0.2, 1.0]), np.array([2.05, 3.0]),
              np.array([1.0, 2.0]), np.array([1.2, 2.1])):
        want_label, want_lp = nb_oracle(X.tolist(), y.tolist(), q.tolist())
        got_label, got_score = predict(model, q)
        assert got_label == want_label
        # predict squashes the posterior log-odds through a sigmoid
        want_score = 1.0 / (1.0 + math.exp(-(want_lp[1] - want_lp[0])))
        assert got_score == pytest.approx(want_score, rel=1e-12)


def test_naive_bayes_variance_floor_handles_constant_features():
    X = np.array([[1.0, 0.0], [1.0, 0.1], [1.0, 2.0], [1.0, 2.1]])
    y = np.array([0, 0, 1, 1])
    model = train("naive_bayes", X, y)
    assert predict(model, np.array([1.0, 0.05]))[0] == 0
    assert predict(model, np.array([1.0, 2.05]))[0] == 1


# ---------------------------------------------------------------------------
# Convex trainers: analytic gradients vs central differences
# ---------------------------------------------------------------------------


def finite_diff(kind, params, X, y, lam):
    grad = np.zeros_like(params)
    for i in range(params.size):
        h = 1e-6 * max(1.0, abs(params[i]))
        up, dn = params.copy(), params.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (loss_value(kind, up, X, y, lam) -
                   loss_value(kind, dn, X, y, lam)) / (2 * h)
    return grad


@pytest.mark.parametrize("kind,lam", [("logreg", 1e-4), ("logreg", 0.1),
                                      ("linear_svm", 1e-2), ("linear_svm", 0.5)])
def test_gradients_match_finite_differences(kind, lam):
    rng = np.random.default_rng(31)
    X = rng.normal(size=(40, 5))
    y = (rng.random(40) < 0.5).astype(np.float64)
    for _ in range(5):
        params = rng.normal(scale=0.8, size=6)
        analytic = loss_gradient(kind, params, X, y, lam)
        numeric = finite_diff(kind, params, X, y, lam)
        for a, n in zip(analytic, numeric):
            rel = abs(a - n) / max(abs(a), abs(n), 1e-5)
            assert rel <= 1e-5


def test_loss_gradient_validates_param_length():
    X = np.zeros((3, 2))
    y = np.zeros(3)
    with pytest.raises(ValueError):
        loss_gradient("logreg", np.zeros(2), X, y)
    with pytest.raises(ValueError):
        loss_gradient("knn", np.zeros(3), X, y)
    with pytest.raises(ValueError):
        loss_value("naive_bayes", np.zeros(3), X, y)


def test_logreg_training_loss_is_non_increasing():
    X, y = blobs(80, 3, seed=17)
    model = train("logreg", X, y)
    # accepted steps never raise the loss, so the final loss cannot exceed
    # the zero-parameter starting point, log 2
    assert model.params["final_loss"] <= math.log(2.0) + 1e-12
    assert model.params["n_iter"] <= LogRegHyper().max_iter


def test_logreg_separates_blobs():
    X, y = blobs(120, 4, seed=23, spread=0.3)
    model = train("logreg", X, y)
    labels, _ = predict_batch(model, X)
    assert (labels == y).mean() == 1.0


def test_svm_separates_blobs():
    X, y = blobs(120, 4, seed=29, spread=0.3)
    model = train("linear_svm", X, y, SvmHyper(epochs=200), seed=1)
    labels, _ = predict_batch(model, X)
    assert (labels == y).mean() >= 0.99


# ---------------------------------------------------------------------------
# Fixed-parameter decision rules
# ---------------------------------------------------------------------------


def test_svm_negative_margin_predicts_real():
    model = ClassicModel(kind="linear_svm", seed=0, hyper=SvmHyper(),
                         n_features=2, params={"w": np.array([1.0, 0.0]), "b": 0.0})
    label, score = predict(model, np.array([-2.0, 0.0]))
    assert label == 0 and score == pytest.approx(-2.0)
    assert predict(model, np.array([0.0, 5.0]))[0] == 1  # margin 0 ties to fake


def test_logreg_zero_weights_is_a_half_tie_to_fake():
    model = ClassicModel(kind="logreg", seed=0, hyper=LogRegHyper(), n_features=3,
                         params={"w": np.zeros(3), "b": 0.0,
                                 "final_loss": math.log(2), "n_iter": 0})
    label, score = predict(model, np.array([1.0, 2.0, 3.0]))
    assert score == 0.5 and label == 1


def test_forest_vote_two_of_three():
    def stump(label):
        return DecisionTree.from_dict(
            {"n_features": 1, "root": {"label": label, "frac1": float(label)}})

    from veritrace.classifiers import ForestHyper
    model = ClassicModel(kind="random_forest", seed=0, hyper=ForestHyper(),
                         n_features=1,
                         params={"trees": [stump(1), stump(1), stump(0)],
                                 "tree_seeds": [0, 1, 2]})
    label, score = predict(model, np.array([0.0]))
    assert label == 1 and score == pytest.approx(2 / 3)


# ---------------------------------------------------------------------------
# Validation and determinism
# ---------------------------------------------------------------------------


def test_train_validates_inputs():
    X, y = blobs(10, 2, seed=1)
    with pytest.raises(ValueError):
        train("perceptron", X, y)
    with pytest.raises(ValueError):
        train("logreg", X, np.full(10, 2))
    with pytest.raises(ValueError):
        train("logreg", X, np.zeros(10, dtype=np.int64))  # single class
    with pytest.raises(ValueError):
        train("logreg", X, y, hyper=SvmHyper())  # wrong hyper type
    with pytest.raises(ValueError):
        train("logreg", np.array([[np.inf, 0.0]] * 10), y)


def test_predict_validates_inputs():
    X, y = blobs(10, 2, seed=1)
    model = train("logreg", X, y)
    with pytest.raises(ValueError):
        predict(model, np.zeros(3))
    with pytest.raises(ValueError):
        predict(model, np.array([np.nan, 0.0]))


@pytest.mark.parametrize("kind", KINDS)
def test_training_is_deterministic(kind, tmp_path):
    X, y = blobs(40, 3, seed=13)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_model(train(kind, X, y, seed=7), str(p1))
    save_model(train(kind, X, y, seed=7), str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_seed_changes_seeded_models():
    X, y = blobs(40, 3, seed=13)
    a = train("linear_svm", X, y, seed=1)
    b = train("linear_svm", X, y, seed=2)
    assert not np.array_equal(a.params["w"], b.params["w"])


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind", KINDS)
def test_save_load_round_trip(kind, tmp_path):
    X, y = blobs(30, 3, seed=19)
    model = train(kind, X, y, seed=3)
    path = tmp_path / "model.json"
    save_model(model, str(path))
    back = load_model(str(path))
    assert back.kind == kind and back.n_features == 3 and back.seed == 3
    queries = np.random.default_rng(4).normal(size=(10, 3))
    l1, s1 = predict_batch(model, queries)
    l2, s2 = predict_batch(back, queries)
    assert np.array_equal(l1, l2) and np.allclose(s1, s2, atol=0)
    # round-tripping the file reproduces it byte for byte
    path2 = tmp_path / "model2.json"
    save_model(back, str(path2))
    assert path.read_bytes() == path2.read_bytes()


def test_load_rejects_future_major_version(tmp_path):
    X, y = blobs(10, 2, seed=1)
    path = tmp_path / "model.json"
    save_model(train("logreg", X, y), str(path))
    obj = json.loads(path.read_text(encoding="utf-8"))
    obj["version"] = [2, 0]
    path.write_text(json.dumps(obj), encoding="utf-8")
    with pytest.raises(ModelVersionError):
        load_model(str(path))


def test_load_rejects_foreign_files(tmp_path):
    path = tmp_path / "other.json"
    path.write_text('{"format": "something-else"}', encoding="utf-8")
    with pytest.raises(ValueError, match="not a classic model"):
        load_model(str(path))
