"""Classical supervised models trained from scratch on feature vectors.

Five kinds: logreg, naive_bayes, linear_svm, knn, random_forest. Training
is deterministic given (inputs, seed); a model artifact carries everything
needed to reproduce it, including the train-split standardization stats
for the kinds that consume standardized features.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .forest import DecisionTree, forest_vote, train_forest

KINDS = ("logreg", "naive_bayes", "linear_svm", "knn", "random_forest")
STANDARDIZED_KINDS = ("logreg", "linear_svm", "knn")

MODEL_FORMAT = "veritrace-classic-model"
MODEL_VERSION = (1, 0)


class ModelVersionError(Exception):
    pass


@dataclass(frozen=True)
class LogRegHyper:
    lam: float = 1e-4
    step: float = 1.0
    max_iter: int = 10000
    tol: float = 1e-6


@dataclass(frozen=True)
class SvmHyper:
    lam: float = 1e-2
    epochs: int = 2000


@dataclass(frozen=True)
class NaiveBayesHyper:
    var_floor: float = 1e-9


@dataclass(frozen=True)
class KnnHyper:
    k: int = 5


@dataclass(frozen=True)
class ForestHyper:
    n_trees: int = 100
    max_features: Optional[int] = 2
    min_samples_leaf: int = 1


HYPER_TYPES = {
    "logreg": LogRegHyper,
    "naive_bayes": NaiveBayesHyper,
    "linear_svm": SvmHyper,
    "knn": KnnHyper,
    "random_forest": ForestHyper,
}


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)  # ddof=0
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


@dataclass
class ClassicModel:
    kind: str
    seed: int
    hyper: object
    n_features: int
    params: dict
    standardizer: Optional[Standardizer] = None


def _sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    z = X @ w + b
    # softplus(z) - y*z, stable for large |z|
    per = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - y * z
    return float(per.mean() + 0.5 * lam * float(w @ w))


def _bce_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray,
              lam: float) -> tuple[np.ndarray, float]:
    p = _sigmoid(X @ w + b)
    resid = p - y
    gw = X.T @ resid / X.shape[0] + lam * w
    gb = float(resid.mean())
    return gw, gb


def _validate_training(kind: str, X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"bad shapes: X {X.shape}, y {y.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if kind == "knn":
        if X.shape[0] < 1:
            raise ValueError("knn needs at least 1 training point")
        return
    if X.shape[0] < 2 or len(np.unique(y)) < 2:
        raise ValueError(f"{kind} needs at least 2 points with both classes present")


def train(kind: str, X: np.ndarray, y: np.ndarray, hyper: object | None = None,
          seed: int = 0) -> ClassicModel:
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}, expected one of {KINDS}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _validate_training(kind, X, y)
    if hyper is None:
        hyper = HYPER_TYPES[kind]()
    elif not isinstance(hyper, HYPER_TYPES[kind]):
        raise ValueError(f"hyper for {kind} must be {HYPER_TYPES[kind].__name__}")

    standardizer = Standardizer.fit(X) if kind in STANDARDIZED_KINDS else None
    Xt = standardizer.transform(X) if standardizer else X

    if kind == "logreg":
        params = _train_logreg(Xt, y.astype(np.float64), hyper)
    elif kind == "naive_bayes":
        params = _train_nb(Xt, y, hyper)
    elif kind == "linear_svm":
        params = _train_svm(Xt, y, hyper, seed)
    elif kind == "knn":
        params = {"X": Xt.copy(), "y": y.copy()}
    else:
        trees, tree_seeds = train_forest(Xt, y, hyper.n_trees, hyper.max_features,
                                         hyper.min_samples_leaf, seed)
        params = {"trees": trees, "tree_seeds": tree_seeds}

    return ClassicModel(kind=kind, seed=seed, hyper=hyper, n_features=X.shape[1],
                        params=params, standardizer=standardizer)


def _train_logreg(X: np.ndarray, y: np.ndarray, hyper: LogRegHyper) -> dict:
    """Full-batch descent; the step halves whenever a trial point would
    raise the loss, so the recorded loss sequence is non-increasing."""
    w = np.zeros(X.shape[1])
    b = 0.0
    step = hyper.step
    loss = _bce_loss(w, b, X, y, hyper.lam)
    n_iter = 0
    while n_iter < hyper.max_iter:
        gw, gb = _bce_grad(w, b, X, y, hyper.lam)
        gnorm = float(np.sqrt(gw @ gw + gb * gb))
        if gnorm < hyper.tol:
            break
        accepted = False
        while step >= 1e-12:
            w2 = w - step * gw
            b2 = b - step * gb
            loss2 = _bce_loss(w2, b2, X, y, hyper.lam)
            if loss2 <= loss:
                w, b, loss = w2, b2, loss2
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        n_iter += 1
    return {"w": w, "b": b, "final_loss": loss, "n_iter": n_iter}


def _train_nb(X: np.ndarray, y: np.ndarray, hyper: NaiveBayesHyper) -> dict:
    n = X.shape[0]
    means = np.zeros((2, X.shape[1]))
    variances = np.zeros((2, X.shape[1]))
    priors = np.zeros(2)
    for c in (0, 1):
        Xc = X[y == c]
        priors[c] = Xc.shape[0] / n
        means[c] = Xc.mean(axis=0)
        variances[c] = np.maximum(Xc.var(axis=0), hyper.var_floor)  # ddof=0
    return {"means": means, "variances": variances, "priors": priors}


def _train_svm(X: np.ndarray, y: np.ndarray, hyper: SvmHyper, seed: int) -> dict:
    """Per-example subgradient descent on hinge + L2, step 1/(lam*t)."""
    rng = np.random.default_rng(seed)
    n, d = X.shape
    ys = 2.0 * y - 1.0
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(hyper.epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (hyper.lam * t)
            if ys[i] * (X[i] @ w + b) < 1.0:
                w = (1.0 - eta * hyper.lam) * w + eta * ys[i] * X[i]
                b = b + eta * ys[i]
            else:
                w = (1.0 - eta * hyper.lam) * w
    return {"w": w, "b": b}


def _nb_log_posteriors(params: dict, x: np.ndarray) -> np.ndarray:
    means, variances, priors = params["means"], params["variances"], params["priors"]
    lp = np.empty(2)
    for c in (0, 1):
        quad = (x - means[c]) ** 2 / variances[c]
        lp[c] = np.log(priors[c]) - 0.5 * float(
            np.sum(np.log(2.0 * np.pi * variances[c]) + quad)
        )
    return lp


def predict(model: ClassicModel, x: np.ndarray) -> tuple[int, float]:
    """(label, score): probability for logreg/NB, vote fraction for
    kNN/forest, signed margin for the SVM. Threshold ties go to label 1."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(f"expected {model.n_features}-dimensional input, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    xt = model.standardizer.transform(x) if model.standardizer else x

    if model.kind == "logreg":
        score = float(_sigmoid(np.array([xt @ model.params["w"] + model.params["b"]]))[0])
        return (1 if score >= 0.5 else 0), score
    if model.kind == "naive_bayes":
        lp = _nb_log_posteriors(model.params, xt)
        score = float(_sigmoid(np.array([lp[1] - lp[0]]))[0])
        return (1 if lp[1] >= lp[0] else 0), score
    if model.kind == "linear_svm":
        margin = float(xt @ model.params["w"] + model.params["b"])
        return (1 if margin >= 0.0 else 0), margin
    if model.kind == "knn":
        Xtr, ytr = model.params["X"], model.params["y"]
        dists = np.sqrt(((Xtr - xt) ** 2).sum(axis=1))
        order = np.argsort(dists, kind="stable")
        k = min(model.hyper.k, Xtr.shape[0])
        frac = float(ytr[order[:k]].mean())
        return (1 if frac >= 0.5 else 0), frac
    frac = forest_vote(model.params["trees"], xt)
    return (1 if frac >= 0.5 else 0), frac


def predict_batch(model: ClassicModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    labels = np.empty(X.shape[0], dtype=np.int64)
    scores = np.empty(X.shape[0], dtype=np.float64)
    for i in range(X.shape[0]):
        labels[i], scores[i] = predict(model, X[i])
    return labels, scores


def loss_gradient(kind: str, params: np.ndarray, X: np.ndarray, y: np.ndarray,
                  lam: float | None = None) -> np.ndarray:
    """Analytic gradient of the regularized training loss at [w..., b].

    Exists so the optimizers can be checked against finite differences;
    operates on whatever features it is given, no standardization.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (X.shape[1] + 1,):
        raise ValueError(f"params must have length {X.shape[1] + 1}")
    w, b = params[:-1], float(params[-1])
    if kind == "logreg":
        lam = LogRegHyper().lam if lam is None else lam
        gw, gb = _bce_grad(w, b, X, y, lam)
        return np.concatenate([gw, [gb]])
    if kind == "linear_svm":
        lam = SvmHyper().lam if lam is None else lam
        ys = 2.0 * y - 1.0
        margins = ys * (X @ w + b)
        active = margins < 1.0
        gw = lam * w - (ys[active, None] * X[active]).sum(axis=0) / X.shape[0]
        gb = -float(ys[active].sum()) / X.shape[0]
        return np.concatenate([gw, [gb]])
    raise ValueError(f"loss_gradient supports logreg and linear_svm, not {kind!r}")


def loss_value(kind: str, params: np.ndarray, X: np.ndarray, y: np.ndarray,
               lam: float | None = None) -> float:
    """Companion to loss_gradient, same parameterization."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    w, b = params[:-1], float(params[-1])
    if kind == "logreg":
        lam = LogRegHyper().lam if lam is None else lam
        return _bce_loss(w, b, X, y, lam)
    if kind == "linear_svm":
        lam = SvmHyper().lam if lam is None else lam
        margins = (2.0 * y - 1.0) * (X @ w + b)
        return float(np.maximum(0.0, 1.0 - margins).mean() + 0.5 * lam * float(w @ w))
    raise ValueError(f"loss_value supports logreg and linear_svm, not {kind!r}")


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------


def _params_to_json(model: ClassicModel) -> dict:
    p = model.params
    if model.kind == "logreg":
        return {"w": p["w"].tolist(), "b": p["b"],
                "final_loss": p["final_loss"], "n_iter": p["n_iter"]}
    if model.kind == "naive_bayes":
        return {"means": p["means"].tolist(), "variances": p["variances"].tolist(),
                "priors": p["priors"].tolist()}
    if model.kind == "linear_svm":
        return {"w": p["w"].tolist(), "b": p["b"]}
    if model.kind == "knn":
        return {"X": p["X"].tolist(), "y": p["y"].tolist()}
    return {"trees": [t.to_dict() for t in p["trees"]], "tree_seeds": p["tree_seeds"]}


def _params_from_json(kind: str, p: dict) -> dict:
    if kind == "logreg":
        return {"w": np.array(p["w"], dtype=np.float64), "b": float(p["b"]),
                "final_loss": float(p["final_loss"]), "n_iter": int(p["n_iter"])}
    if kind == "naive_bayes":
        return {"means": np.array(p["means"], dtype=np.float64),
                "variances": np.array(p["variances"], dtype=np.float64),
                "priors": np.array(p["priors"], dtype=np.float64)}
    if kind == "linear_svm":
        return {"w": np.array(p["w"], dtype=np.float64), "b": float(p["b"])}
    if kind == "knn":
        return {"X": np.array(p["X"], dtype=np.float64),
                "y": np.array(p["y"], dtype=np.int64)}
    return {"trees": [DecisionTree.from_dict(t) for t in p["trees"]],
            "tree_seeds": [int(s) for s in p["tree_seeds"]]}


def save_model(model: ClassicModel, path: str) -> None:
    obj = {
        "format": MODEL_FORMAT,
        "version": list(MODEL_VERSION),
        "kind": model.kind,
        "seed": model.seed,
        "n_features": model.n_features,
        "hyper": asdict(model.hyper),
        "standardizer": (
            {"mean": model.standardizer.mean.tolist(),
             "std": model.standardizer.std.tolist()}
            if model.standardizer else None
        ),
        "params": _params_to_json(model),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model(path: str) -> ClassicModel:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a classic model file")
    version = tuple(obj.get("version", ()))
    if not version or version[0] > MODEL_VERSION[0]:
        raise ModelVersionError(
            f"{path}: written by major version {version and version[0]}, "
            f"this build reads up to {MODEL_VERSION[0]}"
        )
    kind = obj["kind"]
    if kind not in KINDS:
        raise ValueError(f"{path}: unknown model kind {kind!r}")
    std = obj.get("standardizer")
    return ClassicModel(
        kind=kind,
        seed=int(obj["seed"]),
        hyper=HYPER_TYPES[kind](**obj["hyper"]),
        n_features=int(obj["n_features"]),
        params=_params_from_json(kind, obj["params"]),
        standardizer=(
            Standardizer(mean=np.array(std["mean"], dtype=np.float64),
                         std=np.array(std["std"], dtype=np.float64))
            if std else None
        ),
    )
