"""Bidirectional LSTM over encoded title sequences, trained from scratch.

Everything is plain numpy in double precision: gate algebra, masked BPTT,
Adam. Slow by deep-learning standards and exactly reproducible, which is
the trade this package wants.

Two input modes mirror the two experimental conditions: image_only trains
on retrieved titles alone, tweet_plus_image prepends the post text to each
title with a single space.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .classifiers import ModelVersionError
from .corpus import Corpus, label_to_int
from .evidence import EvidenceStore, get_titles
from .textprep import PAD_ID, Vocab, encode, normalize

log = logging.getLogger(__name__)

MODES = ("image_only", "tweet_plus_image")
VOTES = ("mean_prob", "majority")
DIRECTIONS = ("fwd", "bwd")
GATES = ("i", "f", "o", "g")

MODEL_FORMAT = "veritrace-neural-model"
MODEL_VERSION = (1, 0)

INIT_SCALE = 0.08
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class TrainingDivergedError(Exception):
    pass


class VocabMismatchError(Exception):
    pass


@dataclass(frozen=True)
class Instance:
    text: str
    label: int
    post_id: str
    mode: str
    ids: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class NeuralConfig:
    vocab_size: int
    embedding_dim: int = 64
    hidden_dim: int = 32
    max_len: int = 50
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 25
    mode: str = "image_only"
    vocab_hash: str = ""

    def __post_init__(self) -> None:
        if self.vocab_size < 2:
            raise ValueError("vocab_size must cover PAD and UNK")
        for name in ("embedding_dim", "hidden_dim", "max_len", "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not isinstance(self.vocab_hash, str):
            raise ValueError("vocab_hash must be a string")


@dataclass
class NeuralModel:
    config: NeuralConfig
    seed: int
    params: dict[str, np.ndarray]


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass(frozen=True)
class TrainReport:
    epochs: tuple[EpochStats, ...]
    best_epoch: int


def build_instances(
    corpus: Corpus,
    store: EvidenceStore,
    engine: str,
    mode: str,
    k: int = 10,
) -> list[Instance]:
    """One instance per (post, retrieved title); evidence-free posts
    contribute none."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    out: list[Instance] = []
    for post in corpus.posts:
        for title in get_titles(store, post.image_id, engine, k):
            text = title if mode == "image_only" else f"{post.text} {title}"
            out.append(Instance(text=text, label=label_to_int(post.label),
                                post_id=post.post_id, mode=mode))
    return out


def encode_instances(instances: Sequence[Instance], vocab: Vocab) -> list[Instance]:
    return [
        replace(inst, ids=tuple(encode(normalize(inst.text), vocab)))
        for inst in instances
    ]


# ---------------------------------------------------------------------------
# Parameters and forward/backward
# ---------------------------------------------------------------------------


def param_shapes(config: NeuralConfig) -> dict[str, tuple[int, ...]]:
    V, E, H = config.vocab_size, config.embedding_dim, config.hidden_dim
    shapes: dict[str, tuple[int, ...]] = {"emb": (V, E)}
    for d in DIRECTIONS:
        for g in GATES:
            shapes[f"{d}_W{g}"] = (E, H)
            shapes[f"{d}_U{g}"] = (H, H)
            shapes[f"{d}_b{g}"] = (H,)
    shapes["out_W"] = (2 * H,)
    shapes["out_b"] = (1,)
    return shapes


def init_params(config: NeuralConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Seeded uniform(-0.08, 0.08) weights; biases zero except the forget
    gates, which start at 1.0 so early training does not wash out state."""
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config).items():
        if name.endswith(("bi", "bf", "bo", "bg")) or name == "out_b":
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)
    for d in DIRECTIONS:
        params[f"{d}_bf"][:] = 1.0
    return params


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _loss_from_z(z: np.ndarray, y: np.ndarray) -> float:
    # mean BCE written on logits: softplus(z) - y*z, stable for large |z|
    per = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - y * z
    return float(per.mean())


def _direction_forward(
    params: dict[str, np.ndarray],
    d: str,
    xs: np.ndarray,
    mask: np.ndarray,
    keep_cache: bool,
) -> tuple[np.ndarray, list[dict]]:
    B, T, _ = xs.shape
    H = params[f"{d}_Wi"].shape[1]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    cache: list[dict] = []
    order = range(T) if d == "fwd" else range(T - 1, -1, -1)
    Wi, Wf, Wo, Wg = (params[f"{d}_W{g}"] for g in GATES)
    Ui, Uf, Uo, Ug = (params[f"{d}_U{g}"] for g in GATES)
    bi, bf, bo, bg = (params[f"{d}_b{g}"] for g in GATES)
    for t in order:
        x_t = xs[:, t]
        i = _sigmoid(x_t @ Wi + h @ Ui + bi)
        f = _sigmoid(x_t @ Wf + h @ Uf + bf)
        o = _sigmoid(x_t @ Wo + h @ Uo + bo)
        g = np.tanh(x_t @ Wg + h @ Ug + bg)
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        m = mask[:, t:t + 1]
        if keep_cache:
            cache.append({"t": t, "i": i, "f": f, "o": o, "g": g,
                          "tanh_c": tanh_c, "h_prev": h, "c_prev": c, "m": m})
        c = m * c_new + (1.0 - m) * c
        h = m * h_new + (1.0 - m) * h
    return h, cache


def _forward_batch(
    params: dict[str, np.ndarray],
    ids: np.ndarray,
    keep_cache: bool = False,
) -> tuple[np.ndarray, dict]:
    """Logits for a (B, T) id matrix, plus the cache backward() needs."""
    xs = params["emb"][ids]
    mask = (ids != PAD_ID).astype(np.float64)
    h_fwd, cache_fwd = _direction_forward(params, "fwd", xs, mask, keep_cache)
    h_bwd, cache_bwd = _direction_forward(params, "bwd", xs, mask, keep_cache)
    concat = np.concatenate([h_fwd, h_bwd], axis=1)
    z = concat @ params["out_W"] + params["out_b"][0]
    cache = {"ids": ids, "xs": xs, "mask": mask, "concat": concat,
             "fwd": cache_fwd, "bwd": cache_bwd}
    return z, cache


def _direction_backward(
    params: dict[str, np.ndarray],
    d: str,
    cache: list[dict],
    xs: np.ndarray,
    ids: np.ndarray,
    dh_final: np.ndarray,
    grads: dict[str, np.ndarray],
) -> None:
    Wi, Wf, Wo, Wg = (params[f"{d}_W{g}"] for g in GATES)
    Ui, Uf, Uo, Ug = (params[f"{d}_U{g}"] for g in GATES)
    dh = dh_final
    dc = np.zeros_like(dh_final)
    for step in reversed(cache):
        t, m = step["t"], step["m"]
        i, f, o, g = step["i"], step["f"], step["o"], step["g"]
        tanh_c, h_prev, c_prev = step["tanh_c"], step["h_prev"], step["c_prev"]

        dh_new = dh * m
        dh_carry = dh * (1.0 - m)
        dc_new = dc * m
        dc_carry = dc * (1.0 - m)

        do = dh_new * tanh_c
        dc_total = dc_new + dh_new * o * (1.0 - tanh_c * tanh_c)
        df = dc_total * c_prev
        di = dc_total * g
        dg = dc_total * i

        da_i = di * i * (1.0 - i)
        da_f = df * f * (1.0 - f)
        da_o = do * o * (1.0 - o)
        da_g = dg * (1.0 - g * g)

        x_t = xs[:, t]
        grads[f"{d}_Wi"] += x_t.T @ da_i
        grads[f"{d}_Wf"] += x_t.T @ da_f
        grads[f"{d}_Wo"] += x_t.T @ da_o
        grads[f"{d}_Wg"] += x_t.T @ da_g
        grads[f"{d}_Ui"] += h_prev.T @ da_i
        grads[f"{d}_Uf"] += h_prev.T @ da_f
        grads[f"{d}_Uo"] += h_prev.T @ da_o
        grads[f"{d}_Ug"] += h_prev.T @ da_g
        grads[f"{d}_bi"] += da_i.sum(axis=0)
        grads[f"{d}_bf"] += da_f.sum(axis=0)
        grads[f"{d}_bo"] += da_o.sum(axis=0)
        grads[f"{d}_bg"] += da_g.sum(axis=0)

        dx_t = da_i @ Wi.T + da_f @ Wf.T + da_o @ Wo.T + da_g @ Wg.T
        np.add.at(grads["emb"], ids[:, t], dx_t)

        dh = da_i @ Ui.T + da_f @ Uf.T + da_o @ Uo.T + da_g @ Ug.T + dh_carry
        dc = dc_total * f + dc_carry


def _backward_batch(
    params: dict[str, np.ndarray],
    cache: dict,
    z: np.ndarray,
    y: np.ndarray,
) -> dict[str, np.ndarray]:
    """Gradients of mean BCE over the batch wrt every parameter block."""
    B = z.shape[0]
    H = params["fwd_Wi"].shape[1]
    grads = {name: np.zeros_like(arr) for name, arr in params.items()}
    dz = (_sigmoid(z) - y) / B
    grads["out_W"] += cache["concat"].T @ dz
    grads["out_b"] += np.array([dz.sum()])
    d_concat = np.outer(dz, params["out_W"])
    _direction_backward(params, "fwd", cache["fwd"], cache["xs"], cache["ids"],
                        d_concat[:, :H], grads)
    _direction_backward(params, "bwd", cache["bwd"], cache["xs"], cache["ids"],
                        d_concat[:, H:], grads)
    return grads


def forward(model: NeuralModel, ids: Sequence[int]) -> float:
    """Probability that one encoded sequence is fake. Clamped away from
    exact 0/1 so downstream logs stay finite."""
    ids_arr = np.asarray(ids, dtype=np.int64)
    if ids_arr.shape != (model.config.max_len,):
        raise ValueError(f"ids must have length max_len={model.config.max_len}, "
                         f"got shape {ids_arr.shape}")
    if ids_arr.min() < 0 or ids_arr.max() >= model.config.vocab_size:
        raise ValueError("token id outside vocabulary")
    z, _ = _forward_batch(model.params, ids_arr[None, :])
    p = float(_sigmoid(z)[0])
    return min(max(p, 1e-12), 1.0 - 1e-12)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    m: dict[str, np.ndarray],
    v: dict[str, np.ndarray],
    t: int,
    lr: float,
) -> None:
    bc1 = 1.0 - ADAM_BETA1 ** t
    bc2 = 1.0 - ADAM_BETA2 ** t
    for name, g in grads.items():
        m[name] = ADAM_BETA1 * m[name] + (1.0 - ADAM_BETA1) * g
        v[name] = ADAM_BETA2 * v[name] + (1.0 - ADAM_BETA2) * (g * g)
        params[name] -= lr * (m[name] / bc1) / (np.sqrt(v[name] / bc2) + ADAM_EPS)


def _ids_matrix(instances: Sequence[Instance], max_len: int) -> tuple[np.ndarray, np.ndarray]:
    for inst in instances:
        if inst.ids is None:
            raise ValueError(f"instance for post {inst.post_id!r} is not encoded")
        if len(inst.ids) != max_len:
            raise ValueError(
                f"instance ids length {len(inst.ids)} != max_len {max_len}; "
                "encode with the model's vocabulary"
            )
    ids = np.array([inst.ids for inst in instances], dtype=np.int64)
    y = np.array([inst.label for inst in instances], dtype=np.float64)
    return ids, y


def _eval_pass(params: dict, ids: np.ndarray, y: np.ndarray, batch: int) -> tuple[float, float]:
    losses: list[float] = []
    correct = 0
    for s in range(0, ids.shape[0], batch):
        z, _ = _forward_batch(params, ids[s:s + batch])
        yb = y[s:s + batch]
        losses.append(_loss_from_z(z, yb) * yb.shape[0])
        correct += int(((z >= 0.0) == (yb == 1.0)).sum())
    return sum(losses) / ids.shape[0], correct / ids.shape[0]


def train(
    instances: Sequence[Instance],
    config: NeuralConfig,
    seed: int,
    val_instances: Sequence[Instance] | None = None,
) -> tuple[NeuralModel, TrainReport]:
    """Mini-batch BPTT with Adam; returns the parameters of the epoch with
    the best validation loss. Without a validation set the training set
    doubles as one, which is only sensible for small fixtures."""
    labels = {inst.label for inst in instances}
    if labels != {0, 1}:
        raise ValueError(f"training needs both classes, got labels {sorted(labels)}")
    ids, y = _ids_matrix(instances, config.max_len)
    if val_instances:
        val_ids, val_y = _ids_matrix(val_instances, config.max_len)
    else:
        val_ids, val_y = ids, y

    rng = np.random.default_rng(seed)
    params = init_params(config, rng)
    m = {k: np.zeros_like(p) for k, p in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    t_step = 0
    best_loss = np.inf
    best_params = {k: p.copy() for k, p in params.items()}
    best_epoch = 0
    stats: list[EpochStats] = []

    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(ids.shape[0])
        epoch_loss = 0.0
        correct = 0
        for s in range(0, ids.shape[0], config.batch_size):
            sel = perm[s:s + config.batch_size]
            zb, cache = _forward_batch(params, ids[sel], keep_cache=True)
            yb = y[sel]
            batch_loss = _loss_from_z(zb, yb)
            if not np.isfinite(batch_loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch starting {s}"
                )
            epoch_loss += batch_loss * yb.shape[0]
            correct += int(((zb >= 0.0) == (yb == 1.0)).sum())
            grads = _backward_batch(params, cache, zb, yb)
            t_step += 1
            _adam_step(params, grads, m, v, t_step, config.lr)

        val_loss, val_acc = _eval_pass(params, val_ids, val_y, config.batch_size)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
        stats.append(EpochStats(
            epoch=epoch,
            train_loss=epoch_loss / ids.shape[0],
            train_acc=correct / ids.shape[0],
            val_loss=val_loss,
            val_acc=val_acc,
        ))
        if val_loss < best_loss:
            best_loss = val_loss
            best_params = {k: p.copy() for k, p in params.items()}
            best_epoch = epoch

    model = NeuralModel(config=config, seed=seed, params=best_params)
    return model, TrainReport(epochs=tuple(stats), best_epoch=best_epoch)


# ---------------------------------------------------------------------------
# Verification and prediction
# ---------------------------------------------------------------------------


def gradient_check(
    model: NeuralModel,
    instance: Instance,
    h: float = 1e-5,
    n_samples: int = 200,
    seed: int = 0,
    fault_zero: tuple[str, ...] = (),
    denom_floor: float = 1e-5,
) -> float:
    """Max relative error between analytic BCE gradients and central finite
    differences over >= n_samples coordinates stratified across every
    parameter block. fault_zero names blocks whose analytic gradients are
    zeroed first: a deliberate fault the check must then catch.

    denom_floor keeps the ratio meaningful where the true gradient sits
    below the finite-difference noise floor (central differences cannot
    resolve below ~eps*|loss|/h, about 1e-11 here); errors on gradients
    that small are roundoff, not implementation faults.
    """
    if instance.ids is None:
        raise ValueError("instance must be encoded")
    ids = np.asarray(instance.ids, dtype=np.int64)[None, :]
    y = np.array([float(instance.label)])

    z, cache = _forward_batch(model.params, ids, keep_cache=True)
    grads = _backward_batch(model.params, cache, z, y)
    for key in grads:
        if any(key.startswith(prefix) for prefix in fault_zero):
            grads[key] = np.zeros_like(grads[key])

    rng = np.random.default_rng(seed)
    blocks = sorted(model.params)
    per_block = max(1, -(-n_samples // len(blocks)))
    used_rows = sorted({int(i) for i in instance.ids if i != PAD_ID})

    worst = 0.0
    for name in blocks:
        arr = model.params[name]
        for _ in range(per_block):
            if name == "emb":
                if not used_rows:
                    continue
                row = used_rows[int(rng.integers(len(used_rows)))]
                col = int(rng.integers(arr.shape[1]))
                idx: tuple[int, ...] = (row, col)
            else:
                idx = tuple(int(rng.integers(s)) for s in arr.shape)
            original = arr[idx]
            arr[idx] = original + h
            z_hi, _ = _forward_batch(model.params, ids)
            arr[idx] = original - h
            z_lo, _ = _forward_batch(model.params, ids)
            arr[idx] = original
            numeric = (_loss_from_z(z_hi, y) - _loss_from_z(z_lo, y)) / (2.0 * h)
            analytic = float(grads[name][idx])
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), denom_floor)
            worst = max(worst, rel)
    return worst


def predict_post(
    model: NeuralModel,
    vocab: Vocab,
    text: str,
    titles: Sequence[str],
    mode: str | None = None,
    vote: str = "mean_prob",
) -> tuple[Optional[int], float]:
    """Post-level decision from per-title probabilities.

    mean_prob averages probabilities; majority counts thresholded votes.
    Ties go to fake. Zero titles is an abstention: (None, 0.5).
    """
    if vote not in VOTES:
        raise ValueError(f"vote must be one of {VOTES}, got {vote!r}")
    mode = mode or model.config.mode
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if model.config.vocab_hash and vocab.content_hash() != model.config.vocab_hash:
        raise VocabMismatchError(
            "vocabulary content hash does not match the one this model was trained with"
        )
    if not titles:
        return None, 0.5
    probs = []
    for title in titles:
        instance_text = title if mode == "image_only" else f"{text} {title}"
        ids = encode(normalize(instance_text), vocab, model.config.max_len)
        probs.append(forward(model, ids))
    if vote == "mean_prob":
        score = float(np.mean(probs))
        return (1 if score >= 0.5 else 0), score
    frac = sum(1 for p in probs if p >= 0.5) / len(probs)
    return (1 if frac >= 0.5 else 0), frac


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------


def save_model(model: NeuralModel, path: str) -> None:
    obj = {
        "format": MODEL_FORMAT,
        "version": list(MODEL_VERSION),
        "seed": model.seed,
        "config": asdict(model.config),
        "params": {k: p.tolist() for k, p in model.params.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model(path: str) -> NeuralModel:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a neural model file")
    version = tuple(obj.get("version", ()))
    if not version or version[0] > MODEL_VERSION[0]:
        raise ModelVersionError(
            f"{path}: written by major version {version and version[0]}, "
            f"this build reads up to {MODEL_VERSION[0]}"
        )
    config = NeuralConfig(**obj["config"])
    params = {k: np.array(p, dtype=np.float64) for k, p in obj["params"].items()}
    expected = param_shapes(config)
    if set(params) != set(expected):
        raise ValueError(f"{path}: parameter blocks do not match the config")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise ValueError(f"{path}: block {name} has shape {params[name].shape}, "
                             f"expected {shape}")
    return NeuralModel(config=config, seed=int(obj["seed"]), params=params)
