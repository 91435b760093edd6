"""Model-averaging training simulator on partitioned graphs.

The model is SGC-style: features are smoothed ``k`` times with mean
aggregation over each node's closed neighborhood, then a linear softmax
classifier is fit with mini-batch Adam. Because the model is linear, the
gradient is analytic and no autodiff framework is involved.

Distributed training trains one local model per partition, starting each
round from the shared parameters, and averages the local models weighted
by their training-node counts every ``sync_interval`` epochs. Partitions
are dealt cyclically to ``q`` logical workers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .completion import ROLE_TEST, ROLE_TRAIN, ROLE_VAL, PartitionedGraph
from .errors import ConfigError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    lr: float = 0.01
    batch_size: int = 512
    weight_decay: float = 0.0
    prop_steps: int = 2
    seed: int = 0


@dataclass(eq=False)
class ModelParams:
    W: np.ndarray
    b: np.ndarray
    epoch: int = 0

    @classmethod
    def zeros(cls, dim: int, classes: int) -> "ModelParams":
        return cls(np.zeros((dim, classes)), np.zeros(classes))

    def copy(self) -> "ModelParams":
        return ModelParams(self.W.copy(), self.b.copy(), self.epoch)

    def identical(self, other: "ModelParams") -> bool:
        return np.array_equal(self.W, other.W) and np.array_equal(self.b, other.b)


def mean_adjacency(edges, num_nodes: int) -> sp.csr_matrix:
    """Row-normalized ``A + I`` for an undirected edge list.

    Duplicate edges count with multiplicity; self-loops in the input are
    dropped since every node already averages itself.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    edges = edges[edges[:, 0] != edges[:, 1]]
    rows = np.concatenate([edges[:, 0], edges[:, 1], np.arange(num_nodes)])
    cols = np.concatenate([edges[:, 1], edges[:, 0], np.arange(num_nodes)])
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(num_nodes, num_nodes))
    deg = np.asarray(adj.sum(axis=1)).ravel()
    return sp.diags(1.0 / deg) @ adj


def sgc_propagate(edges, features, k: int) -> np.ndarray:
    """Apply ``k`` rounds of closed-neighborhood mean aggregation."""
    if k < 0:
        raise ConfigError("propagation steps must be non-negative")
    x = np.asarray(features, dtype=np.float64)
    if k == 0:
        return x.copy()
    op = mean_adjacency(edges, x.shape[0])
    for _ in range(k):
        x = op @ x
    return np.asarray(x)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(params: ModelParams, x: np.ndarray, y: np.ndarray,
                  weight_decay: float = 0.0):
    """Mean cross-entropy (plus L2 on ``W``) and its gradient w.r.t. ``W`` and ``b``."""
    probs = softmax(x @ params.W + params.b)
    n = len(y)
    loss = -np.log(probs[np.arange(n), y] + 1e-300).mean()
    loss += 0.5 * weight_decay * float(np.sum(params.W ** 2))
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_w = x.T @ delta + weight_decay * params.W
    grad_b = delta.sum(axis=0)
    return float(loss), grad_w, grad_b


class LocalTrainer:
    """Mini-batch Adam on one partition's training rows.

    The trainer owns its shuffling RNG and Adam moments, so repeated
    :meth:`run` calls continue one trajectory; only the weights get
    replaced between rounds by averaging.
    """

    beta1, beta2, eps = 0.9, 0.999, 1e-8

    def __init__(self, x, y, *, lr=0.01, batch_size=512, weight_decay=0.0, seed=0):
        self.x = np.asarray(x, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.lr = lr
        self.batch_size = batch_size
        self.weight_decay = weight_decay
        self.rng = np.random.default_rng(seed)
        self._m = None
        self._v = None
        self._t = 0

    def run(self, params: ModelParams, epochs: int) -> ModelParams:
        p = params.copy()
        n = len(self.y)
        if n == 0:
            log.warning("no training nodes; parameters left unchanged")
            return p
        if self._m is None:
            self._m = [np.zeros_like(p.W), np.zeros_like(p.b)]
            self._v = [np.zeros_like(p.W), np.zeros_like(p.b)]
        for _ in range(epochs):
            order = self.rng.permutation(n)
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                _, gw, gb = loss_and_grad(p, self.x[idx], self.y[idx], self.weight_decay)
                self._step(p, gw, gb)
            p.epoch += 1
        return p

    def _step(self, p: ModelParams, gw, gb) -> None:
        self._t += 1
        c1 = 1.0 - self.beta1 ** self._t
        c2 = 1.0 - self.beta2 ** self._t
        for j, (theta, g) in enumerate(((p.W, gw), (p.b, gb))):
            m, v = self._m[j], self._v[j]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            theta -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train_local(x, labels, train_mask, epochs: int = 100, lr: float = 0.01,
                batch_size: int = 512, seed: int = 0, *, weight_decay: float = 0.0,
                params: ModelParams | None = None, num_classes: int | None = None) -> ModelParams:
    """Fit softmax regression on the masked rows; deterministic for a given seed."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    mask = np.asarray(train_mask, dtype=bool)
    if params is None:
        c = num_classes if num_classes is not None else int(labels.max()) + 1
        params = ModelParams.zeros(x.shape[1], c)
    trainer = LocalTrainer(x[mask], labels[mask], lr=lr, batch_size=batch_size,
                           weight_decay=weight_decay, seed=seed)
    return trainer.run(params, epochs)


def sync_weights(counts: Sequence[int]) -> list[Fraction]:
    """Averaging weights ``n_i / sum(n)`` as exact fractions."""
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ConfigError("training counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise ConfigError("all training counts are zero")
    return [Fraction(c, total) for c in counts]


def model_average(params: Sequence[ModelParams], counts: Sequence[int]) -> ModelParams:
    """Training-count-weighted average of model parameters.

    Computed as an offset from the heaviest model so that identical inputs and
    one-hot weights reproduce their input exactly; entries are clipped to the
    inputs' range to keep the result a convex combination under rounding.
    """
    if len(params) != len(counts) or not params:
        raise ConfigError("need one training count per parameter set")
    shape_w, shape_b = params[0].W.shape, params[0].b.shape
    for q in params:
        if q.W.shape != shape_w or q.b.shape != shape_b:
            raise ConfigError("parameter shapes differ between workers")
    alphas = [float(a) for a in sync_weights(counts)]
    base = int(np.argmax(alphas))
    out = []
    for attr in ("W", "b"):
        stack = [getattr(q, attr) for q in params]
        ref = stack[base]
        acc = ref.copy()
        for a, arr in zip(alphas, stack):
            if a and arr is not ref:
                acc += a * (arr - ref)
        lo = np.minimum.reduce(stack)
        hi = np.maximum.reduce(stack)
        out.append(np.clip(acc, lo, hi))
    return ModelParams(out[0], out[1], max(q.epoch for q in params))


def micro_f1(y_true, y_pred) -> float:
    """Micro-averaged F1 from TP/FP/FN pooled over classes."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.size == 0:
        raise ConfigError("cannot score an empty set")
    classes = np.union1d(y_true, y_pred)
    tp = fp = fn = 0
    for c in classes:
        t, p = y_true == c, y_pred == c
        tp += int(np.sum(t & p))
        fp += int(np.sum(~t & p))
        fn += int(np.sum(t & ~p))
    return 2 * tp / (2 * tp + fp + fn)


def predict(params: ModelParams, x) -> np.ndarray:
    return np.argmax(np.asarray(x) @ params.W + params.b, axis=1)


def evaluate(params: ModelParams, x, labels, mask) -> float:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ConfigError("evaluation mask is empty")
    return micro_f1(np.asarray(labels)[mask], predict(params, np.asarray(x)[mask]))


@dataclass(eq=False)
class _LocalData:
    nodes: np.ndarray
    x: np.ndarray
    owners: np.ndarray
    train_rows: np.ndarray


@dataclass(eq=False)
class TrainResult:
    params: ModelParams
    history: list[dict] = field(default_factory=list)
    num_syncs: int = 0
    val_f1: float = float("nan")
    test_f1: float = float("nan")


def _local_data(g: PartitionedGraph, features, prop_steps: int) -> list[_LocalData]:
    features = np.asarray(features, dtype=np.float64)
    out = []
    for part in g:
        x = sgc_propagate(part.local_edges(), features[part.nodes], prop_steps)
        owners = np.flatnonzero(part.owner)
        train_rows = np.flatnonzero(part.owner & (part.role == ROLE_TRAIN))
        out.append(_LocalData(part.nodes, x, owners, train_rows))
    return out


def _predict_global(params, local, num_nodes):
    pred = np.full(num_nodes, -1, dtype=np.int64)
    for d in local:
        pred[d.nodes[d.owners]] = predict(params, d.x[d.owners])
    return pred


def distributed_train(g: PartitionedGraph, features, labels, roles=None, *, q: int = 1,
                      sync_interval: int = 1, config: TrainConfig = TrainConfig(),
                      num_classes: int | None = None) -> TrainResult:
    """Simulate model-averaged training over the partitions of ``g``.

    Partition ``j`` belongs to worker ``j % q``. Every round each partition's
    local model trains ``sync_interval`` epochs (fewer in a final short round)
    from the current shared parameters; the local models are then averaged
    with weights proportional to their training-node counts. Per-round
    validation and test micro-F1 are computed on owner nodes, each in its
    home partition.
    """
    if q < 1 or g.p % q:
        raise ConfigError(f"partition count {g.p} must be a positive multiple of q={q}")
    if sync_interval < 1:
        raise ConfigError("sync_interval must be at least 1")
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != g.num_nodes or len(features) != g.num_nodes:
        raise ConfigError(f"graph has {g.num_nodes} nodes but got {len(features)} feature rows "
                          f"and {len(labels)} labels")
    if roles is not None:
        g.attach_roles(roles)
    local = _local_data(g, features, config.prop_steps)
    c = num_classes if num_classes is not None else int(labels.max()) + 1
    dim = local[0].x.shape[1]
    trainers = [LocalTrainer(d.x[d.train_rows], labels[d.nodes[d.train_rows]],
                             lr=config.lr, batch_size=config.batch_size,
                             weight_decay=config.weight_decay, seed=config.seed + j)
                for j, d in enumerate(local)]
    counts = [len(d.train_rows) for d in local]
    workers = [list(range(w, g.p, q)) for w in range(q)]

    role_of = np.zeros(g.num_nodes, dtype=np.int8)
    for part in g:
        role_of[part.nodes[part.owner]] = part.role[part.owner]
    val_mask, test_mask = role_of == ROLE_VAL, role_of == ROLE_TEST

    shared = ModelParams.zeros(dim, c)
    result = TrainResult(shared)
    done = 0
    while done < config.epochs:
        step = min(sync_interval, config.epochs - done)
        trained: dict[int, ModelParams] = {}
        for parts in workers:
            for j in parts:
                if counts[j]:
                    trained[j] = trainers[j].run(shared, step)
        order = sorted(trained)
        shared = model_average([trained[j] for j in order], [counts[j] for j in order])
        done += step
        result.num_syncs += 1
        pred = _predict_global(shared, local, g.num_nodes)
        row = {"epoch": done, "sync_count": result.num_syncs}
        row["val_f1"] = micro_f1(labels[val_mask], pred[val_mask]) if val_mask.any() else float("nan")
        row["test_f1"] = micro_f1(labels[test_mask], pred[test_mask]) if test_mask.any() else float("nan")
        result.history.append(row)
    result.params = shared
    if result.history:
        result.val_f1 = result.history[-1]["val_f1"]
        result.test_f1 = result.history[-1]["test_f1"]
    return result


def centralized_train(edges, features, labels, roles, *, config: TrainConfig = TrainConfig(),
                      num_classes: int | None = None) -> TrainResult:
    """Reference run on the whole graph with a single model."""
    labels = np.asarray(labels, dtype=np.int64)
    roles = np.asarray(roles)
    x = sgc_propagate(edges, features, config.prop_steps)
    params = train_local(x, labels, roles == ROLE_TRAIN, config.epochs, config.lr,
                         config.batch_size, config.seed, weight_decay=config.weight_decay,
                         num_classes=num_classes)
    res = TrainResult(params, num_syncs=0)
    res.val_f1 = evaluate(params, x, labels, roles == ROLE_VAL)
    res.test_f1 = evaluate(params, x, labels, roles == ROLE_TEST)
    return res


def split_roles(num_nodes: int, fractions=(0.45, 0.18, 0.37), seed: int = 0) -> np.ndarray:
    """Random train/val/test role codes with the given fractions."""
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ConfigError("split fractions must sum to 1")
    order = np.random.default_rng(seed).permutation(num_nodes)
    n_train = int(round(fractions[0] * num_nodes))
    n_val = int(round(fractions[1] * num_nodes))
    roles = np.full(num_nodes, ROLE_TEST, dtype=np.int8)
    roles[order[:n_train]] = ROLE_TRAIN
    roles[order[n_train:n_train + n_val]] = ROLE_VAL
    return roles
