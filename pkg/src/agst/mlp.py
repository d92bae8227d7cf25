"""Feature-transformation student: MLP with hand-derived gradients.

The network is two affine encoder layers (f -> hidden -> hidden) with a ReLU
and optional dropout in between, then an affine softmax head (hidden -> c).
It trains full-batch with Adam on a weighted mix of three losses:

  * cross-entropy against gold labels on the labeled set,
  * cross-entropy against propagated soft labels on the unlabeled set,
  * a prototype contrastive term pulling filtered pseudo-labeled nodes
    toward the mean embedding of their predicted class.

Prototypes come from a momentum copy of the encoder (an exponential moving
average of its weights) and are treated as constants by the gradient: the
contrastive term only backpropagates through each node's own embedding.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .data import DatasetBundle, SplitSpec, l2_normalize_rows
from .propagation import SoftLabels

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-12

PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def clamped_log(p: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(p, LOG_FLOOR))


@dataclass
class StudentParams:
    """Encoder weights, head weights, and the momentum encoder copy."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    mw1: np.ndarray
    mb1: np.ndarray
    mw2: np.ndarray
    mb2: np.ndarray
    normalize_features: bool = False

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    def copy(self) -> "StudentParams":
        arrays = {name: getattr(self, name).copy()
                  for name in (*PARAM_NAMES, "mw1", "mb1", "mw2", "mb2")}
        return StudentParams(**arrays, normalize_features=self.normalize_features)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(getattr(self, name)))
                   for name in (*PARAM_NAMES, "mw1", "mb1", "mw2", "mb2"))


def init_params(
    num_features: int,
    num_classes: int,
    hidden: int,
    rng: np.random.Generator,
    normalize_features: bool = False,
) -> StudentParams:
    """Glorot-uniform weights, zero biases; momentum encoder starts as a copy."""

    def glorot(fan_in, fan_out):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    w1 = glorot(num_features, hidden)
    w2 = glorot(hidden, hidden)
    w3 = glorot(hidden, num_classes)
    return StudentParams(
        w1=w1, b1=np.zeros(hidden),
        w2=w2, b2=np.zeros(hidden),
        w3=w3, b3=np.zeros(num_classes),
        mw1=w1.copy(), mb1=np.zeros(hidden),
        mw2=w2.copy(), mb2=np.zeros(hidden),
        normalize_features=normalize_features,
    )


def _forward_cache(params, x, training, dropout, rng):
    h1 = x @ params.w1 + params.b1
    a1 = np.maximum(h1, 0.0)
    mask = None
    d1 = a1
    if training and dropout > 0.0:
        if rng is None:
            raise ValueError("dropout needs an RNG")
        mask = (rng.random(a1.shape) >= dropout) / (1.0 - dropout)
        d1 = a1 * mask
    z = d1 @ params.w2 + params.b2
    logits = z @ params.w3 + params.b3
    p = softmax(logits)
    return {"x": x, "h1": h1, "d1": d1, "mask": mask, "z": z, "p": p}


def forward(
    params: StudentParams,
    features: np.ndarray,
    nodes: np.ndarray | None = None,
    training: bool = False,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Embeddings and softmax predictions for the given rows (all by default)."""
    x = features if nodes is None else features[nodes]
    if x.shape[1] != params.w1.shape[0]:
        raise ValueError(f"feature dim {x.shape[1]} != expected {params.w1.shape[0]}")
    cache = _forward_cache(params, x, training, dropout, rng)
    return cache["z"], cache["p"]


def momentum_embed(params: StudentParams, features: np.ndarray) -> np.ndarray:
    """Embeddings from the momentum encoder (never trained, never dropped out)."""
    a1 = np.maximum(features @ params.mw1 + params.mb1, 0.0)
    return a1 @ params.mw2 + params.mb2


def _backward(params, cache, d_logits, d_z_extra=None):
    """Gradients of the assembled loss given d(loss)/d(logits) and an optional
    extra d(loss)/d(embeddings) term (the contrastive path)."""
    grads = {}
    z, d1, h1, x = cache["z"], cache["d1"], cache["h1"], cache["x"]
    grads["w3"] = z.T @ d_logits
    grads["b3"] = d_logits.sum(axis=0)
    d_z = d_logits @ params.w3.T
    if d_z_extra is not None:
        d_z = d_z + d_z_extra
    grads["w2"] = d1.T @ d_z
    grads["b2"] = d_z.sum(axis=0)
    d_d1 = d_z @ params.w2.T
    if cache["mask"] is not None:
        d_d1 = d_d1 * cache["mask"]
    d_h1 = d_d1 * (h1 > 0.0)
    grads["w1"] = (x.T @ d_h1) if not sparse.issparse(x) else np.asarray(x.T @ d_h1)
    grads["b1"] = d_h1.sum(axis=0)
    return grads


def loss_ce_labeled(
    p: np.ndarray,
    gold: np.ndarray,
    nodes: np.ndarray,
    reduction: str = "sum",
) -> tuple[float, np.ndarray]:
    """Cross-entropy against gold labels; gradient w.r.t. the nodes' logits."""
    nodes = np.asarray(nodes)
    if nodes.size == 0:
        raise ValueError("empty labeled set")
    rows = p[nodes]
    targets = gold[nodes]
    value = -clamped_log(rows[np.arange(nodes.size), targets]).sum()
    grad = rows.copy()
    grad[np.arange(nodes.size), targets] -= 1.0
    if reduction == "mean":
        value /= nodes.size
        grad /= nodes.size
    elif reduction != "sum":
        raise ValueError(f"unknown reduction {reduction!r}")
    return float(value), grad


def loss_ce_unlabeled(
    p: np.ndarray,
    soft: SoftLabels,
    nodes: np.ndarray,
    reduction: str = "sum",
) -> tuple[float, np.ndarray]:
    """Cross-entropy against soft targets; gradient w.r.t. the nodes' logits."""
    if not soft.normalized:
        raise ValueError("soft labels must be row-normalized distributions")
    nodes = np.asarray(nodes)
    rows = p[nodes]
    targets = soft.matrix[nodes]
    value = -(targets * clamped_log(rows)).sum()
    grad = rows - targets
    if reduction == "mean" and nodes.size:
        value /= nodes.size
        grad /= nodes.size
    elif reduction not in ("mean", "sum"):
        raise ValueError(f"unknown reduction {reduction!r}")
    return float(value), grad


def compute_prototypes(
    z_momentum: np.ndarray,
    gold: np.ndarray,
    labeled: np.ndarray,
    num_classes: int,
) -> np.ndarray:
    """Per-class mean of the labeled nodes' momentum embeddings, (c, hidden)."""
    protos = np.empty((num_classes, z_momentum.shape[1]))
    for cls in range(num_classes):
        members = labeled[gold[labeled] == cls]
        if members.size == 0:
            raise ValueError(f"class {cls} has no labeled node")
        protos[cls] = z_momentum[members].mean(axis=0)
    return protos


def similarity_distribution(z: np.ndarray, protos: np.ndarray, tau: float) -> np.ndarray:
    """Softmax over prototype dot products at temperature tau (shift-safe)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return softmax(np.asarray(z) @ protos.T / tau)


@dataclass
class PseudoLabelSet:
    """Hard teacher labels for every node and the ids that survived filtering."""

    hard: np.ndarray
    soft: SoftLabels
    kept: np.ndarray


def filter_pseudo_labels(
    soft: SoftLabels,
    z_momentum: np.ndarray,
    protos: np.ndarray,
    tau: float,
    unlabeled: np.ndarray,
) -> PseudoLabelSet:
    """Keep unlabeled nodes whose similarity to their own pseudo-class
    prototype strictly exceeds uniform probability 1/c."""
    c = protos.shape[0]
    if c < 2:
        raise ValueError("pseudo-label filtering needs at least two classes")
    hard = np.argmax(soft.matrix, axis=1)
    unlabeled = np.asarray(unlabeled)
    sims = similarity_distribution(z_momentum[unlabeled], protos, tau)
    own = sims[np.arange(unlabeled.size), hard[unlabeled]]
    kept = unlabeled[own > 1.0 / c]
    return PseudoLabelSet(hard=hard, soft=soft, kept=kept)


def loss_contrastive(
    z: np.ndarray,
    protos: np.ndarray,
    pls: PseudoLabelSet,
    tau: float,
    reduction: str = "sum",
) -> tuple[float, np.ndarray]:
    """Prototype contrastive loss over the kept set; gradient w.r.t. z.

    Prototypes are constants here: the gradient of each kept node i is
    (sum_c s_i^c * proto_c - proto_{hard_i}) / tau, zero rows elsewhere.
    """
    grad = np.zeros_like(z)
    kept = pls.kept
    if kept.size == 0:
        return 0.0, grad
    sims = similarity_distribution(z[kept], protos, tau)
    own = pls.hard[kept]
    value = -clamped_log(sims[np.arange(kept.size), own]).sum()
    g = (sims @ protos - protos[own]) / tau
    if reduction == "mean":
        value /= kept.size
        g /= kept.size
    elif reduction != "sum":
        raise ValueError(f"unknown reduction {reduction!r}")
    grad[kept] = g
    return float(value), grad


def momentum_update(params: StudentParams, m: float) -> None:
    """Exponential moving average of the encoder into the momentum copy."""
    if not 0.0 <= m <= 1.0:
        raise ValueError("momentum must lie in [0, 1]")
    for src, dst in (("w1", "mw1"), ("b1", "mb1"), ("w2", "mw2"), ("b2", "mb2")):
        target = getattr(params, dst)
        target *= m
        target += (1.0 - m) * getattr(params, src)


class Adam:
    """Plain Adam with L2 weight decay folded into the gradient."""

    def __init__(self, lr=0.01, weight_decay=0.0, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.state: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def step(self, params: StudentParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name in PARAM_NAMES:
            value = getattr(params, name)
            g = grads[name]
            if self.weight_decay:
                g = g + self.weight_decay * value
            if name not in self.state:
                self.state[name] = (np.zeros_like(value), np.zeros_like(value))
            m, v = self.state[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainConfig:
    tau: float = 0.5
    momentum: float = 0.999
    lambda1: float = 1.0
    lambda2: float = 0.1
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    dropout: float = 0.5
    patience: int = 100
    max_epochs: int = 10_000
    no_val_epochs: int = 300
    hidden: int = 64
    loss_reduction: str = "mean"   # "sum" recovers the strict additive form
    normalize_features: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not 0.0 <= self.momentum <= 1.0:
            raise ValueError("momentum must lie in [0, 1]")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("loss weights must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.patience < 0 or self.max_epochs < 1 or self.no_val_epochs < 1:
            raise ValueError("invalid epoch budget")
        if self.hidden < 1:
            raise ValueError("hidden width must be >= 1")
        if self.loss_reduction not in ("mean", "sum"):
            raise ValueError("loss_reduction must be 'mean' or 'sum'")


@dataclass
class EpochRecord:
    epoch: int
    loss_labeled: float
    loss_unlabeled: float
    loss_contrastive: float
    val_acc: float | None


@dataclass
class TrainTrace:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None


def write_trace_csv(trace: TrainTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss_labeled", "loss_unlabeled", "loss_contrastive", "val_acc"])
        for r in trace.records:
            writer.writerow([r.epoch, r.loss_labeled, r.loss_unlabeled,
                             r.loss_contrastive, "" if r.val_acc is None else r.val_acc])


def _maybe_sparse(x: np.ndarray) -> np.ndarray | sparse.csr_array:
    # binary/bag-of-words feature matrices are mostly zeros; the two x-side
    # matmuls dominate an epoch, so switch representation when it pays off
    if x.size > 500_000 and np.count_nonzero(x) < 0.25 * x.size:
        return sparse.csr_array(x)
    return x


def train_student(
    bundle: DatasetBundle,
    split: SplitSpec,
    soft: SoftLabels,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
    init: StudentParams | None = None,
) -> tuple[StudentParams, TrainTrace]:
    """Full-batch Adam on the joint loss with validation early stopping.

    Each epoch recomputes the momentum prototypes and the filtered
    pseudo-label set, takes one gradient step, and updates the momentum
    encoder.  With a validation set, training stops once neither validation
    accuracy has increased nor validation loss decreased for more than
    ``patience`` epochs, and the best-accuracy epoch's parameters are
    restored (accuracy ties broken by lower validation loss).  Without a
    validation set a fixed budget of ``no_val_epochs`` epochs runs.
    """
    if split.labeled.size == 0:
        raise ValueError("empty labeled set")
    if not soft.normalized:
        raise ValueError("soft labels must be normalized before training")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    x_dense = l2_normalize_rows(bundle.features) if cfg.normalize_features else bundle.features
    x = _maybe_sparse(x_dense)
    gold = bundle.gold
    labeled = split.labeled
    unlabeled = np.setdiff1d(np.arange(bundle.n), labeled)
    has_val = split.validation.size > 0
    c = bundle.num_classes

    params = init.copy() if init is not None else init_params(
        bundle.num_features, c, cfg.hidden, rng, cfg.normalize_features
    )
    optimizer = Adam(lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    trace = TrainTrace()

    budget = cfg.max_epochs if has_val else cfg.no_val_epochs
    best_params = params.copy()
    best_epoch = None
    snap_acc, snap_loss = -np.inf, np.inf
    seen_acc, seen_loss = -np.inf, np.inf
    bad_epochs = 0

    for epoch in range(1, budget + 1):
        if cfg.lambda2 > 0:
            z_mom = momentum_embed(params, x)
            protos = compute_prototypes(z_mom, gold, labeled, c)
            pls = filter_pseudo_labels(soft, z_mom, protos, cfg.tau, unlabeled)
        else:
            protos = None
            pls = None

        cache = _forward_cache(params, x, True, cfg.dropout, rng)
        p, z = cache["p"], cache["z"]

        red = cfg.loss_reduction
        l_lab, g_lab = loss_ce_labeled(p, gold, labeled, red)
        l_unl, g_unl = loss_ce_unlabeled(p, soft, unlabeled, red)
        if pls is not None:
            l_con, g_z = loss_contrastive(z, protos, pls, cfg.tau, red)
        else:
            l_con, g_z = 0.0, None

        joint = l_lab + cfg.lambda1 * l_unl + cfg.lambda2 * l_con
        if not np.isfinite(joint):
            raise ValueError(f"non-finite loss at epoch {epoch}")

        d_logits = np.zeros_like(p)
        d_logits[labeled] += g_lab
        d_logits[unlabeled] += cfg.lambda1 * g_unl
        d_z_extra = cfg.lambda2 * g_z if g_z is not None else None
        grads = _backward(params, cache, d_logits, d_z_extra)

        optimizer.step(params, grads)
        momentum_update(params, cfg.momentum)
        if not params.all_finite():
            raise ValueError(f"non-finite parameter after epoch {epoch}")

        val_acc = None
        if has_val:
            _, p_val = forward(params, x, nodes=split.validation)
            pred_val = np.argmax(p_val, axis=1)
            val_acc = float(np.mean(pred_val == gold[split.validation]))
            val_loss, _ = loss_ce_labeled(p_val, gold[split.validation],
                                          np.arange(split.validation.size), "mean")
        trace.records.append(EpochRecord(epoch, l_lab, l_unl, l_con, val_acc))

        if has_val:
            if val_acc > snap_acc or (val_acc == snap_acc and val_loss < snap_loss):
                snap_acc, snap_loss = val_acc, val_loss
                best_params = params.copy()
                best_epoch = epoch
            # patience resets on any validation improvement, accuracy or loss
            if val_acc > seen_acc or val_loss < seen_loss:
                bad_epochs = 0
            else:
                bad_epochs += 1
            seen_acc = max(seen_acc, val_acc)
            seen_loss = min(seen_loss, val_loss)
            if bad_epochs > cfg.patience:
                break

    if has_val:
        trace.best_epoch = best_epoch
        return best_params, trace
    return params, trace
