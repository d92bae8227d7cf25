"""Central finite-difference verification of the joint-loss gradients.

The loss is evaluated as a pure function of the trainable parameters with
the prototypes and the filtered pseudo-label set frozen at their current
values (they are constants of the gradient by design), dropout disabled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DatasetBundle, SplitSpec
from .propagation import SoftLabels
from .mlp import (
    PARAM_NAMES,
    StudentParams,
    TrainConfig,
    _backward,
    _forward_cache,
    compute_prototypes,
    filter_pseudo_labels,
    init_params,
    loss_ce_labeled,
    loss_ce_unlabeled,
    loss_contrastive,
    momentum_embed,
)


def _loss_and_grads(params, x, gold, labeled, unlabeled, soft, cfg, protos, pls):
    cache = _forward_cache(params, x, False, 0.0, None)
    p, z = cache["p"], cache["z"]
    red = cfg.loss_reduction
    l_lab, g_lab = loss_ce_labeled(p, gold, labeled, red)
    l_unl, g_unl = loss_ce_unlabeled(p, soft, unlabeled, red)
    if pls is not None:
        l_con, g_z = loss_contrastive(z, protos, pls, cfg.tau, red)
    else:
        l_con, g_z = 0.0, None
    joint = l_lab + cfg.lambda1 * l_unl + cfg.lambda2 * l_con
    d_logits = np.zeros_like(p)
    d_logits[labeled] += g_lab
    d_logits[unlabeled] += cfg.lambda1 * g_unl
    d_z_extra = cfg.lambda2 * g_z if g_z is not None else None
    return joint, _backward(params, cache, d_logits, d_z_extra)


def grad_check(
    params: StudentParams,
    bundle: DatasetBundle,
    split: SplitSpec,
    soft: SoftLabels,
    cfg: TrainConfig,
    eps: float = 1e-5,
) -> float:
    """Max relative error |a - n| / max(1e-8, |a| + |n|) over every parameter."""
    x = bundle.features
    gold = bundle.gold
    labeled = split.labeled
    unlabeled = np.setdiff1d(np.arange(bundle.n), labeled)

    if cfg.lambda2 > 0:
        z_mom = momentum_embed(params, x)
        protos = compute_prototypes(z_mom, gold, labeled, bundle.num_classes)
        pls = filter_pseudo_labels(soft, z_mom, protos, cfg.tau, unlabeled)
    else:
        protos, pls = None, None

    def loss_only():
        value, _ = _loss_and_grads(params, x, gold, labeled, unlabeled, soft, cfg, protos, pls)
        return value

    _, analytic = _loss_and_grads(params, x, gold, labeled, unlabeled, soft, cfg, protos, pls)

    worst = 0.0
    for name in PARAM_NAMES:
        array = getattr(params, name)
        flat = array.ravel()
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + eps
            plus = loss_only()
            flat[idx] = original - eps
            minus = loss_only()
            flat[idx] = original
            numeric = (plus - minus) / (2.0 * eps)
            a = analytic[name].ravel()[idx]
            worst = max(worst, abs(a - numeric) / max(1e-8, abs(a) + abs(numeric)))
    return worst


@dataclass
class GradCheckReport:
    max_rel_error: float
    instances: int
    eps: float


def run_gradcheck_suite(
    instances: int = 20,
    seed: int = 0,
    eps: float = 1e-5,
    lambda2: float = 0.1,
) -> GradCheckReport:
    """Joint-loss gradient check on random tiny instances.

    Instances whose pre-activations sit within 1e-3 of a ReLU kink are
    redrawn: a centered difference straddling the kink says nothing about
    the gradient on either side.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    produced = 0
    while produced < instances:
        n = int(rng.integers(4, 11))
        f = int(rng.integers(2, 6))
        c = int(rng.integers(2, 5))
        hidden = int(rng.integers(4, 9))
        features = rng.normal(size=(n, f))
        gold = np.concatenate([np.arange(c), rng.integers(0, c, size=n - c)])
        rng.shuffle(gold)
        from .graph import SparseGraph

        bundle = DatasetBundle(SparseGraph(n, np.empty((0, 2), dtype=np.int64)),
                               features, gold, c)
        labeled = np.array([np.flatnonzero(gold == cls)[0] for cls in range(c)])
        split = SplitSpec(labeled, np.empty(0, dtype=np.int64),
                          np.empty(0, dtype=np.int64), seed)
        raw = rng.random((n, c)) + 0.1
        soft = SoftLabels(raw / raw.sum(axis=1, keepdims=True), normalized=True)
        params = init_params(f, c, hidden, rng)
        if np.min(np.abs(features @ params.w1 + params.b1)) < 1e-3:
            continue
        cfg = TrainConfig(dropout=0.0, lambda2=lambda2, hidden=hidden)
        worst = max(worst, grad_check(params, bundle, split, soft, cfg, eps))
        produced += 1
    return GradCheckReport(max_rel_error=worst, instances=instances, eps=eps)
