"""Deterministic topology refinement from student predictions.

For two prediction rows the agreement score is sigmoid(p_i . p_j), the
probability the two nodes share a class.  Refinement adds the top
floor(beta_add * m) same-hard-label non-edges by score and removes the
floor(beta_remove * m) lowest-score existing edges, always against the
pristine input graph (m is its edge count).  Score ties break
lexicographically on (i, j).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .graph import SparseGraph

log = logging.getLogger(__name__)


@dataclass
class AugmentConfig:
    beta_add: float = 0.4
    beta_remove: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.beta_add <= 1.0 or not 0.0 <= self.beta_remove <= 1.0:
            raise ValueError("beta_add and beta_remove must lie in [0, 1]")


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def edge_probability(p: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """sigmoid(p_i . p_j) for each (i, j) pair; never forms an n x n matrix."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= p.shape[0]):
        raise ValueError(f"pair index out of range [0, {p.shape[0]})")
    dots = np.einsum("ij,ij->i", p[pairs[:, 0]], p[pairs[:, 1]])
    return sigmoid(dots)


def hard_labels(p: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties resolve to the lowest class index."""
    return np.argmax(p, axis=1)


def generate_candidates(
    hard: np.ndarray, graph: SparseGraph
) -> tuple[np.ndarray, np.ndarray]:
    """Addition candidates (same-hard-label non-edges) and removal candidates
    (every existing edge), both as canonical (k, 2) arrays.

    Nodes are grouped by label first, so no cross-class pair is ever touched.
    """
    n = graph.n
    existing = graph.edge_keys()
    blocks = []
    for cls in np.unique(hard):
        members = np.flatnonzero(hard == cls)
        if members.size < 2:
            continue
        iu, ju = np.triu_indices(members.size, k=1)
        blocks.append(np.column_stack([members[iu], members[ju]]))
    if blocks:
        pairs = np.concatenate(blocks)
        keys = pairs[:, 0] * n + pairs[:, 1]
        additions = pairs[~np.isin(keys, existing)]
        order = np.lexsort((additions[:, 1], additions[:, 0]))
        additions = additions[order]
    else:
        additions = np.empty((0, 2), dtype=np.int64)
    return additions, graph.edges.copy()


@dataclass
class AugmentationPlan:
    added: np.ndarray
    added_prob: np.ndarray
    removed: np.ndarray
    removed_prob: np.ndarray


def plan_augmentation(graph: SparseGraph, p: np.ndarray, cfg: AugmentConfig) -> AugmentationPlan:
    """Pick the edges to add and remove, without applying them."""
    m = graph.m
    quota_add = int(cfg.beta_add * m)
    quota_remove = int(cfg.beta_remove * m)
    empty = np.empty((0, 2), dtype=np.int64)
    if quota_add == 0 and quota_remove == 0:
        return AugmentationPlan(empty, np.empty(0), empty, np.empty(0))

    additions, removals = generate_candidates(hard_labels(p), graph)

    add_pairs, add_probs = empty, np.empty(0)
    if quota_add > 0:
        if additions.shape[0] < quota_add:
            log.warning("only %d addition candidates for a quota of %d",
                        additions.shape[0], quota_add)
        probs = edge_probability(p, additions)
        order = np.lexsort((additions[:, 1], additions[:, 0], -probs))[:quota_add]
        add_pairs, add_probs = additions[order], probs[order]

    rem_pairs, rem_probs = empty, np.empty(0)
    if quota_remove > 0:
        probs = edge_probability(p, removals)
        order = np.lexsort((removals[:, 1], removals[:, 0], probs))[:quota_remove]
        rem_pairs, rem_probs = removals[order], probs[order]

    return AugmentationPlan(add_pairs, add_probs, rem_pairs, rem_probs)


def apply_augmentation(graph: SparseGraph, plan: AugmentationPlan) -> SparseGraph:
    n = graph.n
    keys = graph.edge_keys()
    if plan.removed.size:
        keys = np.setdiff1d(keys, plan.removed[:, 0] * n + plan.removed[:, 1])
    if plan.added.size:
        keys = np.union1d(keys, plan.added[:, 0] * n + plan.added[:, 1])
    return SparseGraph(n, np.column_stack([keys // n, keys % n]))


def augment_topology(graph: SparseGraph, p: np.ndarray, cfg: AugmentConfig) -> SparseGraph:
    """Refined copy of ``graph``; a no-op when both quotas floor to zero."""
    plan = plan_augmentation(graph, p, cfg)
    if plan.added.size == 0 and plan.removed.size == 0:
        return graph
    return apply_augmentation(graph, plan)


def write_plan_tsv(plan: AugmentationPlan, path) -> None:
    """Dump the decision list (action, i, j, probability) for inspection."""
    with open(path, "w") as fh:
        fh.write("action\ti\tj\tprobability\n")
        for (i, j), prob in zip(plan.added, plan.added_prob):
            fh.write(f"add\t{i}\t{j}\t{prob:.12g}\n")
        for (i, j), prob in zip(plan.removed, plan.removed_prob):
            fh.write(f"remove\t{i}\t{j}\t{prob:.12g}\n")
