"""Iterative teacher/student loop with per-iteration topology refinement.

Each round propagates gold labels over the current graph, trains a fresh
student on the resulting soft targets, then uses the student's predictions
to rewire the PRISTINE input graph for the next round, so augmentations
never compound.  The run is deterministic given its seed.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import DatasetBundle, SplitSpec, l2_normalize_rows
from .graph import normalize_adjacency
from .mlp import StudentParams, TrainConfig, TrainTrace, forward, train_student
from .propagation import LpConfig, propagate_labels, to_distribution
from .rewiring import AugmentConfig, apply_augmentation, plan_augmentation

log = logging.getLogger(__name__)


@dataclass
class AgstConfig:
    lp: LpConfig = field(default_factory=LpConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    iterations: int = 3
    seed: int = 0
    warm_start: bool = False          # reuse the previous round's weights
    report_best_iteration: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("need at least one self-training iteration")


@dataclass
class IterationStats:
    iteration: int
    val_acc: float | None
    test_acc: float | None
    edges_added: int
    edges_removed: int
    trace: TrainTrace
    added_edges: np.ndarray
    removed_edges: np.ndarray
    wall_ms: float

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "val_acc": self.val_acc,
            "test_acc": self.test_acc,
            "edges_added": self.edges_added,
            "edges_removed": self.edges_removed,
            "epochs": len(self.trace.records),
            "best_epoch": self.trace.best_epoch,
            "wall_ms": self.wall_ms,
        }


@dataclass
class RunResult:
    final_params: StudentParams
    per_iteration: list[IterationStats]
    predictions: np.ndarray


def predict(params: StudentParams, bundle: DatasetBundle) -> np.ndarray:
    """Hard labels for every node (dropout off, argmax ties to lowest index)."""
    x = l2_normalize_rows(bundle.features) if params.normalize_features else bundle.features
    _, p = forward(params, x)
    return np.argmax(p, axis=1)


def student_rng(seed: int, iteration: int) -> np.random.Generator:
    """Independent init/dropout stream for a given self-training round."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(iteration)[-1])


def _annotate(err: Exception, iteration: int) -> Exception:
    message = f"{err} [self-training iteration {iteration}]"
    try:
        return type(err)(message)
    except TypeError:
        return RuntimeError(message)


def run_agst(bundle: DatasetBundle, split: SplitSpec, cfg: AgstConfig) -> RunResult:
    original = bundle.graph
    current = original
    stats: list[IterationStats] = []
    params: StudentParams | None = None
    best_params: StudentParams | None = None
    best_val = -np.inf
    test_gold = bundle.gold[split.test] if split.test.size else None

    for iteration in range(1, cfg.iterations + 1):
        started = time.perf_counter()
        try:
            op = normalize_adjacency(current)
            soft = to_distribution(propagate_labels(op, bundle, split, cfg.lp))
            rng = student_rng(cfg.seed, iteration)
            init = params if (cfg.warm_start and params is not None) else None
            params, trace = train_student(bundle, split, soft, cfg.train,
                                          rng=rng, init=init)
            probs = _probabilities(params, bundle)
            preds = np.argmax(probs, axis=1)
            plan = plan_augmentation(original, probs, cfg.augment)
            if plan.added.size or plan.removed.size:
                current = apply_augmentation(original, plan)
            else:
                current = original
        except Exception as err:
            raise _annotate(err, iteration) from err

        val_acc = None
        if split.validation.size:
            val_acc = float(np.mean(preds[split.validation] == bundle.gold[split.validation]))
            if val_acc > best_val:
                best_val = val_acc
                best_params = params
        test_acc = None
        if test_gold is not None:
            test_acc = float(np.mean(preds[split.test] == test_gold))
        stats.append(IterationStats(
            iteration=iteration,
            val_acc=val_acc,
            test_acc=test_acc,
            edges_added=plan.added.shape[0],
            edges_removed=plan.removed.shape[0],
            trace=trace,
            added_edges=plan.added,
            removed_edges=plan.removed,
            wall_ms=(time.perf_counter() - started) * 1000.0,
        ))
        log.debug("iteration %d: val=%s test=%s +%d/-%d edges",
                  iteration, val_acc, test_acc, plan.added.shape[0], plan.removed.shape[0])

    final = params
    if cfg.report_best_iteration and best_params is not None:
        final = best_params
    return RunResult(final_params=final, per_iteration=stats,
                     predictions=predict(final, bundle))


def _probabilities(params: StudentParams, bundle: DatasetBundle) -> np.ndarray:
    x = l2_normalize_rows(bundle.features) if params.normalize_features else bundle.features
    _, p = forward(params, x)
    return p


def result_to_dict(result: RunResult, cfg: AgstConfig, wall_ms: float | None = None) -> dict:
    """JSON-ready report: per-iteration metrics, config echo, timing."""
    out = {
        "config": asdict(cfg),
        "iterations": [s.to_dict() for s in result.per_iteration],
        "predictions": result.predictions.tolist(),
    }
    if wall_ms is not None:
        out["wall_ms"] = wall_ms
    return out
