"""Dataset bundles: on-disk format, train/validation/test splits, synthetic graphs.

On-disk layout is a directory of four UTF-8 text files:

    meta          lines ``n=<int>``, ``f=<int>``, ``c=<int>``
    edges.tsv     one ``src<TAB>dst`` pair per line, 0-based node ids
    features.csv  n rows of f comma-separated decimals
    labels.tsv    lines ``node<TAB>class``; omitted nodes are unlabeled

``convert_content_release`` maps the classic two-file citation release
(``<stem>.content`` + ``<stem>.cites``) into this layout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import SparseGraph, canonical_edges

log = logging.getLogger(__name__)

UNLABELED = -1


class DatasetFormatError(ValueError):
    """Malformed dataset file; message carries file name and line number."""


@dataclass
class DatasetBundle:
    """A graph with node features and (possibly partial) gold labels."""

    graph: SparseGraph
    features: np.ndarray          # (n, f) float64
    gold: np.ndarray              # (n,) int64, UNLABELED where unknown
    num_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.gold = np.asarray(self.gold, dtype=np.int64)
        n = self.graph.n
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise ValueError(f"features must be (n, f) with n={n}, got {self.features.shape}")
        if self.gold.shape != (n,):
            raise ValueError(f"gold labels must have shape ({n},)")
        known = self.gold[self.gold != UNLABELED]
        if known.size and (known.min() < 0 or known.max() >= self.num_classes):
            raise ValueError("gold label outside [0, num_classes)")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def labeled_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.gold != UNLABELED)


@dataclass
class SplitSpec:
    """Disjoint labeled/validation/test node sets and the seed that drew them."""

    labeled: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int

    def __post_init__(self):
        self.labeled = np.sort(np.asarray(self.labeled, dtype=np.int64))
        self.validation = np.sort(np.asarray(self.validation, dtype=np.int64))
        self.test = np.sort(np.asarray(self.test, dtype=np.int64))
        joined = np.concatenate([self.labeled, self.validation, self.test])
        if np.unique(joined).size != joined.size:
            raise ValueError("labeled/validation/test sets must be pairwise disjoint")


def _read_meta(path: Path) -> dict[str, int]:
    values: dict[str, int] = {}
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in ("n", "f", "c"):
                raise DatasetFormatError(f"{path.name}:{lineno}: unknown key {key!r}")
            try:
                values[key] = int(raw)
            except ValueError:
                raise DatasetFormatError(f"{path.name}:{lineno}: non-integer value {raw!r}") from None
    for key in ("n", "f", "c"):
        if key not in values:
            raise DatasetFormatError(f"{path.name}: missing key {key!r}")
        if values[key] < 1:
            raise DatasetFormatError(f"{path.name}: {key} must be positive")
    return values


def load_dataset(path: str | Path, fmt: str = "dir") -> DatasetBundle:
    """Load a dataset directory, validating and canonicalizing as it goes.

    Duplicate and self-loop edge rows are dropped with a logged count;
    anything else malformed raises DatasetFormatError with file and line.
    """
    if fmt != "dir":
        raise ValueError(f"unknown dataset format {fmt!r}")
    root = Path(path)
    for name in ("meta", "edges.tsv", "features.csv", "labels.tsv"):
        if not (root / name).exists():
            raise DatasetFormatError(f"missing dataset file {root / name}")

    meta = _read_meta(root / "meta")
    n, f, c = meta["n"], meta["f"], meta["c"]

    edges_path = root / "edges.tsv"
    raw_pairs = []
    with edges_path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DatasetFormatError(f"{edges_path.name}:{lineno}: expected src<TAB>dst")
            try:
                src, dst = int(parts[0]), int(parts[1])
            except ValueError:
                raise DatasetFormatError(
                    f"{edges_path.name}:{lineno}: non-integer node id"
                ) from None
            if not (0 <= src < n and 0 <= dst < n):
                raise DatasetFormatError(
                    f"{edges_path.name}:{lineno}: node id out of range [0, {n})"
                )
            raw_pairs.append((src, dst))
    pairs = np.asarray(raw_pairs, dtype=np.int64).reshape(-1, 2)
    edges, n_dup, n_loops = canonical_edges(pairs, n)
    if n_dup or n_loops:
        log.info(
            "%s: dropped %d duplicate edge rows and %d self-loops", edges_path, n_dup, n_loops
        )

    feats_path = root / "features.csv"
    features = np.empty((n, f), dtype=np.float64)
    with feats_path.open() as fh:
        row = 0
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if row >= n:
                raise DatasetFormatError(f"{feats_path.name}:{lineno}: more than n={n} rows")
            parts = line.split(",")
            if len(parts) != f:
                raise DatasetFormatError(
                    f"{feats_path.name}:{lineno}: expected {f} values, got {len(parts)}"
                )
            try:
                features[row] = [float(p) for p in parts]
            except ValueError:
                raise DatasetFormatError(
                    f"{feats_path.name}:{lineno}: non-numeric feature"
                ) from None
            row += 1
    if row != n:
        raise DatasetFormatError(f"{feats_path.name}: expected {n} rows, got {row}")

    labels_path = root / "labels.tsv"
    gold = np.full(n, UNLABELED, dtype=np.int64)
    with labels_path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DatasetFormatError(f"{labels_path.name}:{lineno}: expected node<TAB>class")
            try:
                node, cls = int(parts[0]), int(parts[1])
            except ValueError:
                raise DatasetFormatError(
                    f"{labels_path.name}:{lineno}: non-integer entry"
                ) from None
            if not 0 <= node < n:
                raise DatasetFormatError(
                    f"{labels_path.name}:{lineno}: node id out of range [0, {n})"
                )
            if not 0 <= cls < c:
                raise DatasetFormatError(
                    f"{labels_path.name}:{lineno}: label {cls} >= declared class count {c}"
                )
            if gold[node] != UNLABELED:
                raise DatasetFormatError(f"{labels_path.name}:{lineno}: duplicate label for node {node}")
            gold[node] = cls

    return DatasetBundle(SparseGraph(n, edges), features, gold, c)


def save_dataset(bundle: DatasetBundle, path: str | Path) -> None:
    """Write a bundle in the directory format; round-trips exactly."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / "meta").write_text(
        f"n={bundle.n}\nf={bundle.num_features}\nc={bundle.num_classes}\n"
    )
    with (root / "edges.tsv").open("w") as fh:
        for i, j in bundle.graph.edges:
            fh.write(f"{i}\t{j}\n")
    with (root / "features.csv").open("w") as fh:
        for row in bundle.features:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    with (root / "labels.tsv").open("w") as fh:
        for node in np.flatnonzero(bundle.gold != UNLABELED):
            fh.write(f"{node}\t{bundle.gold[node]}\n")


def l2_normalize_rows(features: np.ndarray) -> np.ndarray:
    """Row-wise L2 normalization; all-zero rows pass through unchanged."""
    norms = np.linalg.norm(features, axis=1, keepdims=True)
    return features / np.where(norms > 0, norms, 1.0)


def make_split(
    bundle: DatasetBundle,
    protocol: str,
    seed: int,
    k: int | None = None,
    rate: float | None = None,
    val_per_class: int = 30,
    test_size: int = 1000,
    max_resample: int = 1000,
) -> SplitSpec:
    """Draw a labeled/validation/test split under one of three protocols.

    balanced    exactly ``k`` labeled and ``val_per_class`` validation nodes
                per class, the remaining gold-labeled nodes as test
    imbalanced  ceil(rate * n) labeled nodes drawn uniformly (resampled with
                an incremented seed until every class appears), ``test_size``
                test nodes, no validation
    standard20  balanced with k = 20

    Deterministic given the seed.
    """
    if protocol == "standard20":
        protocol, k = "balanced", 20
    if protocol == "balanced":
        if k is None or k < 1:
            raise ValueError("balanced protocol needs k >= 1")
        rng = np.random.default_rng(seed)
        labeled, validation = [], []
        for cls in range(bundle.num_classes):
            members = np.flatnonzero(bundle.gold == cls)
            if members.size < k + val_per_class:
                raise ValueError(
                    f"class {cls} has {members.size} labeled-eligible nodes, "
                    f"needs {k + val_per_class}"
                )
            perm = rng.permutation(members)
            labeled.append(perm[:k])
            validation.append(perm[k : k + val_per_class])
        labeled = np.concatenate(labeled)
        validation = np.concatenate(validation)
        held = np.concatenate([labeled, validation])
        test = np.setdiff1d(bundle.labeled_nodes(), held)
        return SplitSpec(labeled, validation, test, seed)

    if protocol == "imbalanced":
        if rate is None or not 0.0 < rate < 1.0:
            raise ValueError("imbalanced protocol needs rate in (0, 1)")
        n_labeled = math.ceil(rate * bundle.n)
        eligible = bundle.labeled_nodes()
        if n_labeled > eligible.size:
            raise ValueError(f"rate {rate} asks for {n_labeled} labeled nodes, "
                             f"only {eligible.size} eligible")
        present = np.unique(bundle.gold[eligible])
        for attempt in range(max_resample):
            draw_seed = seed + attempt
            rng = np.random.default_rng(draw_seed)
            labeled = rng.choice(eligible, size=n_labeled, replace=False)
            if np.unique(bundle.gold[labeled]).size == present.size:
                if attempt:
                    log.info("imbalanced split resampled %d time(s), final seed %d",
                             attempt, draw_seed)
                break
            log.debug("seed %d missed a class, resampling", draw_seed)
        else:
            raise ValueError(f"could not cover every class in {max_resample} resamples")
        remaining = np.setdiff1d(eligible, labeled)
        n_test = min(test_size, remaining.size)
        if n_test < test_size:
            log.info("only %d nodes left for the test set (wanted %d)", n_test, test_size)
        test = rng.choice(remaining, size=n_test, replace=False)
        return SplitSpec(labeled, np.empty(0, dtype=np.int64), test, draw_seed)

    raise ValueError(f"unknown protocol {protocol!r}")


def two_cluster_bundle(
    n: int = 40,
    feature_dim: int = 8,
    separation: float = 2.0,
    intra_degree: int = 3,
    noise_fraction: float = 0.0,
    seed: int = 0,
) -> DatasetBundle:
    """Synthetic two-class benchmark: two random intra-connected clusters.

    Features are Gaussian around +/- separation/2 per coordinate, so a
    linear classifier suffices.  ``noise_fraction`` of the intra-class edge
    count is injected as random inter-class edges.
    """
    rng = np.random.default_rng(seed)
    n0 = n // 2
    sizes = [n0, n - n0]
    offsets = [0, n0]
    pairs = []
    for size, off in zip(sizes, offsets):
        # ring backbone keeps each cluster connected, random chords densify
        for u in range(size):
            pairs.append((off + u, off + (u + 1) % size))
        for u in range(size):
            others = np.delete(np.arange(size), u)
            take = min(intra_degree, others.size)
            for v in rng.choice(others, size=take, replace=False):
                pairs.append((off + u, off + int(v)))
    edges, _, _ = canonical_edges(np.asarray(pairs, dtype=np.int64), n)
    if noise_fraction > 0:
        n_noise = int(noise_fraction * edges.shape[0])
        existing = set((edges[:, 0] * n + edges[:, 1]).tolist())
        added = 0
        while added < n_noise:
            i = int(rng.integers(0, n0))
            j = int(rng.integers(n0, n))
            if i * n + j not in existing:
                existing.add(i * n + j)
                added += 1
        keys = np.sort(np.fromiter(existing, dtype=np.int64))
        edges = np.column_stack([keys // n, keys % n])
    features = np.empty((n, feature_dim))
    features[:n0] = rng.normal(+separation / 2, 1.0, size=(n0, feature_dim))
    features[n0:] = rng.normal(-separation / 2, 1.0, size=(n - n0, feature_dim))
    gold = np.repeat([0, 1], sizes)
    return DatasetBundle(SparseGraph(n, edges), features, gold, 2)


def ring_clusters_bundle(
    n: int = 40,
    feature_dim: int = 4,
    separation: float = 0.3,
    seed: int = 0,
) -> DatasetBundle:
    """Two classes, each an n/2-node ring, with barely informative features.

    Label signal here travels along the rings, so accuracy is governed by
    the propagation radius rather than by the features.
    """
    rng = np.random.default_rng(seed)
    n0 = n // 2
    sizes = [n0, n - n0]
    offsets = [0, n0]
    pairs = []
    for size, off in zip(sizes, offsets):
        for u in range(size):
            pairs.append((off + u, off + (u + 1) % size))
    features = np.empty((n, feature_dim))
    features[:n0] = rng.normal(+separation / 2, 1.0, size=(n0, feature_dim))
    features[n0:] = rng.normal(-separation / 2, 1.0, size=(n - n0, feature_dim))
    gold = np.repeat([0, 1], sizes)
    return DatasetBundle(SparseGraph(n, pairs), features, gold, 2)


def convert_content_release(input_dir: str | Path, output_dir: str | Path) -> dict:
    """Convert a ``<stem>.content`` + ``<stem>.cites`` release to the directory format.

    Node ids take the .content file order; label names map to indices in
    sorted order.  Citation rows naming unknown ids are skipped with a log.
    Returns summary statistics.
    """
    root = Path(input_dir)
    content_files = sorted(root.glob("*.content"))
    if not content_files:
        raise DatasetFormatError(f"no .content file in {root}")
    content = content_files[0]
    cites = content.with_suffix(".cites")
    if not cites.exists():
        raise DatasetFormatError(f"missing citation file {cites}")

    ids: list[str] = []
    rows: list[list[float]] = []
    label_names: list[str] = []
    with content.open() as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise DatasetFormatError(f"{content.name}:{lineno}: expected id, features, label")
            ids.append(parts[0])
            try:
                rows.append([float(v) for v in parts[1:-1]])
            except ValueError:
                raise DatasetFormatError(f"{content.name}:{lineno}: non-numeric feature") from None
            label_names.append(parts[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    if len(index) != len(ids):
        raise DatasetFormatError(f"{content.name}: duplicate node ids")
    classes = sorted(set(label_names))
    cls_index = {name: i for i, name in enumerate(classes)}
    gold = np.array([cls_index[name] for name in label_names], dtype=np.int64)

    pairs = []
    skipped = 0
    with cites.open() as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                skipped += 1
                continue
            a, b = parts
            if a in index and b in index:
                pairs.append((index[a], index[b]))
            else:
                skipped += 1
    if skipped:
        log.info("%s: skipped %d citation rows with unknown ids", cites, skipped)

    n = len(ids)
    bundle = DatasetBundle(
        SparseGraph(n, np.asarray(pairs, dtype=np.int64).reshape(-1, 2)),
        np.asarray(rows, dtype=np.float64),
        gold,
        len(classes),
    )
    save_dataset(bundle, output_dir)
    return {
        "n": bundle.n,
        "m": bundle.graph.m,
        "f": bundle.num_features,
        "c": bundle.num_classes,
        "skipped_citations": skipped,
        "classes": classes,
    }
