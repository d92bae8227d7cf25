import math

import numpy as np
import pytest

from agst import (
    DatasetBundle,
    DatasetFormatError,
    SparseGraph,
    convert_content_release,
    l2_normalize_rows,
    load_dataset,
    make_split,
    save_dataset,
    two_cluster_bundle,
)

from conftest import make_bundle, random_graph_edges


def write_dataset_dir(root, meta, edges, features, labels):
    root.mkdir(parents=True, exist_ok=True)
    (root / "meta").write_text(meta)
    (root / "edges.tsv").write_text(edges)
    (root / "features.csv").write_text(features)
    (root / "labels.tsv").write_text(labels)
    return root


@pytest.fixture
def tiny_dir(tmp_path):
    return write_dataset_dir(
        tmp_path / "tiny",
        meta="n=2\nf=2\nc=2\n",
        edges="0\t1\n",
        features="1.5,0.25\n-0.5,3\n",
        labels="0\t0\n",
    )


class TestLoadDataset:
    def test_minimal_valid_input(self, tiny_dir):
        bundle = load_dataset(tiny_dir)
        assert bundle.n == 2
        assert bundle.graph.m == 1
        assert bundle.num_features == 2
        assert bundle.num_classes == 2
        assert np.array_equal(bundle.gold, [0, -1])
        assert np.allclose(bundle.features, [[1.5, 0.25], [-0.5, 3.0]])

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetFormatError, match="missing dataset file"):
            load_dataset(tmp_path / "nope")

    def test_node_id_out_of_range(self, tmp_path):
        root = write_dataset_dir(tmp_path / "bad", "n=3\nf=1\nc=1\n",
                                 "0\t5\n", "0\n0\n0\n", "0\t0\n")
        with pytest.raises(DatasetFormatError, match=r"edges\.tsv:1.*out of range"):
            load_dataset(root)

    def test_non_numeric_feature(self, tmp_path):
        root = write_dataset_dir(tmp_path / "bad", "n=2\nf=2\nc=1\n",
                                 "0\t1\n", "1,2\nx,4\n", "0\t0\n")
        with pytest.raises(DatasetFormatError, match=r"features\.csv:2.*non-numeric"):
            load_dataset(root)

    def test_label_beyond_class_count(self, tmp_path):
        root = write_dataset_dir(tmp_path / "bad", "n=2\nf=1\nc=2\n",
                                 "0\t1\n", "1\n2\n", "0\t0\n1\t2\n")
        with pytest.raises(DatasetFormatError, match=r"labels\.tsv:2.*class count"):
            load_dataset(root)

    def test_duplicate_edges_deduplicated(self, tmp_path, caplog):
        root = write_dataset_dir(tmp_path / "dup", "n=3\nf=1\nc=1\n",
                                 "0\t1\n1\t0\n0\t1\n1\t2\n", "0\n0\n0\n", "0\t0\n")
        with caplog.at_level("INFO", logger="agst.data"):
            bundle = load_dataset(root)
        assert bundle.graph.m == 2
        assert any("duplicate" in r.message for r in caplog.records)

    def test_unknown_format_tag(self, tiny_dir):
        with pytest.raises(ValueError, match="unknown dataset format"):
            load_dataset(tiny_dir, fmt="parquet")


class TestRoundTrip:
    def test_save_then_load_is_identical(self, tmp_path):
        rng = np.random.default_rng(42)
        n = 17
        gold = rng.integers(0, 3, size=n)
        gold[rng.choice(n, size=4, replace=False)] = -1
        bundle = DatasetBundle(SparseGraph(n, random_graph_edges(rng, n, 0.3)),
                               rng.normal(size=(n, 5)), gold, 3)
        save_dataset(bundle, tmp_path / "rt")
        back = load_dataset(tmp_path / "rt")
        assert np.array_equal(back.graph.edges, bundle.graph.edges)
        assert np.array_equal(back.features, bundle.features)  # exact, %.17g
        assert np.array_equal(back.gold, bundle.gold)
        assert back.num_classes == bundle.num_classes


class TestMakeSplit:
    @pytest.fixture
    def big_bundle(self):
        rng = np.random.default_rng(1)
        n, c = 300, 3
        gold = np.repeat(np.arange(c), n // c)
        return make_bundle(n, random_graph_edges(rng, n, 0.02), gold, c, rng=rng)

    def test_balanced_counts(self, big_bundle):
        split = make_split(big_bundle, "balanced", seed=4, k=5)
        assert split.labeled.size == 15
        assert split.validation.size == 90
        assert split.test.size == 300 - 15 - 90
        for cls in range(3):
            assert np.sum(big_bundle.gold[split.labeled] == cls) == 5
            assert np.sum(big_bundle.gold[split.validation] == cls) == 30

    def test_standard20_is_balanced_k20(self, big_bundle):
        split = make_split(big_bundle, "standard20", seed=9)
        twin = make_split(big_bundle, "balanced", seed=9, k=20)
        assert np.array_equal(split.labeled, twin.labeled)
        assert np.sum(big_bundle.gold[split.labeled] == 0) == 20

    def test_deterministic_given_seed(self, big_bundle):
        a = make_split(big_bundle, "balanced", seed=7, k=3)
        b = make_split(big_bundle, "balanced", seed=7, k=3)
        assert np.array_equal(a.labeled, b.labeled)
        assert np.array_equal(a.validation, b.validation)
        assert np.array_equal(a.test, b.test)

    def test_partition_disjoint(self, big_bundle):
        split = make_split(big_bundle, "balanced", seed=2, k=4)
        joined = np.concatenate([split.labeled, split.validation, split.test])
        assert np.unique(joined).size == joined.size

    def test_insufficient_class_rejected(self, big_bundle):
        with pytest.raises(ValueError, match="class"):
            make_split(big_bundle, "balanced", seed=0, k=80)

    def test_imbalanced_counts_match_ceiling(self):
        rng = np.random.default_rng(2)
        n = 2708
        gold = rng.integers(0, 7, size=n)
        bundle = make_bundle(n, [[0, 1]], gold, 7, rng=rng)
        split = make_split(bundle, "imbalanced", seed=1, rate=0.005)
        assert split.labeled.size == math.ceil(0.005 * n) == 14
        assert split.test.size == 1000
        assert split.validation.size == 0

    def test_imbalanced_resamples_until_all_classes_present(self, caplog):
        # class 2 is a single node, so most draws miss it
        gold = np.zeros(200, dtype=np.int64)
        gold[100:199] = 1
        gold[199] = 2
        bundle = make_bundle(200, [[0, 1]], gold, 3)
        with caplog.at_level("DEBUG", logger="agst.data"):
            split = make_split(bundle, "imbalanced", seed=0, rate=0.02, test_size=50)
        assert np.unique(bundle.gold[split.labeled]).size == 3

    def test_rate_outside_unit_interval_rejected(self, big_bundle):
        with pytest.raises(ValueError, match="rate"):
            make_split(big_bundle, "imbalanced", seed=0, rate=1.5)

    def test_unknown_protocol(self, big_bundle):
        with pytest.raises(ValueError, match="protocol"):
            make_split(big_bundle, "stratified", seed=0)

    def test_labeled_nodes_have_known_gold(self):
        gold = np.array([0, 1, -1, 0, 1, 0, 1, 0, 1, 0, 1, 0])
        bundle = make_bundle(12, [[0, 1]], gold, 2)
        split = make_split(bundle, "balanced", seed=3, k=2, val_per_class=1)
        assert np.all(bundle.gold[split.labeled] != -1)
        assert 2 not in split.test  # unknown-gold node is never scored


class TestSynthetic:
    def test_two_cluster_shapes_and_separation(self):
        bundle = two_cluster_bundle(n=40, noise_fraction=0.1, seed=3)
        assert bundle.n == 40
        assert np.sum(bundle.gold == 0) == 20
        # noise adds inter-class pairs on top of the intra-class backbone
        inter = np.sum(bundle.gold[bundle.graph.edges[:, 0]]
                       != bundle.gold[bundle.graph.edges[:, 1]])
        assert inter > 0
        clean = two_cluster_bundle(n=40, noise_fraction=0.0, seed=3)
        inter_clean = np.sum(clean.gold[clean.graph.edges[:, 0]]
                             != clean.gold[clean.graph.edges[:, 1]])
        assert inter_clean == 0

    def test_two_cluster_deterministic(self):
        a = two_cluster_bundle(seed=11)
        b = two_cluster_bundle(seed=11)
        assert np.array_equal(a.graph.edges, b.graph.edges)
        assert np.array_equal(a.features, b.features)


class TestL2Normalize:
    def test_rows_unit_norm(self):
        x = np.array([[3.0, 4.0], [0.0, 0.0], [1.0, 0.0]])
        out = l2_normalize_rows(x)
        assert np.allclose(out[0], [0.6, 0.8])
        assert np.array_equal(out[1], [0.0, 0.0])  # zero rows pass through
        assert np.allclose(np.linalg.norm(out[2]), 1.0)


class TestConverter:
    def test_content_release_round_trip(self, tmp_path):
        src = tmp_path / "raw"
        src.mkdir()
        (src / "toy.content").write_text(
            "p1\t1\t0\t1\tgenetics\n"
            "p2\t0\t1\t0\ttheory\n"
            "p3\t1\t1\t0\tgenetics\n"
        )
        # p9 is unknown and must be skipped; p1-p2 duplicated both ways
        (src / "toy.cites").write_text("p1\tp2\np2\tp1\np2\tp3\np9\tp1\n")
        summary = convert_content_release(src, tmp_path / "out")
        assert summary == {
            "n": 3, "m": 2, "f": 3, "c": 2,
            "skipped_citations": 1, "classes": ["genetics", "theory"],
        }
        bundle = load_dataset(tmp_path / "out")
        assert bundle.n == 3
        assert np.array_equal(bundle.gold, [0, 1, 0])
        assert np.array_equal(bundle.features[0], [1, 0, 1])

    def test_missing_content_file(self, tmp_path):
        with pytest.raises(DatasetFormatError, match="content"):
            convert_content_release(tmp_path, tmp_path / "out")
