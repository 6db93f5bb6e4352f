import numpy as np
import pytest

import contentmap as cm
from contentmap.netcore import (
    NetworkFormatError,
    load_metadata,
    load_network,
    read_partition,
    write_metadata,
    write_network,
    write_partition,
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadNetwork:
    def test_single_edge_normalizes_to_one(self, tmp_path):
        net = load_network(write(tmp_path, "a.tsv", "0\t1\t1.0\n"))
        assert net.n == 2
        assert not net.directed
        idx = {(s, d): w for s, d, w in zip(net.arc_src, net.arc_dst, net.arc_weight)}
        assert idx[(0, 1)] == 1.0
        assert idx[(1, 0)] == 1.0

    def test_negative_weight_reports_line(self, tmp_path):
        path = write(tmp_path, "a.tsv", "0\t1\t1.0\n1\t2\t-1\n")
        with pytest.raises(NetworkFormatError, match=r":2"):
            load_network(path)

    def test_path_graph_normalization(self, tmp_path):
        net = load_network(write(tmp_path, "a.tsv", "0\t1\t1.0\n1\t2\t1.0\n"))
        idx = {(s, d): w for s, d, w in zip(net.arc_src, net.arc_dst, net.arc_weight)}
        assert idx[(1, 0)] == pytest.approx(0.5, abs=1e-15)
        assert idx[(1, 2)] == pytest.approx(0.5, abs=1e-15)

    def test_empty_file_rejected(self, tmp_path):
        with pytest.raises(NetworkFormatError, match="empty"):
            load_network(write(tmp_path, "a.tsv", "# only a comment\n"))

    def test_parse_error_reports_line(self, tmp_path):
        with pytest.raises(NetworkFormatError, match=r":1"):
            load_network(write(tmp_path, "a.tsv", "0\n"))

    def test_duplicate_edges_sum(self, tmp_path):
        net = load_network(write(tmp_path, "a.tsv", "0\t1\t1.0\n1\t0\t2.0\n"))
        assert net.edge_src.size == 1
        assert net.edge_weight[0] == 3.0

    def test_string_ids_remapped_densely(self, tmp_path):
        net = load_network(write(tmp_path, "a.tsv", "alice\tbob\t1\nbob\tcarol\t2\n"))
        assert net.node_names == ("alice", "bob", "carol")
        assert net.n == 3

    def test_sparse_integer_ids_remapped(self, tmp_path):
        net = load_network(write(tmp_path, "a.tsv", "10\t20\t1\n"))
        assert net.n == 2
        assert net.node_names == ("10", "20")

    def test_weight_defaults_to_one(self, tmp_path):
        net = load_network(write(tmp_path, "a.tsv", "0\t1\n"))
        assert net.edge_weight[0] == 1.0

    def test_directed_weights_normalized_per_source(self, tmp_path):
        net = load_network(
            write(tmp_path, "a.tsv", "0\t1\t3.0\n0\t2\t1.0\n1\t2\t1.0\n2\t0\t1.0\n"),
            directed=True,
        )
        sums = np.bincount(net.arc_src, weights=net.arc_weight, minlength=net.n)
        assert np.allclose(sums, 1.0, atol=1e-12)

    def test_self_loop_flagged(self, tmp_path):
        net = load_network(write(tmp_path, "a.tsv", "0\t0\t1.0\n0\t1\t1.0\n"))
        assert net.has_self_loops

    def test_pajek_subset(self, tmp_path):
        text = (
            "*Vertices 3\n"
            '1 "a"\n'
            '2 "b"\n'
            '3 "c"\n'
            "*Edges\n"
            "1 2 1.0\n"
            "2 3 2.0\n"
        )
        net = load_network(write(tmp_path, "a.net", text), format="pajek-net")
        assert net.n == 3
        assert net.node_names == ("a", "b", "c")
        assert net.edge_weight.tolist() == [1.0, 2.0]

    def test_pajek_id_out_of_range(self, tmp_path):
        text = "*Vertices 2\n*Edges\n1 5 1.0\n"
        with pytest.raises(NetworkFormatError, match="outside"):
            load_network(write(tmp_path, "a.net", text), format="pajek-net")


class TestNormalizationInvariants:
    def test_out_weights_sum_to_one(self, tmp_path):
        rng = np.random.default_rng(5)
        lines = []
        for _ in range(40):
            a, b = rng.integers(0, 12, 2)
            if a == b:
                continue
            lines.append(f"{a}\t{b}\t{rng.uniform(0.1, 4):.6f}")
        net = load_network(write(tmp_path, "a.tsv", "\n".join(lines) + "\n"))
        sums = np.bincount(net.arc_src, weights=net.arc_weight, minlength=net.n)
        has_out = sums > 0
        assert np.all(np.abs(sums[has_out] - 1.0) <= 1e-12)

    def test_undirected_symmetry_of_raw_mass(self, tmp_path):
        net = load_network(write(tmp_path, "a.tsv", "0\t1\t2.0\n1\t2\t1.0\n0\t2\t0.5\n"))
        raw = {
            (s, d): w * net.out_strength[s]
            for s, d, w in zip(net.arc_src, net.arc_dst, net.arc_weight)
        }
        for (s, d), w in raw.items():
            assert w == pytest.approx(raw[(d, s)], rel=1e-12)


class TestMetadata:
    def test_labels_in_first_appearance_order(self, tmp_path):
        net = load_network(write(tmp_path, "n.tsv", "0\t1\t1\n"))
        meta = load_metadata(write(tmp_path, "m.tsv", "0\tA\n1\tB\n"), net)
        assert meta.labels == ("A", "B")
        assert meta.assignment.tolist() == [0, 1]

    def test_missing_node_label(self, tmp_path):
        net = load_network(write(tmp_path, "n.tsv", "0\t1\t1\n"))
        with pytest.raises(NetworkFormatError, match="missing label for node 1"):
            load_metadata(write(tmp_path, "m.tsv", "0\tA\n"), net)

    def test_shared_labels(self, tmp_path):
        net = load_network(write(tmp_path, "n.tsv", "0\t1\t1\n1\t2\t1\n"))
        meta = load_metadata(write(tmp_path, "m.tsv", "0\tA\n1\tA\n2\tB\n"), net)
        assert meta.labels == ("A", "B")
        assert meta.assignment.tolist() == [0, 0, 1]

    def test_conflicting_duplicate_rejected(self, tmp_path):
        net = load_network(write(tmp_path, "n.tsv", "0\t1\t1\n"))
        with pytest.raises(NetworkFormatError, match="conflicting"):
            load_metadata(write(tmp_path, "m.tsv", "0\tA\n0\tB\n1\tA\n"), net)

    def test_unknown_node_rejected(self, tmp_path):
        net = load_network(write(tmp_path, "n.tsv", "0\t1\t1\n"))
        with pytest.raises(NetworkFormatError, match="unknown node"):
            load_metadata(write(tmp_path, "m.tsv", "0\tA\n1\tB\n7\tA\n"), net)

    def test_consistent_duplicate_allowed(self, tmp_path):
        net = load_network(write(tmp_path, "n.tsv", "0\t1\t1\n"))
        meta = load_metadata(write(tmp_path, "m.tsv", "0\tA\n0\tA\n1\tB\n"), net)
        assert meta.assignment.tolist() == [0, 1]


class TestPartitionIO:
    def test_write_single_module(self, tmp_path):
        path = tmp_path / "p.tsv"
        write_partition(cm.Partition(np.array([0, 0])), path)
        assert path.read_text() == "0\t0\n1\t0\n"

    def test_write_two_modules(self, tmp_path):
        path = tmp_path / "p.tsv"
        write_partition(cm.Partition(np.array([0, 1])), path)
        assert path.read_text() == "0\t0\n1\t1\n"

    def test_round_trip(self, tmp_path):
        net = load_network(write(tmp_path, "n.tsv", "0\t1\t1\n1\t2\t1\n2\t3\t1\n"))
        part = cm.Partition(np.array([0, 0, 1, 1]))
        path = tmp_path / "p.tsv"
        write_partition(part, path, names=net.node_names)
        back = read_partition(path, net)
        assert np.array_equal(back.assignment, part.assignment)


class TestRoundTrips:
    def test_network_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        from oracles import random_connected_network

        net = random_connected_network(rng, 5, 9)
        path = tmp_path / "n.tsv"
        write_network(net, path)
        back = load_network(path)
        assert back.n == net.n
        assert np.array_equal(back.edge_src, net.edge_src)
        assert np.array_equal(back.edge_dst, net.edge_dst)
        assert np.allclose(back.edge_weight, net.edge_weight, rtol=1e-11)

    def test_metadata_round_trip(self, tmp_path):
        net = load_network(write(tmp_path, "n.tsv", "0\t1\t1\n1\t2\t1\n"))
        meta = cm.MetadataAnnotation.from_labels(["x", "y", "x"])
        path = tmp_path / "m.tsv"
        write_metadata(meta, path, names=net.node_names)
        back = load_metadata(path, net)
        assert back.labels == meta.labels
        assert np.array_equal(back.assignment, meta.assignment)


class TestValidation:
    def test_partition_requires_dense_ids(self):
        with pytest.raises(ValueError, match="dense"):
            cm.Partition(np.array([0, 2]))

    def test_metadata_requires_used_labels(self):
        with pytest.raises(ValueError, match="unused"):
            cm.MetadataAnnotation(("A", "B"), np.array([0, 0]))

    def test_network_rejects_nonpositive_weight(self):
        with pytest.raises(NetworkFormatError, match="nonpositive"):
            cm.Network(
                n=2,
                directed=False,
                edge_src=np.array([0]),
                edge_dst=np.array([1]),
                edge_weight=np.array([0.0]),
                node_names=("0", "1"),
            )

    def test_tau0_rules(self):
        disconnected = cm.Network(
            n=4,
            directed=False,
            edge_src=np.array([0, 2]),
            edge_dst=np.array([1, 3]),
            edge_weight=np.array([1.0, 1.0]),
            node_names=("0", "1", "2", "3"),
        )
        with pytest.raises(NetworkFormatError, match="disconnected"):
            disconnected.require_tau0_compatible()

        dangling = cm.Network(
            n=2,
            directed=True,
            edge_src=np.array([0]),
            edge_dst=np.array([1]),
            edge_weight=np.array([1.0]),
            node_names=("0", "1"),
        )
        with pytest.raises(NetworkFormatError, match="no out-edges"):
            dangling.require_tau0_compatible()
