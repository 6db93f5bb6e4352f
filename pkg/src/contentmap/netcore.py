"""Graph and metadata data model, validation, and file ingestion.

Networks are weighted graphs over dense integer node ids 0..n-1 with
per-source normalized out-weights.  Undirected edges are stored once and
expanded symmetrically before normalization.  Metadata assigns exactly one
discrete label to every node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

NORMALIZATION_TOL = 1e-12


class NetworkFormatError(ValueError):
    """Raised when an input file cannot be parsed into a valid network."""


@dataclass(frozen=True)
class Network:
    """Weighted graph with per-node normalized out-weights.

    ``edge_src/edge_dst/edge_weight`` hold each input edge once (raw,
    duplicate-summed weights).  ``arc_*`` hold the expanded arc list used by
    the dynamics: for undirected networks every edge {a, b} with a != b
    appears as both a->b and b->a, self-loops appear once.  ``arc_weight`` is
    normalized so that the out-weights of every non-dangling node sum to 1.
    """

    n: int
    directed: bool
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_weight: np.ndarray
    node_names: tuple[str, ...]
    # derived, filled by __post_init__
    arc_src: np.ndarray = field(default=None, repr=False)
    arc_dst: np.ndarray = field(default=None, repr=False)
    arc_weight: np.ndarray = field(default=None, repr=False)
    out_strength: np.ndarray = field(default=None, repr=False)
    has_self_loops: bool = False

    def __post_init__(self):
        if self.n <= 0:
            raise NetworkFormatError("empty network: no nodes")
        src = np.asarray(self.edge_src, dtype=np.int64)
        dst = np.asarray(self.edge_dst, dtype=np.int64)
        w = np.asarray(self.edge_weight, dtype=np.float64)
        if not (src.shape == dst.shape == w.shape):
            raise NetworkFormatError("edge arrays must have equal length")
        if src.size and (src.min() < 0 or max(src.max(), dst.max()) >= self.n):
            raise NetworkFormatError("edge endpoint outside 0..n-1")
        if np.any(w <= 0):
            raise NetworkFormatError("nonpositive edge weight")
        if len(self.node_names) != self.n:
            raise NetworkFormatError("node_names length mismatch")

        # expand to arcs
        if self.directed:
            a_src, a_dst, a_w = src, dst, w
        else:
            loops = src == dst
            a_src = np.concatenate([src, dst[~loops]])
            a_dst = np.concatenate([dst, src[~loops]])
            a_w = np.concatenate([w, w[~loops]])
        strength = np.bincount(a_src, weights=a_w, minlength=self.n)
        norm = np.where(strength > 0, strength, 1.0)
        a_norm = a_w / norm[a_src]
        # canonical arc order: by (src, dst)
        order = np.lexsort((a_dst, a_src))
        object.__setattr__(self, "arc_src", a_src[order])
        object.__setattr__(self, "arc_dst", a_dst[order])
        object.__setattr__(self, "arc_weight", a_norm[order])
        object.__setattr__(self, "out_strength", strength)
        object.__setattr__(self, "has_self_loops", bool(np.any(src == dst)))
        object.__setattr__(self, "edge_src", src)
        object.__setattr__(self, "edge_dst", dst)
        object.__setattr__(self, "edge_weight", w)

        sums = np.bincount(self.arc_src, weights=self.arc_weight, minlength=self.n)
        bad = strength > 0
        if np.any(np.abs(sums[bad] - 1.0) > NORMALIZATION_TOL):
            raise NetworkFormatError("out-weight normalization failed")

    @property
    def dangling(self) -> np.ndarray:
        """Boolean mask of nodes with no out-arcs."""
        return self.out_strength == 0

    def out_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Normalized out-adjacency as (indptr, indices, weights)."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.arc_src, minlength=self.n), out=indptr[1:])
        return indptr, self.arc_dst.copy(), self.arc_weight.copy()

    def is_connected(self) -> bool:
        """Weak connectivity over the arc structure (single component)."""
        if self.n == 1:
            return True
        mat = csr_matrix(
            (np.ones_like(self.arc_weight), (self.arc_src, self.arc_dst)),
            shape=(self.n, self.n),
        )
        ncomp, _ = connected_components(mat, directed=True, connection="weak")
        return ncomp == 1

    def require_tau0_compatible(self) -> None:
        """Validate the topology rules for teleportation-free dynamics."""
        if self.directed:
            if np.any(self.dangling):
                bad = int(np.flatnonzero(self.dangling)[0])
                raise NetworkFormatError(
                    f"node {self.node_names[bad]} has no out-edges; "
                    "dangling nodes need tau > 0"
                )
        elif not self.is_connected():
            raise NetworkFormatError(
                "undirected network is disconnected; the stationary "
                "distribution with tau = 0 is not unique"
            )


@dataclass(frozen=True)
class MetadataAnnotation:
    """One discrete label per node, indices into an ordered label universe."""

    labels: tuple[str, ...]
    assignment: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.assignment, dtype=np.int64)
        if len(self.labels) == 0 or u.size == 0:
            raise ValueError("empty metadata annotation")
        if u.min() < 0 or u.max() >= len(self.labels):
            raise ValueError("label index out of range")
        used = np.bincount(u, minlength=len(self.labels))
        if np.any(used == 0):
            unused = self.labels[int(np.flatnonzero(used == 0)[0])]
            raise ValueError(f"label {unused!r} is in the universe but unused")
        object.__setattr__(self, "assignment", u)

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @classmethod
    def from_labels(cls, node_labels: Sequence[str]) -> "MetadataAnnotation":
        """Build from one label string per node, universe in first-appearance order."""
        universe: list[str] = []
        index: dict[str, int] = {}
        u = np.empty(len(node_labels), dtype=np.int64)
        for i, lab in enumerate(node_labels):
            if lab not in index:
                index[lab] = len(universe)
                universe.append(lab)
            u[i] = index[lab]
        return cls(tuple(universe), u)


@dataclass(frozen=True)
class Partition:
    """Hard assignment of nodes to dense module ids 0..m-1."""

    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.size == 0:
            raise ValueError("empty partition")
        m = int(a.max()) + 1
        if a.min() < 0 or np.any(np.bincount(a, minlength=m) == 0):
            raise ValueError("module ids must be dense 0..m-1")
        object.__setattr__(self, "assignment", a)

    @property
    def n(self) -> int:
        return int(self.assignment.size)

    @property
    def m(self) -> int:
        return int(self.assignment.max()) + 1

    @property
    def module_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.m)

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Densify arbitrary hashable module labels in first-appearance order."""
        index: dict = {}
        a = np.empty(len(labels), dtype=np.int64)
        for i, lab in enumerate(labels):
            key = lab
            if key not in index:
                index[key] = len(index)
            a[i] = index[key]
        return cls(a)


def _iter_data_lines(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _dense_id_map(ids: list[str]) -> dict[str, int]:
    """Map id tokens to dense ints.

    All-integer ids are remapped in numeric order (identity when already
    dense); anything else densifies in first-appearance order.
    """
    distinct = list(dict.fromkeys(ids))
    try:
        as_int = [int(t) for t in distinct]
    except ValueError:
        as_int = None
    if as_int is not None and len(set(as_int)) == len(as_int):
        rank = {v: i for i, v in enumerate(sorted(as_int))}
        return {t: rank[v] for t, v in zip(distinct, as_int)}
    return {t: i for i, t in enumerate(distinct)}


def _parse_edge_row(parts: list[str], lineno: int, path) -> tuple[str, str, float]:
    if len(parts) < 2 or len(parts) > 3:
        raise NetworkFormatError(f"{path}:{lineno}: expected 'src dst [weight]'")
    w = 1.0
    if len(parts) == 3:
        try:
            w = float(parts[2])
        except ValueError:
            raise NetworkFormatError(f"{path}:{lineno}: bad weight {parts[2]!r}") from None
    if not np.isfinite(w) or w <= 0:
        raise NetworkFormatError(f"{path}:{lineno}: weight must be > 0, got {w}")
    return parts[0], parts[1], w


def _read_edge_list(path: Path) -> tuple[list[tuple[str, str, float]], list[str]]:
    rows = []
    ids: list[str] = []
    for lineno, line in _iter_data_lines(path):
        s, t, w = _parse_edge_row(line.split(), lineno, path)
        rows.append((s, t, w))
        ids.append(s)
        ids.append(t)
    return rows, ids


def _read_pajek(path: Path) -> tuple[list[tuple[str, str, float]], list[str], int]:
    """Minimal Pajek .net subset: *Vertices / *Edges / *Arcs, 1-based ids."""
    n_declared = None
    names: dict[int, str] = {}
    rows: list[tuple[str, str, float]] = []
    section = None
    for lineno, line in _iter_data_lines(path):
        low = line.lower()
        if low.startswith("*vertices"):
            parts = line.split()
            if len(parts) < 2 or not parts[1].isdigit():
                raise NetworkFormatError(f"{path}:{lineno}: bad *Vertices header")
            n_declared = int(parts[1])
            section = "vertices"
            continue
        if low.startswith("*edges") or low.startswith("*arcs"):
            section = "edges"
            continue
        if line.startswith("*"):
            raise NetworkFormatError(f"{path}:{lineno}: unsupported section {line!r}")
        if section == "vertices":
            parts = line.split(maxsplit=1)
            try:
                vid = int(parts[0])
            except ValueError:
                raise NetworkFormatError(f"{path}:{lineno}: bad vertex id") from None
            if len(parts) > 1:
                names[vid] = parts[1].strip().strip('"')
        elif section == "edges":
            s, t, w = _parse_edge_row(line.split()[:3], lineno, path)
            rows.append((s, t, w))
        else:
            raise NetworkFormatError(f"{path}:{lineno}: data before any section header")
    if n_declared is None:
        raise NetworkFormatError(f"{path}: missing *Vertices section")
    # 1-based vertex ids become dense 0-based ids 0..n-1
    remapped = []
    for s, t, w in rows:
        try:
            si, ti = int(s), int(t)
        except ValueError:
            raise NetworkFormatError(f"{path}: non-integer vertex id {s!r}/{t!r}") from None
        if not (1 <= si <= n_declared and 1 <= ti <= n_declared):
            raise NetworkFormatError(f"{path}: vertex id outside 1..{n_declared}")
        remapped.append((str(si - 1), str(ti - 1), w))
    name_list = [names.get(i + 1, str(i + 1)) for i in range(n_declared)]
    return remapped, name_list, n_declared


def load_network(path, format: str = "edge-list-tsv", directed: bool = False) -> Network:
    """Load and validate a network file.

    Supported formats: ``edge-list-tsv`` (``src<TAB>dst<TAB>weight``, weight
    optional, ``#`` comments) and ``pajek-net`` (``*Vertices``/``*Edges``/
    ``*Arcs`` subset).  String ids are remapped to dense integers in
    first-appearance order; the original ids are retained as node names.
    Duplicate edges have their weights summed.
    """
    path = Path(path)
    if format == "edge-list-tsv":
        rows, ids = _read_edge_list(path)
        if not rows:
            raise NetworkFormatError(f"{path}: empty network")
        id_map = _dense_id_map(ids)
        names = [None] * len(id_map)
        for tok, idx in id_map.items():
            names[idx] = tok
        n = len(id_map)
        rows = [(id_map[s], id_map[t], w) for s, t, w in rows]
    elif format == "pajek-net":
        rows, names, n = _read_pajek(path)
        if n == 0:
            raise NetworkFormatError(f"{path}: empty network")
        rows = [(int(s), int(t), w) for s, t, w in rows]
    else:
        raise ValueError(f"unknown network format {format!r}")

    # sum duplicates (undirected: unordered pairs coincide)
    agg: dict[tuple[int, int], float] = {}
    for s, t, w in rows:
        key = (s, t) if directed or s <= t else (t, s)
        agg[key] = agg.get(key, 0.0) + w
    keys = sorted(agg)
    src = np.array([k[0] for k in keys], dtype=np.int64)
    dst = np.array([k[1] for k in keys], dtype=np.int64)
    wgt = np.array([agg[k] for k in keys], dtype=np.float64)
    return Network(
        n=n,
        directed=directed,
        edge_src=src,
        edge_dst=dst,
        edge_weight=wgt,
        node_names=tuple(names),
    )


def load_metadata(path, network: Network) -> MetadataAnnotation:
    """Load a two-column ``node<TAB>label`` file covering every network node."""
    path = Path(path)
    name_to_id = {name: i for i, name in enumerate(network.node_names)}
    seen: dict[int, str] = {}
    for lineno, line in _iter_data_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise NetworkFormatError(f"{path}:{lineno}: expected 'node label'")
        tok, lab = parts
        if tok not in name_to_id:
            raise NetworkFormatError(f"{path}:{lineno}: unknown node id {tok!r}")
        node = name_to_id[tok]
        if node in seen and seen[node] != lab:
            raise NetworkFormatError(
                f"{path}:{lineno}: conflicting labels for node {tok!r}: "
                f"{seen[node]!r} vs {lab!r}"
            )
        seen[node] = lab
    missing = [i for i in range(network.n) if i not in seen]
    if missing:
        raise NetworkFormatError(
            f"{path}: missing label for node {network.node_names[missing[0]]}"
        )
    return MetadataAnnotation.from_labels([seen[i] for i in range(network.n)])


def write_metadata(metadata: MetadataAnnotation, path, names: Sequence[str] | None = None) -> None:
    """Write ``node<TAB>label`` rows in node-id order."""
    n = metadata.assignment.size
    names = names if names is not None else [str(i) for i in range(n)]
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n):
            fh.write(f"{names[i]}\t{metadata.labels[metadata.assignment[i]]}\n")


def write_partition(partition: Partition, path, names: Sequence[str] | None = None) -> None:
    """Write ``node<TAB>module`` rows ordered by node id."""
    names = names if names is not None else [str(i) for i in range(partition.n)]
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(partition.n):
            fh.write(f"{names[i]}\t{partition.assignment[i]}\n")


def read_partition(path, network: Network | None = None) -> Partition:
    """Read a ``node<TAB>module`` file back into a Partition.

    With a network, rows are matched by node name and every node must be
    covered; otherwise rows are taken in file order.
    """
    path = Path(path)
    rows: dict[str, str] = {}
    order: list[str] = []
    for lineno, line in _iter_data_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise NetworkFormatError(f"{path}:{lineno}: expected 'node module'")
        if parts[0] in rows:
            raise NetworkFormatError(f"{path}:{lineno}: duplicate node {parts[0]!r}")
        rows[parts[0]] = parts[1]
        order.append(parts[0])
    if network is not None:
        try:
            labels = [rows[name] for name in network.node_names]
        except KeyError as exc:
            raise NetworkFormatError(f"{path}: missing module for node {exc.args[0]}") from None
    else:
        labels = [rows[tok] for tok in order]
    return Partition.from_labels(labels)


def write_network(network: Network, path) -> None:
    """Write the raw edge list as ``src<TAB>dst<TAB>weight`` TSV."""
    with open(path, "w", encoding="utf-8") as fh:
        for s, t, w in zip(network.edge_src, network.edge_dst, network.edge_weight):
            fh.write(f"{network.node_names[s]}\t{network.node_names[t]}\t{w:.12g}\n")
