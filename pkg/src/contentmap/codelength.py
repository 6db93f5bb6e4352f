"""Exact evaluation of the metadata-weighted map equation.

The objective for a partition M is

    L(M) = q * H(Q) + sum_i p_i * H(P_i) + eta * sum_i r_i * H(R_i)

where the three groups are the inter-module codebook (module transitions),
the intra-module codebooks (node visits and module exits), and the per-module
metadata codebooks (label values observed at each within-module step).  All
logarithms are base 2; terms are reported in bits, with 0*log(0) = 0 and
empty modules contributing nothing.

``evaluate`` computes the terms directly from their definitions and serves as
the reference implementation; ``ModuleAggregates`` is the incremental working
state used for single-move deltas, backed by the kernels in ``_kernels``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from . import _kernels
from .flow import FlowDistribution
from .netcore import MetadataAnnotation, Network, Partition

TERM_CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True)
class CodelengthReport:
    """Per-term decomposition of the objective, in bits.

    ``metadata_term`` is unweighted; ``total`` folds in the eta weight.
    """

    inter_term: float
    intra_term: float
    metadata_term: float
    eta: float
    total: float

    def __post_init__(self):
        expected = self.inter_term + self.intra_term + self.eta * self.metadata_term
        if abs(expected - self.total) > TERM_CONSISTENCY_TOL * max(1.0, abs(expected)):
            raise ValueError("total inconsistent with component terms")

    @property
    def topological(self) -> float:
        """Traditional map-equation value: inter plus intra terms."""
        return self.inter_term + self.intra_term

    @classmethod
    def from_terms(cls, inter: float, intra: float, meta: float, eta: float) -> "CodelengthReport":
        return cls(inter, intra, meta, eta, inter + intra + eta * meta)


def _plogp_vec(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def module_exit_rates(
    network: Network, flow: FlowDistribution, partition: Partition
) -> np.ndarray:
    """Exit rate q_i of every module: teleport leakage plus outbound link flow."""
    p = flow.p
    tau = flow.tau
    a = partition.assignment
    m = partition.m
    n = network.n
    module_flow = np.bincount(a, weights=p, minlength=m)
    sizes = np.bincount(a, minlength=m)
    mass = p[network.arc_src] * network.arc_weight
    cross = a[network.arc_src] != a[network.arc_dst]
    link = np.bincount(a[network.arc_src[cross]], weights=mass[cross], minlength=m)
    if n > 1:
        tele = tau * ((n - sizes) / (n - 1.0)) * module_flow
    else:
        tele = np.zeros(m)
    return tele + (1.0 - tau) * link


def module_exit_rate(
    network: Network, flow: FlowDistribution, partition: Partition, module: int
) -> float:
    """Exit rate of a single module."""
    if not 0 <= module < partition.m:
        raise ValueError(f"module {module} out of range")
    return float(module_exit_rates(network, flow, partition)[module])


def metadata_flow_table(
    flow: FlowDistribution, metadata: MetadataAnnotation, partition: Partition
) -> np.ndarray:
    """Per-module label visit masses r_u^i, shape (m, n_labels)."""
    m = partition.m
    nu = metadata.n_labels
    idx = partition.assignment * nu + metadata.assignment
    return np.bincount(idx, weights=flow.p, minlength=m * nu).reshape(m, nu)


def evaluate(
    network: Network,
    flow: FlowDistribution,
    metadata: MetadataAnnotation,
    partition: Partition,
    eta: float,
) -> CodelengthReport:
    """Evaluate the objective for a partition, term by term, from definitions."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    p = flow.p
    a = partition.assignment
    m = partition.m
    q = module_exit_rates(network, flow, partition)
    module_flow = np.bincount(a, weights=p, minlength=m)

    # inter-module codebook: module names, used at rate q_total
    q_total = float(q.sum())
    inter = 0.0
    if q_total > 0:
        qq = q[q > 0] / q_total
        inter = q_total * float(-(qq * np.log2(qq)).sum())

    # intra-module codebooks: node visits plus the exit word
    use = q + module_flow
    intra = 0.0
    pos_q = q > 0
    intra -= float((q[pos_q] * np.log2(q[pos_q] / use[pos_q])).sum())
    pos_p = p > 0
    intra -= float((p[pos_p] * np.log2(p[pos_p] / use[a[pos_p]])).sum())

    # metadata codebooks: label values within each module
    r = metadata_flow_table(flow, metadata, partition)
    meta = 0.0
    pos_r = r > 0
    rows = np.nonzero(pos_r)[0]
    vals = r[pos_r]
    meta -= float((vals * np.log2(vals / module_flow[rows])).sum())

    return CodelengthReport.from_terms(inter, intra, meta, eta)


@dataclass(frozen=True)
class AggregatedGraph:
    """Flow graph over (possibly aggregated) nodes.

    Arcs carry stationary flow masses p_alpha * w_alpha_beta; self-loop mass
    is kept separately.  Each node also carries the additive quantities that
    make the objective exact at any aggregation level: original-node count,
    metadata flow vector and the summed x*log2(x) of its leaf visit rates.
    """

    n: int
    n_orig: int
    tau: float
    out_indptr: np.ndarray
    out_nbr: np.ndarray
    out_mass: np.ndarray
    in_indptr: np.ndarray
    in_nbr: np.ndarray
    in_mass: np.ndarray
    self_mass: np.ndarray
    node_flow: np.ndarray
    node_count: np.ndarray
    leaf_plogp: np.ndarray
    meta_flow: np.ndarray
    node_out_total: np.ndarray

    @property
    def n_labels(self) -> int:
        return self.meta_flow.shape[1]

    @property
    def leaf_plogp_total(self) -> float:
        return float(self.leaf_plogp.sum())


def _mass_csr_pair(n, src, dst, mass):
    out = csr_matrix((mass, (src, dst)), shape=(n, n))
    out.sum_duplicates()
    inc = out.T.tocsr()
    return (
        out.indptr.astype(np.int64),
        out.indices.astype(np.int64),
        out.data.astype(np.float64),
        inc.indptr.astype(np.int64),
        inc.indices.astype(np.int64),
        inc.data.astype(np.float64),
    )


def leaf_graph(
    network: Network, flow: FlowDistribution, metadata: MetadataAnnotation
) -> AggregatedGraph:
    """Build the finest-level flow graph from a network and its visit rates."""
    n = network.n
    p = flow.p
    if metadata.assignment.size != n:
        raise ValueError("metadata does not cover the network")
    mass = p[network.arc_src] * network.arc_weight
    loops = network.arc_src == network.arc_dst
    self_mass = np.bincount(network.arc_src[loops], weights=mass[loops], minlength=n)
    oi, on, om, ii, inn, im = _mass_csr_pair(
        n, network.arc_src[~loops], network.arc_dst[~loops], mass[~loops]
    )
    meta_flow = np.zeros((n, metadata.n_labels))
    meta_flow[np.arange(n), metadata.assignment] = p
    return AggregatedGraph(
        n=n,
        n_orig=n,
        tau=flow.tau,
        out_indptr=oi,
        out_nbr=on,
        out_mass=om,
        in_indptr=ii,
        in_nbr=inn,
        in_mass=im,
        self_mass=self_mass,
        node_flow=p.astype(np.float64),
        node_count=np.ones(n, dtype=np.int64),
        leaf_plogp=_plogp_vec(p),
        meta_flow=meta_flow,
        node_out_total=np.bincount(network.arc_src, weights=mass, minlength=n),
    )


class ModuleAggregates:
    """Mutable per-module aggregates of a working partition.

    Tracks, for every module: exit rate inputs (total outbound and internal
    flow mass), visit-rate sum, original-node count and the metadata flow
    vector.  Owned by a single optimizer run; not thread-safe.
    """

    def __init__(self, graph: AggregatedGraph, assignment: np.ndarray):
        a = np.asarray(assignment, dtype=np.int64)
        if a.size != graph.n or (a.size and (a.min() < 0 or a.max() >= graph.n)):
            raise ValueError("assignment must map graph nodes to ids < n")
        self.graph = graph
        self.assignment = a.copy()
        cap = graph.n
        self.mod_flow = np.bincount(a, weights=graph.node_flow, minlength=cap)
        self.mod_count = np.zeros(cap, dtype=np.int64)
        np.add.at(self.mod_count, a, graph.node_count)
        self.mod_meta = np.zeros((cap, graph.n_labels))
        np.add.at(self.mod_meta, a, graph.meta_flow)
        self.mod_to = np.bincount(a, weights=graph.node_out_total, minlength=cap)
        src = np.repeat(np.arange(cap), np.diff(graph.out_indptr))
        within = a[src] == a[graph.out_nbr]
        internal_arcs = np.bincount(
            a[src[within]], weights=graph.out_mass[within], minlength=cap
        )
        self.mod_internal = internal_arcs + np.bincount(
            a, weights=graph.self_mass, minlength=cap
        )
        self.q_total = float(self.exit_rates().sum())

    @classmethod
    def from_network(
        cls,
        network: Network,
        flow: FlowDistribution,
        metadata: MetadataAnnotation,
        partition: Partition,
    ) -> "ModuleAggregates":
        if partition.n != network.n:
            raise ValueError("partition does not cover the network")
        return cls(leaf_graph(network, flow, metadata), partition.assignment)

    @property
    def module_flow(self) -> np.ndarray:
        return self.mod_flow

    @property
    def module_counts(self) -> np.ndarray:
        return self.mod_count

    @property
    def metadata_flow(self) -> np.ndarray:
        return self.mod_meta

    def exit_rates(self) -> np.ndarray:
        g = self.graph
        link = self.mod_to - self.mod_internal
        if g.n_orig > 1:
            tele = g.tau * ((g.n_orig - self.mod_count) / (g.n_orig - 1.0)) * self.mod_flow
        else:
            tele = np.zeros_like(self.mod_flow)
        q = tele + (1.0 - g.tau) * link
        q[self.mod_count == 0] = 0.0
        return q

    def move_delta(self, node: int, from_module: int, to_module: int, eta: float) -> float:
        """Codelength change of moving node to to_module; mutates nothing."""
        if self.assignment[node] != from_module:
            raise ValueError(
                f"node {node} is in module {self.assignment[node]}, not {from_module}"
            )
        if from_module == to_module:
            return 0.0
        g = self.graph
        return float(
            _kernels.move_delta_single(
                node,
                to_module,
                g.out_indptr,
                g.out_nbr,
                g.out_mass,
                g.in_indptr,
                g.in_nbr,
                g.in_mass,
                g.self_mass,
                g.node_flow,
                g.node_count,
                g.meta_flow,
                g.node_out_total,
                self.assignment,
                self.mod_flow,
                self.mod_count,
                self.mod_to,
                self.mod_internal,
                self.mod_meta,
                self.q_total,
                g.tau,
                g.n_orig,
                eta,
            )
        )

    def apply_move(self, node: int, to_module: int) -> None:
        g = self.graph
        self.q_total = float(
            _kernels.apply_move(
                node,
                to_module,
                g.out_indptr,
                g.out_nbr,
                g.out_mass,
                g.in_indptr,
                g.in_nbr,
                g.in_mass,
                g.self_mass,
                g.node_flow,
                g.node_count,
                g.meta_flow,
                g.node_out_total,
                self.assignment,
                self.mod_flow,
                self.mod_count,
                self.mod_to,
                self.mod_internal,
                self.mod_meta,
                self.q_total,
                g.tau,
                g.n_orig,
            )
        )

    def report(self, eta: float) -> CodelengthReport:
        """Codelength terms of the current working partition."""
        g = self.graph
        inter, intra, meta, q_total = _kernels.partition_terms(
            self.mod_flow,
            self.mod_count,
            self.mod_to,
            self.mod_internal,
            self.mod_meta,
            g.leaf_plogp_total,
            g.tau,
            g.n_orig,
        )
        self.q_total = float(q_total)
        return CodelengthReport.from_terms(float(inter), float(intra), float(meta), eta)

    def codelength(self, eta: float) -> float:
        return self.report(eta).total


def move_delta(
    state: ModuleAggregates, node: int, from_module: int, to_module: int, eta: float
) -> float:
    """Module-level convenience wrapper around ModuleAggregates.move_delta."""
    return state.move_delta(node, from_module, to_module, eta)
