"""Partition search: seeded local moves, network aggregation, multi-restart.

Each trial starts from all-singletons, alternates local-move sweeps with
aggregation of modules into single nodes until no further improvement, then
fine-tunes by moving original nodes within the found module structure.  The
best trial by total codelength wins; everything is deterministic given the
configured seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .codelength import (
    AggregatedGraph,
    CodelengthReport,
    ModuleAggregates,
    _mass_csr_pair,
    evaluate,
    leaf_graph,
)
from .flow import stationary_distribution
from .netcore import MetadataAnnotation, Network, Partition


@dataclass(frozen=True)
class SearchConfig:
    eta: float = 0.0
    tau: float = 0.0
    trials: int = 10
    seed: int = 0
    max_outer_loops: int = 50
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")


@dataclass(frozen=True)
class AggregatedNode:
    """Read-only view of one node of an aggregated flow graph."""

    flow: float
    count: int
    meta_flow: np.ndarray
    internal_flow: float
    neighbors: np.ndarray
    out_mass: np.ndarray


def aggregated_node(graph: AggregatedGraph, v: int) -> AggregatedNode:
    lo, hi = graph.out_indptr[v], graph.out_indptr[v + 1]
    return AggregatedNode(
        flow=float(graph.node_flow[v]),
        count=int(graph.node_count[v]),
        meta_flow=graph.meta_flow[v].copy(),
        internal_flow=float(graph.self_mass[v]),
        neighbors=graph.out_nbr[lo:hi].copy(),
        out_mass=graph.out_mass[lo:hi].copy(),
    )


def trial_rng_state(seed: int, trial: int) -> np.uint64:
    """Deterministic per-trial shuffle state derived from (seed, trial)."""
    ss = np.random.SeedSequence((seed, trial))
    return np.uint64(ss.generate_state(1, np.uint64)[0]) | np.uint64(1)


def local_move_pass(
    state: ModuleAggregates, config: SearchConfig, rng_state: np.uint64
) -> tuple[int, float, np.uint64]:
    """Run seeded sweeps until quiescent; returns (moves, improvement_bits, rng)."""
    g = state.graph
    moves, delta, rng_state = _kernels.local_move_pass(
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
        state.assignment,
        state.mod_flow,
        state.mod_count,
        state.mod_to,
        state.mod_internal,
        state.mod_meta,
        g.tau,
        g.n_orig,
        config.eta,
        config.tolerance,
        _kernels.as_rng_state(rng_state),
    )
    state.q_total = float(state.exit_rates().sum())
    return int(moves), float(-delta), _kernels.as_rng_state(rng_state)


def _aggregate_graph(graph: AggregatedGraph, dense: np.ndarray, m: int) -> AggregatedGraph:
    src = np.repeat(np.arange(graph.n), np.diff(graph.out_indptr))
    ai = dense[src]
    aj = dense[graph.out_nbr]
    within = ai == aj
    self_mass = np.bincount(
        ai[within], weights=graph.out_mass[within], minlength=m
    ) + np.bincount(dense, weights=graph.self_mass, minlength=m)
    oi, on, om, ii, inn, im = _mass_csr_pair(
        m, ai[~within], aj[~within], graph.out_mass[~within]
    )
    count = np.zeros(m, dtype=np.int64)
    np.add.at(count, dense, graph.node_count)
    meta = np.zeros((m, graph.n_labels))
    np.add.at(meta, dense, graph.meta_flow)
    return AggregatedGraph(
        n=m,
        n_orig=graph.n_orig,
        tau=graph.tau,
        out_indptr=oi,
        out_nbr=on,
        out_mass=om,
        in_indptr=ii,
        in_nbr=inn,
        in_mass=im,
        self_mass=self_mass,
        node_flow=np.bincount(dense, weights=graph.node_flow, minlength=m),
        node_count=count,
        leaf_plogp=np.bincount(dense, weights=graph.leaf_plogp, minlength=m),
        meta_flow=meta,
        node_out_total=np.bincount(dense, weights=graph.node_out_total, minlength=m),
    )


def aggregate(state: ModuleAggregates) -> tuple[ModuleAggregates, np.ndarray]:
    """Collapse every module into a single node.

    Returns the new working state (identity partition over aggregated nodes)
    and the node -> aggregated-node map of the input graph.  The codelength
    of the identity partition on the aggregate equals the codelength of the
    input partition.
    """
    modules, dense = np.unique(state.assignment, return_inverse=True)
    m = modules.size
    graph = _aggregate_graph(state.graph, dense.astype(np.int64), m)
    return ModuleAggregates(graph, np.arange(m, dtype=np.int64)), dense.astype(np.int64)


def _trial_start(leaf: AggregatedGraph, config: SearchConfig, trial: int) -> np.ndarray:
    """Initial assignment for a restart.

    The first trial starts from all-singletons, the second from a single
    module, and later trials alternate singletons with seeded random
    groupings.  Pure singleton starts can lock into states where only a
    simultaneous merge of several modules improves the objective; the mixed
    starts let the restarts escape those basins.
    """
    n = leaf.n
    if trial == 1:
        return np.zeros(n, dtype=np.int64)
    if trial >= 2 and trial % 2 == 1:
        rng = np.random.default_rng(np.random.SeedSequence((config.seed, trial, 1)))
        groups = int(rng.integers(1, max(2, n // 2) + 1))
        return rng.integers(0, groups, n).astype(np.int64)
    return np.arange(n, dtype=np.int64)


def _run_trial(
    leaf: AggregatedGraph,
    config: SearchConfig,
    trial: int,
) -> tuple[np.ndarray, float]:
    rng_state = trial_rng_state(config.seed, trial)
    state = ModuleAggregates(leaf, _trial_start(leaf, config, trial))
    node_of_orig = np.arange(leaf.n, dtype=np.int64)

    for _ in range(config.max_outer_loops):
        moves, _, rng_state = local_move_pass(state, config, rng_state)
        if moves == 0:
            break
        state, dense = aggregate(state)
        node_of_orig = dense[node_of_orig]
        if state.graph.n == 1:
            break

    # fine-tuning: move original nodes within the found module structure
    fine = ModuleAggregates(leaf, state.assignment[node_of_orig])
    _, _, rng_state = local_move_pass(fine, config, rng_state)
    return fine.assignment.copy(), fine.codelength(config.eta)


@dataclass(frozen=True)
class SearchResult:
    partition: Partition
    report: CodelengthReport
    best_trial: int
    best_trial_seed: int


def search_detailed(
    network: Network, metadata: MetadataAnnotation, config: SearchConfig
) -> SearchResult:
    """Like ``search`` but also reports which restart won."""
    flow = stationary_distribution(network, config.tau)
    leaf = leaf_graph(network, flow, metadata)

    best_assign: np.ndarray | None = None
    best_codelength = np.inf
    best_trial = 0
    for trial in range(config.trials):
        assign, total = _run_trial(leaf, config, trial)
        if total < best_codelength:
            best_codelength = total
            best_assign = assign
            best_trial = trial

    partition = Partition.from_labels(best_assign.tolist())
    report = evaluate(network, flow, metadata, partition, config.eta)
    return SearchResult(
        partition=partition,
        report=report,
        best_trial=best_trial,
        best_trial_seed=int(trial_rng_state(config.seed, best_trial)),
    )


def search(
    network: Network, metadata: MetadataAnnotation, config: SearchConfig
) -> tuple[Partition, CodelengthReport]:
    """Minimize the objective over partitions; best of ``config.trials`` restarts."""
    result = search_detailed(network, metadata, config)
    return result.partition, result.report
