"""Partition-comparison measures: adjusted mutual information and helpers.

AMI = (I - E{I}) / (max{H(X), H(Y)} - E{I}) with the expected mutual
information taken under the exact hypergeometric (random permutation) model.
All information quantities use natural logarithms internally; the units
cancel in the ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .netcore import Partition

_DEGENERATE_TOL = 1e-12


def _as_assignment(x) -> np.ndarray:
    if isinstance(x, Partition):
        return x.assignment
    a = np.asarray(x, dtype=np.int64)
    if a.ndim != 1:
        raise ValueError("partition must be one-dimensional")
    return a


@dataclass(frozen=True)
class ContingencyTable:
    """Joint group counts of two partitions over the same element set."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or np.any(c < 0) or c.sum() == 0:
            raise ValueError("counts must be a nonnegative 2-d table")
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @classmethod
    def from_assignments(cls, x, y) -> "ContingencyTable":
        ax, ay = _as_assignment(x), _as_assignment(y)
        if ax.shape != ay.shape:
            raise ValueError("partitions cover different element sets")
        r = int(ax.max()) + 1
        s = int(ay.max()) + 1
        counts = np.zeros((r, s), dtype=np.int64)
        np.add.at(counts, (ax, ay), 1)
        return cls(counts)


def entropy(assignment) -> float:
    """Shannon entropy of group sizes, in nats."""
    a = _as_assignment(assignment)
    counts = np.bincount(a)
    pk = counts[counts > 0] / a.size
    return float(-(pk * np.log(pk)).sum())


def mutual_information(table: ContingencyTable) -> float:
    """Plug-in mutual information of the empirical joint, in nats."""
    n = table.n
    c = table.counts
    a = table.row_marginals
    b = table.col_marginals
    nz = c > 0
    rows, cols = np.nonzero(nz)
    cv = c[nz].astype(np.float64)
    return float((cv / n * (np.log(cv * n) - np.log(a[rows] * b[cols].astype(np.float64)))).sum())


def expected_mutual_information(table: ContingencyTable) -> float:
    """Exact E{I} under the hypergeometric model (random permutations), in nats.

    Standard triple sum over row group, column group, and feasible cell
    count, evaluated with log-factorial tables for stability.
    """
    n = table.n
    a = table.row_marginals.astype(np.int64)
    b = table.col_marginals.astype(np.int64)
    lgn = gammaln(np.arange(n + 2) + 1.0)  # lgn[k] = log(k!)
    base = gammaln(n + 1.0)
    emi = 0.0
    for aj in a:
        if aj == 0:
            continue
        for bk in b:
            if bk == 0:
                continue
            lo = max(1, aj + bk - n)
            hi = min(aj, bk)
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1)
            term_info = nij / n * (np.log(nij * n) - np.log(float(aj) * bk))
            log_prob = (
                lgn[aj]
                + lgn[bk]
                + lgn[n - aj]
                + lgn[n - bk]
                - base
                - lgn[nij]
                - lgn[aj - nij]
                - lgn[bk - nij]
                - lgn[n - aj - bk + nij]
            )
            emi += float((term_info * np.exp(log_prob)).sum())
    return emi


def _equal_up_to_relabeling(ax: np.ndarray, ay: np.ndarray) -> bool:
    tab = ContingencyTable.from_assignments(ax, ay).counts
    return bool(np.all((tab > 0).sum(axis=0) <= 1) and np.all((tab > 0).sum(axis=1) <= 1))


def _canonical(table: ContingencyTable) -> ContingencyTable:
    """Orientation-independent view so summation order is symmetric in x, y."""
    c = table.counts
    t = c.T
    if c.shape > t.shape:
        return ContingencyTable(t)
    if c.shape < t.shape:
        return table
    return table if c.tolist() <= t.tolist() else ContingencyTable(t)


def ami(x, y) -> float:
    """Adjusted mutual information between two partitions.

    Degenerate pairs where the normalizer vanishes (e.g. both trivial) score
    1 when the partitions match up to relabeling and 0 otherwise.
    """
    ax, ay = _as_assignment(x), _as_assignment(y)
    if ax.shape != ay.shape:
        raise ValueError("partitions cover different element sets")
    table = _canonical(ContingencyTable.from_assignments(ax, ay))
    mi = mutual_information(table)
    emi = expected_mutual_information(table)
    hmax = max(entropy(ax), entropy(ay))
    denom = hmax - emi
    if abs(denom) < _DEGENERATE_TOL:
        return 1.0 if _equal_up_to_relabeling(ax, ay) else 0.0
    return float((mi - emi) / denom)


def nmi(x, y) -> float:
    """Unadjusted NMI with max normalization; diagnostic helper."""
    ax, ay = _as_assignment(x), _as_assignment(y)
    table = ContingencyTable.from_assignments(ax, ay)
    hmax = max(entropy(ax), entropy(ay))
    if hmax < _DEGENERATE_TOL:
        return 1.0 if _equal_up_to_relabeling(ax, ay) else 0.0
    return float(mutual_information(table) / hmax)
