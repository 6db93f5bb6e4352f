"""Independent reference implementations used only by the tests.

Everything here is coded straight from the definitions, separately from the
package internals, so the tests cross two distinct derivations.
"""

from __future__ import annotations

from math import lgamma, log

import numpy as np

import contentmap as cm


def plogp2(x: float) -> float:
    return x * np.log2(x) if x > 0 else 0.0


def enumerate_partitions(n: int):
    """All set partitions of range(n) as dense assignment arrays (RGS order)."""
    a = np.zeros(n, dtype=np.int64)
    b = np.zeros(n, dtype=np.int64)
    yield a.copy()
    while True:
        i = n - 1
        while i > 0 and a[i] == b[i] + 1:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        mx = max(b[i], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            b[j] = mx
        yield a.copy()


def codelength_literal(network, p, label_idx, assignment, tau=0.0, eta=0.0):
    """Literal per-codebook evaluation: entropies weighted by use rates.

    Returns (inter, intra, meta, total) in bits.
    """
    A = np.asarray(assignment)
    n = network.n
    m = int(A.max()) + 1
    modules = [np.flatnonzero(A == i) for i in range(m)]

    q = np.zeros(m)
    for i, members in enumerate(modules):
        flow_sum = p[members].sum()
        if n > 1:
            q[i] = tau * (n - members.size) / (n - 1) * flow_sum
        for s, t, w in zip(network.arc_src, network.arc_dst, network.arc_weight):
            if A[s] == i and A[t] != i:
                q[i] += (1 - tau) * p[s] * w
    q_total = q.sum()

    inter = 0.0
    if q_total > 0:
        h = 0.0
        for qi in q:
            if qi > 0:
                h -= qi / q_total * np.log2(qi / q_total)
        inter = q_total * h

    intra = 0.0
    for i, members in enumerate(modules):
        use = q[i] + p[members].sum()
        if use <= 0:
            continue
        h = 0.0
        if q[i] > 0:
            h -= q[i] / use * np.log2(q[i] / use)
        for alpha in members:
            if p[alpha] > 0:
                h -= p[alpha] / use * np.log2(p[alpha] / use)
        intra += use * h

    meta = 0.0
    nu = int(np.max(label_idx)) + 1
    for i, members in enumerate(modules):
        r_tot = p[members].sum()
        if r_tot <= 0:
            continue
        h = 0.0
        for u in range(nu):
            r_u = p[members[label_idx[members] == u]].sum()
            if r_u > 0:
                h -= r_u / r_tot * np.log2(r_u / r_tot)
        meta += r_tot * h

    return inter, intra, meta, inter + intra + eta * meta


def codelength_tm(network, p, label_idx, assignment, tau=0.0):
    """Fast (topological, metadata) pair via the summed x*log2(x) identity."""
    A = np.asarray(assignment)
    n = network.n
    m = int(A.max()) + 1
    P = np.bincount(A, weights=p, minlength=m)
    sizes = np.bincount(A, minlength=m)
    mass = p[network.arc_src] * network.arc_weight
    cross = A[network.arc_src] != A[network.arc_dst]
    link = np.bincount(A[network.arc_src[cross]], weights=mass[cross], minlength=m)
    tele = tau * (n - sizes) / (n - 1) * P if n > 1 else np.zeros(m)
    q = tele + (1 - tau) * link
    qt = q.sum()
    topo = (
        plogp2(qt)
        - 2 * sum(plogp2(x) for x in q)
        + sum(plogp2(q[i] + P[i]) for i in range(m))
        - sum(plogp2(x) for x in p)
    )
    nu = int(np.max(label_idx)) + 1
    r = np.bincount(A * nu + label_idx, weights=p, minlength=m * nu).reshape(m, nu)
    meta = sum(plogp2(P[i]) - sum(plogp2(x) for x in r[i]) for i in range(m))
    return topo, meta


def brute_force_tm(network, p, label_idx, tau=0.0):
    """(topological, metadata) of every partition, plus the assignments."""
    parts = list(enumerate_partitions(network.n))
    tm = np.array([codelength_tm(network, p, label_idx, A, tau) for A in parts])
    return tm, parts


def _tables_with_marginals(a, b):
    """All nonnegative integer tables with row sums a and column sums b."""
    r, s = len(a), len(b)

    def rows(j, col_left):
        if j == r:
            if all(c == 0 for c in col_left):
                yield []
            return
        for row in _row_fills(a[j], col_left, s, 0):
            rest_left = tuple(col_left[k] - row[k] for k in range(s))
            for tail in rows(j + 1, rest_left):
                yield [row] + tail

    def _row_fills(total, col_left, s, k):
        if k == s - 1:
            if 0 <= total <= col_left[k]:
                yield (total,)
            return
        for v in range(0, min(total, col_left[k]) + 1):
            for rest in _row_fills(total - v, col_left, s, k + 1):
                yield (v,) + rest

    yield from rows(0, tuple(b))


def emi_exhaustive(ax, ay) -> float:
    """Exact E{I} by enumerating all contingency tables (hypergeometric law), nats."""
    ax = np.asarray(ax)
    ay = np.asarray(ay)
    n = ax.size
    a = np.bincount(ax).tolist()
    b = np.bincount(ay).tolist()
    log_base = sum(lgamma(x + 1) for x in a) + sum(lgamma(x + 1) for x in b) - lgamma(n + 1)
    emi = 0.0
    for table in _tables_with_marginals(a, b):
        log_p = log_base - sum(lgamma(c + 1) for row in table for c in row)
        info = 0.0
        for j, row in enumerate(table):
            for k, c in enumerate(row):
                if c > 0:
                    info += c / n * log(c * n / (a[j] * b[k]))
        emi += np.exp(log_p) * info
    return emi


def mi_plugin(ax, ay) -> float:
    """Plug-in mutual information from raw assignments, nats."""
    ax = np.asarray(ax)
    ay = np.asarray(ay)
    n = ax.size
    r = int(ax.max()) + 1
    s = int(ay.max()) + 1
    c = np.zeros((r, s))
    np.add.at(c, (ax, ay), 1)
    a = c.sum(axis=1)
    b = c.sum(axis=0)
    info = 0.0
    for j in range(r):
        for k in range(s):
            if c[j, k] > 0:
                info += c[j, k] / n * log(c[j, k] * n / (a[j] * b[k]))
    return info


def emi_shuffle(ax, ay, shuffles, rng) -> tuple[float, float]:
    """Monte-Carlo E{I}: (mean, standard error of the mean)."""
    ay = np.asarray(ay).copy()
    samples = np.empty(shuffles)
    for t in range(shuffles):
        rng.shuffle(ay)
        samples[t] = mi_plugin(ax, ay)
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(shuffles))


def random_connected_network(rng, n_min=3, n_max=8, weighted=True) -> cm.Network:
    """Random connected undirected network with mixed weights."""
    n = int(rng.integers(n_min, n_max + 1))
    while True:
        density = rng.uniform(0.3, 0.9)
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(iu.size) < density
        if not keep.any():
            continue
        src, dst = iu[keep], ju[keep]
        if weighted:
            w = np.where(rng.random(src.size) < 0.5, 1.0, rng.uniform(0.5, 3.0, src.size))
        else:
            w = np.ones(src.size)
        net = cm.Network(
            n=n,
            directed=False,
            edge_src=src,
            edge_dst=dst,
            edge_weight=w,
            node_names=tuple(str(i) for i in range(n)),
        )
        if net.is_connected():
            return net


def random_metadata(rng, n, n_labels=2) -> cm.MetadataAnnotation:
    labels = rng.integers(0, n_labels, n)
    labels[: min(n_labels, n)] = np.arange(min(n_labels, n))  # every label used
    return cm.MetadataAnnotation.from_labels([str(x) for x in labels])
