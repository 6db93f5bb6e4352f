"""Hot inner loops of the partition search.

Every function here is written in nopython-compatible numpy style and
compiled with numba's ``@njit`` on import.  Setting the environment variable
``CONTENTMAP_NO_NUMBA=1`` (or running without numba installed) selects the
pure-Python/numpy fallback path instead; both paths execute the same source.

The working representation is a flow graph over (possibly aggregated) nodes:
CSR out-arcs and in-arcs carrying stationary flow masses, per-node self-loop
mass, visit rate, original-node count, metadata flow vector, and the summed
x*log2(x) of constituent leaf visit rates.  Per-module aggregates mirror the
additive quantities so codelengths and move deltas are exact at every
aggregation level.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = os.environ.get("CONTENTMAP_NO_NUMBA", "").strip().lower()
_DISABLED = _ENV_FLAG in {"1", "true", "yes"}

try:
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA and not _DISABLED


def _maybe_jit(fn):
    if USING_NUMBA:
        return _njit(cache=True)(fn)
    return fn


_STATE_MASK = 0xFFFFFFFFFFFFFFFF


def as_rng_state(x) -> np.uint64:
    """Normalize a shuffle state to uint64 (numba may box it signed)."""
    return np.uint64(int(x) & _STATE_MASK)


def _plogp_impl(x):
    # 0*log(0) == 0 by convention; tiny negatives are float residue
    if x <= 0.0:
        return 0.0
    return x * np.log2(x)


plogp = _maybe_jit(_plogp_impl)


def _exit_rate_impl(flow, count, link_out, tau, n_orig):
    # per-step chance the surfer leaves a module with total visit rate
    # `flow`, `count` original nodes and `link_out` outbound link flow
    if count == 0:
        return 0.0
    if n_orig > 1:
        tele = tau * ((n_orig - count) / (n_orig - 1.0)) * flow
    else:
        tele = 0.0
    return tele + (1.0 - tau) * link_out


exit_rate = _maybe_jit(_exit_rate_impl)


def _rng_next_impl(state):
    # xorshift64; identical integer stream under numba and plain numpy
    state ^= state << np.uint64(13)
    state ^= state >> np.uint64(7)
    state ^= state << np.uint64(17)
    return state


_rng_next = _maybe_jit(_rng_next_impl)


def _shuffle_impl(order, state):
    n = order.shape[0]
    for i in range(n - 1, 0, -1):
        state = _rng_next(state)
        j = int(state % np.uint64(i + 1))
        tmp = order[i]
        order[i] = order[j]
        order[j] = tmp
    return state


_shuffle = _maybe_jit(_shuffle_impl)


def _partition_terms_impl(
    mod_flow, mod_count, mod_to, mod_internal, mod_meta, leaf_total, tau, n_orig
):
    """Exact codelength terms of the current module arrays.

    Returns (inter_bits, intra_bits, meta_bits_unweighted, q_total).
    """
    m_cap = mod_flow.shape[0]
    nu = mod_meta.shape[1]
    q_total = 0.0
    sum_plogp_q = 0.0
    sum_plogp_qp = 0.0
    meta_bits = 0.0
    for i in range(m_cap):
        if mod_count[i] == 0:
            continue
        q = exit_rate(mod_flow[i], mod_count[i], mod_to[i] - mod_internal[i], tau, n_orig)
        q_total += q
        sum_plogp_q += plogp(q)
        sum_plogp_qp += plogp(q + mod_flow[i])
        meta_i = plogp(mod_flow[i])
        for u in range(nu):
            meta_i -= plogp(mod_meta[i, u])
        meta_bits += meta_i
    inter = plogp(q_total) - sum_plogp_q
    intra = sum_plogp_qp - sum_plogp_q - leaf_total
    return inter, intra, meta_bits, q_total


partition_terms = _maybe_jit(_partition_terms_impl)


def _delta_move_impl(
    p_v,
    c_v,
    self_v,
    totout_v,
    meta_v,
    P_a,
    n_a,
    TO_a,
    IN_a,
    out_va,
    in_va,
    meta_a,
    P_b,
    n_b,
    TO_b,
    IN_b,
    out_vb,
    in_vb,
    meta_b,
    q_total,
    tau,
    n_orig,
    eta,
):
    """Codelength change of moving node v from module a to module b.

    `out_v*`/`in_v*` are v's arc flow masses into/out of the two modules
    (self mass excluded).  Module b may be empty.
    """
    nu = meta_v.shape[0]
    q_a = exit_rate(P_a, n_a, TO_a - IN_a, tau, n_orig)
    q_b = exit_rate(P_b, n_b, TO_b - IN_b, tau, n_orig)

    n_a2 = n_a - c_v
    if n_a2 == 0:
        P_a2 = 0.0
        q_a2 = 0.0
    else:
        P_a2 = P_a - p_v
        TO_a2 = TO_a - totout_v
        IN_a2 = IN_a - out_va - in_va - self_v
        q_a2 = exit_rate(P_a2, n_a2, TO_a2 - IN_a2, tau, n_orig)

    P_b2 = P_b + p_v
    n_b2 = n_b + c_v
    TO_b2 = TO_b + totout_v
    IN_b2 = IN_b + out_vb + in_vb + self_v
    q_b2 = exit_rate(P_b2, n_b2, TO_b2 - IN_b2, tau, n_orig)

    q_total2 = q_total - q_a - q_b + q_a2 + q_b2

    d_topo = (
        plogp(q_total2)
        - plogp(q_total)
        - 2.0 * (plogp(q_a2) + plogp(q_b2) - plogp(q_a) - plogp(q_b))
        + plogp(q_a2 + P_a2)
        + plogp(q_b2 + P_b2)
        - plogp(q_a + P_a)
        - plogp(q_b + P_b)
    )
    if eta == 0.0:
        return d_topo
    d_meta = plogp(P_a2) - plogp(P_a) + plogp(P_b2) - plogp(P_b)
    for u in range(nu):
        mv = meta_v[u]
        if mv != 0.0:
            ra = meta_a[u]
            rb = meta_b[u]
            ra2 = ra - mv
            if n_a2 == 0:
                ra2 = 0.0
            d_meta -= plogp(ra2) - plogp(ra) + plogp(rb + mv) - plogp(rb)
    return d_topo + eta * d_meta


delta_move = _maybe_jit(_delta_move_impl)


def _node_module_masses_impl(
    v, a, b, out_indptr, out_nbr, out_mass, in_indptr, in_nbr, in_mass, assign
):
    """Flow mass on v's arcs into modules a and b: (out_va, in_va, out_vb, in_vb)."""
    out_va = 0.0
    out_vb = 0.0
    in_va = 0.0
    in_vb = 0.0
    for e in range(out_indptr[v], out_indptr[v + 1]):
        mod = assign[out_nbr[e]]
        if mod == a:
            out_va += out_mass[e]
        elif mod == b:
            out_vb += out_mass[e]
    for e in range(in_indptr[v], in_indptr[v + 1]):
        mod = assign[in_nbr[e]]
        if mod == a:
            in_va += in_mass[e]
        elif mod == b:
            in_vb += in_mass[e]
    return out_va, in_va, out_vb, in_vb


node_module_masses = _maybe_jit(_node_module_masses_impl)


def _move_delta_single_impl(
    v,
    b,
    out_indptr,
    out_nbr,
    out_mass,
    in_indptr,
    in_nbr,
    in_mass,
    self_mass,
    node_flow,
    node_count,
    meta_flow,
    node_out_total,
    assign,
    mod_flow,
    mod_count,
    mod_to,
    mod_internal,
    mod_meta,
    q_total,
    tau,
    n_orig,
    eta,
):
    """Standalone single-move delta against the current module arrays."""
    a = assign[v]
    if a == b:
        return 0.0
    out_va, in_va, out_vb, in_vb = node_module_masses(
        v, a, b, out_indptr, out_nbr, out_mass, in_indptr, in_nbr, in_mass, assign
    )
    return delta_move(
        node_flow[v],
        node_count[v],
        self_mass[v],
        node_out_total[v],
        meta_flow[v],
        mod_flow[a],
        mod_count[a],
        mod_to[a],
        mod_internal[a],
        out_va,
        in_va,
        mod_meta[a],
        mod_flow[b],
        mod_count[b],
        mod_to[b],
        mod_internal[b],
        out_vb,
        in_vb,
        mod_meta[b],
        q_total,
        tau,
        n_orig,
        eta,
    )


move_delta_single = _maybe_jit(_move_delta_single_impl)


def _apply_move_impl(
    v,
    b,
    out_indptr,
    out_nbr,
    out_mass,
    in_indptr,
    in_nbr,
    in_mass,
    self_mass,
    node_flow,
    node_count,
    meta_flow,
    node_out_total,
    assign,
    mod_flow,
    mod_count,
    mod_to,
    mod_internal,
    mod_meta,
    q_total,
    tau,
    n_orig,
):
    """Mutate assignment and module arrays for the move; returns new q_total."""
    a = assign[v]
    if a == b:
        return q_total
    nu = meta_flow.shape[1]
    out_va, in_va, out_vb, in_vb = node_module_masses(
        v, a, b, out_indptr, out_nbr, out_mass, in_indptr, in_nbr, in_mass, assign
    )
    q_a = exit_rate(mod_flow[a], mod_count[a], mod_to[a] - mod_internal[a], tau, n_orig)
    q_b = exit_rate(mod_flow[b], mod_count[b], mod_to[b] - mod_internal[b], tau, n_orig)

    mod_count[a] -= node_count[v]
    mod_count[b] += node_count[v]
    if mod_count[a] == 0:
        # snap float residue so empty modules contribute exactly zero
        mod_flow[a] = 0.0
        mod_to[a] = 0.0
        mod_internal[a] = 0.0
        for u in range(nu):
            mod_meta[a, u] = 0.0
    else:
        mod_flow[a] -= node_flow[v]
        mod_to[a] -= node_out_total[v]
        mod_internal[a] -= out_va + in_va + self_mass[v]
        for u in range(nu):
            mod_meta[a, u] -= meta_flow[v, u]
    mod_flow[b] += node_flow[v]
    mod_to[b] += node_out_total[v]
    mod_internal[b] += out_vb + in_vb + self_mass[v]
    for u in range(nu):
        mod_meta[b, u] += meta_flow[v, u]
    assign[v] = b

    q_a2 = exit_rate(mod_flow[a], mod_count[a], mod_to[a] - mod_internal[a], tau, n_orig)
    q_b2 = exit_rate(mod_flow[b], mod_count[b], mod_to[b] - mod_internal[b], tau, n_orig)
    return q_total - q_a - q_b + q_a2 + q_b2


apply_move = _maybe_jit(_apply_move_impl)


def _local_move_pass_impl(
    out_indptr,
    out_nbr,
    out_mass,
    in_indptr,
    in_nbr,
    in_mass,
    self_mass,
    node_flow,
    node_count,
    meta_flow,
    node_out_total,
    assign,
    mod_flow,
    mod_count,
    mod_to,
    mod_internal,
    mod_meta,
    tau,
    n_orig,
    eta,
    tol,
    rng_state,
):
    """Sweep nodes in random order, applying best strictly-improving moves.

    Candidate targets are the modules adjacent to the node by an arc plus one
    currently-empty module; sweeps repeat until one completes without a move.
    Ties within `tol` keep the current module, otherwise the lowest module id
    wins.  Returns (moves, improvement_bits, rng_state).
    """
    n = assign.shape[0]

    order = np.arange(n)
    cand = np.empty(n + 1, dtype=np.int64)
    cand_delta = np.empty(n + 1, dtype=np.float64)
    acc_out = np.zeros(n, dtype=np.float64)
    acc_in = np.zeros(n, dtype=np.float64)
    seen = np.full(n, -1, dtype=np.int64)

    # empty-module pool; top of stack serves as the fresh-module candidate
    free_stack = np.empty(n, dtype=np.int64)
    free_top = 0
    for i in range(n - 1, -1, -1):
        if mod_count[i] == 0:
            free_stack[free_top] = i
            free_top += 1

    q_total = 0.0
    for i in range(n):
        q_total += exit_rate(
            mod_flow[i], mod_count[i], mod_to[i] - mod_internal[i], tau, n_orig
        )

    stamp = 0
    total_moves = 0
    total_delta = 0.0
    while True:
        rng_state = _shuffle(order, rng_state)
        sweep_moves = 0
        for oi in range(n):
            v = order[oi]
            a = assign[v]

            stamp += 1
            ncand = 0
            for e in range(out_indptr[v], out_indptr[v + 1]):
                mod = assign[out_nbr[e]]
                if seen[mod] != stamp:
                    seen[mod] = stamp
                    acc_out[mod] = 0.0
                    acc_in[mod] = 0.0
                    cand[ncand] = mod
                    ncand += 1
                acc_out[mod] += out_mass[e]
            for e in range(in_indptr[v], in_indptr[v + 1]):
                mod = assign[in_nbr[e]]
                if seen[mod] != stamp:
                    seen[mod] = stamp
                    acc_out[mod] = 0.0
                    acc_in[mod] = 0.0
                    cand[ncand] = mod
                    ncand += 1
                acc_in[mod] += in_mass[e]
            # fresh empty module, unless v is already alone in its module
            if free_top > 0 and mod_count[a] > node_count[v]:
                mod = free_stack[free_top - 1]
                if seen[mod] != stamp:
                    seen[mod] = stamp
                    acc_out[mod] = 0.0
                    acc_in[mod] = 0.0
                    cand[ncand] = mod
                    ncand += 1

            if seen[a] == stamp:
                out_va = acc_out[a]
                in_va = acc_in[a]
            else:
                out_va = 0.0
                in_va = 0.0

            best_delta = 0.0
            have_candidate = False
            for ci in range(ncand):
                b = cand[ci]
                if b == a:
                    cand_delta[ci] = 0.0
                    continue
                d = delta_move(
                    node_flow[v],
                    node_count[v],
                    self_mass[v],
                    node_out_total[v],
                    meta_flow[v],
                    mod_flow[a],
                    mod_count[a],
                    mod_to[a],
                    mod_internal[a],
                    out_va,
                    in_va,
                    mod_meta[a],
                    mod_flow[b],
                    mod_count[b],
                    mod_to[b],
                    mod_internal[b],
                    acc_out[b],
                    acc_in[b],
                    mod_meta[b],
                    q_total,
                    tau,
                    n_orig,
                    eta,
                )
                cand_delta[ci] = d
                if not have_candidate or d < best_delta:
                    best_delta = d
                    have_candidate = True
            if not have_candidate or best_delta > -tol:
                continue
            # lowest module id among ties with the best improvement
            best_b = -1
            for ci in range(ncand):
                b = cand[ci]
                if b == a:
                    continue
                if cand_delta[ci] <= best_delta + tol and (best_b < 0 or b < best_b):
                    best_b = b

            was_empty = mod_count[best_b] == 0
            q_total = apply_move(
                v,
                best_b,
                out_indptr,
                out_nbr,
                out_mass,
                in_indptr,
                in_nbr,
                in_mass,
                self_mass,
                node_flow,
                node_count,
                meta_flow,
                node_out_total,
                assign,
                mod_flow,
                mod_count,
                mod_to,
                mod_internal,
                mod_meta,
                q_total,
                tau,
                n_orig,
            )
            if was_empty:
                free_top -= 1
            if mod_count[a] == 0:
                free_stack[free_top] = a
                free_top += 1
            sweep_moves += 1
            total_delta += best_delta
        total_moves += sweep_moves
        if sweep_moves == 0:
            break
    return total_moves, total_delta, rng_state


local_move_pass = _maybe_jit(_local_move_pass_impl)
