"""Numba kernels for the ROBDD engine.

All node storage lives in preallocated numpy arrays owned by
:class:`c4solver.bdd.BddManager`; the kernels here never allocate nodes
beyond that arena.  Node indices 0 and 1 are the FALSE/TRUE terminals.
Freed slots carry ``var == -1``; terminals carry the past-the-end level
sentinel so that every real variable ranks above them.

Kernels return ``-1`` when the pool is exhausted mid-operation.  The
manager then garbage-collects and retries; partially cached sub-results
are either still valid (they describe completed canonical nodes) or
wiped by the post-GC cache clear, so a retried operation recomputes
from a consistent state.
"""
from __future__ import annotations

import numpy as np
from numba import njit

FALSE = 0
TRUE = 1

OP_AND = 0
OP_OR = 1
OP_XOR = 2
OP_DIFF = 3
# exists/and-exists opcodes are derived per registered varset:
#   exists  -> QUANT_BASE + 2 * varset_id
#   andex   -> QUANT_BASE + 2 * varset_id + 1
QUANT_BASE = 4

# state array slots
ST_FREE_HEAD = 0
ST_FREE_COUNT = 1
ST_ALLOC = 2
ST_HIGH_WATER = 3
ST_STAMP = 4

_FNV = 1099511628211


@njit(cache=True)
def _hash3(a, b, c, mask):
    h = (a + 1) * _FNV + (b + 2) * 40503 + (c + 5) * 1442695040888963407
    h ^= h >> 29
    h *= _FNV
    h ^= h >> 32
    return h & mask


@njit(cache=True)
def mk_node(v, lo, hi, var_arr, lo_arr, hi_arr, nxt_arr, ref_arr, uniq_head,
            uniq_mask, state):
    """Find-or-add the canonical node (v, lo, hi); -1 when the pool is full."""
    if lo == hi:
        return lo
    h = _hash3(v, lo, hi, uniq_mask)
    p = uniq_head[h]
    while p >= 0:
        if var_arr[p] == v and lo_arr[p] == lo and hi_arr[p] == hi:
            return p
        p = nxt_arr[p]
    u = state[ST_FREE_HEAD]
    if u < 0:
        return -1
    state[ST_FREE_HEAD] = nxt_arr[u]
    state[ST_FREE_COUNT] -= 1
    state[ST_ALLOC] += 1
    if state[ST_ALLOC] > state[ST_HIGH_WATER]:
        state[ST_HIGH_WATER] = state[ST_ALLOC]
    var_arr[u] = v
    lo_arr[u] = lo
    hi_arr[u] = hi
    ref_arr[u] = 0
    nxt_arr[u] = uniq_head[h]
    uniq_head[h] = u
    return u


@njit(cache=True)
def _cache_get(opk, f, g, c_op, c_f, c_g, c_res, c_mask):
    i = _hash3(opk, f, g, c_mask)
    if c_op[i] == opk and c_f[i] == f and c_g[i] == g:
        return c_res[i]
    return -1


@njit(cache=True)
def _cache_put(opk, f, g, r, c_op, c_f, c_g, c_res, c_mask):
    i = _hash3(opk, f, g, c_mask)
    c_op[i] = opk
    c_f[i] = f
    c_g[i] = g
    c_res[i] = r


@njit(cache=True)
def _terminal_case(op, f, g):
    """Resolve (f op g) without recursion; -1 when undecided."""
    if op == OP_AND:
        if f == FALSE or g == FALSE:
            return FALSE
        if f == TRUE:
            return g
        if g == TRUE:
            return f
        if f == g:
            return f
    elif op == OP_OR:
        if f == TRUE or g == TRUE:
            return TRUE
        if f == FALSE:
            return g
        if g == FALSE:
            return f
        if f == g:
            return f
    elif op == OP_XOR:
        if f == g:
            return FALSE
        if f == FALSE:
            return g
        if g == FALSE:
            return f
    else:  # OP_DIFF: f AND NOT g
        if f == FALSE or g == TRUE or f == g:
            return FALSE
        if g == FALSE:
            return f
    return -1


@njit(cache=True)
def apply_op(op, f, g, var_arr, lo_arr, hi_arr, nxt_arr, ref_arr, uniq_head,
             uniq_mask, c_op, c_f, c_g, c_res, c_mask, state, nlev):
    """Iterative Bryant apply; returns the result node or -1 on exhaustion."""
    depth = nlev + 3
    sf = np.empty(depth, np.int64)
    sg = np.empty(depth, np.int64)
    sstage = np.empty(depth, np.int64)
    sr0 = np.empty(depth, np.int64)
    sp = 0
    sf[0] = f
    sg[0] = g
    sstage[0] = 0
    res = -1
    commutative = op != OP_DIFF
    while sp >= 0:
        ff = sf[sp]
        gg = sg[sp]
        st = sstage[sp]
        if st == 0:
            r = _terminal_case(op, ff, gg)
            if r >= 0:
                res = r
                sp -= 1
                continue
            a, b = ff, gg
            if commutative and a > b:
                a, b = b, a
            r = _cache_get(op, a, b, c_op, c_f, c_g, c_res, c_mask)
            if r >= 0:
                res = r
                sp -= 1
                continue
            vf = var_arr[ff]
            vg = var_arr[gg]
            v = vf if vf < vg else vg
            f0 = lo_arr[ff] if vf == v else ff
            g0 = lo_arr[gg] if vg == v else gg
            sstage[sp] = 1
            sp += 1
            sf[sp] = f0
            sg[sp] = g0
            sstage[sp] = 0
        elif st == 1:
            sr0[sp] = res
            vf = var_arr[ff]
            vg = var_arr[gg]
            v = vf if vf < vg else vg
            f1 = hi_arr[ff] if vf == v else ff
            g1 = hi_arr[gg] if vg == v else gg
            sstage[sp] = 2
            sp += 1
            sf[sp] = f1
            sg[sp] = g1
            sstage[sp] = 0
        else:
            vf = var_arr[ff]
            vg = var_arr[gg]
            v = vf if vf < vg else vg
            u = mk_node(v, sr0[sp], res, var_arr, lo_arr, hi_arr, nxt_arr,
                        ref_arr, uniq_head, uniq_mask, state)
            if u < 0:
                return -1
            a, b = ff, gg
            if commutative and a > b:
                a, b = b, a
            _cache_put(op, a, b, u, c_op, c_f, c_g, c_res, c_mask)
            res = u
            sp -= 1
    return res


@njit(cache=True)
def exists_op(f, qmask, maxq, opk, var_arr, lo_arr, hi_arr, nxt_arr, ref_arr,
              uniq_head, uniq_mask, c_op, c_f, c_g, c_res, c_mask, state,
              nlev):
    """Existentially quantify every level with qmask[level] != 0."""
    depth = nlev + 3
    sf = np.empty(depth, np.int64)
    sstage = np.empty(depth, np.int64)
    sr0 = np.empty(depth, np.int64)
    sp = 0
    sf[0] = f
    sstage[0] = 0
    res = -1
    while sp >= 0:
        ff = sf[sp]
        st = sstage[sp]
        if st == 0:
            if ff <= 1 or var_arr[ff] > maxq:
                res = ff
                sp -= 1
                continue
            r = _cache_get(opk, ff, 0, c_op, c_f, c_g, c_res, c_mask)
            if r >= 0:
                res = r
                sp -= 1
                continue
            sstage[sp] = 1
            sp += 1
            sf[sp] = lo_arr[ff]
            sstage[sp] = 0
        elif st == 1:
            v = var_arr[ff]
            if qmask[v] != 0 and res == TRUE:
                _cache_put(opk, ff, 0, TRUE, c_op, c_f, c_g, c_res, c_mask)
                res = TRUE
                sp -= 1
                continue
            sr0[sp] = res
            sstage[sp] = 2
            sp += 1
            sf[sp] = hi_arr[ff]
            sstage[sp] = 0
        else:
            v = var_arr[ff]
            if qmask[v] != 0:
                r = apply_op(OP_OR, sr0[sp], res, var_arr, lo_arr, hi_arr,
                             nxt_arr, ref_arr, uniq_head, uniq_mask, c_op,
                             c_f, c_g, c_res, c_mask, state, nlev)
            else:
                r = mk_node(v, sr0[sp], res, var_arr, lo_arr, hi_arr, nxt_arr,
                            ref_arr, uniq_head, uniq_mask, state)
            if r < 0:
                return -1
            _cache_put(opk, ff, 0, r, c_op, c_f, c_g, c_res, c_mask)
            res = r
            sp -= 1
    return res


@njit(cache=True)
def and_exists_op(f, g, qmask, maxq, opk, exopk, var_arr, lo_arr, hi_arr,
                  nxt_arr, ref_arr, uniq_head, uniq_mask, c_op, c_f, c_g,
                  c_res, c_mask, state, nlev):
    """Relational product: exists(qmask, f AND g) in one fused pass."""
    depth = nlev + 3
    sf = np.empty(depth, np.int64)
    sg = np.empty(depth, np.int64)
    sstage = np.empty(depth, np.int64)
    sr0 = np.empty(depth, np.int64)
    sp = 0
    sf[0] = f
    sg[0] = g
    sstage[0] = 0
    res = -1
    while sp >= 0:
        ff = sf[sp]
        gg = sg[sp]
        st = sstage[sp]
        if st == 0:
            if ff == FALSE or gg == FALSE:
                res = FALSE
                sp -= 1
                continue
            if ff == TRUE or ff == gg:
                r = exists_op(gg, qmask, maxq, exopk, var_arr, lo_arr, hi_arr,
                              nxt_arr, ref_arr, uniq_head, uniq_mask, c_op,
                              c_f, c_g, c_res, c_mask, state, nlev)
                if r < 0:
                    return -1
                res = r
                sp -= 1
                continue
            if gg == TRUE:
                r = exists_op(ff, qmask, maxq, exopk, var_arr, lo_arr, hi_arr,
                              nxt_arr, ref_arr, uniq_head, uniq_mask, c_op,
                              c_f, c_g, c_res, c_mask, state, nlev)
                if r < 0:
                    return -1
                res = r
                sp -= 1
                continue
            vf = var_arr[ff]
            vg = var_arr[gg]
            v = vf if vf < vg else vg
            if v > maxq:
                # no quantified variable remains below: plain conjunction
                r = apply_op(OP_AND, ff, gg, var_arr, lo_arr, hi_arr, nxt_arr,
                             ref_arr, uniq_head, uniq_mask, c_op, c_f, c_g,
                             c_res, c_mask, state, nlev)
                if r < 0:
                    return -1
                res = r
                sp -= 1
                continue
            a, b = ff, gg
            if a > b:
                a, b = b, a
            r = _cache_get(opk, a, b, c_op, c_f, c_g, c_res, c_mask)
            if r >= 0:
                res = r
                sp -= 1
                continue
            f0 = lo_arr[ff] if vf == v else ff
            g0 = lo_arr[gg] if vg == v else gg
            sstage[sp] = 1
            sp += 1
            sf[sp] = f0
            sg[sp] = g0
            sstage[sp] = 0
        elif st == 1:
            vf = var_arr[ff]
            vg = var_arr[gg]
            v = vf if vf < vg else vg
            if qmask[v] != 0 and res == TRUE:
                a, b = ff, gg
                if a > b:
                    a, b = b, a
                _cache_put(opk, a, b, TRUE, c_op, c_f, c_g, c_res, c_mask)
                res = TRUE
                sp -= 1
                continue
            sr0[sp] = res
            f1 = hi_arr[ff] if vf == v else ff
            g1 = hi_arr[gg] if vg == v else gg
            sstage[sp] = 2
            sp += 1
            sf[sp] = f1
            sg[sp] = g1
            sstage[sp] = 0
        else:
            vf = var_arr[ff]
            vg = var_arr[gg]
            v = vf if vf < vg else vg
            if qmask[v] != 0:
                r = apply_op(OP_OR, sr0[sp], res, var_arr, lo_arr, hi_arr,
                             nxt_arr, ref_arr, uniq_head, uniq_mask, c_op,
                             c_f, c_g, c_res, c_mask, state, nlev)
            else:
                r = mk_node(v, sr0[sp], res, var_arr, lo_arr, hi_arr, nxt_arr,
                            ref_arr, uniq_head, uniq_mask, state)
            if r < 0:
                return -1
            a, b = ff, gg
            if a > b:
                a, b = b, a
            _cache_put(opk, a, b, r, c_op, c_f, c_g, c_res, c_mask)
            res = r
            sp -= 1
    return res


@njit(cache=True)
def eval_node(f, assign, var_arr, lo_arr, hi_arr):
    u = f
    while u > 1:
        if assign[var_arr[u]] != 0:
            u = hi_arr[u]
        else:
            u = lo_arr[u]
    return u


@njit(cache=True)
def node_count(f, lo_arr, hi_arr, visit, stamp, stackbuf):
    """Distinct nodes reachable from f, terminals included."""
    if f <= 1:
        return 1
    cnt = 0
    seen_false = False
    seen_true = False
    top = 0
    stackbuf[0] = f
    visit[f] = stamp
    while top >= 0:
        u = stackbuf[top]
        top -= 1
        cnt += 1
        lo = lo_arr[u]
        hi = hi_arr[u]
        if lo <= 1:
            if lo == 0:
                seen_false = True
            else:
                seen_true = True
        elif visit[lo] != stamp:
            visit[lo] = stamp
            top += 1
            stackbuf[top] = lo
        if hi <= 1:
            if hi == 0:
                seen_false = True
            else:
                seen_true = True
        elif visit[hi] != stamp:
            visit[hi] = stamp
            top += 1
            stackbuf[top] = hi
    if seen_false:
        cnt += 1
    if seen_true:
        cnt += 1
    return cnt


_I64_MAX = np.int64(np.iinfo(np.int64).max)


@njit(cache=True)
def _weighted(x, base_pos, lvlpos, var_arr, val64, n_in_set):
    """val(x) * 2^(pos(x) - base_pos) with overflow signalling (-1)."""
    if x == FALSE:
        return 0
    if x == TRUE:
        k = n_in_set - base_pos
        if k >= 63:
            return -1
        return np.int64(1) << k
    v = val64[x]
    if v == 0:
        return 0
    k = lvlpos[var_arr[x]] - base_pos
    if k >= 63 or v > (_I64_MAX >> k):
        return -1
    return v << k


@njit(cache=True)
def satcount64(f, lvlpos, n_in_set, var_arr, lo_arr, hi_arr, visit, val64,
               stamp, stackbuf, nlev):
    """Count satisfying assignments over the varset described by lvlpos.

    Returns (code, value): code 0 ok, 1 int64 overflow (caller falls back
    to bignum), 2 the BDD tests a variable outside the varset.
    """
    if f == FALSE:
        return 0, 0
    if f == TRUE:
        if n_in_set >= 63:
            return 1, 0
        return 0, np.int64(1) << np.int64(n_in_set)
    n = topo_postorder(f, lo_arr, hi_arr, visit, stamp, stackbuf, nlev)
    for i in range(n):
        u = stackbuf[i]
        pv = lvlpos[var_arr[u]]
        if pv < 0:
            return 2, 0
        a = _weighted(lo_arr[u], pv + 1, lvlpos, var_arr, val64, n_in_set)
        b = _weighted(hi_arr[u], pv + 1, lvlpos, var_arr, val64, n_in_set)
        if a < 0 or b < 0 or a > _I64_MAX - b:
            return 1, 0
        val64[u] = a + b
    r = _weighted(f, 0, lvlpos, var_arr, val64, n_in_set)
    if r < 0:
        return 1, 0
    return 0, r


@njit(cache=True)
def support_levels(f, var_arr, lo_arr, hi_arr, visit, stamp, stackbuf, out):
    """Set out[level] = 1 for every level tested by f."""
    if f <= 1:
        return
    top = 0
    stackbuf[0] = f
    visit[f] = stamp
    while top >= 0:
        u = stackbuf[top]
        top -= 1
        out[var_arr[u]] = 1
        lo = lo_arr[u]
        hi = hi_arr[u]
        if lo > 1 and visit[lo] != stamp:
            visit[lo] = stamp
            top += 1
            stackbuf[top] = lo
        if hi > 1 and visit[hi] != stamp:
            visit[hi] = stamp
            top += 1
            stackbuf[top] = hi


@njit(cache=True)
def collect(var_arr, lo_arr, hi_arr, nxt_arr, ref_arr, uniq_head, uniq_mask,
            state, mark, stackbuf, capacity):
    """Mark from externally referenced roots, sweep the rest to the free list.

    Rebuilds the unique-table chains from scratch (deterministic: arena
    order), returns the number of slots freed by this pass.
    """
    for i in range(capacity):
        mark[i] = 0
    mark[0] = 1
    mark[1] = 1
    top = -1
    for u in range(2, capacity):
        if ref_arr[u] > 0 and var_arr[u] >= 0 and mark[u] == 0:
            mark[u] = 1
            top += 1
            stackbuf[top] = u
            while top >= 0:
                x = stackbuf[top]
                top -= 1
                lo = lo_arr[x]
                if mark[lo] == 0:
                    mark[lo] = 1
                    if lo > 1:
                        top += 1
                        stackbuf[top] = lo
                hi = hi_arr[x]
                if mark[hi] == 0:
                    mark[hi] = 1
                    if hi > 1:
                        top += 1
                        stackbuf[top] = hi
    for i in range(uniq_mask + 1):
        uniq_head[i] = -1
    free_head = np.int64(-1)
    free_count = np.int64(0)
    freed = np.int64(0)
    for u in range(capacity - 1, 1, -1):
        if mark[u] != 0:
            h = _hash3(var_arr[u], lo_arr[u], hi_arr[u], uniq_mask)
            nxt_arr[u] = uniq_head[h]
            uniq_head[h] = u
        else:
            if var_arr[u] >= 0:
                freed += 1
            var_arr[u] = -1
            ref_arr[u] = 0
            nxt_arr[u] = free_head
            free_head = u
            free_count += 1
    state[ST_FREE_HEAD] = free_head
    state[ST_FREE_COUNT] = free_count
    state[ST_ALLOC] = capacity - free_count
    return freed


@njit(cache=True)
def topo_postorder(f, lo_arr, hi_arr, visit, stamp, out, nlev):
    """Children-before-parents ordering of internal nodes; returns count.

    Deterministic (low subtree first), so serialized files are bit-stable.
    The DFS frame stack is bounded by the level count because variables
    strictly increase along every path.
    """
    if f <= 1:
        return 0
    n = 0
    su = np.empty(nlev + 3, np.int64)
    sstage = np.empty(nlev + 3, np.int64)
    sp = 0
    su[0] = f
    sstage[0] = 0
    visit[f] = stamp
    while sp >= 0:
        u = su[sp]
        st = sstage[sp]
        if st == 0:
            sstage[sp] = 1
            lo = lo_arr[u]
            if lo > 1 and visit[lo] != stamp:
                visit[lo] = stamp
                sp += 1
                su[sp] = lo
                sstage[sp] = 0
        elif st == 1:
            sstage[sp] = 2
            hi = hi_arr[u]
            if hi > 1 and visit[hi] != stamp:
                visit[hi] = stamp
                sp += 1
                su[sp] = hi
                sstage[sp] = 0
        else:
            out[n] = u
            n += 1
            sp -= 1
    return n


@njit(cache=True)
def load_nodes(vs, ls, hs, node_map, nlev, var_arr, lo_arr, hi_arr, nxt_arr,
               ref_arr, uniq_head, uniq_mask, state):
    """Insert serialized records (children-first ids) into the arena.

    Returns the arena index of the last record, -1 on pool exhaustion,
    -2 on a structurally invalid record.
    """
    n = vs.shape[0]
    r = np.int64(-1)
    for i in range(n):
        v = np.int64(vs[i])
        lraw = np.int64(ls[i])
        hraw = np.int64(hs[i])
        if v < 0 or v >= nlev or lraw >= i + 2 or hraw >= i + 2:
            return -2
        lo = node_map[lraw]
        hi = node_map[hraw]
        if lo == hi:
            return -2
        if lo > 1 and var_arr[lo] <= v:
            return -2
        if hi > 1 and var_arr[hi] <= v:
            return -2
        r = mk_node(v, lo, hi, var_arr, lo_arr, hi_arr, nxt_arr, ref_arr,
                    uniq_head, uniq_mask, state)
        if r < 0:
            return -1
        node_map[i + 2] = r
    return r
