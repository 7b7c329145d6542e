"""ROBDD manager with a preallocated node arena and manual refcounting.

Every operation returns a node handle (plain ``int`` index into the
arena) that the caller owns: the handle carries one external reference
and must be released with :meth:`BddManager.deref` once retired.  Only
externally referenced roots (and everything reachable from them)
survive garbage collection; reclamation is deferred until the pool runs
dry, which keeps ref/deref O(1).

Managers are single-threaded.  Distinct managers share nothing.
"""
from __future__ import annotations

import numpy as np

from . import _bddops as ops
from .errors import (AllocationError, DependsOutsideVarSet, DoubleFree,
                     PoolExhausted)

FALSE = ops.FALSE
TRUE = ops.TRUE

OP_AND = ops.OP_AND
OP_OR = ops.OP_OR
OP_XOR = ops.OP_XOR
OP_DIFF = ops.OP_DIFF

_OP_NAMES = {"and": OP_AND, "or": OP_OR, "xor": OP_XOR, "diff": OP_DIFF}

NodeRef = int


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


class VarSet:
    """An immutable, strictly increasing set of variable levels.

    Registered with a manager so quantification results can be memoized
    per set; holds the level->position table used by satcount.
    """

    __slots__ = ("levels", "vsid", "qmask", "maxq", "lvlpos", "exists_opk",
                 "andex_opk")

    def __init__(self, levels: tuple[int, ...], vsid: int, num_vars: int):
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("varset levels must be strictly increasing")
        if levels and (levels[0] < 0 or levels[-1] >= num_vars):
            raise ValueError("varset level out of range")
        self.levels = levels
        self.vsid = vsid
        self.qmask = np.zeros(num_vars + 1, np.uint8)
        self.lvlpos = np.full(num_vars + 1, -1, np.int64)
        for pos, lvl in enumerate(levels):
            self.qmask[lvl] = 1
            self.lvlpos[lvl] = pos
        self.lvlpos[num_vars] = len(levels)
        self.maxq = levels[-1] if levels else -1
        self.exists_opk = ops.QUANT_BASE + 2 * vsid
        self.andex_opk = ops.QUANT_BASE + 2 * vsid + 1

    def __len__(self) -> int:
        return len(self.levels)

    def __repr__(self) -> str:
        return f"VarSet{self.levels}"


class _Scope:
    """Tracks temporary handles and derefs them on exit."""

    def __init__(self, mgr: "BddManager"):
        self._mgr = mgr
        self._handles: list[int] = []

    def __call__(self, node: int) -> int:
        self._handles.append(node)
        return node

    def keep(self, node: int) -> int:
        """Detach one tracked handle so it survives the scope."""
        self._handles.remove(node)
        return node

    def __enter__(self) -> "_Scope":
        return self

    def __exit__(self, *exc) -> None:
        for h in self._handles:
            self._mgr.deref(h)
        self._handles.clear()


class BddManager:
    """Fixed-capacity ROBDD store: unique table, op cache, free list."""

    def __init__(self, capacity: int, num_vars: int,
                 cache_ratio: int = 4) -> None:
        if capacity < 2:
            raise ValueError("capacity must be at least 2 (the terminals)")
        if num_vars < 1:
            raise ValueError("num_vars must be at least 1")
        if capacity >= 2**31:
            raise ValueError("capacity must fit 32-bit node indices")
        self.capacity = int(capacity)
        self.num_vars = int(num_vars)
        uniq_size = _next_pow2(self.capacity)
        cache_size = max(1 << 12, _next_pow2(self.capacity // cache_ratio))
        try:
            self._var = np.empty(self.capacity, np.int32)
            self._lo = np.empty(self.capacity, np.int32)
            self._hi = np.empty(self.capacity, np.int32)
            self._nxt = np.empty(self.capacity, np.int32)
            self._ref = np.zeros(self.capacity, np.int32)
            self._uniq = np.full(uniq_size, -1, np.int32)
            self._c_op = np.full(cache_size, -1, np.int32)
            self._c_f = np.empty(cache_size, np.int32)
            self._c_g = np.empty(cache_size, np.int32)
            self._c_res = np.empty(cache_size, np.int32)
            self._visit = np.zeros(self.capacity, np.int32)
            self._val64 = np.zeros(self.capacity, np.int64)
            self._mark = np.zeros(self.capacity, np.uint8)
            self._stack = np.empty(self.capacity + 2, np.int64)
        except MemoryError as e:
            bytes_needed = self.capacity * 33 + uniq_size * 4 + cache_size * 16
            raise AllocationError(
                f"cannot preallocate node pool: ~{bytes_needed} bytes "
                f"requested for capacity={self.capacity}") from e
        self._uniq_mask = uniq_size - 1
        self._c_mask = cache_size - 1
        self._state = np.zeros(8, np.int64)
        self._stamp = 0
        self.gc_runs = 0
        self.gc_seconds = 0.0
        self._varsets: dict[tuple[int, ...], VarSet] = {}
        # terminals occupy slots 0/1; their level is the past-the-end
        # sentinel so every real variable orders above them
        for t in (0, 1):
            self._var[t] = self.num_vars
            self._lo[t] = t
            self._hi[t] = t
            self._nxt[t] = -1
        # free list over slots [2, capacity), ascending allocation order
        for u in range(2, self.capacity):
            self._nxt[u] = u + 1 if u + 1 < self.capacity else -1
            self._var[u] = -1
        self._state[ops.ST_FREE_HEAD] = 2 if self.capacity > 2 else -1
        self._state[ops.ST_FREE_COUNT] = self.capacity - 2
        self._state[ops.ST_ALLOC] = 2
        self._state[ops.ST_HIGH_WATER] = 2
        self._arena = (self._var, self._lo, self._hi, self._nxt, self._ref,
                       self._uniq, self._uniq_mask)
        self._cachea = (self._c_op, self._c_f, self._c_g, self._c_res,
                        self._c_mask)

    # ------------------------------------------------------------------
    # bookkeeping

    @property
    def free_count(self) -> int:
        return int(self._state[ops.ST_FREE_COUNT])

    @property
    def allocated(self) -> int:
        return int(self._state[ops.ST_ALLOC])

    @property
    def high_water(self) -> int:
        return int(self._state[ops.ST_HIGH_WATER])

    def live_count(self) -> int:
        """Nodes reachable from externally referenced roots (plus terminals)."""
        roots = [int(u) for u in np.nonzero(self._ref[2:] > 0)[0] + 2
                 if self._var[u] >= 0]
        seen = set()
        for r in roots:
            stack = [r]
            while stack:
                u = stack.pop()
                if u in seen or u <= 1:
                    continue
                seen.add(u)
                stack.append(int(self._lo[u]))
                stack.append(int(self._hi[u]))
        return len(seen) + 2

    def _next_stamp(self) -> int:
        self._stamp += 1
        if self._stamp >= 2**31 - 2:
            self._visit.fill(0)
            self._stamp = 1
        return self._stamp

    def _is_allocated(self, f: int) -> bool:
        return 0 <= f < self.capacity and (f <= 1 or self._var[f] >= 0)

    def _check_node(self, f: int) -> None:
        if not isinstance(f, (int, np.integer)) or not self._is_allocated(f):
            raise ValueError(f"not a live node handle: {f!r}")

    # ------------------------------------------------------------------
    # reference counting and garbage collection

    def ref(self, f: NodeRef) -> NodeRef:
        self._check_node(f)
        self._ref[f] += 1
        return f

    def deref(self, f: NodeRef) -> None:
        self._check_node(f)
        if self._ref[f] <= 0:
            raise DoubleFree(f"deref of node {f} with refcount 0")
        self._ref[f] -= 1

    def collect_garbage(self) -> int:
        """Sweep every node unreachable from referenced roots; returns count."""
        import time
        t0 = time.perf_counter()
        freed = int(ops.collect(self._var, self._lo, self._hi, self._nxt,
                                self._ref, self._uniq, self._uniq_mask,
                                self._state, self._mark, self._stack,
                                self.capacity))
        self._c_op.fill(-1)
        self.gc_runs += 1
        self.gc_seconds += time.perf_counter() - t0
        return freed

    def _retry(self, attempt):
        """Run attempt(); on pool exhaustion GC and retry while progress."""
        prev_free = -1
        while True:
            r = int(attempt())
            if r >= 0:
                return r
            self.collect_garbage()
            free_now = self.free_count
            if free_now <= prev_free:
                raise PoolExhausted(
                    f"node pool exhausted: capacity={self.capacity}, "
                    f"high water={self.high_water}")
            prev_free = free_now

    # ------------------------------------------------------------------
    # construction

    def mk_var(self, level: int) -> NodeRef:
        """Canonical single-variable node; the caller owns one reference."""
        if not 0 <= level < self.num_vars:
            raise ValueError(f"variable level {level} out of range")
        u = self._retry(lambda: ops.mk_node(level, FALSE, TRUE, *self._arena,
                                            self._state))
        return self.ref(u)

    def cube(self, literals) -> NodeRef:
        """Conjunction of literals given as (level, polarity) pairs."""
        lits = sorted(literals, key=lambda t: -t[0])
        seen = set()
        for lvl, _ in lits:
            if not 0 <= lvl < self.num_vars:
                raise ValueError(f"variable level {lvl} out of range")
            if lvl in seen:
                raise ValueError(f"duplicate level {lvl} in cube")
            seen.add(lvl)

        def attempt():
            acc = TRUE
            for lvl, pol in lits:
                if pol:
                    acc = ops.mk_node(lvl, FALSE, acc, *self._arena,
                                      self._state)
                else:
                    acc = ops.mk_node(lvl, acc, FALSE, *self._arena,
                                      self._state)
                if acc < 0:
                    return -1
            return acc

        return self.ref(self._retry(attempt))

    def equiv_var(self, a: int, b: int) -> NodeRef:
        """BDD of (var a <-> var b) for two distinct levels."""
        if a == b:
            raise ValueError("equiv_var needs two distinct levels")
        lo_lvl, hi_lvl = (a, b) if a < b else (b, a)

        def attempt():
            same1 = ops.mk_node(hi_lvl, FALSE, TRUE, *self._arena,
                                self._state)
            if same1 < 0:
                return -1
            same0 = ops.mk_node(hi_lvl, TRUE, FALSE, *self._arena,
                                self._state)
            if same0 < 0:
                return -1
            return ops.mk_node(lo_lvl, same0, same1, *self._arena,
                               self._state)

        return self.ref(self._retry(attempt))

    # ------------------------------------------------------------------
    # boolean operations (results owned by the caller)

    def apply(self, op, f: NodeRef, g: NodeRef) -> NodeRef:
        if isinstance(op, str):
            op = _OP_NAMES[op.lower()]
        if op not in (OP_AND, OP_OR, OP_XOR, OP_DIFF):
            raise ValueError(f"unknown operation {op!r}")
        self._check_node(f)
        self._check_node(g)
        u = self._retry(lambda: ops.apply_op(op, f, g, *self._arena,
                                             *self._cachea, self._state,
                                             self.num_vars))
        return self.ref(u)

    def and_(self, f, g):
        return self.apply(OP_AND, f, g)

    def or_(self, f, g):
        return self.apply(OP_OR, f, g)

    def xor_(self, f, g):
        return self.apply(OP_XOR, f, g)

    def diff(self, f, g):
        return self.apply(OP_DIFF, f, g)

    def not_(self, f: NodeRef) -> NodeRef:
        self._check_node(f)
        u = self._retry(lambda: ops.apply_op(OP_XOR, f, TRUE, *self._arena,
                                             *self._cachea, self._state,
                                             self.num_vars))
        return self.ref(u)

    def varset(self, levels) -> VarSet:
        key = tuple(int(v) for v in levels)
        vs = self._varsets.get(key)
        if vs is None:
            vs = VarSet(key, len(self._varsets), self.num_vars)
            self._varsets[key] = vs
        return vs

    def exists(self, f: NodeRef, vars_: VarSet) -> NodeRef:
        self._check_node(f)
        u = self._retry(lambda: ops.exists_op(
            f, vars_.qmask, vars_.maxq, vars_.exists_opk, *self._arena,
            *self._cachea, self._state, self.num_vars))
        return self.ref(u)

    def and_exists(self, f: NodeRef, g: NodeRef, vars_: VarSet) -> NodeRef:
        self._check_node(f)
        self._check_node(g)
        u = self._retry(lambda: ops.and_exists_op(
            f, g, vars_.qmask, vars_.maxq, vars_.andex_opk, vars_.exists_opk,
            *self._arena, *self._cachea, self._state, self.num_vars))
        return self.ref(u)

    # ------------------------------------------------------------------
    # queries (never allocate)

    def eval(self, f: NodeRef, assignment) -> bool:
        self._check_node(f)
        a = np.ascontiguousarray(assignment, dtype=np.uint8)
        if a.shape[0] < self.num_vars:
            raise ValueError("assignment shorter than the variable count")
        return int(ops.eval_node(f, a, self._var, self._lo, self._hi)) == TRUE

    def node_count(self, f: NodeRef) -> int:
        self._check_node(f)
        return int(ops.node_count(f, self._lo, self._hi, self._visit,
                                  self._next_stamp(), self._stack))

    def satcount(self, f: NodeRef, vars_: VarSet) -> int:
        """Number of satisfying assignments over exactly vars_ (exact int)."""
        self._check_node(f)
        code, val = ops.satcount64(f, vars_.lvlpos, len(vars_), self._var,
                                   self._lo, self._hi, self._visit,
                                   self._val64, self._next_stamp(),
                                   self._stack, self.num_vars)
        code = int(code)
        if code == 0:
            return int(val)
        if code == 2:
            raise DependsOutsideVarSet(
                f"node {f} tests a variable outside {vars_}")
        return self._satcount_big(f, vars_)

    def _satcount_big(self, f: NodeRef, vars_: VarSet) -> int:
        """Arbitrary-precision fallback for wide varsets."""
        n = len(vars_)
        lvlpos = vars_.lvlpos
        if f == FALSE:
            return 0
        if f == TRUE:
            return 1 << n
        memo: dict[int, int] = {}
        stack = [f]
        while stack:
            u = stack[-1]
            if u in memo:
                stack.pop()
                continue
            lo, hi = int(self._lo[u]), int(self._hi[u])
            pending = [c for c in (lo, hi) if c > 1 and c not in memo]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            pv = int(lvlpos[self._var[u]])
            if pv < 0:
                raise DependsOutsideVarSet(
                    f"node {f} tests a variable outside {vars_}")
            total = 0
            for c in (lo, hi):
                if c == TRUE:
                    total += 1 << (n - pv - 1)
                elif c != FALSE:
                    cp = int(lvlpos[self._var[c]])
                    if cp < 0:
                        raise DependsOutsideVarSet(
                            f"node {f} tests a variable outside {vars_}")
                    total += memo[c] << (cp - pv - 1)
            memo[u] = total
        root_pos = int(lvlpos[self._var[f]])
        if root_pos < 0:
            raise DependsOutsideVarSet(
                f"node {f} tests a variable outside {vars_}")
        return memo[f] << root_pos

    def support(self, f: NodeRef) -> tuple[int, ...]:
        self._check_node(f)
        out = np.zeros(self.num_vars + 1, np.uint8)
        ops.support_levels(f, self._var, self._lo, self._hi, self._visit,
                           self._next_stamp(), self._stack, out)
        return tuple(int(i) for i in np.nonzero(out[:self.num_vars])[0])

    # ------------------------------------------------------------------
    # scopes, diagnostics

    def scope(self) -> _Scope:
        return _Scope(self)

    def audit(self) -> dict:
        """Full-arena structural check; raises AssertionError on violation."""
        free = set()
        u = int(self._state[ops.ST_FREE_HEAD])
        while u >= 0:
            assert self._var[u] == -1, f"free slot {u} not marked free"
            assert u not in free, f"free list cycle at {u}"
            free.add(u)
            u = int(self._nxt[u])
        assert len(free) == self.free_count, "free list length mismatch"
        triples = {}
        for u in range(2, self.capacity):
            if self._var[u] < 0:
                assert u in free or self._ref[u] == 0
                continue
            v, lo, hi = int(self._var[u]), int(self._lo[u]), int(self._hi[u])
            assert 0 <= v < self.num_vars, f"node {u}: bad level {v}"
            assert lo != hi, f"node {u}: not reduced"
            for c in (lo, hi):
                assert self._is_allocated(c), f"node {u}: dangling child {c}"
                assert self._var[c] > v, f"node {u}: order violation"
            assert (v, lo, hi) not in triples, \
                f"duplicate node {u} vs {triples[(v, lo, hi)]}"
            triples[(v, lo, hi)] = u
            # the node must be findable through its unique-table chain
            h = int(ops._hash3(v, lo, hi, self._uniq_mask))
            p = int(self._uniq[h])
            while p >= 0 and p != u:
                p = int(self._nxt[p])
            assert p == u, f"node {u} missing from unique chain"
        assert len(triples) + len(free) + 2 == self.capacity
        assert self.allocated == len(triples) + 2
        return {"nodes": len(triples) + 2, "free": len(free),
                "high_water": self.high_water}

    def dump_text(self, f: NodeRef) -> str:
        """Diagnostic dump, one 'id var low high' line per internal node."""
        self._check_node(f)
        lines = [f"root {f}"]
        out = np.empty(max(self.node_count(f), 1), np.int64)
        n = int(ops.topo_postorder(f, self._lo, self._hi, self._visit,
                                   self._next_stamp(), out, self.num_vars))
        for i in range(n):
            u = int(out[i])
            lines.append(
                f"{u} {int(self._var[u])} {int(self._lo[u])} "
                f"{int(self._hi[u])}")
        return "\n".join(lines) + "\n"

    def topo_nodes(self, f: NodeRef) -> np.ndarray:
        """Internal nodes reachable from f, children before parents."""
        self._check_node(f)
        out = np.empty(max(self.node_count(f), 1), np.int64)
        n = int(ops.topo_postorder(f, self._lo, self._hi, self._visit,
                                   self._next_stamp(), out, self.num_vars))
        return out[:n]

    def node_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(var, low, high) arena columns, for serialization and kernels."""
        return self._var, self._lo, self._hi

    def insert_records(self, vs: np.ndarray, ls: np.ndarray,
                       hs: np.ndarray) -> NodeRef:
        """Insert children-first serialized records; returns an owned root.

        Record ids start at 2 (0/1 are the terminals); children must
        reference earlier records.
        """
        from .errors import CorruptFile
        node_map = np.empty(len(vs) + 2, np.int64)
        node_map[0] = FALSE
        node_map[1] = TRUE

        def attempt():
            return ops.load_nodes(vs, ls, hs, node_map, self.num_vars,
                                  *self._arena, self._state)

        r = self._retry_allowing(attempt)
        if r == -2:
            raise CorruptFile("serialized records violate ROBDD structure")
        return self.ref(int(r))

    def _retry_allowing(self, attempt):
        """Like _retry but passes through the -2 structural error code."""
        prev_free = -1
        while True:
            r = int(attempt())
            if r >= 0 or r == -2:
                return r
            self.collect_garbage()
            free_now = self.free_count
            if free_now <= prev_free:
                raise PoolExhausted(
                    f"node pool exhausted: capacity={self.capacity}, "
                    f"high water={self.high_water}")
            prev_free = free_now
