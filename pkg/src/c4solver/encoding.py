"""Boolean encodings of ConnectFour boards.

Three variable layouts are supported:

* ``STANDARD_ROW`` / ``STANDARD_COL``: two variables per cell (one per
  player plane) plus a side-to-move variable, scanned row-wise or
  column-wise; 2*w*h + 1 variables per board copy.
* ``COMPRESSED``: one variable per cell over h+1 rows plus side-to-move;
  w*(h+1) + 1 variables per board copy.  A column's topmost true cell
  marks the lowest available slot; cells below it hold disc colors
  (true = first player).  The extra row carries the marker of a full
  column.

Both board copies (the unprimed "from" set and the primed "to" set) are
interleaved per cell in the global order: plane/board pairs sit next to
each other, which keeps transition-relation BDDs linear.  The
side-to-move variable sits first, is shared between copies, and is
pinned false everywhere: ply-indexed layers make it redundant, but
keeping it preserves the per-copy variable counts above, so satcounts
over one copy equal position counts directly.

Plies alternate copies: even plies live on copy 0, odd plies on copy 1,
so images never rename variables; the move relations come in a forward
family (first player, copy 0 -> copy 1) and a mirrored family (second
player, copy 1 -> copy 0).
"""
from __future__ import annotations

import enum

import numpy as np

from .bdd import FALSE, TRUE, BddManager, NodeRef, VarSet
from .bitboard import BoardGeometry, Position
from .errors import IllegalPosition


class EncodingKind(enum.Enum):
    STANDARD_ROW = "standard-row"
    STANDARD_COL = "standard-col"
    COMPRESSED = "compressed"

    @classmethod
    def parse(cls, name: str) -> "EncodingKind":
        for k in cls:
            if k.value == name:
                return k
        raise ValueError(f"unknown encoding kind {name!r}")


def window_list(geometry: BoardGeometry) -> list[tuple[tuple[int, int], ...]]:
    """All four-in-a-row windows as ((col, row) * 4) tuples."""
    w, h = geometry.width, geometry.height
    wins = []
    for r in range(h):
        for c in range(w - 3):
            wins.append(tuple((c + i, r) for i in range(4)))
    for c in range(w):
        for r in range(h - 3):
            wins.append(tuple((c, r + i) for i in range(4)))
    for c in range(w - 3):
        for r in range(h - 3):
            wins.append(tuple((c + i, r + i) for i in range(4)))
    for c in range(w - 3):
        for r in range(3, h):
            wins.append(tuple((c + i, r - i) for i in range(4)))
    return wins


class DirectedRelation:
    """Per-column move BDDs for one mover and one copy orientation."""

    def __init__(self, mgr: BddManager, columns: list[NodeRef], mover: int,
                 from_copy: int, from_quant: VarSet, to_quant: VarSet):
        self.mgr = mgr
        self.columns = columns
        self.mover = mover
        self.from_copy = from_copy
        self.from_quant = from_quant
        self.to_quant = to_quant
        self._monolithic: NodeRef | None = None

    def image(self, f: NodeRef) -> NodeRef:
        """Successor set of f (over from_copy); result over the other copy."""
        return self._accumulate(f, self.from_quant)

    def preimage(self, g: NodeRef) -> NodeRef:
        """Predecessor set of g (over to_copy); result over from_copy."""
        return self._accumulate(g, self.to_quant)

    def _accumulate(self, f: NodeRef, quant: VarSet) -> NodeRef:
        mgr = self.mgr
        acc = mgr.ref(FALSE)
        for rel in self.columns:
            step = mgr.and_exists(f, rel, quant)
            nxt = mgr.or_(acc, step)
            mgr.deref(step)
            mgr.deref(acc)
            acc = nxt
        return acc

    def monolithic(self) -> NodeRef:
        """Single-BDD disjunction over columns (for tests and inspection)."""
        if self._monolithic is None:
            mgr = self.mgr
            acc = mgr.ref(FALSE)
            for rel in self.columns:
                nxt = mgr.or_(acc, rel)
                mgr.deref(acc)
                acc = nxt
            self._monolithic = acc
        return self._monolithic

    def release(self) -> None:
        for rel in self.columns:
            self.mgr.deref(rel)
        self.columns = []
        if self._monolithic is not None:
            self.mgr.deref(self._monolithic)
            self._monolithic = None


class TransitionRelation:
    """Forward (p1 moves, copy 0 -> 1) and mirrored (p2, copy 1 -> 0)."""

    def __init__(self, forward: DirectedRelation, mirrored: DirectedRelation):
        self.forward = forward
        self.mirrored = mirrored

    def for_ply(self, ply: int) -> DirectedRelation:
        """Relation applying to moves played from the given ply."""
        return self.forward if ply % 2 == 0 else self.mirrored

    def release(self) -> None:
        self.forward.release()
        self.mirrored.release()


class Encoding:
    """Variable layout plus BDD builders for one geometry and kind."""

    def __init__(self, mgr: BddManager, geometry: BoardGeometry,
                 kind: EncodingKind):
        self.mgr = mgr
        self.geometry = geometry
        self.kind = kind
        w, h = geometry.width, geometry.height
        self.stm_level = 0
        if kind is EncodingKind.COMPRESSED:
            self.cell_rows = h + 1
            self.vars_per_copy = w * (h + 1) + 1
            self.num_levels = 2 * w * (h + 1) + 1
        else:
            self.cell_rows = h
            self.vars_per_copy = 2 * w * h + 1
            self.num_levels = 4 * w * h + 1
        if mgr.num_vars < self.num_levels:
            raise ValueError(
                f"manager has {mgr.num_vars} variables, encoding needs "
                f"{self.num_levels}")
        # per-copy variable sets (for satcount) and quantifier sets
        s_levels = [self.stm_level]
        sp_levels = [self.stm_level]
        q_s, q_sp = [], []
        for c in range(w):
            for r in range(self.cell_rows):
                if kind is EncodingKind.COMPRESSED:
                    a = self.cell_var(c, r, 0)
                    b = self.cell_var(c, r, 1)
                    s_levels.append(a)
                    sp_levels.append(b)
                    q_s.append(a)
                    q_sp.append(b)
                else:
                    for plane in (0, 1):
                        a = self.plane_var(c, r, plane, 0)
                        b = self.plane_var(c, r, plane, 1)
                        s_levels.append(a)
                        sp_levels.append(b)
                        q_s.append(a)
                        q_sp.append(b)
        self.vars_s = mgr.varset(sorted(s_levels))
        self.vars_sp = mgr.varset(sorted(sp_levels))
        self.quant_s = mgr.varset(sorted(q_s))
        self.quant_sp = mgr.varset(sorted(q_sp))
        assert len(self.vars_s) == self.vars_per_copy
        assert len(self.vars_sp) == self.vars_per_copy
        self._build_eval_tables()

    # ------------------------------------------------------------------
    # variable layout

    def _cell_index(self, col: int, row: int) -> int:
        w = self.geometry.width
        if self.kind is EncodingKind.STANDARD_ROW:
            return row * w + col
        return col * self.cell_rows + row

    def cell_var(self, col: int, row: int, copy: int) -> int:
        """Compressed-encoding variable for a cell on one board copy."""
        assert self.kind is EncodingKind.COMPRESSED
        return 1 + 2 * self._cell_index(col, row) + copy

    def plane_var(self, col: int, row: int, plane: int, copy: int) -> int:
        """Standard-encoding variable: plane 0 = first player's discs.

        Per-cell order is p1-copy0, p1-copy1, p2-copy0, p2-copy1.
        """
        assert self.kind is not EncodingKind.COMPRESSED
        return 1 + 4 * self._cell_index(col, row) + 2 * plane + copy

    def copy_for_ply(self, ply: int) -> int:
        return ply % 2

    def vars_for_ply(self, ply: int) -> VarSet:
        return self.vars_s if ply % 2 == 0 else self.vars_sp

    def quant_for_copy(self, copy: int) -> VarSet:
        return self.quant_s if copy == 0 else self.quant_sp

    def _build_eval_tables(self) -> None:
        """Map every level to its bitboard source for membership tests.

        kind 0: side-to-move (always false); 1/2: player plane bit;
        3: compressed cell (first player's discs union column markers).
        """
        g = self.geometry
        self.var_kind = np.zeros(self.num_levels, np.int8)
        self.var_bit = np.zeros(self.num_levels, np.uint64)
        for c in range(g.width):
            for r in range(self.cell_rows):
                bit = g.bit(c, r)
                if self.kind is EncodingKind.COMPRESSED:
                    for copy in (0, 1):
                        v = self.cell_var(c, r, copy)
                        self.var_kind[v] = 3
                        self.var_bit[v] = bit
                else:
                    for plane in (0, 1):
                        for copy in (0, 1):
                            v = self.plane_var(c, r, plane, copy)
                            self.var_kind[v] = 1 + plane
                            self.var_bit[v] = bit

    # ------------------------------------------------------------------
    # state and relation construction

    def encode_initial(self) -> NodeRef:
        """Empty board on copy 0 (first player to move); satcount 1."""
        lits = [(self.stm_level, False)]
        g = self.geometry
        for c in range(g.width):
            for r in range(self.cell_rows):
                if self.kind is EncodingKind.COMPRESSED:
                    lits.append((self.cell_var(c, r, 0), r == 0))
                else:
                    lits.append((self.plane_var(c, r, 0, 0), False))
                    lits.append((self.plane_var(c, r, 1, 0), False))
        return self.mgr.cube(lits)

    def _frame_other_columns(self, col: int, from_copy: int) -> NodeRef:
        mgr = self.mgr
        to_copy = 1 - from_copy
        acc = mgr.ref(TRUE)
        g = self.geometry
        for c in range(g.width):
            if c == col:
                continue
            for r in range(self.cell_rows):
                if self.kind is EncodingKind.COMPRESSED:
                    pairs = [(self.cell_var(c, r, from_copy),
                              self.cell_var(c, r, to_copy))]
                else:
                    pairs = [(self.plane_var(c, r, p, from_copy),
                              self.plane_var(c, r, p, to_copy))
                             for p in (0, 1)]
                for a, b in pairs:
                    eq = mgr.equiv_var(a, b)
                    nxt = mgr.and_(acc, eq)
                    mgr.deref(eq)
                    mgr.deref(acc)
                    acc = nxt
        return acc

    def _column_moves(self, col: int, mover: int, from_copy: int) -> NodeRef:
        """OR over landing rows of pre/effect/in-column frame."""
        mgr = self.mgr
        g = self.geometry
        to_copy = 1 - from_copy
        acc = mgr.ref(FALSE)
        for k in range(g.height):
            with mgr.scope() as s:
                if self.kind is EncodingKind.COMPRESSED:
                    lits = [(self.cell_var(col, k, from_copy), True)]
                    lits += [(self.cell_var(col, j, from_copy), False)
                             for j in range(k + 1, self.cell_rows)]
                    lits += [(self.cell_var(col, k, to_copy), mover == 0),
                             (self.cell_var(col, k + 1, to_copy), True)]
                    lits += [(self.cell_var(col, j, to_copy), False)
                             for j in range(k + 2, self.cell_rows)]
                    move = s(mgr.cube(lits))
                else:
                    lits = [(self.plane_var(col, k, 0, from_copy), False),
                            (self.plane_var(col, k, 1, from_copy), False),
                            (self.plane_var(col, k, mover, to_copy), True),
                            (self.plane_var(col, k, 1 - mover, to_copy),
                             False)]
                    move = s(mgr.cube(lits))
                    for j in range(k):
                        p1 = s(mgr.mk_var(self.plane_var(col, j, 0,
                                                         from_copy)))
                        p2 = s(mgr.mk_var(self.plane_var(col, j, 1,
                                                         from_copy)))
                        occ = s(mgr.or_(p1, p2))
                        move = s(mgr.and_(move, occ))
                # copy untouched in-column cells between board copies:
                # compressed constrains every row >= k already, standard
                # only touches the landing row
                if self.kind is EncodingKind.COMPRESSED:
                    framed = [(self.cell_var(col, j, from_copy),
                               self.cell_var(col, j, to_copy))
                              for j in range(k)]
                else:
                    framed = [(self.plane_var(col, j, p, from_copy),
                               self.plane_var(col, j, p, to_copy))
                              for j in range(self.cell_rows) if j != k
                              for p in (0, 1)]
                for a, b in framed:
                    eq = s(mgr.equiv_var(a, b))
                    move = s(mgr.and_(move, eq))
                nxt = s(mgr.or_(acc, move))
                mgr.deref(acc)
                acc = s.keep(nxt)
        return acc

    def _directed(self, mover: int, from_copy: int) -> DirectedRelation:
        mgr = self.mgr
        stm_pin = mgr.cube([(self.stm_level, False)])
        cols = []
        for c in range(self.geometry.width):
            with mgr.scope() as s:
                frame = s(self._frame_other_columns(c, from_copy))
                moves = s(self._column_moves(c, mover, from_copy))
                rel = s(mgr.and_(frame, moves))
                rel2 = s(mgr.and_(rel, stm_pin))
                cols.append(s.keep(rel2))
        mgr.deref(stm_pin)
        return DirectedRelation(
            mgr, cols, mover, from_copy,
            from_quant=self.quant_for_copy(from_copy),
            to_quant=self.quant_for_copy(1 - from_copy))

    def build_transition(self) -> TransitionRelation:
        return TransitionRelation(forward=self._directed(0, 0),
                                  mirrored=self._directed(1, 1))

    # ------------------------------------------------------------------
    # terminal line clauses

    def terminal_clauses(self, player: int, copy: int) -> list[NodeRef]:
        """One BDD per four-window asserting the player owns all 4 cells."""
        mgr = self.mgr
        out = []
        for win in window_list(self.geometry):
            if self.kind is not EncodingKind.COMPRESSED:
                lits = []
                for (c, r) in win:
                    lits.append((self.plane_var(c, r, player, copy), True))
                    lits.append((self.plane_var(c, r, 1 - player, copy),
                                 False))
                out.append(mgr.cube(lits))
            else:
                with mgr.scope() as s:
                    clause = s(mgr.ref(TRUE))
                    for (c, r) in win:
                        owned = s(self._compressed_owned(c, r, player, copy))
                        clause = s(mgr.and_(clause, owned))
                    out.append(s.keep(clause))
        return out

    def _compressed_owned(self, col: int, row: int, player: int,
                          copy: int) -> NodeRef:
        """player's disc at (col, row): correct polarity and occupied.

        A cell is occupied exactly when some cell above it in the column
        is true (the column marker sits above every disc).
        """
        mgr = self.mgr
        with mgr.scope() as s:
            above = s(mgr.ref(FALSE))
            for j in range(row + 1, self.cell_rows):
                v = s(mgr.mk_var(self.cell_var(col, j, copy)))
                above = s(mgr.or_(above, v))
            cell = s(mgr.mk_var(self.cell_var(col, row, copy)))
            owner = cell if player == 0 else s(mgr.not_(cell))
            return s.keep(s(mgr.and_(owner, above)))

    def clauses_for_ply(self, ply: int) -> list[NodeRef]:
        """Line clauses of the player who moved into this ply, or []."""
        if ply == 0:
            return []
        return self.terminal_clauses((ply - 1) % 2, self.copy_for_ply(ply))

    # ------------------------------------------------------------------
    # explicit-position bridge

    def assignment(self, pos: Position) -> np.ndarray:
        """Variable assignment testing membership of pos in layer BDDs.

        Fills both board copies identically so it works for layers on
        either copy.
        """
        if pos.geometry != self.geometry:
            raise IllegalPosition(
                f"position geometry {pos.geometry} does not match "
                f"encoding geometry {self.geometry}")
        p1 = pos.p1_discs
        p2 = pos.p2_discs
        markers = (pos.mask + self.geometry.bottom_mask)
        cmp_word = p1 | markers
        out = np.zeros(self.mgr.num_vars, np.uint8)
        kinds = self.var_kind
        bits = self.var_bit
        for v in range(self.num_levels):
            k = kinds[v]
            if k == 1:
                out[v] = (p1 >> int(bits[v])) & 1
            elif k == 2:
                out[v] = (p2 >> int(bits[v])) & 1
            elif k == 3:
                out[v] = (cmp_word >> int(bits[v])) & 1
        return out


def make_encoding(mgr: BddManager, geometry: BoardGeometry,
                  kind: EncodingKind) -> Encoding:
    return Encoding(mgr, geometry, kind)


def subtract_terminals(mgr: BddManager, states: NodeRef,
                       clauses: list[NodeRef]) -> NodeRef:
    """states AND NOT terminal, one set-difference per line clause."""
    acc = mgr.ref(states)
    for cl in clauses:
        nxt = mgr.diff(acc, cl)
        mgr.deref(acc)
        acc = nxt
    return acc


def intersect_terminals(mgr: BddManager, states: NodeRef,
                        clauses: list[NodeRef]) -> NodeRef:
    """states AND terminal, accumulated one line clause at a time."""
    acc = mgr.ref(FALSE)
    for cl in clauses:
        hit = mgr.and_(states, cl)
        nxt = mgr.or_(acc, hit)
        mgr.deref(hit)
        mgr.deref(acc)
        acc = nxt
    return acc


def num_levels_for(geometry: BoardGeometry, kind: EncodingKind) -> int:
    w, h = geometry.width, geometry.height
    if kind is EncodingKind.COMPRESSED:
        return 2 * w * (h + 1) + 1
    return 4 * w * h + 1
