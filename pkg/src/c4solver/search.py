"""Alpha-beta principal-variation search over bitboard positions.

Finds the exact distance score (fastest win / slowest loss) with a
fixed-size always-replace transposition table folded over the board's
vertical mirror symmetry, threat-driven move ordering, static win/loss
detection, and optional probing of a solved WDL store to skip moves
whose table value cannot carry the score.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _searchops as sops
from .bitboard import BoardGeometry, Position, winning_cells
from .errors import IllegalPosition
from .store import Wdl, WdlStore

DEFAULT_TT_BITS = 22
MAX_TT_BITS = 28
DEFAULT_PROBE_MIN_REMAINING = 6


def count_threats(pos: Position, player: int) -> int:
    """Empty cells that would complete a four-in-a-row for the player."""
    discs = pos.p1_discs if player == 0 else pos.p2_discs
    return bin(winning_cells(pos.geometry, discs, pos.mask)).count("1")


def order_moves(pos: Position, moves=None) -> list[int]:
    """Stable order: threats created desc, center distance asc, column asc."""
    if moves is None:
        moves = pos.legal_moves()
    g = pos.geometry

    def sort_key(col: int):
        child = pos.play(col)
        mover_discs = child.mask ^ child.current
        threats = bin(winning_cells(g, mover_discs, child.mask)).count("1")
        return (-threats, abs(2 * col - (g.width - 1)), col)

    return sorted(moves, key=sort_key)


def static_evaluate(pos: Position) -> int | None:
    """Score decided without search, else None.

    Decided when the mover wins on the spot, or when the opponent keeps
    an immediately playable winning cell after every possible reply.
    """
    if pos.is_terminal():
        raise IllegalPosition("static evaluation needs a non-terminal position")
    g = pos.geometry
    n = g.max_ply
    playable = (pos.mask + g.bottom_mask) & g.board_mask
    if winning_cells(g, pos.current, pos.mask) & playable:
        return n - pos.ply
    opp = pos.current ^ pos.mask
    opp_playable_wins = winning_cells(g, opp, pos.mask) & playable
    if bin(opp_playable_wins).count("1") >= 2:
        return -(n - pos.ply - 1)
    return None


@dataclass
class BestMove:
    move: int
    score: int
    pv: list[int]


class SearchEngine:
    """Owns the transposition table and optional WDL-store probing."""

    def __init__(self, geometry: BoardGeometry, tt_bits: int = DEFAULT_TT_BITS,
                 store: WdlStore | None = None,
                 probe_min_remaining: int = DEFAULT_PROBE_MIN_REMAINING):
        if geometry.width * (geometry.height + 1) > 63:
            raise ValueError(
                f"{geometry} exceeds the 63-bit bitboard search limit")
        if not 10 <= tt_bits <= MAX_TT_BITS:
            raise ValueError(f"tt_bits must be in 10..{MAX_TT_BITS}")
        self.geometry = geometry
        self.tt_key = np.zeros(1 << tt_bits, np.int64)
        self.tt_data = np.zeros(1 << tt_bits, np.int32)
        self.tt_mask = (1 << tt_bits) - 1
        self.probe_min_remaining = probe_min_remaining
        self.store: WdlStore | None = None
        self._no_roots = np.full(geometry.max_ply + 2, -1, np.int64)
        self._win_roots = self._no_roots
        self._lost_roots = self._no_roots
        arr = np.zeros(1, np.int32)
        self._bdd_args = (arr, arr, arr, np.zeros(1, np.int8),
                          np.zeros(1, np.int64))
        if store is not None:
            self.attach_store(store)

    def attach_store(self, store: WdlStore) -> None:
        """Pin every stored ply's win/lost roots for in-search probing."""
        if store.geometry != self.geometry:
            raise IllegalPosition(
                f"store is {store.geometry}, engine is {self.geometry}")
        n = self.geometry.max_ply
        store.max_cached_plies = max(store.max_cached_plies, n + 1)
        self._win_roots = np.full(n + 2, -1, np.int64)
        self._lost_roots = np.full(n + 2, -1, np.int64)
        for ply in store.available_plies():
            win, lost = store.roots_for_ply(ply)
            self._win_roots[ply] = win
            self._lost_roots[ply] = lost
        var_arr, lo_arr, hi_arr = store.mgr.node_arrays()
        self._bdd_args = (var_arr, lo_arr, hi_arr, store.enc.var_kind,
                          store.enc.var_bit)
        self.store = store

    def reset_tt(self) -> None:
        self.tt_key.fill(0)
        self.tt_data.fill(0)

    def _kernel_args(self):
        g = self.geometry
        have = 1 if self.store is not None else 0
        return (g.width, g.height, self.tt_key, self.tt_data, self.tt_mask,
                have, self.probe_min_remaining, self._win_roots,
                self._lost_roots, *self._bdd_args)

    def search(self, pos: Position, depth: int | None = None,
               alpha: int | None = None, beta: int | None = None) -> int:
        """Exact distance score of a non-terminal position.

        With depth below the remaining plies the result is only a
        bound-quality estimate and is kept out of the table.
        """
        if pos.geometry != self.geometry:
            raise IllegalPosition("position geometry does not match engine")
        if pos.is_terminal():
            raise IllegalPosition("search needs a non-terminal position")
        n = self.geometry.max_ply
        if depth is None:
            depth = n + 1
        if alpha is None:
            alpha = -n - 1
        if beta is None:
            beta = n + 1
        if alpha >= beta:
            raise ValueError("alpha must be below beta")
        g = self.geometry
        return int(sops.search_root(pos.current, pos.mask, alpha, beta,
                                    depth, *self._kernel_args()))

    def score_all_moves(self, pos: Position) -> dict[int, int]:
        """Exact score of each legal move, mover's perspective."""
        if pos.is_terminal():
            return {}
        out = np.empty((1, self.geometry.width), np.int32)
        sops.score_moves_many(np.array([pos.current], np.int64),
                              np.array([pos.mask], np.int64),
                              *self._kernel_args(), out)
        return {c: int(out[0, c]) for c in range(self.geometry.width)
                if out[0, c] != -127}

    def score_matrix(self, currents: np.ndarray,
                     masks: np.ndarray) -> np.ndarray:
        """Batch score_all_moves over positions packed as int64 arrays."""
        out = np.empty((len(currents), self.geometry.width), np.int32)
        sops.score_moves_many(currents.astype(np.int64),
                              masks.astype(np.int64),
                              *self._kernel_args(), out)
        return out

    def best_move(self, pos: Position, pv_limit: int = 64) -> BestMove:
        """Highest-scoring move; ordering rank breaks exact-score ties."""
        if pos.is_terminal():
            raise IllegalPosition("best_move needs a non-terminal position")
        n = self.geometry.max_ply
        best_col, best_sc = -1, -n - 2
        alpha, beta = -n - 1, n + 1
        for col in order_moves(pos):
            if pos.is_winning_move(col):
                sc = n - pos.ply
            else:
                child = pos.play(col)
                if child.ply == n:
                    sc = 0
                else:
                    sc = -self.search(child, alpha=-beta, beta=-alpha)
            if sc > best_sc:
                best_sc, best_col = sc, col
                alpha = max(alpha, sc)
        pv = self._principal_variation(pos, best_col, pv_limit)
        return BestMove(best_col, best_sc, pv)

    def _principal_variation(self, pos: Position, first: int,
                             limit: int) -> list[int]:
        pv = [first]
        cur = pos.play(first)
        while len(pv) < limit and not cur.is_terminal():
            n = self.geometry.max_ply
            best_col, best_sc = -1, -n - 2
            alpha, beta = -n - 1, n + 1
            for col in order_moves(cur):
                if cur.is_winning_move(col):
                    sc = n - cur.ply
                else:
                    child = cur.play(col)
                    sc = 0 if child.ply == n else \
                        -self.search(child, alpha=-beta, beta=-alpha)
                if sc > best_sc:
                    best_sc, best_col = sc, col
                    alpha = max(alpha, sc)
            pv.append(best_col)
            cur = cur.play(best_col)
        return pv

    def wdl_from_score(self, score: int) -> Wdl:
        if score > 0:
            return Wdl.WIN
        if score < 0:
            return Wdl.LOSS
        return Wdl.DRAW
