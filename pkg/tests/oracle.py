"""Independent explicit-state ConnectFour oracle.

Enumerates every reachable position of a small board by breadth-first
expansion and classifies it by memoized negamax over the explicit game
graph.  Deliberately shares nothing with the package under test: the
board is a base-3 digit string (0 empty, 1 first player, 2 second
player, cell index = column * height + row), moves and line detection
work on decoded digits, and scores are computed bottom-up from the
rules alone.

Score scale: 0 draw, +s the mover wins with the final disc landing at
ply N+1-s, -s the mirrored loss.
"""
from __future__ import annotations

import sys


class ExplicitOracle:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.n = width * height
        self.pow3 = [3 ** i for i in range(self.n + 1)]
        self._build_windows()
        self.layers: list[set[int]] = []
        self.value: dict[int, int] = {}
        self.terminal: set[int] = set()
        self._solved = False

    def cell_index(self, col: int, row: int) -> int:
        return col * self.height + row

    def _build_windows(self) -> None:
        w, h = self.width, self.height
        windows = []
        for c in range(w):
            for r in range(h):
                line = []
                if c + 3 < w:
                    line.append([(c + i, r) for i in range(4)])
                if r + 3 < h:
                    line.append([(c, r + i) for i in range(4)])
                if c + 3 < w and r + 3 < h:
                    line.append([(c + i, r + i) for i in range(4)])
                if c + 3 < w and r - 3 >= 0:
                    line.append([(c + i, r - i) for i in range(4)])
                windows.extend(line)
        self.windows = [tuple(self.cell_index(c, r) for c, r in win)
                        for win in windows]
        # windows touching each cell, for incremental win checks
        self.windows_at: dict[int, list[tuple[int, ...]]] = \
            {i: [] for i in range(self.n)}
        for win in self.windows:
            for idx in win:
                self.windows_at[idx].append(win)

    def cell(self, key: int, idx: int) -> int:
        return (key // self.pow3[idx]) % 3

    def heights_of(self, key: int) -> tuple[int, ...]:
        hs = []
        for c in range(self.width):
            k = 0
            while k < self.height and self.cell(key,
                                                self.cell_index(c, k)) != 0:
                k += 1
            hs.append(k)
        return tuple(hs)

    def _made_line(self, key: int, idx: int, player_digit: int) -> bool:
        for win in self.windows_at[idx]:
            if all((key // self.pow3[j]) % 3 == player_digit for j in win):
                return True
        return False

    def solve(self) -> None:
        """Enumerate all plies and score every reachable position."""
        if self._solved:
            return
        sys.setrecursionlimit(100000)
        root = 0
        self.layers = [{root}]
        frontier = [(root, (0,) * self.width)]
        for ply in range(self.n):
            nxt: dict[int, tuple[int, ...]] = {}
            digit = 1 + (ply % 2)
            for key, hs in frontier:
                for c in range(self.width):
                    if hs[c] >= self.height:
                        continue
                    idx = self.cell_index(c, hs[c])
                    ck = key + digit * self.pow3[idx]
                    if ck not in nxt:
                        nxt[ck] = tuple(h + 1 if i == c else h
                                        for i, h in enumerate(hs))
                        if self._made_line(ck, idx, digit):
                            self.terminal.add(ck)
            self.layers.append(set(nxt))
            frontier = [(k, hs) for k, hs in nxt.items()
                        if k not in self.terminal]
            if not frontier:
                self.layers = [l for l in self.layers if l]
                break
        self._score_all()
        self._solved = True

    def _score_all(self) -> None:
        for ply in range(len(self.layers) - 1, -1, -1):
            digit = 1 + (ply % 2)
            for key in self.layers[ply]:
                if key in self.terminal:
                    # the previous mover just completed a line
                    self.value[key] = -(self.n + 1 - ply)
                elif ply == self.n:
                    self.value[key] = 0
                else:
                    hs = self.heights_of(key)
                    best = None
                    for c in range(self.width):
                        if hs[c] >= self.height:
                            continue
                        idx = self.cell_index(c, hs[c])
                        ck = key + digit * self.pow3[idx]
                        if ck in self.terminal:
                            sc = self.n - ply
                        else:
                            sc = -self.value[ck]
                        if best is None or sc > best:
                            best = sc
                    self.value[key] = best

    # ------------------------------------------------------------------
    # queries

    def score(self, key: int) -> int:
        return self.value[key]

    def wdl(self, key: int) -> int:
        v = self.value[key]
        return (v > 0) - (v < 0)

    def move_scores(self, key: int, ply: int) -> dict[int, int]:
        digit = 1 + (ply % 2)
        hs = self.heights_of(key)
        out = {}
        for c in range(self.width):
            if hs[c] >= self.height:
                continue
            ck = key + digit * self.pow3[self.cell_index(c, hs[c])]
            out[c] = (self.n - ply) if ck in self.terminal else -self.value[ck]
        return out

    def optimal_moves(self, key: int, ply: int) -> list[int]:
        ms = self.move_scores(key, ply)
        best = max(ms.values())
        return sorted(c for c, v in ms.items() if v == best)

    def counts(self, ply: int) -> dict:
        """Mover-perspective {won, drawn, lost, total, terminal} at a ply."""
        won = drawn = lost = term = 0
        for key in self.layers[ply]:
            if key in self.terminal:
                lost += 1
                term += 1
            else:
                v = self.value[key]
                if v > 0:
                    won += 1
                elif v < 0:
                    lost += 1
                else:
                    drawn += 1
        return {"won": won, "drawn": drawn, "lost": lost,
                "total": len(self.layers[ply]), "terminal": term}

    def to_bitboard(self, key: int) -> tuple[int, int]:
        """(current, mask) in the (height+1)-stride layout, for comparisons."""
        stride = self.height + 1
        ply = sum(1 for i in range(self.n) if self.cell(key, i) != 0)
        mover_digit = 1 + (ply % 2)
        cur = msk = 0
        for c in range(self.width):
            for r in range(self.height):
                d = self.cell(key, self.cell_index(c, r))
                if d == 0:
                    continue
                bit = 1 << (c * stride + r)
                msk |= bit
                if d == mover_digit:
                    cur |= bit
        return cur, msk

    def positions_at(self, ply: int) -> list[int]:
        return sorted(self.layers[ply])

    # ------------------------------------------------------------------
    # bulk comparison helpers (numpy vectorized; conversion glue only)

    def ply_arrays(self, ply: int):
        """(keys, scores) as aligned numpy arrays, keys ascending."""
        import numpy as np
        keys = np.array(self.positions_at(ply), np.int64)
        scores = np.array([self.value[int(k)] for k in keys], np.int32)
        return keys, scores

    def digits_of(self, keys):
        import numpy as np
        p = np.array(self.pow3[:self.n], np.int64)
        return ((keys[:, None] // p[None, :]) % 3).astype(np.int8)

    def to_bitboards_batch(self, keys):
        """(currents, masks) int64 arrays in the (height+1)-stride layout."""
        import numpy as np
        digits = self.digits_of(keys)  # [B, n]
        ply = (digits != 0).sum(axis=1)
        mover_digit = (1 + (ply % 2)).astype(np.int8)
        stride = self.height + 1
        cur = np.zeros(len(keys), np.int64)
        msk = np.zeros(len(keys), np.int64)
        for c in range(self.width):
            for r in range(self.height):
                d = digits[:, self.cell_index(c, r)]
                bit = np.int64(1) << np.int64(c * stride + r)
                occupied = d != 0
                msk |= np.where(occupied, bit, 0)
                cur |= np.where(d == mover_digit, bit, 0)
        return cur, msk

    def move_score_matrix(self, ply: int):
        """Per-column exact move scores for every ply position.

        Returns (keys, matrix) where matrix[i, c] is the mover's score
        of playing column c, or -127 when the column is full; rows for
        line-terminal positions are all -127 (no moves).
        """
        import numpy as np
        keys, _ = self.ply_arrays(ply)
        digits = self.digits_of(keys)
        child_keys, child_scores = (self.ply_arrays(ply + 1)
                                    if ply + 1 < len(self.layers)
                                    else (np.empty(0, np.int64),
                                          np.empty(0, np.int32)))
        term = np.array([int(k) in self.terminal for k in keys], bool)
        out = np.full((len(keys), self.width), -127, np.int32)
        digit = 1 + (ply % 2)
        for c in range(self.width):
            cells = digits[:, self.cell_index(c, 0):
                           self.cell_index(c, 0) + self.height]
            heights = (cells != 0).sum(axis=1)
            playable = (heights < self.height) & ~term
            if not playable.any():
                continue
            idx = np.nonzero(playable)[0]
            landing = np.array([self.pow3[self.cell_index(c, h)]
                                for h in heights[idx]], np.int64)
            ck = keys[idx] + digit * landing
            pos = np.searchsorted(child_keys, ck)
            assert np.all(child_keys[pos] == ck)
            out[idx, c] = -child_scores[pos]
        return keys, out
