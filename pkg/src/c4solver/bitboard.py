"""Bitboard board representation.

Tromp-style two-mask layout: one bit per cell, (height+1) bits per
column so every column carries a guard row that stops shift-based line
detection from bleeding between columns.  ``current`` holds the discs
of the player to move, ``mask`` all discs.  Plain Python ints keep the
layout valid for any supported geometry; the search kernels separately
require the board to fit 64 bits.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import IllegalMove, IllegalPosition


@dataclass(frozen=True)
class BoardGeometry:
    """Board dimensions; plies run from 0 (empty) to max_ply (full)."""

    width: int
    height: int

    def __post_init__(self):
        if not (1 <= self.width <= 13 and 1 <= self.height <= 13):
            raise ValueError(
                f"unsupported geometry {self.width}x{self.height}: "
                "width and height must be within 1..13")

    @property
    def max_ply(self) -> int:
        return self.width * self.height

    @property
    def stride(self) -> int:
        return self.height + 1

    def bit(self, col: int, row: int) -> int:
        return col * self.stride + row

    def column_mask(self, col: int) -> int:
        return ((1 << self.height) - 1) << (col * self.stride)

    @property
    def bottom_mask(self) -> int:
        b = 0
        for c in range(self.width):
            b |= 1 << (c * self.stride)
        return b

    @property
    def board_mask(self) -> int:
        return self.bottom_mask * ((1 << self.height) - 1)

    def __str__(self) -> str:
        return f"{self.width}x{self.height}"


def has_line(geometry: BoardGeometry, discs: int) -> bool:
    """True when discs contains four-in-a-row in any direction."""
    s = geometry.stride
    for shift in (1, s, s + 1, s - 1):
        m = discs & (discs >> shift)
        if m & (m >> (2 * shift)):
            return True
    return False


def winning_cells(geometry: BoardGeometry, discs: int, mask: int) -> int:
    """Empty cells that would complete a four-in-a-row for ``discs``.

    Includes floating cells (threats waiting for support), per the
    definition of a threat.
    """
    s = geometry.stride
    r = 0
    for shift in (1, s, s + 1, s - 1):
        p = (discs << shift) & (discs << (2 * shift))
        r |= p & (discs << (3 * shift))
        r |= p & (discs >> shift)
        p = (discs >> shift) & (discs >> (2 * shift))
        r |= p & (discs >> (3 * shift))
        r |= p & (discs << shift)
    return r & geometry.board_mask & ~mask


class Position:
    """Immutable game position: mover's discs + occupancy mask."""

    __slots__ = ("geometry", "current", "mask")

    def __init__(self, geometry: BoardGeometry, current: int = 0,
                 mask: int = 0, validate: bool = True):
        self.geometry = geometry
        self.current = current
        self.mask = mask
        if validate:
            self._validate()

    def _validate(self) -> None:
        g = self.geometry
        if self.mask & ~g.board_mask:
            raise IllegalPosition("discs outside the board")
        if self.current & ~self.mask:
            raise IllegalPosition("mover discs not within the occupancy mask")
        for c in range(g.width):
            col = (self.mask >> (c * g.stride)) & ((1 << g.height) - 1)
            if col & (col + 1) != 0:
                raise IllegalPosition(f"floating disc in column {c + 1}")
        # the mover never leads on discs: exactly floor(ply / 2) of them
        n_cur = bin(self.current).count("1")
        if n_cur != self.ply // 2:
            raise IllegalPosition(
                f"impossible disc counts: mover holds {n_cur} of {self.ply}")

    @classmethod
    def empty(cls, geometry: BoardGeometry) -> "Position":
        return cls(geometry, 0, 0, validate=False)

    @classmethod
    def from_moves(cls, geometry: BoardGeometry, moves: str) -> "Position":
        """Replay a 1-based column digit string, e.g. '44444'."""
        pos = cls.empty(geometry)
        for i, ch in enumerate(moves.strip()):
            if not ch.isdigit() or ch == "0":
                raise IllegalMove(f"ply {i + 1}: '{ch}' is not a column digit")
            col = int(ch) - 1
            if col >= geometry.width:
                raise IllegalMove(f"ply {i + 1}: column {ch} out of range")
            if pos.is_terminal():
                raise IllegalMove(f"ply {i + 1}: game already over")
            if not pos.can_play(col):
                raise IllegalMove(f"ply {i + 1}: column {ch} is full")
            pos = pos.play(col)
        return pos

    @property
    def ply(self) -> int:
        return bin(self.mask).count("1")

    @property
    def to_move(self) -> int:
        """0 = first player, 1 = second player."""
        return self.ply % 2

    @property
    def p1_discs(self) -> int:
        return self.current if self.ply % 2 == 0 else self.current ^ self.mask

    @property
    def p2_discs(self) -> int:
        return self.mask ^ self.p1_discs

    def can_play(self, col: int) -> bool:
        g = self.geometry
        if not 0 <= col < g.width:
            return False
        top = 1 << g.bit(col, g.height - 1)
        return self.mask & top == 0

    def legal_moves(self) -> list[int]:
        return [c for c in range(self.geometry.width) if self.can_play(c)]

    def play(self, col: int) -> "Position":
        if not self.can_play(col):
            raise IllegalMove(f"column {col + 1} is not playable")
        g = self.geometry
        move = (self.mask + (1 << (col * g.stride))) & g.column_mask(col)
        # the new mover is the old opponent; the placed disc joins the
        # waiting player's set implicitly via the mask
        return Position(g, self.current ^ self.mask, self.mask | move,
                        validate=False)

    def last_mover_won(self) -> bool:
        return has_line(self.geometry, self.current ^ self.mask)

    def mover_has_line(self) -> bool:
        return has_line(self.geometry, self.current)

    def is_winning_move(self, col: int) -> bool:
        g = self.geometry
        move = (self.mask + (1 << (col * g.stride))) & g.column_mask(col)
        return bool(winning_cells(g, self.current, self.mask) & move)

    def is_terminal(self) -> bool:
        """Line made by the previous mover, or board full."""
        return self.last_mover_won() or self.ply == self.geometry.max_ply

    def mirror(self) -> "Position":
        g = self.geometry
        colbits = (1 << g.stride) - 1
        cur = msk = 0
        for c in range(g.width):
            shift_in = c * g.stride
            shift_out = (g.width - 1 - c) * g.stride
            cur |= ((self.current >> shift_in) & colbits) << shift_out
            msk |= ((self.mask >> shift_in) & colbits) << shift_out
        return Position(g, cur, msk, validate=False)

    def key(self) -> int:
        """Unique position key: mover discs plus per-column stack markers."""
        return self.current + self.mask + self.geometry.bottom_mask

    def canonical_key(self) -> int:
        return min(self.key(), self.mirror().key())

    def column_height(self, col: int) -> int:
        g = self.geometry
        col_bits = (self.mask >> (col * g.stride)) & ((1 << g.height) - 1)
        return col_bits.bit_length()

    def cell(self, col: int, row: int) -> int:
        """0 empty, 1 first player's disc, 2 second player's."""
        b = 1 << self.geometry.bit(col, row)
        if not self.mask & b:
            return 0
        return 1 if self.p1_discs & b else 2

    def __eq__(self, other) -> bool:
        return (isinstance(other, Position)
                and self.geometry == other.geometry
                and self.current == other.current
                and self.mask == other.mask)

    def __hash__(self) -> int:
        return hash((self.geometry.width, self.geometry.height, self.key()))

    def __repr__(self) -> str:
        return (f"Position({self.geometry}, ply={self.ply}, "
                f"key={self.key():#x})")

    def __str__(self) -> str:
        g = self.geometry
        rows = []
        for r in reversed(range(g.height)):
            rows.append(" ".join(
                ".XO"[self.cell(c, r)] for c in range(g.width)))
        return "\n".join(rows)
