"""Opening book: exact scores for every position at a fixed shallow ply.

Book files carry sorted fixed-width records so lookups are a binary
search: header (magic "C4BOOK1\\0", width, height, ply, entry count)
followed by (key u64, score i8, move u8) little-endian records.  Moves
are 0-based columns, 0xFF for line-terminal entries that have none.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bitboard import BoardGeometry, Position
from .errors import C4SolverError, CorruptFile, UnsupportedFormat
from .search import SearchEngine, order_moves
from .store import WdlStore, layer_path, load_bdd

BOOK_MAGIC = b"C4BOOK1\x00"
BOOK_HEADER_SIZE = 16
BOOK_RECORD = np.dtype([("key", "<u8"), ("score", "i1"), ("move", "u1")])
NO_MOVE = 0xFF


def enumerate_ply(geometry: BoardGeometry, ply: int) -> list[Position]:
    """All distinct positions at the given ply, terminal ones included."""
    frontier = {Position.empty(geometry).key(): Position.empty(geometry)}
    for _ in range(ply):
        nxt: dict[int, Position] = {}
        for pos in frontier.values():
            if pos.is_terminal():
                continue
            for col in pos.legal_moves():
                child = pos.play(col)
                nxt.setdefault(child.key(), child)
        frontier = nxt
    return [frontier[k] for k in sorted(frontier)]


def _expected_count(store: WdlStore, ply: int) -> int:
    states_path = layer_path(store.directory, ply, "states")
    if not os.path.exists(states_path):
        raise C4SolverError(
            f"store has no states file for ply {ply}; re-run solve")
    root, _ = load_bdd(store.mgr, store.enc, states_path)
    try:
        return store.mgr.satcount(root, store.enc.vars_for_ply(ply))
    finally:
        store.mgr.deref(root)


def _score_positions(store: WdlStore, positions: list[Position],
                     tt_bits: int) -> list[tuple[int, int, int]]:
    """(key, score, move) per position; terminal entries score directly."""
    g = store.geometry
    n = g.max_ply
    engine = SearchEngine(g, tt_bits=tt_bits, store=store)
    live = [p for p in positions if not p.is_terminal()]
    out = []
    for pos in positions:
        if pos.is_terminal():
            out.append((pos.key(), -(n + 1 - pos.ply), NO_MOVE))
    if live:
        curs = np.array([p.current for p in live], np.int64)
        msks = np.array([p.mask for p in live], np.int64)
        mat = engine.score_matrix(curs, msks)
        for i, pos in enumerate(live):
            scores = {c: int(mat[i, c]) for c in range(g.width)
                      if mat[i, c] != -127}
            best_sc = max(scores.values())
            best = next(c for c in order_moves(pos)
                        if scores[c] == best_sc)
            out.append((pos.key(), best_sc, best))
    return out


def _score_chunk(store_path: str, tt_bits: int,
                 packed: list[tuple[int, int]]) -> list[tuple[int, int, int]]:
    store = WdlStore(store_path)
    g = store.geometry
    positions = [Position(g, cur, msk, validate=False)
                 for cur, msk in packed]
    return _score_positions(store, positions, tt_bits)


def build_opening_book(store: WdlStore, ply: int, workers: int = 1,
                       tt_bits: int = 20, out_path: str | None = None) -> str:
    """Evaluate every ply-deep position with the store-backed search.

    Aborts if the enumeration disagrees with the solved layer's
    position count (consistency failure between the two subsystems).
    """
    g = store.geometry
    positions = enumerate_ply(g, ply)
    expected = _expected_count(store, ply)
    if len(positions) != expected:
        raise C4SolverError(
            f"opening book enumeration found {len(positions)} positions "
            f"at ply {ply}, the solved layer holds {expected}")
    if workers <= 1:
        results = _score_positions(store, positions, tt_bits)
    else:
        chunks = [positions[i::workers] for i in range(workers)]
        packed = [[(p.current, p.mask) for p in chunk] for chunk in chunks]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_score_chunk, store.directory, tt_bits,
                                   chunk) for chunk in packed if chunk]
            for fut in futures:
                results.extend(fut.result())
    results.sort()
    records = np.empty(len(results), BOOK_RECORD)
    for i, (key, score, move) in enumerate(results):
        records[i] = (key, score, move)
    if out_path is None:
        out_path = os.path.join(store.directory, f"book_ply{ply}.c4book")
    header = (BOOK_MAGIC + bytes([g.width, g.height, ply, 0])
              + len(records).to_bytes(4, "little"))
    with open(out_path, "wb") as fh:
        fh.write(header)
        fh.write(records.tobytes())
    return out_path


class OpeningBook:
    """Binary-search lookups over a built book file."""

    def __init__(self, path: str):
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < BOOK_HEADER_SIZE or blob[:8] != BOOK_MAGIC:
            raise UnsupportedFormat(f"{path}: not an opening book")
        self.geometry = BoardGeometry(blob[8], blob[9])
        self.ply = blob[10]
        count = int.from_bytes(blob[12:16], "little")
        body = blob[BOOK_HEADER_SIZE:]
        if len(body) != count * BOOK_RECORD.itemsize:
            raise CorruptFile(f"{path}: expected {count} records, body has "
                              f"{len(body)} bytes")
        self.records = np.frombuffer(body, BOOK_RECORD)
        self.keys = self.records["key"]

    def __len__(self) -> int:
        return len(self.records)

    def lookup(self, pos: Position) -> tuple[int, int | None] | None:
        """(score, best move) for a book-ply position, None if absent."""
        if pos.ply != self.ply or pos.geometry != self.geometry:
            return None
        i = int(np.searchsorted(self.keys, pos.key()))
        if i >= len(self.keys) or int(self.keys[i]) != pos.key():
            return None
        rec = self.records[i]
        move = None if rec["move"] == NO_MOVE else int(rec["move"])
        return int(rec["score"]), move
