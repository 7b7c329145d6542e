"""Bit-exact BDD serialization and the win/draw/loss lookup facade.

File layout (all little-endian):

    bytes  0..7   magic "C4BDD1\\0\\0"
    byte   8      format version (1)
    byte   9      encoding kind id (0 row-wise, 1 column-wise, 2 compressed)
    byte   10     board width
    byte   11     board height
    byte   12     ply
    byte   13     root code: 0 FALSE, 1 TRUE, 2 root is the last record
    bytes  14..15 u16 global variable count
    body          node records (var u32, low u32, high u32), children first;
                  ids 0/1 are the terminals, record j has id j+2
    trailer       8-byte BLAKE2b checksum of the body

Reload preserves node_count, satcount and eval results exactly; a
solved board's store is a directory of ``layer_<ply>.<kind>.bdd`` files
(kind in states/win/lost) plus ``report.json``.  The draw set is never
stored: draw = states AND NOT win AND NOT lost.
"""
from __future__ import annotations

import enum
import hashlib
import os
from collections import OrderedDict

import numpy as np

from .bdd import FALSE, TRUE, BddManager, NodeRef
from .bitboard import BoardGeometry, Position
from .encoding import Encoding, EncodingKind, make_encoding, num_levels_for
from .errors import (CorruptFile, IllegalPosition, MissingLayer,
                     UnsupportedFormat)

MAGIC = b"C4BDD1\x00\x00"
VERSION = 1
_KIND_IDS = {EncodingKind.STANDARD_ROW: 0, EncodingKind.STANDARD_COL: 1,
             EncodingKind.COMPRESSED: 2}
_IDS_KIND = {v: k for k, v in _KIND_IDS.items()}
HEADER_SIZE = 16
RECORD_SIZE = 12
CHECKSUM_SIZE = 8


class Wdl(enum.IntEnum):
    """Game value for the player to move."""

    LOSS = -1
    DRAW = 0
    WIN = 1

    def invert(self) -> "Wdl":
        return Wdl(-int(self))


def store_dir(base: str, geometry: BoardGeometry) -> str:
    return os.path.join(base, f"w{geometry.width}h{geometry.height}")


def layer_path(directory: str, ply: int, kind: str) -> str:
    return os.path.join(directory, f"layer_{ply}.{kind}.bdd")


def _checksum(body: bytes) -> bytes:
    return hashlib.blake2b(body, digest_size=CHECKSUM_SIZE).digest()


def save_bdd(mgr: BddManager, enc: Encoding, root: NodeRef, path: str,
             ply: int) -> None:
    order = mgr.topo_nodes(root)
    n = len(order)
    remap = np.zeros(mgr.capacity, np.uint32)
    remap[TRUE] = 1
    remap[order] = np.arange(2, n + 2, dtype=np.uint32)
    var_arr, lo_arr, hi_arr = mgr.node_arrays()
    records = np.empty((n, 3), dtype="<u4")
    records[:, 0] = var_arr[order]
    records[:, 1] = remap[lo_arr[order]]
    records[:, 2] = remap[hi_arr[order]]
    body = records.tobytes()
    root_code = root if root in (FALSE, TRUE) else 2
    g = enc.geometry
    header = (MAGIC
              + bytes([VERSION, _KIND_IDS[enc.kind], g.width, g.height,
                       ply, root_code])
              + int(enc.num_levels).to_bytes(2, "little"))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)
        fh.write(_checksum(body))


def read_header(path: str) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
    return _parse_header(head, path)


def _parse_header(head: bytes, path: str) -> dict:
    if len(head) < HEADER_SIZE:
        raise CorruptFile(f"{path}: truncated header at byte {len(head)}")
    if head[:8] != MAGIC:
        raise UnsupportedFormat(f"{path}: bad magic {head[:8]!r}")
    if head[8] != VERSION:
        raise UnsupportedFormat(f"{path}: unsupported version {head[8]}")
    if head[9] not in _IDS_KIND:
        raise UnsupportedFormat(f"{path}: unknown encoding id {head[9]}")
    return {
        "kind": _IDS_KIND[head[9]],
        "width": head[10],
        "height": head[11],
        "ply": head[12],
        "root_code": head[13],
        "num_levels": int.from_bytes(head[14:16], "little"),
    }


def load_bdd(mgr: BddManager, enc: Encoding, path: str
             ) -> tuple[NodeRef, dict]:
    """Reload a serialized BDD into the manager; returns an owned root."""
    with open(path, "rb") as fh:
        blob = fh.read()
    meta = _parse_header(blob[:HEADER_SIZE], path)
    g = enc.geometry
    if (meta["kind"] is not enc.kind or meta["width"] != g.width
            or meta["height"] != g.height
            or meta["num_levels"] != enc.num_levels):
        raise UnsupportedFormat(
            f"{path}: file is {meta['width']}x{meta['height']} "
            f"{meta['kind'].value}, store expects {g} {enc.kind.value}")
    body = blob[HEADER_SIZE:-CHECKSUM_SIZE]
    if len(blob) < HEADER_SIZE + CHECKSUM_SIZE or \
            len(body) % RECORD_SIZE != 0:
        raise CorruptFile(f"{path}: truncated body at byte {len(blob)}")
    if _checksum(body) != blob[-CHECKSUM_SIZE:]:
        raise CorruptFile(f"{path}: checksum mismatch over body bytes "
                          f"{HEADER_SIZE}..{len(blob) - CHECKSUM_SIZE}")
    n = len(body) // RECORD_SIZE
    if meta["root_code"] == 0:
        return mgr.ref(FALSE), meta
    if meta["root_code"] == 1:
        return mgr.ref(TRUE), meta
    if meta["root_code"] != 2 or n == 0:
        raise CorruptFile(f"{path}: root code {meta['root_code']} with "
                          f"{n} records")
    records = np.frombuffer(body, dtype="<u4").reshape(n, 3)
    root = mgr.insert_records(records[:, 0].astype(np.int32),
                              records[:, 1].astype(np.int64),
                              records[:, 2].astype(np.int64))
    return root, meta


class WdlStore:
    """Query facade over a solved board's layer files.

    Lazily loads at most the win/lost pair for a queried ply, keeping a
    bounded LRU of decoded plies; evicted roots are deref'd and the
    manager reclaims them under pool pressure.
    """

    def __init__(self, path: str, capacity: int | None = None,
                 max_cached_plies: int = 8):
        self.directory = self._locate(path)
        sample = self._sample_file()
        meta = read_header(sample)
        self.geometry = BoardGeometry(meta["width"], meta["height"])
        self.kind: EncodingKind = meta["kind"]
        if capacity is None:
            capacity = int(os.environ.get("C4_NODE_CAPACITY", 0)) or (1 << 22)
        self.mgr = BddManager(capacity, num_levels_for(self.geometry,
                                                       self.kind))
        self.enc = make_encoding(self.mgr, self.geometry, self.kind)
        self.max_cached_plies = max_cached_plies
        self._cache: OrderedDict[int, tuple[NodeRef, NodeRef]] = OrderedDict()

    @staticmethod
    def _locate(path: str) -> str:
        if not os.path.isdir(path):
            raise MissingLayer(f"store directory {path!r} does not exist")
        if any(f.endswith(".bdd") for f in os.listdir(path)):
            return path
        subs = sorted(d for d in os.listdir(path)
                      if d.startswith("w")
                      and os.path.isdir(os.path.join(path, d)))
        for d in subs:
            full = os.path.join(path, d)
            if any(f.endswith(".bdd") for f in os.listdir(full)):
                return full
        raise MissingLayer(f"no layer files under {path!r}")

    def _sample_file(self) -> str:
        for name in sorted(os.listdir(self.directory)):
            if name.endswith(".bdd"):
                return os.path.join(self.directory, name)
        raise MissingLayer(f"no layer files under {self.directory!r}")

    def available_plies(self) -> list[int]:
        plies = []
        for ply in range(self.geometry.max_ply + 1):
            if (os.path.exists(layer_path(self.directory, ply, "win"))
                    and os.path.exists(layer_path(self.directory, ply,
                                                  "lost"))):
                plies.append(ply)
        return plies

    def report(self) -> dict | None:
        import json
        path = os.path.join(self.directory, "report.json")
        if not os.path.exists(path):
            return None
        with open(path) as fh:
            return json.load(fh)

    def roots_for_ply(self, ply: int) -> tuple[NodeRef, NodeRef]:
        """(win, lost) roots of one ply, loading and caching on demand."""
        if ply in self._cache:
            self._cache.move_to_end(ply)
            return self._cache[ply]
        win_p = layer_path(self.directory, ply, "win")
        lost_p = layer_path(self.directory, ply, "lost")
        if not (os.path.exists(win_p) and os.path.exists(lost_p)):
            raise MissingLayer(
                f"ply {ply} not present in store {self.directory!r}")
        win, _ = load_bdd(self.mgr, self.enc, win_p)
        lost, _ = load_bdd(self.mgr, self.enc, lost_p)
        self._cache[ply] = (win, lost)
        while len(self._cache) > self.max_cached_plies:
            _, (w, l) = self._cache.popitem(last=False)
            self.mgr.deref(w)
            self.mgr.deref(l)
        return win, lost

    def lookup(self, pos: Position) -> Wdl:
        """Win/draw/loss for the player to move in pos."""
        if pos.geometry != self.geometry:
            raise IllegalPosition(
                f"position is {pos.geometry}, store is {self.geometry}")
        Position(self.geometry, pos.current, pos.mask)  # full validation
        if pos.last_mover_won():
            return Wdl.LOSS
        win, lost = self.roots_for_ply(pos.ply)
        assignment = self.enc.assignment(pos)
        if self.mgr.eval(win, assignment):
            return Wdl.WIN
        if self.mgr.eval(lost, assignment):
            return Wdl.LOSS
        return Wdl.DRAW

    def lookup_moves(self, pos: Position) -> dict[int, Wdl]:
        """Post-move value of every legal column, mover's perspective."""
        out = {}
        for col in pos.legal_moves():
            child = pos.play(col)
            out[col] = self.lookup(child).invert()
        return out

    def close(self) -> None:
        for w, l in self._cache.values():
            self.mgr.deref(w)
            self.mgr.deref(l)
        self._cache.clear()
