"""Serialization round-trips, corruption detection, WDL lookups."""
from __future__ import annotations

import os

import numpy as np
import pytest

from c4solver.bdd import FALSE, TRUE
from c4solver.bitboard import BoardGeometry, Position
from c4solver.encoding import EncodingKind
from c4solver.errors import (CorruptFile, IllegalPosition, MissingLayer,
                             UnsupportedFormat)
from c4solver.solver import SolveBudget, SolverContext, solve
from c4solver.store import (HEADER_SIZE, Wdl, WdlStore, layer_path, load_bdd,
                            save_bdd, store_dir)

C = EncodingKind.COMPRESSED


@pytest.fixture
def ctx44():
    return SolverContext(BoardGeometry(4, 4), C, 1 << 20)


def test_terminal_roundtrip_and_sizes(ctx44, tmp_path):
    for root, name in ((TRUE, "true"), (FALSE, "false")):
        path = str(tmp_path / f"{name}.bdd")
        save_bdd(ctx44.mgr, ctx44.enc, root, path, 0)
        assert os.path.getsize(path) == HEADER_SIZE + 8  # header + checksum
        loaded, meta = load_bdd(ctx44.mgr, ctx44.enc, path)
        assert loaded == root
        assert meta["ply"] == 0


def test_roundtrip_preserves_semantics(ctx44, tmp_path):
    from c4solver.solver import backward_pass, forward_pass
    layers = forward_pass(ctx44)
    backward_pass(ctx44, layers)
    layer = layers[5]
    mgr, enc = ctx44.mgr, ctx44.enc
    path = str(tmp_path / "win5.bdd")
    save_bdd(mgr, enc, layer.win, path, 5)
    loaded, meta = load_bdd(mgr, enc, path)
    # same manager: canonicity makes the round-trip literally the same node
    assert loaded == layer.win
    assert meta["ply"] == 5
    # fresh manager: counts and sampled evals agree
    other = SolverContext(BoardGeometry(4, 4), C, 1 << 20)
    again, _ = load_bdd(other.mgr, other.enc, path)
    assert other.mgr.node_count(again) == mgr.node_count(layer.win)
    assert other.mgr.satcount(again, other.enc.vars_for_ply(5)) \
        == mgr.satcount(layer.win, enc.vars_for_ply(5))
    rng = np.random.default_rng(5)
    for _ in range(50):
        bits = rng.integers(0, 2, other.mgr.num_vars).astype(np.uint8)
        assert other.mgr.eval(again, bits) == mgr.eval(layer.win, bits)


def test_corrupt_body_detected(ctx44, tmp_path):
    from c4solver.solver import forward_pass
    layers = forward_pass(ctx44, max_ply=4)
    path = str(tmp_path / "l.bdd")
    save_bdd(ctx44.mgr, ctx44.enc, layers[4].states, path, 4)
    blob = bytearray(open(path, "rb").read())
    blob[HEADER_SIZE + 5] ^= 0x40
    open(path, "wb").write(bytes(blob))
    with pytest.raises(CorruptFile, match="checksum"):
        load_bdd(ctx44.mgr, ctx44.enc, path)


def test_truncated_file_detected(ctx44, tmp_path):
    from c4solver.solver import forward_pass
    layers = forward_pass(ctx44, max_ply=3)
    path = str(tmp_path / "l.bdd")
    save_bdd(ctx44.mgr, ctx44.enc, layers[3].states, path, 3)
    blob = open(path, "rb").read()
    open(path, "wb").write(blob[:len(blob) - 5])
    with pytest.raises(CorruptFile):
        load_bdd(ctx44.mgr, ctx44.enc, path)


def test_bad_magic_and_version(ctx44, tmp_path):
    path = str(tmp_path / "x.bdd")
    save_bdd(ctx44.mgr, ctx44.enc, TRUE, path, 0)
    blob = bytearray(open(path, "rb").read())
    wrong = bytes(blob[:8].replace(b"C4BDD", b"NOPE!")) + bytes(blob[8:])
    open(path, "wb").write(wrong)
    with pytest.raises(UnsupportedFormat, match="magic"):
        load_bdd(ctx44.mgr, ctx44.enc, path)
    blob[8] = 99
    open(path, "wb").write(bytes(blob))
    with pytest.raises(UnsupportedFormat, match="version"):
        load_bdd(ctx44.mgr, ctx44.enc, path)


def test_geometry_mismatch_rejected(ctx44, tmp_path):
    path = str(tmp_path / "x.bdd")
    save_bdd(ctx44.mgr, ctx44.enc, TRUE, path, 0)
    other = SolverContext(BoardGeometry(5, 4), C, 1 << 14)
    with pytest.raises(UnsupportedFormat, match="expects"):
        load_bdd(other.mgr, other.enc, path)


def test_store_lookup_basics(store_44):
    g = store_44.geometry
    empty = Position.empty(g)
    assert store_44.lookup(empty) is Wdl.DRAW  # 4x4 is drawn
    # vertical line for the first player: mover (p2) just lost
    pos = Position.from_moves(g, "1212121")
    assert pos.last_mover_won()
    assert store_44.lookup(pos) is Wdl.LOSS


def test_store_lookup_full_board_draw(solved_33):
    store = WdlStore(solved_33[0])
    g = store.geometry
    # fill 3x3 completely; no four-in-a-row fits anywhere
    pos = Position.from_moves(g, "123231312")
    assert pos.ply == 9
    assert store.lookup(pos) is Wdl.DRAW


def test_store_lookup_mirror_symmetry(store_44, oracle_44):
    g = store_44.geometry
    keys = oracle_44.positions_at(6)
    for key in keys[:: max(1, len(keys) // 50)]:
        cur, msk = oracle_44.to_bitboard(key)
        pos = Position(g, cur, msk, validate=False)
        assert store_44.lookup(pos) == store_44.lookup(pos.mirror())


def test_store_lookup_agrees_with_oracle_sampled(store_44, oracle_44):
    g = store_44.geometry
    for ply in range(len(oracle_44.layers)):
        keys = oracle_44.positions_at(ply)
        for key in keys[:: max(1, len(keys) // 25)]:
            cur, msk = oracle_44.to_bitboard(key)
            got = int(store_44.lookup(Position(g, cur, msk, validate=False)))
            assert got == oracle_44.wdl(key)


def test_missing_layer_raises(tmp_path):
    g = BoardGeometry(4, 4)
    solve(g, C, SolveBudget(1 << 20, max_ply=6, out_dir=str(tmp_path)))
    store = WdlStore(str(tmp_path))
    deep = Position.from_moves(g, "12341234")  # ply 8 > stored horizon
    with pytest.raises(MissingLayer):
        store.lookup(deep)


def test_store_rejects_foreign_position(store_44):
    with pytest.raises(IllegalPosition):
        store_44.lookup(Position.empty(BoardGeometry(5, 4)))


def test_lookup_moves_inverts_perspective(store_44):
    g = store_44.geometry
    pos = Position.from_moves(g, "112122")  # second player threatens col 2
    per_move = store_44.lookup_moves(pos)
    assert set(per_move) == set(pos.legal_moves())
    for col, wdl in per_move.items():
        assert store_44.lookup(pos.play(col)) == wdl.invert()


def test_directory_layout(solved_44):
    base, _ = solved_44
    d = store_dir(base, BoardGeometry(4, 4))
    assert d.endswith("w4h4")
    assert layer_path(d, 3, "win").endswith("layer_3.win.bdd")
    store = WdlStore(base)  # resolves the geometry subdirectory itself
    assert store.geometry == BoardGeometry(4, 4)
    assert store.available_plies() == list(range(17))


def test_batch_lookup_kernel_matches_lookup(store_44, oracle_44):
    from c4solver import _searchops as sops
    g = store_44.geometry
    ply = 7
    keys = oracle_44.positions_at(ply)
    curs = np.empty(len(keys), np.int64)
    msks = np.empty(len(keys), np.int64)
    for i, key in enumerate(keys):
        curs[i], msks[i] = oracle_44.to_bitboard(key)
    win, lost = store_44.roots_for_ply(ply)
    out = np.empty(len(keys), np.int8)
    var_arr, lo_arr, hi_arr = store_44.mgr.node_arrays()
    sops.wdl_eval_many(curs, msks, win, lost, var_arr, lo_arr, hi_arr,
                       store_44.enc.var_kind, store_44.enc.var_bit,
                       g.bottom_mask, g.stride, out)
    for i, key in enumerate(keys):
        assert out[i] == oracle_44.wdl(key)
        pos = Position(g, int(curs[i]), int(msks[i]), validate=False)
        assert int(store_44.lookup(pos)) == out[i]
