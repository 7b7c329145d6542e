"""HTTP service tests over a solved 4x4 store."""
from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from c4solver.bitboard import BoardGeometry, Position
from c4solver.service import create_app
from c4solver.solver import SolveBudget, solve
from c4solver.encoding import EncodingKind
from c4solver.store import Wdl, WdlStore


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    base = tmp_path_factory.mktemp("svc44")
    solve(BoardGeometry(4, 4), EncodingKind.COMPRESSED,
          SolveBudget(1 << 20, out_dir=str(base)))
    app = create_app(str(base))
    with TestClient(app) as c:
        c.store_path = str(base)
        yield c


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    data = r.json()
    assert data["status"] == "ok"
    assert (data["width"], data["height"]) == (4, 4)
    assert data["encoding"] == "compressed"
    assert data["plies_loaded"] == 17


def test_eval_empty_board(client):
    r = client.get("/eval", params={"moves": ""})
    assert r.status_code == 200
    data = r.json()
    assert data["wdl"] == "draw"  # 4x4 is drawn
    assert data["ply"] == 0
    assert data["side_to_move"] == 1
    assert len(data["movelist"]) == 4
    assert data["best_move"] in (1, 2, 3, 4)
    assert not data["terminal"]


def test_eval_matches_direct_store_lookups(client):
    store = WdlStore(client.store_path)
    g = store.geometry
    for moves in ("", "1", "22", "123", "4411", "123412"):
        data = client.get("/eval", params={"moves": moves}).json()
        pos = Position.from_moves(g, moves)
        assert data["wdl"] == store.lookup(pos).name.lower()
        per = store.lookup_moves(pos)
        assert {m["column"] - 1 for m in data["movelist"]} == set(per)
        for m in data["movelist"]:
            assert m["wdl"] == per[m["column"] - 1].name.lower()


def test_eval_search_scores(client):
    data = client.get("/eval", params={"moves": "11",
                                       "search": "true"}).json()
    assert all(m["score"] is not None for m in data["movelist"])
    assert not data["partial"]
    # the winning-most move must carry the maximal score among best-wdl ties
    best = data["best_move"] - 1
    best_wdl = max(m["wdl"] for m in data["movelist"])


def test_eval_line_terminal(client):
    # vertical four for the first player on 4x4
    r = client.get("/eval", params={"moves": "1212121"})
    # game ends exactly at ply 7; all seven moves are legal
    assert r.status_code == 200
    data = r.json()
    assert data["terminal"]
    assert data["wdl"] == "loss"  # mover faces the opponent's line
    assert data["movelist"] == []
    assert data["best_move"] is None


def test_eval_illegal_moves_400(client):
    assert client.get("/eval", params={"moves": "5"}).status_code == 400
    assert client.get("/eval",
                      params={"moves": "11111"}).status_code == 400
    assert client.get("/eval", params={"moves": "x1"}).status_code == 422


def test_eval_missing_layer_404(tmp_path):
    solve(BoardGeometry(4, 4), EncodingKind.COMPRESSED,
          SolveBudget(1 << 20, max_ply=5, out_dir=str(tmp_path)))
    with TestClient(create_app(str(tmp_path))) as c:
        assert c.get("/eval", params={"moves": "123412"}).status_code == 404


def test_store_not_loaded_503(tmp_path):
    with TestClient(create_app(str(tmp_path / "missing"))) as c:
        assert c.get("/health").status_code == 503
        assert c.get("/eval", params={"moves": ""}).status_code == 503


def test_responses_are_deterministic(client):
    a = client.get("/eval", params={"moves": "123", "search": "true"}).json()
    b = client.get("/eval", params={"moves": "123", "search": "true"}).json()
    assert a == b


def test_eval_agrees_with_oracle_sampled(client, oracle_44):
    g = BoardGeometry(4, 4)
    # walk oracle-known move strings: breadth-first over a few lines
    lines = ["", "1", "2", "3", "4", "12", "23", "34", "44", "1234",
             "4321", "1122", "332211"]
    for moves in lines:
        pos = Position.from_moves(g, moves)
        key = _oracle_key(oracle_44, moves)
        data = client.get("/eval", params={"moves": moves}).json()
        want = {1: "win", 0: "draw", -1: "loss"}[oracle_44.wdl(key)]
        assert data["wdl"] == want


def _oracle_key(oracle, moves: str) -> int:
    heights = [0] * oracle.width
    key = 0
    for i, ch in enumerate(moves):
        col = int(ch) - 1
        digit = 1 + (i % 2)
        key += digit * oracle.pow3[oracle.cell_index(col, heights[col])]
        heights[col] += 1
    return key
