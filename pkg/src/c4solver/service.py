"""HTTP facade over the WDL store and search, for the browser explorer.

Stateless JSON endpoints:

* ``GET /health`` - store metadata and loaded plies.
* ``GET /eval?moves=<digits>&search=<bool>`` - overall value, per-move
  values (mover's perspective) and the recommended move for the
  position reached by the 1-based column digit string.

Responses are pure functions of (store, moves, search); search time is
capped per request, falling back to table-only data with
``partial: true``.
"""
from __future__ import annotations

import threading
import time

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .bitboard import Position
from .errors import IllegalMove, MissingLayer
from .search import SearchEngine, order_moves
from .store import Wdl, WdlStore

PROBE_TT_BITS = 16


class MoveEval(BaseModel):
    column: int
    wdl: str
    score: int | None = None


class EvalResponse(BaseModel):
    moves: str
    ply: int
    side_to_move: int
    wdl: str
    terminal: bool
    best_move: int | None
    movelist: list[MoveEval]
    partial: bool = False


class HealthResponse(BaseModel):
    status: str
    width: int
    height: int
    encoding: str
    max_ply: int
    plies_loaded: int


def _wdl_name(w: Wdl) -> str:
    return w.name.lower()


def create_app(db_path: str, search_time_cap: float = 5.0) -> FastAPI:
    app = FastAPI(title="c4solver explorer service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["GET"], allow_headers=["*"])
    state = {"store": None, "error": None}
    lock = threading.Lock()
    try:
        state["store"] = WdlStore(db_path)
    except Exception as e:  # surfaced as 503 on use
        state["error"] = str(e)

    def store_or_503() -> WdlStore:
        if state["store"] is None:
            raise HTTPException(status_code=503,
                                detail=f"store not loaded: {state['error']}")
        return state["store"]

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        store = store_or_503()
        return HealthResponse(
            status="ok",
            width=store.geometry.width,
            height=store.geometry.height,
            encoding=store.kind.value,
            max_ply=store.geometry.max_ply,
            plies_loaded=len(store.available_plies()),
        )

    @app.get("/eval", response_model=EvalResponse)
    def eval_position(moves: str = Query("", pattern=r"^[0-9]*$"),
                      search: bool = Query(False)) -> EvalResponse:
        store = store_or_503()
        try:
            pos = Position.from_moves(store.geometry, moves)
        except IllegalMove as e:
            raise HTTPException(status_code=400, detail=str(e))
        with lock:
            try:
                return _evaluate(store, pos, moves, search, search_time_cap)
            except MissingLayer as e:
                raise HTTPException(status_code=404, detail=str(e))

    return app


def _evaluate(store: WdlStore, pos: Position, moves: str, search: bool,
              time_cap: float) -> EvalResponse:
    overall = store.lookup(pos)
    if pos.is_terminal():
        return EvalResponse(moves=moves, ply=pos.ply,
                            side_to_move=pos.to_move + 1,
                            wdl=_wdl_name(overall), terminal=True,
                            best_move=None, movelist=[])
    per_move = store.lookup_moves(pos)
    scores: dict[int, int] = {}
    partial = False
    if search:
        engine = SearchEngine(store.geometry, tt_bits=PROBE_TT_BITS,
                              store=store)
        t0 = time.perf_counter()
        for col in order_moves(pos):
            if time.perf_counter() - t0 > time_cap:
                partial = True
                break
            if pos.is_winning_move(col):
                scores[col] = store.geometry.max_ply - pos.ply
            else:
                child = pos.play(col)
                scores[col] = 0 if child.ply == store.geometry.max_ply \
                    else -engine.search(child)
    best = _pick_best(pos, per_move, scores)
    movelist = [MoveEval(column=c + 1, wdl=_wdl_name(per_move[c]),
                         score=scores.get(c))
                for c in sorted(per_move)]
    return EvalResponse(moves=moves, ply=pos.ply,
                        side_to_move=pos.to_move + 1,
                        wdl=_wdl_name(overall), terminal=False,
                        best_move=best + 1, movelist=movelist,
                        partial=partial)


def _pick_best(pos: Position, per_move: dict[int, Wdl],
               scores: dict[int, int]) -> int:
    """Maximal WDL first; exact scores, then ordering rank break ties."""
    best_wdl = max(per_move.values())
    candidates = [c for c, w in per_move.items() if w == best_wdl]
    if scores and all(c in scores for c in candidates):
        top = max(scores[c] for c in candidates)
        candidates = [c for c in candidates if scores[c] == top]
    for col in order_moves(pos):
        if col in candidates:
            return col
    return candidates[0]
