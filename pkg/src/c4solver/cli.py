"""Command-line front end: count, solve, query, book, serve."""
from __future__ import annotations

import argparse
import json
import os
import sys

from .bitboard import BoardGeometry, Position
from .book import OpeningBook, build_opening_book
from .encoding import EncodingKind
from .errors import C4SolverError, IllegalMove, MissingLayer
from .search import SearchEngine
from .solver import DEFAULT_CAPACITY, SolveBudget, count_positions, solve
from .store import Wdl, WdlStore


def _open_store(path: str) -> WdlStore:
    """Store handles at CLI startup; absence is a usage error (exit 2)."""
    return WdlStore(path)


def parse_node_count(text: str) -> int:
    """Node counts with binary K/M/G suffixes, e.g. '4M' = 4*2^20."""
    text = text.strip()
    suffixes = {"K": 1 << 10, "M": 1 << 20, "G": 1 << 30}
    mult = 1
    if text and text[-1].upper() in suffixes:
        mult = suffixes[text[-1].upper()]
        text = text[:-1]
    try:
        value = int(text) * mult
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"not a node count: {text!r} (use digits with optional K/M/G)")
    if value < 2:
        raise argparse.ArgumentTypeError("node count must be at least 2")
    return value


def default_capacity() -> int:
    env = os.environ.get("C4_NODE_CAPACITY")
    if env:
        return parse_node_count(env)
    return DEFAULT_CAPACITY


def _positive_dim(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a board dimension: {text!r}")
    if not 1 <= v <= 13:
        raise argparse.ArgumentTypeError(
            f"board dimension {v} outside the supported 1..13 range")
    return v


def _add_common(p: argparse.ArgumentParser, with_geometry: bool = True):
    p.add_argument("--help", action="help",
                   help="show this help message and exit")
    if with_geometry:
        p.add_argument("-w", "--width", type=_positive_dim, default=7)
        p.add_argument("-h", "--height", type=_positive_dim, default=6)
        p.add_argument("-e", "--encoding", default="compressed",
                       choices=[k.value for k in EncodingKind])
        p.add_argument("-n", "--nodes", type=parse_node_count,
                       default=None, help="node pool capacity (K/M/G)")
    p.add_argument("--json", action="store_true",
                   help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(prog="c4solver", add_help=False)
    root.add_argument("--help", action="help")
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", add_help=False,
                       help="count unique positions per ply")
    _add_common(p)
    p.add_argument("--ply", type=int, default=None,
                   help="truncate the forward pass at this ply")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("solve", add_help=False,
                       help="solve a board and persist the WDL store")
    _add_common(p)
    p.add_argument("-o", "--out", required=True,
                   help="output directory for the store")
    p.add_argument("--ply", type=int, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("query", add_help=False,
                       help="evaluate a move sequence against a store")
    _add_common(p, with_geometry=False)
    p.add_argument("--db", required=True, help="store directory")
    p.add_argument("moves", nargs="?", default="",
                   help="1-based column digits, e.g. 44444")
    p.add_argument("--no-search", action="store_true",
                   help="table value only, skip distance search")
    p.add_argument("--tt-bits", type=int, default=22)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("book", add_help=False,
                       help="build the opening book from a solved store")
    _add_common(p, with_geometry=False)
    p.add_argument("--db", required=True)
    p.add_argument("--ply", type=int, default=8)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_book)

    p = sub.add_parser("serve", add_help=False,
                       help="HTTP evaluation service over a store")
    _add_common(p, with_geometry=False)
    p.add_argument("--db", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--search-cap", type=float, default=5.0,
                   help="seconds of search per request before partial reply")
    p.set_defaults(func=cmd_serve)
    return root


def _fmt(n) -> str:
    return f"{n:,}"


def cmd_count(args) -> int:
    geometry = BoardGeometry(args.width, args.height)
    cap = args.nodes or default_capacity()
    report = count_positions(geometry, EncodingKind.parse(args.encoding),
                             capacity=cap, max_ply=args.ply)
    if args.json:
        print(json.dumps(report, sort_keys=True))
        return 0
    print(f"board {geometry}  encoding {args.encoding}  capacity {cap}")
    print(f"{'ply':>4} {'positions':>22} {'terminal':>16}")
    for ply, (tot, term) in enumerate(zip(report["per_ply_totals"],
                                          report["per_ply_terminal"])):
        print(f"{ply:>4} {_fmt(tot):>22} {_fmt(term):>16}")
    print(f"total positions: {report['positions']}")
    print(f"peak nodes: {_fmt(report['peak_nodes'])}   "
          f"GC: {report['gc_share'] * 100:.1f}%   "
          f"time: {report['wall_time_s']:.2f}s")
    return 0


def cmd_solve(args) -> int:
    geometry = BoardGeometry(args.width, args.height)
    cap = args.nodes or default_capacity()
    budget = SolveBudget(node_capacity=cap, max_ply=args.ply,
                         out_dir=args.out)
    report = solve(geometry, EncodingKind.parse(args.encoding), budget)
    if args.json:
        print(json.dumps(report, sort_keys=True))
        return 0
    print(f"board {geometry}  encoding {args.encoding}  capacity {cap}")
    print(f"{'ply':>4} {'won':>20} {'drawn':>18} {'lost':>20} "
          f"{'total':>22} {'terminal':>18}")
    for row in report["plies"]:
        print(f"{row['ply']:>4} {_fmt(row['won']):>20} "
              f"{_fmt(row['drawn']):>18} {_fmt(row['lost']):>20} "
              f"{_fmt(row['total']):>22} {_fmt(row['terminal']):>18}")
    print(f"value of the empty board: {report['root_value'].upper()}")
    print(f"peak nodes: {_fmt(report['peak_nodes'])}   "
          f"GC: {report['gc_share'] * 100:.1f}%   "
          f"time: {report['wall_time_s']:.2f}s")
    return 0


def _describe(score: int, n: int) -> str:
    if score > 0:
        return f"win with the final disc at ply {n + 1 - score}"
    if score < 0:
        return f"loss with the final disc at ply {n + 1 + score}"
    return "draw"


def cmd_query(args) -> int:
    try:
        store = _open_store(args.db)
    except MissingLayer as e:
        print(f"store not usable: {e}", file=sys.stderr)
        return 2
    try:
        pos = Position.from_moves(store.geometry, args.moves)
    except IllegalMove as e:
        print(f"illegal move sequence: {e}", file=sys.stderr)
        return 2
    out = {"moves": args.moves, "ply": pos.ply,
           "side_to_move": pos.to_move + 1}
    if pos.is_terminal():
        wdl = Wdl.LOSS if pos.last_mover_won() else store.lookup(pos)
        out["wdl"] = wdl.name.lower()
        out["terminal"] = True
    else:
        out["wdl"] = store.lookup(pos).name.lower()
        out["terminal"] = False
        if not args.no_search:
            engine = SearchEngine(store.geometry, tt_bits=args.tt_bits,
                                  store=store)
            bm = engine.best_move(pos)
            out["best_move"] = bm.move + 1
            out["score"] = bm.score
            out["pv"] = "".join(str(m + 1) for m in bm.pv)
    if args.json:
        print(json.dumps(out, sort_keys=True))
        return 0
    print(f"position after '{args.moves}': ply {out['ply']}, "
          f"player {out['side_to_move']} to move")
    print(f"value: {out['wdl'].upper()}")
    if "best_move" in out:
        n = store.geometry.max_ply
        print(f"best move: column {out['best_move']} "
              f"({_describe(out['score'], n)})")
        print(f"principal variation: {out['pv']}")
    return 0


def cmd_book(args) -> int:
    try:
        store = _open_store(args.db)
    except MissingLayer as e:
        print(f"store not usable: {e}", file=sys.stderr)
        return 2
    path = build_opening_book(store, ply=args.ply, workers=args.workers,
                              out_path=args.out)
    book = OpeningBook(path)
    if args.json:
        print(json.dumps({"path": path, "entries": len(book),
                          "ply": args.ply}, sort_keys=True))
    else:
        print(f"book written to {path}: {len(book)} entries at "
              f"ply {args.ply}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(args.db, search_time_cap=args.search_cap)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as e:
        print(f"cannot serve on port {args.port}: {e}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except C4SolverError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
