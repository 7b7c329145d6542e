"""Strong ConnectFour solver toolkit.

BDD-based symbolic counting and retrograde win/draw/loss solving,
a persisted queryable WDL store, bitboard alpha-beta search for exact
distance scores, opening book generation, and an HTTP explorer service.
"""
from .bdd import FALSE, TRUE, BddManager, VarSet
from .bitboard import BoardGeometry, Position
from .book import OpeningBook, build_opening_book
from .encoding import Encoding, EncodingKind, make_encoding
from .errors import (AllocationError, C4SolverError, CorruptFile,
                     DependsOutsideVarSet, DoubleFree, IllegalMove,
                     IllegalPosition, MissingLayer, PoolExhausted,
                     UnsupportedFormat)
from .search import BestMove, SearchEngine, count_threats, order_moves, \
    static_evaluate
from .solver import (LayerSet, SolveBudget, SolverContext, backward_pass,
                     count_positions, forward_pass, solve)
from .store import Wdl, WdlStore, load_bdd, save_bdd

__version__ = "0.1.0"

__all__ = [
    "AllocationError", "BddManager", "BestMove", "BoardGeometry",
    "C4SolverError", "CorruptFile", "DependsOutsideVarSet", "DoubleFree",
    "Encoding", "EncodingKind", "FALSE", "IllegalMove", "IllegalPosition",
    "LayerSet", "MissingLayer", "OpeningBook", "PoolExhausted", "Position",
    "SearchEngine", "SolveBudget", "SolverContext", "TRUE",
    "UnsupportedFormat", "VarSet", "Wdl", "WdlStore", "backward_pass",
    "build_opening_book", "count_positions", "count_threats",
    "forward_pass", "load_bdd", "make_encoding", "order_moves", "save_bdd",
    "solve", "static_evaluate",
]
