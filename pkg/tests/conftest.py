from __future__ import annotations

import numpy as np
import pytest

from c4solver.bitboard import BoardGeometry, Position
from c4solver.encoding import EncodingKind
from c4solver.solver import SolveBudget, solve
from c4solver.store import WdlStore

from .oracle import ExplicitOracle


@pytest.fixture(scope="session")
def oracle_44() -> ExplicitOracle:
    o = ExplicitOracle(4, 4)
    o.solve()
    return o


@pytest.fixture(scope="session")
def oracle_54() -> ExplicitOracle:
    o = ExplicitOracle(5, 4)
    o.solve()
    return o


@pytest.fixture(scope="session")
def oracle_45() -> ExplicitOracle:
    o = ExplicitOracle(4, 5)
    o.solve()
    return o


def _solve_into(tmp_path_factory, w: int, h: int, capacity: int):
    base = tmp_path_factory.mktemp(f"store{w}x{h}")
    report = solve(BoardGeometry(w, h), EncodingKind.COMPRESSED,
                   SolveBudget(capacity, out_dir=str(base)))
    return str(base), report


@pytest.fixture(scope="session")
def solved_44(tmp_path_factory):
    """(store base dir, solve report) for the 4x4 board."""
    return _solve_into(tmp_path_factory, 4, 4, 1 << 20)


@pytest.fixture(scope="session")
def solved_33(tmp_path_factory):
    return _solve_into(tmp_path_factory, 3, 3, 1 << 18)


@pytest.fixture(scope="session")
def store_44(solved_44) -> WdlStore:
    return WdlStore(solved_44[0])


def oracle_bitboards(oracle: ExplicitOracle):
    """Per-ply (keys, currents, masks) arrays for sweep comparisons."""
    out = []
    for ply in range(len(oracle.layers)):
        keys = oracle.positions_at(ply)
        curs = np.empty(len(keys), np.int64)
        msks = np.empty(len(keys), np.int64)
        for i, key in enumerate(keys):
            cur, msk = oracle.to_bitboard(key)
            curs[i] = cur
            msks[i] = msk
        out.append((keys, curs, msks))
    return out


@pytest.fixture(scope="session")
def oracle_44_bitboards(oracle_44):
    return oracle_bitboards(oracle_44)


def positions_from(oracle: ExplicitOracle, geometry: BoardGeometry,
                   keys) -> list[Position]:
    out = []
    for key in keys:
        cur, msk = oracle.to_bitboard(key)
        out.append(Position(geometry, cur, msk, validate=False))
    return out
