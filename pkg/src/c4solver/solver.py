"""Forward reachability and retrograde win/draw/loss classification.

The forward pass produces one BDD of reachable positions per ply; the
backward pass splits each layer into win/lost (draw is derived, never
stored) from the perspective of the player to move, per the recurrences

    win[i]  = preimage(lost[i+1])  AND  states[i] AND NOT terminal
    draw[i] = preimage(draw[i+1])  AND  states[i] AND NOT terminal
                                   AND NOT win[i]
    lost[i] = remainder OR (states[i] AND terminal)

initialized at the last reached ply with win empty, draw the
non-terminal states and lost the terminal ones.  "terminal" at ply i
means the player who moved into ply i completed a line; only that
player can have a line in a reachable layered state space.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from . import store as store_mod
from .bdd import FALSE, BddManager, NodeRef
from .bitboard import BoardGeometry
from .encoding import (EncodingKind, make_encoding, num_levels_for,
                       subtract_terminals)
from .errors import C4SolverError

DEFAULT_CAPACITY = 1 << 22


@dataclass
class LayerSet:
    """One ply of the solution: reachable states and their WDL split."""

    ply: int
    states: NodeRef | None
    win: NodeRef | None = None
    lost: NodeRef | None = None
    counts: dict = field(default_factory=dict)


@dataclass
class SolveBudget:
    node_capacity: int = DEFAULT_CAPACITY
    max_ply: int | None = None
    out_dir: str | None = None


class SolverContext:
    """Manager + encoding + transition relation for one geometry/kind."""

    def __init__(self, geometry: BoardGeometry, kind: EncodingKind,
                 capacity: int = DEFAULT_CAPACITY):
        self.geometry = geometry
        self.kind = kind
        self.mgr = BddManager(capacity, num_levels_for(geometry, kind))
        self.enc = make_encoding(self.mgr, geometry, kind)
        self.trans = self.enc.build_transition()
        self._clauses: dict[int, list[NodeRef]] = {}

    def clauses_for_ply(self, ply: int) -> list[NodeRef]:
        """Line clauses of the player who moved into this ply (none at 0)."""
        if ply == 0:
            return []
        copy = self.enc.copy_for_ply(ply)
        if copy not in self._clauses:
            self._clauses[copy] = self.enc.terminal_clauses((ply - 1) % 2,
                                                            copy)
        return self._clauses[copy]

    def total(self, layer: LayerSet) -> int:
        return self.mgr.satcount(layer.states,
                                 self.enc.vars_for_ply(layer.ply))


def forward_pass(ctx: SolverContext, max_ply: int | None = None,
                 on_layer=None) -> list[LayerSet]:
    """Reachable-state layers with total/terminal counts per ply.

    on_layer(layer) runs once the layer's totals are final; it may save
    the states BDD to disk, deref it and set it to None (streaming mode)
    since the pass itself only keeps working on the non-terminal subset.
    """
    mgr, enc = ctx.mgr, ctx.enc
    horizon = ctx.geometry.max_ply if max_ply is None else \
        min(max_ply, ctx.geometry.max_ply)
    layers = [LayerSet(0, enc.encode_initial())]
    layers[0].counts["total"] = ctx.total(layers[0])
    for i in range(horizon + 1):
        layer = layers[i]
        nonterm = subtract_terminals(mgr, layer.states,
                                     ctx.clauses_for_ply(i))
        nonterm_count = mgr.satcount(nonterm, enc.vars_for_ply(i))
        layer.counts["terminal"] = layer.counts["total"] - nonterm_count
        if on_layer is not None:
            on_layer(layer)
        if i == horizon or nonterm == FALSE:
            mgr.deref(nonterm)
            break
        nxt = ctx.trans.for_ply(i).image(nonterm)
        mgr.deref(nonterm)
        if nxt == FALSE:
            mgr.deref(nxt)
            break
        layers.append(LayerSet(i + 1, nxt))
        layers[i + 1].counts["total"] = ctx.total(layers[i + 1])
    return layers


def backward_pass(ctx: SolverContext, layers: list[LayerSet],
                  on_layer=None, release: bool = False) -> None:
    """Attach win/lost BDDs and the won/drawn/lost counts to every layer.

    With release set (streaming mode), each classified layer's BDDs are
    dropped once the pass has moved below it; on_layer(layer) fires
    while its win/lost handles are still live.  Without release, the
    caller owns every layer's win/lost.
    """
    mgr, enc = ctx.mgr, ctx.enc
    draw_above: NodeRef | None = None
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        vars_i = enc.vars_for_ply(i)
        nonterm = subtract_terminals(mgr, layer.states,
                                     ctx.clauses_for_ply(i))
        term = mgr.diff(layer.states, nonterm)
        if "terminal" not in layer.counts:
            layer.counts["terminal"] = mgr.satcount(term, vars_i)
        if "total" not in layer.counts:
            layer.counts["total"] = ctx.total(layer)
        if i == len(layers) - 1:
            # deepest ply: no moves remain
            win = mgr.ref(FALSE)
            lost = term
            draw = nonterm
        else:
            rel = ctx.trans.for_ply(i)
            above = layers[i + 1]
            pre_lost = rel.preimage(above.lost)
            win = mgr.and_(pre_lost, nonterm)
            mgr.deref(pre_lost)
            pre_draw = rel.preimage(draw_above)
            reach_draw = mgr.and_(pre_draw, nonterm)
            mgr.deref(pre_draw)
            draw = mgr.diff(reach_draw, win)
            mgr.deref(reach_draw)
            undecided = mgr.diff(nonterm, win)
            rest = mgr.diff(undecided, draw)
            mgr.deref(undecided)
            lost = mgr.or_(rest, term)
            mgr.deref(rest)
            mgr.deref(term)
            mgr.deref(nonterm)
            mgr.deref(draw_above)
            if release:
                mgr.deref(above.win)
                mgr.deref(above.lost)
                above.win = above.lost = None
                if above.states is not None:
                    mgr.deref(above.states)
                    above.states = None
        layer.win = win
        layer.lost = lost
        draw_above = draw
        layer.counts["won"] = mgr.satcount(win, vars_i)
        layer.counts["drawn"] = mgr.satcount(draw, vars_i)
        layer.counts["lost"] = mgr.satcount(lost, vars_i)
        if on_layer is not None:
            on_layer(layer)
    if draw_above is not None:
        mgr.deref(draw_above)
    if release and layers:
        mgr.deref(layers[0].win)
        mgr.deref(layers[0].lost)
        layers[0].win = layers[0].lost = None
        if layers[0].states is not None:
            mgr.deref(layers[0].states)
            layers[0].states = None


def first_player_row(layer: LayerSet) -> dict:
    """Counts from the first player's perspective (paper-table shape)."""
    c = layer.counts
    if layer.ply % 2 == 0:
        won, lost = c.get("won"), c.get("lost")
    else:
        won, lost = c.get("lost"), c.get("won")
    return {
        "ply": layer.ply,
        "won": won,
        "drawn": c.get("drawn"),
        "lost": lost,
        "total": c["total"],
        "terminal": c["terminal"],
    }


def count_positions(geometry: BoardGeometry, kind: EncodingKind,
                    capacity: int = DEFAULT_CAPACITY,
                    max_ply: int | None = None) -> dict:
    """Per-ply and grand totals of unique positions, plus pool stats."""
    t0 = time.perf_counter()
    ctx = SolverContext(geometry, kind, capacity)
    mgr = ctx.mgr
    prev: list[LayerSet] = []

    def retire(layer: LayerSet) -> None:
        # totals are final; only the frontier layer needs to stay live
        if prev:
            mgr.deref(prev[0].states)
            prev[0].states = None
        prev[:] = [layer]

    layers = forward_pass(ctx, max_ply=max_ply, on_layer=retire)
    wall = time.perf_counter() - t0
    return {
        "width": geometry.width,
        "height": geometry.height,
        "encoding": kind.value,
        "node_capacity": capacity,
        "per_ply_totals": [layer.counts["total"] for layer in layers],
        "per_ply_terminal": [layer.counts["terminal"] for layer in layers],
        "positions": sum(layer.counts["total"] for layer in layers),
        "peak_nodes": mgr.high_water,
        "gc_runs": mgr.gc_runs,
        "gc_share": (mgr.gc_seconds / wall) if wall > 0 else 0.0,
        "wall_time_s": wall,
    }


def solve(geometry: BoardGeometry, kind: EncodingKind,
          budget: SolveBudget) -> dict:
    """Full pipeline: forward pass, retrograde pass, persisted WDL store.

    Layer BDDs stream to disk as produced and reload on demand during
    the backward pass, so only a bounded number of layers stay live.
    """
    if budget.out_dir is None:
        raise ValueError("solve needs an output directory")
    t0 = time.perf_counter()
    out = store_mod.store_dir(budget.out_dir, geometry)
    os.makedirs(out, exist_ok=True)
    marker = os.path.join(out, ".partial")
    with open(marker, "w") as fh:
        fh.write("solve in progress\n")
    try:
        report = _solve_streaming(geometry, kind, budget, out, t0)
    except OSError as e:
        raise C4SolverError(f"solve aborted on I/O error: {e}") from e
    os.remove(marker)
    return report


def _solve_streaming(geometry: BoardGeometry, kind: EncodingKind,
                     budget: SolveBudget, out: str, t0: float) -> dict:
    ctx = SolverContext(geometry, kind, budget.node_capacity)
    mgr = ctx.mgr

    def save_states(layer: LayerSet) -> None:
        store_mod.save_bdd(mgr, ctx.enc, layer.states,
                           store_mod.layer_path(out, layer.ply, "states"),
                           layer.ply)
        mgr.deref(layer.states)
        layer.states = None

    layers = forward_pass(ctx, max_ply=budget.max_ply, on_layer=save_states)

    def ensure_states(layer: LayerSet) -> None:
        if layer.states is None:
            layer.states, _ = store_mod.load_bdd(
                mgr, ctx.enc, store_mod.layer_path(out, layer.ply, "states"))

    def save_wdl(layer: LayerSet) -> None:
        store_mod.save_bdd(mgr, ctx.enc, layer.win,
                           store_mod.layer_path(out, layer.ply, "win"),
                           layer.ply)
        store_mod.save_bdd(mgr, ctx.enc, layer.lost,
                           store_mod.layer_path(out, layer.ply, "lost"),
                           layer.ply)
        if layer.ply > 0:
            ensure_states(layers[layer.ply - 1])

    ensure_states(layers[-1])
    backward_pass(ctx, layers, on_layer=save_wdl, release=True)
    wall = time.perf_counter() - t0
    report = {
        "width": geometry.width,
        "height": geometry.height,
        "encoding": kind.value,
        "node_capacity": budget.node_capacity,
        "plies": [first_player_row(layer) for layer in layers],
        "grand_total": sum(layer.counts["total"] for layer in layers),
        "root_value": _root_value(layers[0]),
        "peak_nodes": mgr.high_water,
        "gc_runs": mgr.gc_runs,
        "gc_share": (mgr.gc_seconds / wall) if wall > 0 else 0.0,
        "wall_time_s": wall,
    }
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def _root_value(layer0: LayerSet) -> str:
    c = layer0.counts
    if c.get("won"):
        return "win"
    if c.get("lost"):
        return "loss"
    return "draw"
