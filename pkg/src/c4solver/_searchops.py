"""Numba kernels for the bitboard alpha-beta search.

Boards are packed into a single int64 (height+1 bits per column, bottom
row at bit 0), which limits the searchable geometries to
width*(height+1) <= 63; the symbolic side has no such limit.

Scores: 0 draw, +s mover wins with the final disc landing at ply
N+1-s, -s the symmetric loss, so bigger is faster.  Scores are
position-intrinsic (the ply is the disc count), which is why
transposition entries never need mate-distance adjustment.
"""
from __future__ import annotations

import numpy as np
from numba import njit

TT_LOWER = 1
TT_UPPER = 2
TT_EXACT = 3

_M1 = 0x5555555555555555
_M2 = 0x3333333333333333
_M4 = 0x0F0F0F0F0F0F0F0F
_H01 = 0x0101010101010101
_GOLD = 0x61C8864680B583EB


@njit(cache=True)
def popcount(x):
    x = x - ((x >> 1) & _M1)
    x = (x & _M2) + ((x >> 2) & _M2)
    x = (x + (x >> 4)) & _M4
    return (x * _H01) >> 56


@njit(cache=True)
def winning_cells(discs, mask, stride, board_mask):
    """Empty cells completing a four-in-a-row for discs (incl. floating)."""
    r = 0
    for shift in (1, stride, stride + 1, stride - 1):
        p = (discs << shift) & (discs << (2 * shift))
        r |= p & (discs << (3 * shift))
        r |= p & (discs >> shift)
        p = (discs >> shift) & (discs >> (2 * shift))
        r |= p & (discs >> (3 * shift))
        r |= p & (discs << shift)
    return r & board_mask & ~mask


@njit(cache=True)
def has_line(discs, stride):
    for shift in (1, stride, stride + 1, stride - 1):
        m = discs & (discs >> shift)
        if m & (m >> (2 * shift)):
            return True
    return False


@njit(cache=True)
def mirror_bits(x, width, stride):
    colbits = (1 << stride) - 1
    m = 0
    for c in range(width):
        m |= ((x >> (c * stride)) & colbits) << ((width - 1 - c) * stride)
    return m


@njit(cache=True)
def _tt_index(key, tt_mask):
    h = key * _GOLD
    h ^= h >> 31
    return h & tt_mask


@njit(cache=True)
def _eval_pos(root, var_arr, lo_arr, hi_arr, kinds, bits, p1, p2, cw):
    """Walk a layer BDD with values read straight off the bitboards."""
    u = root
    while u > 1:
        v = var_arr[u]
        k = kinds[v]
        if k == 0:
            b = 0
        elif k == 1:
            b = (p1 >> bits[v]) & 1
        elif k == 2:
            b = (p2 >> bits[v]) & 1
        else:
            b = (cw >> bits[v]) & 1
        if b != 0:
            u = hi_arr[u]
        else:
            u = lo_arr[u]
    return u


@njit(cache=True)
def wdl_eval(cur, msk, ply, win_root, lost_root, var_arr, lo_arr, hi_arr,
             kinds, bits, bottom):
    """-1 loss / 0 draw / +1 win for the mover of a non-line position."""
    if ply % 2 == 0:
        p1 = cur
    else:
        p1 = cur ^ msk
    p2 = msk ^ p1
    cw = p1 | (msk + bottom)
    if _eval_pos(win_root, var_arr, lo_arr, hi_arr, kinds, bits,
                 p1, p2, cw) == 1:
        return 1
    if _eval_pos(lost_root, var_arr, lo_arr, hi_arr, kinds, bits,
                 p1, p2, cw) == 1:
        return -1
    return 0


@njit(cache=True)
def wdl_eval_many(curs, msks, win_root, lost_root, var_arr, lo_arr, hi_arr,
                  kinds, bits, bottom, stride, out):
    """Store lookups for many same-ply positions; line-terminal is a loss."""
    for i in range(curs.shape[0]):
        cur = curs[i]
        msk = msks[i]
        if has_line(cur ^ msk, stride):
            out[i] = -1
        else:
            ply = popcount(msk)
            out[i] = wdl_eval(cur, msk, ply, win_root, lost_root, var_arr,
                              lo_arr, hi_arr, kinds, bits, bottom)


@njit(cache=True)
def _pack(score, bound, move):
    return (score + 512) | (bound << 12) | ((move + 1) << 14)


@njit(cache=True)
def _tt_store(tt_key, tt_data, tt_mask, cur, msk, width, stride, bottom,
              score, bound, move):
    key = cur + msk + bottom
    mkey = mirror_bits(cur, width, stride) + mirror_bits(msk, width, stride) \
        + bottom
    if mkey < key:
        key = mkey
        if move >= 0:
            move = width - 1 - move
    i = _tt_index(key, tt_mask)
    tt_key[i] = key
    tt_data[i] = _pack(score, bound, move)


@njit(cache=True)
def _tt_probe(tt_key, tt_data, tt_mask, cur, msk, width, stride, bottom):
    """Returns packed data (0 = miss) with the move de-mirrored."""
    key = cur + msk + bottom
    mkey = mirror_bits(cur, width, stride) + mirror_bits(msk, width, stride) \
        + bottom
    mirrored = mkey < key
    if mirrored:
        key = mkey
    i = _tt_index(key, tt_mask)
    if tt_key[i] != key:
        return 0
    data = tt_data[i]
    if data == 0:
        return 0
    if mirrored:
        move = ((data >> 14) & 0xF) - 1
        if move >= 0:
            data = (data & 0x3FFF) | ((width - move) << 14)
    return data


@njit(cache=True)
def order_moves_inplace(moves, nm, cur, msk, width, stride, bottom,
                        board_mask):
    """Sort by threats created (desc), center distance (asc), column (asc)."""
    thr = np.empty(nm, np.int64)
    dist = np.empty(nm, np.int64)
    for i in range(nm):
        c = moves[i]
        mv = (msk + (1 << (c * stride))) & (((1 << (stride - 1)) - 1)
                                            << (c * stride))
        nc = cur | mv
        nm_ = msk | mv
        thr[i] = popcount(winning_cells(nc, nm_, stride, board_mask))
        dist[i] = abs(2 * c - (width - 1))
    for i in range(1, nm):
        mc, mt, md = moves[i], thr[i], dist[i]
        j = i - 1
        while j >= 0 and (thr[j] < mt or (thr[j] == mt and (
                dist[j] > md or (dist[j] == md and moves[j] > mc)))):
            moves[j + 1] = moves[j]
            thr[j + 1] = thr[j]
            dist[j + 1] = dist[j]
            j -= 1
        moves[j + 1] = mc
        thr[j + 1] = mt
        dist[j + 1] = md


@njit(cache=True)
def search_root(cur0, msk0, alpha0, beta0, max_depth, width, height,
                tt_key, tt_data, tt_mask,
                have_store, probe_min, win_roots, lost_roots,
                var_arr, lo_arr, hi_arr, kinds, bits):
    """Full alpha-beta PVS on one position (non-terminal, no win-in-0).

    Returns the exact minimax distance score within the (alpha0, beta0)
    window contract.  Nodes whose value depended on the depth horizon
    are never written to the transposition table.
    """
    stride = height + 1
    n_max = width * height
    bottom = 0
    for c in range(width):
        bottom |= 1 << (c * stride)
    board_mask = bottom * ((1 << height) - 1)
    maxd = n_max + 2
    fcur = np.empty(maxd, np.int64)
    fmsk = np.empty(maxd, np.int64)
    falpha = np.empty(maxd, np.int64)
    fbeta = np.empty(maxd, np.int64)
    fa0 = np.empty(maxd, np.int64)
    fbest = np.empty(maxd, np.int64)
    fbestmove = np.empty(maxd, np.int64)
    fmi = np.empty(maxd, np.int64)
    fnm = np.empty(maxd, np.int64)
    fstage = np.empty(maxd, np.int64)
    fscout = np.empty(maxd, np.int64)
    ftrunc = np.empty(maxd, np.int64)
    fmoves = np.empty(maxd * width, np.int64)
    horizon = popcount(msk0) + max_depth

    sp = 0
    fcur[0] = cur0
    fmsk[0] = msk0
    falpha[0] = alpha0
    fbeta[0] = beta0
    fa0[0] = alpha0
    fstage[0] = 0
    res = 0
    res_trunc = 0
    while sp >= 0:
        cur = fcur[sp]
        msk = fmsk[sp]
        if fstage[sp] == 0:
            ply = popcount(msk)
            if ply >= n_max:
                res = 0
                res_trunc = 0
                sp -= 1
                continue
            if ply >= horizon:
                # depth budget exhausted: heuristic stand-pat at 0
                res = 0
                res_trunc = 1
                sp -= 1
                continue
            alpha = falpha[sp]
            beta = fbeta[sp]
            data = _tt_probe(tt_key, tt_data, tt_mask, cur, msk, width,
                             stride, bottom)
            if data != 0:
                s = (data & 0xFFF) - 512
                b = (data >> 12) & 3
                if b == TT_EXACT:
                    res = s
                    res_trunc = 0
                    sp -= 1
                    continue
                if b == TT_LOWER and s > alpha:
                    alpha = s
                elif b == TT_UPPER and s < beta:
                    beta = s
                if alpha >= beta:
                    res = s
                    res_trunc = 0
                    sp -= 1
                    continue
                falpha[sp] = alpha
                fbeta[sp] = beta
            playable = (msk + bottom) & board_mask
            mywin = winning_cells(cur, msk, stride, board_mask) & playable
            if mywin != 0:
                res = n_max - ply
                res_trunc = 0
                col = 0
                for c in range(width):
                    if (mywin >> (c * stride)) & ((1 << stride) - 1):
                        col = c
                        break
                _tt_store(tt_key, tt_data, tt_mask, cur, msk, width, stride,
                          bottom, res, TT_EXACT, col)
                sp -= 1
                continue
            oppwin = winning_cells(cur ^ msk, msk, stride, board_mask) \
                & playable
            nopp = popcount(oppwin)
            if nopp >= 2:
                # double threat: any reply leaves a playable opponent win
                res = -(n_max - ply - 1)
                res_trunc = 0
                _tt_store(tt_key, tt_data, tt_mask, cur, msk, width, stride,
                          bottom, res, TT_EXACT, -1)
                sp -= 1
                continue
            base = sp * width
            if nopp == 1:
                for c in range(width):
                    if (oppwin >> (c * stride)) & ((1 << stride) - 1):
                        fmoves[base] = c
                        break
                nm = 1
            else:
                nm = 0
                for c in range(width):
                    if (playable >> (c * stride)) & ((1 << stride) - 1):
                        fmoves[base + nm] = c
                        nm += 1
            if nm > 1 and have_store != 0 and (n_max - ply) > probe_min \
                    and win_roots[ply + 1] >= 0:
                # keep only the moves whose table value is maximal for
                # the mover; worse-valued moves cannot carry the score
                best_v = -2
                kept = 0
                for i in range(nm):
                    c = fmoves[base + i]
                    mv = (msk + (1 << (c * stride))) \
                        & (((1 << height) - 1) << (c * stride))
                    ccur = cur ^ msk
                    cmsk = msk | mv
                    if popcount(cmsk) >= n_max:
                        v = 0
                    else:
                        v = -wdl_eval(ccur, cmsk, ply + 1,
                                      win_roots[ply + 1],
                                      lost_roots[ply + 1], var_arr, lo_arr,
                                      hi_arr, kinds, bits, bottom)
                    if v > best_v:
                        best_v = v
                        fmoves[base] = c
                        kept = 1
                    elif v == best_v:
                        fmoves[base + kept] = c
                        kept += 1
                nm = kept
            if nm > 1:
                order_moves_inplace(fmoves[base:base + nm], nm, cur, msk,
                                    width, stride, bottom, board_mask)
            fnm[sp] = nm
            fmi[sp] = 0
            fbest[sp] = -n_max - 1
            fbestmove[sp] = -1
            ftrunc[sp] = 0
            fscout[sp] = 0
            fstage[sp] = 1
            # descend into the first child, full window
            c = fmoves[base]
            mv = (msk + (1 << (c * stride))) \
                & (((1 << height) - 1) << (c * stride))
            sp += 1
            fcur[sp] = cur ^ msk
            fmsk[sp] = msk | mv
            falpha[sp] = -fbeta[sp - 1]
            fbeta[sp] = -falpha[sp - 1]
            fa0[sp] = falpha[sp]
            fstage[sp] = 0
            continue
        # stage 1: a child search just returned res
        sc = -res
        ftrunc[sp] |= res_trunc
        alpha = falpha[sp]
        beta = fbeta[sp]
        if fscout[sp] == 1 and sc > alpha and sc < beta and res_trunc == 0:
            # null-window probe failed high: re-search with the full window
            fscout[sp] = 0
            base = sp * width
            c = fmoves[base + fmi[sp]]
            mv = (msk + (1 << (c * stride))) \
                & (((1 << height) - 1) << (c * stride))
            sp += 1
            fcur[sp] = cur ^ msk
            fmsk[sp] = msk | mv
            falpha[sp] = -beta
            fbeta[sp] = -alpha
            fa0[sp] = -beta
            fstage[sp] = 0
            continue
        if sc > fbest[sp]:
            fbest[sp] = sc
            fbestmove[sp] = fmoves[sp * width + fmi[sp]]
        if fbest[sp] > alpha:
            alpha = fbest[sp]
            falpha[sp] = alpha
        ply = popcount(msk)
        if alpha >= beta:
            if ftrunc[sp] == 0:
                _tt_store(tt_key, tt_data, tt_mask, cur, msk, width, stride,
                          bottom, fbest[sp], TT_LOWER, fbestmove[sp])
            res = fbest[sp]
            res_trunc = ftrunc[sp]
            sp -= 1
            continue
        fmi[sp] += 1
        if fmi[sp] >= fnm[sp]:
            if ftrunc[sp] == 0:
                flag = TT_UPPER if fbest[sp] <= fa0[sp] else TT_EXACT
                _tt_store(tt_key, tt_data, tt_mask, cur, msk, width, stride,
                          bottom, fbest[sp], flag, fbestmove[sp])
            res = fbest[sp]
            res_trunc = ftrunc[sp]
            sp -= 1
            continue
        # descend into the next child with a null window first
        fscout[sp] = 1
        base = sp * width
        c = fmoves[base + fmi[sp]]
        mv = (msk + (1 << (c * stride))) \
            & (((1 << height) - 1) << (c * stride))
        sp += 1
        fcur[sp] = cur ^ msk
        fmsk[sp] = msk | mv
        falpha[sp] = -alpha - 1
        fbeta[sp] = -alpha
        fa0[sp] = -alpha - 1
        fstage[sp] = 0
    return res


@njit(cache=True)
def score_moves_many(curs, msks, width, height, tt_key, tt_data, tt_mask,
                     have_store, probe_min, win_roots, lost_roots,
                     var_arr, lo_arr, hi_arr, kinds, bits, out):
    """Exact score of every legal move of every position; -127 = illegal.

    Positions must be non-terminal.  out has shape (len(curs), width).
    """
    stride = height + 1
    n_max = width * height
    bottom = 0
    for c in range(width):
        bottom |= 1 << (c * stride)
    board_mask = bottom * ((1 << height) - 1)
    for i in range(curs.shape[0]):
        cur = curs[i]
        msk = msks[i]
        ply = popcount(msk)
        playable = (msk + bottom) & board_mask
        win_cells = winning_cells(cur, msk, stride, board_mask)
        for c in range(width):
            colmask = ((1 << height) - 1) << (c * stride)
            mv = (msk + (1 << (c * stride))) & colmask
            if mv == 0:
                out[i, c] = -127
                continue
            if win_cells & mv:
                out[i, c] = n_max - ply
                continue
            if ply + 1 >= n_max:
                out[i, c] = 0
                continue
            sc = search_root(cur ^ msk, msk | mv, -n_max - 1, n_max + 1,
                             n_max + 1, width, height, tt_key, tt_data,
                             tt_mask, have_store, probe_min, win_roots,
                             lost_roots, var_arr, lo_arr, hi_arr, kinds,
                             bits)
            out[i, c] = -sc
