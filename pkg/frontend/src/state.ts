/**
 * Pure game-state model for the explorer board.
 *
 * Everything derives from the moves string (1-based column digits), so
 * any view is reproducible from a deep link alone.  Annotations carry
 * the last evaluation response and are flagged stale while they belong
 * to a different moves string.
 */
import { EvalResponse } from './api';

export interface Geometry {
  width: number;
  height: number;
  maxPly: number;
}

export interface UiGameState {
  moves: string;
  annotations: EvalResponse | null;
  annotationsFor: string | null;
  history: string[];
  inFlight: boolean;
}

/** 0 empty, 1 first player, 2 second player; grid[col][row], row 0 bottom. */
export function deriveBoard(moves: string, g: Geometry): number[][] {
  const grid = Array.from({ length: g.width }, () =>
    new Array<number>(g.height).fill(0));
  const heights = new Array<number>(g.width).fill(0);
  for (let i = 0; i < moves.length; i++) {
    const col = moves.charCodeAt(i) - 49; // '1' -> 0
    grid[col][heights[col]] = 1 + (i % 2);
    heights[col] += 1;
  }
  return grid;
}

export function columnHeights(moves: string, g: Geometry): number[] {
  const heights = new Array<number>(g.width).fill(0);
  for (let i = 0; i < moves.length; i++) {
    heights[moves.charCodeAt(i) - 49] += 1;
  }
  return heights;
}

/** 1-based columns that accept another disc. */
export function legalColumns(moves: string, g: Geometry): number[] {
  const heights = columnHeights(moves, g);
  const out: number[] = [];
  for (let c = 0; c < g.width; c++) {
    if (heights[c] < g.height) {
      out.push(c + 1);
    }
  }
  return out;
}

export function initialState(moves = ''): UiGameState {
  return {
    moves,
    annotations: null,
    annotationsFor: null,
    history: [],
    inFlight: false,
  };
}

export function annotationsAreStale(state: UiGameState): boolean {
  return state.annotationsFor !== state.moves;
}

/**
 * Optimistically apply a move.  Returns null (no state change) when
 * the column is full, the game is over per fresh annotations, or an
 * evaluation is still in flight (input is locked during transitions).
 */
export function beginMove(state: UiGameState, column1: number,
                          g: Geometry): UiGameState | null {
  if (state.inFlight) {
    return null;
  }
  if (!annotationsAreStale(state) && state.annotations?.terminal) {
    return null;
  }
  if (!legalColumns(state.moves, g).includes(column1)) {
    return null;
  }
  return {
    ...state,
    moves: state.moves + String(column1),
    history: [...state.history, state.moves],
    inFlight: true,
  };
}

/** Attach a response; ignored unless it matches the current moves string. */
export function applyAnnotations(state: UiGameState,
                                 response: EvalResponse): UiGameState {
  if (response.moves !== state.moves) {
    return state;
  }
  return {
    ...state,
    annotations: response,
    annotationsFor: response.moves,
    inFlight: false,
  };
}

export function evalFailed(state: UiGameState): UiGameState {
  return { ...state, inFlight: false };
}

export function undo(state: UiGameState): UiGameState {
  if (state.history.length === 0) {
    return state;
  }
  // undoing supersedes any in-flight evaluation (the app aborts it)
  const history = state.history.slice(0, -1);
  return {
    ...state,
    moves: state.history[state.history.length - 1],
    history,
    inFlight: false,
  };
}

export interface ColumnBadge {
  column: number;
  wdl: string;
  score: number | null;
  best: boolean;
}

/**
 * Per-column badge models for the displayed position; empty while the
 * annotations are stale so the view never shows values for a different
 * moves string.
 */
export function columnBadges(state: UiGameState): ColumnBadge[] {
  if (state.annotations === null || annotationsAreStale(state)) {
    return [];
  }
  const a = state.annotations;
  return a.movelist.map((m) => ({
    column: m.column,
    wdl: m.wdl,
    score: m.score,
    best: m.column === a.best_move,
  }));
}

export function movesFromUrl(search: string): string {
  const moves = new URLSearchParams(search).get('moves') ?? '';
  return /^[1-9]*$/.test(moves) ? moves : '';
}

export function urlWithMoves(moves: string): string {
  return moves === '' ? '?' : `?moves=${moves}`;
}

/** Result banner text for a terminal position, null when game is on. */
export function resultBanner(state: UiGameState): string | null {
  if (annotationsAreStale(state) || !state.annotations?.terminal) {
    return null;
  }
  const a = state.annotations;
  if (a.wdl === 'draw') {
    return 'Draw';
  }
  // the side to move faces the finished line: the other player won
  const winner = a.side_to_move === 1 ? 2 : 1;
  return `Player ${winner} wins`;
}
