/**
 * DOM layer: renders the board from the moves string, wires clicks,
 * undo, engine replies and deep links.  All game logic lives in
 * state.ts; this file only paints and forwards events.
 */
import { EvalResponse, ServiceClient } from './api';
import {
  Geometry, UiGameState, annotationsAreStale, beginMove, columnBadges,
  deriveBoard, evalFailed, initialState, legalColumns, movesFromUrl,
  resultBanner, undo, urlWithMoves, applyAnnotations,
} from './state';

const client = new ServiceClient(
  (window as unknown as { C4_SERVICE_URL?: string }).C4_SERVICE_URL
  ?? window.location.origin);

let geometry: Geometry = { width: 7, height: 6, maxPly: 42 };
let state: UiGameState = initialState(movesFromUrl(window.location.search));
let controller: AbortController | null = null;

function setState(next: UiGameState): void {
  state = next;
  window.history.replaceState(null, '', urlWithMoves(state.moves));
  render();
}

async function refreshAnnotations(): Promise<void> {
  controller?.abort();
  controller = new AbortController();
  const wanted = state.moves;
  try {
    const response = await client.evaluate(wanted, true, controller.signal);
    setState(applyAnnotations(state, response));
  } catch (err) {
    if ((err as Error).name !== 'AbortError') {
      setState(evalFailed(state));
      banner(`evaluation unavailable: ${(err as Error).message}`);
    }
  }
}

function onColumnClick(column1: number): void {
  const next = beginMove(state, column1, geometry);
  if (next === null) {
    return;
  }
  setState(next);
  void refreshAnnotations();
}

function onUndo(): void {
  setState(undo(state));
  void refreshAnnotations();
}

function onEngineReply(): void {
  if (annotationsAreStale(state) || state.annotations === null) {
    return;
  }
  const best = state.annotations.best_move;
  if (best !== null && !state.annotations.terminal) {
    onColumnClick(best);
  }
}

function banner(text: string): void {
  const el = document.getElementById('banner')!;
  el.textContent = text;
  el.classList.toggle('hidden', text === '');
}

function render(): void {
  const root = document.getElementById('board')!;
  root.innerHTML = '';
  root.style.gridTemplateColumns = `repeat(${geometry.width}, 3.2em)`;
  const grid = deriveBoard(state.moves, geometry);
  const legal = new Set(legalColumns(state.moves, geometry));
  const badges = new Map(columnBadges(state).map((b) => [b.column, b]));
  const terminal = !annotationsAreStale(state)
    && (state.annotations?.terminal ?? false);

  for (let row = geometry.height - 1; row >= 0; row--) {
    for (let col = 0; col < geometry.width; col++) {
      const cell = document.createElement('button');
      cell.className = `cell owner-${grid[col][row]}`;
      const clickable = !terminal && legal.has(col + 1) && !state.inFlight;
      cell.disabled = !clickable;
      cell.addEventListener('click', () => onColumnClick(col + 1));
      root.appendChild(cell);
    }
  }

  const badgeRow = document.getElementById('badges')!;
  badgeRow.innerHTML = '';
  badgeRow.style.gridTemplateColumns = `repeat(${geometry.width}, 3.2em)`;
  for (let col = 1; col <= geometry.width; col++) {
    const badge = document.createElement('div');
    const info = badges.get(col);
    if (info) {
      badge.className = `badge wdl-${info.wdl}${info.best ? ' best' : ''}`;
      badge.textContent = info.score === null
        ? info.wdl[0].toUpperCase()
        : `${info.wdl[0].toUpperCase()}${info.score}`;
      badge.title = info.best ? `best: ${info.wdl}` : info.wdl;
    } else {
      badge.className = 'badge empty';
      badge.textContent = annotationsAreStale(state) && legal.has(col)
        ? '…' : '';
    }
    badgeRow.appendChild(badge);
  }

  const status = document.getElementById('status')!;
  const result = resultBanner(state);
  if (result !== null) {
    status.textContent = result;
  } else if (annotationsAreStale(state)) {
    status.textContent = 'evaluating…';
  } else if (state.annotations !== null) {
    const a = state.annotations;
    status.textContent =
      `player ${a.side_to_move} to move — position is a ${a.wdl}` +
      (a.partial ? ' (search capped, table values only)' : '');
  } else {
    status.textContent = '';
  }

  (document.getElementById('undo') as HTMLButtonElement).disabled =
    state.history.length === 0;
  (document.getElementById('engine') as HTMLButtonElement).disabled =
    terminal || annotationsAreStale(state);
  const movesEl = document.getElementById('moves')!;
  movesEl.textContent = state.moves === '' ? '(empty board)' : state.moves;
}

async function boot(): Promise<void> {
  try {
    const health = await client.health();
    geometry = {
      width: health.width,
      height: health.height,
      maxPly: health.max_ply,
    };
    banner('');
  } catch (err) {
    banner(`service unreachable: ${(err as Error).message}`);
  }
  document.getElementById('undo')!.addEventListener('click', onUndo);
  document.getElementById('engine')!.addEventListener('click', onEngineReply);
  render();
  void refreshAnnotations();
}

void boot();
