/**
 * Typed client for the solver's evaluation service.
 */

export interface MoveEval {
  column: number;
  wdl: string;
  score: number | null;
}

export interface EvalResponse {
  moves: string;
  ply: number;
  side_to_move: number;
  wdl: string;
  terminal: boolean;
  best_move: number | null;
  movelist: MoveEval[];
  partial: boolean;
}

export interface HealthResponse {
  status: string;
  width: number;
  height: number;
  encoding: string;
  max_ply: number;
  plies_loaded: number;
}

export class ServiceClient {
  baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
  }

  async health(): Promise<HealthResponse> {
    const response = await fetch(`${this.baseUrl}/health`);
    if (!response.ok) {
      throw new Error(`health check failed: ${response.status}`);
    }
    return response.json();
  }

  async evaluate(moves: string, search = false,
                 signal?: AbortSignal): Promise<EvalResponse> {
    const params = new URLSearchParams({ moves, search: String(search) });
    const response = await fetch(`${this.baseUrl}/eval?${params}`, { signal });
    if (!response.ok) {
      const body = await response.text();
      throw new Error(`eval failed (${response.status}): ${body}`);
    }
    return response.json();
  }
}
