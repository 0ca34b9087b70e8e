// UI state and pure transition helpers. Everything here is framework-free
// and synchronous so the interaction contract is unit-testable: the panel
// gate (epsilon' must exceed epsilon), the single-in-flight/stale-discard
// rule, and the click-to-requery source swap.

import type { QueryParams, QueryResponse, QuerySource } from "./api.js";

export interface RawPanel {
  measure: string;
  epsilon: string;
  epsilonPrime: string;
  spread: string;
  k: string;
}

export interface UiState {
  source: QuerySource | null;
  lastResponse: QueryResponse | null;
  pending: boolean;
  sequence: number;
  error: string | null;
}

export type PanelValidation =
  | { ok: true; params: QueryParams }
  | { ok: false; errors: string[] };

export function createState(): UiState {
  return {
    source: null,
    lastResponse: null,
    pending: false,
    sequence: 0,
    error: null,
  };
}

function parseNumber(raw: string, label: string, errors: string[]): number {
  const value = Number(raw.trim());
  if (raw.trim() === "" || !Number.isFinite(value)) {
    errors.push(`${label} must be a number`);
    return NaN;
  }
  return value;
}

// The request gate: no query leaves the browser unless these hold.
export function validatePanel(raw: RawPanel): PanelValidation {
  const errors: string[] = [];
  const epsilon = parseNumber(raw.epsilon, "ε", errors);
  const epsilonPrime = parseNumber(raw.epsilonPrime, "ε′", errors);
  const k = parseNumber(raw.k, "results count", errors);

  if (!Number.isNaN(epsilon) && epsilon < 0) {
    errors.push("ε must be at least 0");
  }
  if (!Number.isNaN(epsilon) && !Number.isNaN(epsilonPrime)
      && epsilonPrime <= epsilon) {
    errors.push("ε′ must be strictly greater than ε");
  }
  if (!Number.isNaN(k) && (!Number.isInteger(k) || k < 1)) {
    errors.push("results count must be a positive integer");
  }

  let spread: number | null = null;
  if (raw.spread.trim() !== "") {
    spread = parseNumber(raw.spread, "spread", errors);
    if (!Number.isNaN(spread) && spread < 0) {
      errors.push("spread must be at least 0");
    }
  }

  if (errors.length > 0) {
    return { ok: false, errors };
  }
  return {
    ok: true,
    params: { measure: raw.measure, epsilon, epsilonPrime, spread, k },
  };
}

// Issue a new request: bump the sequence number and mark the UI busy. The
// returned sequence tags the in-flight request so late arrivals from
// superseded requests can be recognized and dropped.
export function beginRequest(state: UiState): UiState {
  return {
    ...state,
    pending: true,
    sequence: state.sequence + 1,
    error: null,
  };
}

export function applyResponse(
  state: UiState,
  sequence: number,
  response: QueryResponse,
): UiState {
  if (sequence !== state.sequence) {
    return state; // stale: a newer request owns the UI
  }
  return { ...state, pending: false, lastResponse: response };
}

// Failures keep the previous grid and panel; only the banner changes.
export function applyError(
  state: UiState,
  sequence: number,
  message: string,
): UiState {
  if (sequence !== state.sequence) {
    return state;
  }
  return { ...state, pending: false, error: message };
}

export function dismissError(state: UiState): UiState {
  return { ...state, error: null };
}

export function selectSource(state: UiState, source: QuerySource): UiState {
  return { ...state, source };
}

// Clicking a result thumbnail re-queries from that image.
export function sourceForResult(imageId: string): QuerySource {
  return { kind: "indexed", imageId };
}
