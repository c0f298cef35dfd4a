/** View state for one labeling session, with pure transition helpers. */

import type { Label, QueryResponse, SessionStatus, SubmitResponse } from "./api.js";

export interface ViewState {
  sessionId: string;
  status: SessionStatus;
  /** Rounds committed so far; shown as the iteration counter. */
  iteration: number;
  /** Indices of the batch currently awaiting labels (highlighted on screen). */
  batch: number[];
  /** Per-sample probabilities from the last query, or empty before one. */
  probabilities: number[];
  /** Pending choices for the current batch, keyed by sample index. */
  choices: Map<number, Label>;
  nLabeled: number;
  /** Last submission error, or null; kept until the next action clears it. */
  error: string | null;
}

export function initialState(sessionId: string): ViewState {
  return {
    sessionId,
    status: "training",
    iteration: 0,
    batch: [],
    probabilities: [],
    choices: new Map(),
    nLabeled: 0,
    error: null,
  };
}

function sameBatch(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

/**
 * Fold a query response into the state. A new batch discards pending
 * choices; re-fetching the same batch keeps them.
 */
export function applyQuery(state: ViewState, query: QueryResponse): ViewState {
  const batchChanged = !sameBatch(state.batch, query.indices);
  return {
    ...state,
    status: query.status,
    iteration: query.iteration,
    batch: [...query.indices],
    probabilities: [...query.probabilities],
    choices: batchChanged ? new Map() : new Map(state.choices),
    error: null,
  };
}

/** Record a choice for one batch member. Indices outside the batch are ignored. */
export function setChoice(state: ViewState, index: number, label: Label): ViewState {
  if (!state.batch.includes(index)) return state;
  const choices = new Map(state.choices);
  choices.set(index, label);
  return { ...state, choices };
}

/** Submission is allowed only once every batch member has a choice. */
export function canSubmit(state: ViewState): boolean {
  return (
    state.status === "awaiting_labels" &&
    state.batch.length > 0 &&
    state.batch.every((i) => state.choices.has(i))
  );
}

/** The labels payload for the current choices. */
export function pendingLabels(state: ViewState): Record<number, Label> {
  const out: Record<number, Label> = {};
  for (const [index, label] of state.choices) out[index] = label;
  return out;
}

/** Fold an accepted submission: advance the round and start the next batch. */
export function applySubmitSuccess(state: ViewState, resp: SubmitResponse): ViewState {
  return {
    ...state,
    status: resp.status,
    iteration: resp.iteration,
    nLabeled: resp.n_labeled,
    batch: [...resp.next_indices],
    choices: new Map(),
    error: null,
  };
}

/**
 * Fold a rejected submission: surface the message, keep every pending
 * choice so the annotator can correct and resubmit.
 */
export function applyRejection(state: ViewState, message: string): ViewState {
  return { ...state, error: message };
}

/** True once the session has exhausted its budget (completion banner). */
export function isComplete(state: ViewState): boolean {
  return state.status === "complete";
}
