import type { Assessment, Observation, Policy, WhatIfResult } from "./types.js";

export interface PendingLabel {
  observationId: string;
  label: string;
  operator: string;
  error: string;      // last rejection/offline message, shown with a retry
  attempts: number;
}

export interface ConsoleState {
  /** Review queue, anomaly-score descending, unique by observation id. */
  queue: Observation[];
  selectedId: string | null;
  /** Live assessment feed, most recent first, unique by observation id. */
  feed: Assessment[];
  /** Label submissions awaiting service acknowledgment or retry. */
  pendingLabels: PendingLabel[];
  /** Ids whose label was acknowledged (labeled history). */
  labeledIds: string[];
  policyDraft: Policy | null;
  whatIf: WhatIfResult | null;
}

export function initialState(): ConsoleState {
  return {
    queue: [],
    selectedId: null,
    feed: [],
    pendingLabels: [],
    labeledIds: [],
    policyDraft: null,
    whatIf: null,
  };
}

function byScoreDescending(a: Observation, b: Observation): number {
  if (a.anomaly_score !== b.anomaly_score) {
    return b.anomaly_score - a.anomaly_score;
  }
  return a.observation_id < b.observation_id ? -1 : 1;
}

/** Merge a page of observations into the queue, deduplicated by id (new
 * data wins) and re-sorted to mirror the service ordering. */
export function mergeQueue(state: ConsoleState, page: Observation[]):
    ConsoleState {
  const byId = new Map(state.queue.map((o) => [o.observation_id, o]));
  for (const obs of page) byId.set(obs.observation_id, obs);
  for (const id of state.labeledIds) byId.delete(id);
  const queue = [...byId.values()].sort(byScoreDescending);
  return { ...state, queue };
}

export function selectObservation(state: ConsoleState, id: string | null):
    ConsoleState {
  return { ...state, selectedId: id };
}

/** Record a label submission attempt before the service acknowledges it. */
export function labelSubmitted(state: ConsoleState, observationId: string,
                               label: string, operator: string): ConsoleState {
  const rest = state.pendingLabels.filter(
    (p) => p.observationId !== observationId);
  return {
    ...state,
    pendingLabels: [...rest, {
      observationId, label, operator, error: "", attempts: 1,
    }],
  };
}

/** Service acknowledged: the item leaves the queue and joins history. */
export function labelAcknowledged(state: ConsoleState, observationId: string):
    ConsoleState {
  return {
    ...state,
    queue: state.queue.filter((o) => o.observation_id !== observationId),
    pendingLabels: state.pendingLabels.filter(
      (p) => p.observationId !== observationId),
    labeledIds: state.labeledIds.includes(observationId)
      ? state.labeledIds : [...state.labeledIds, observationId],
    selectedId: state.selectedId === observationId ? null : state.selectedId,
  };
}

/** Rejection or offline service: keep the item, surface a retryable error. */
export function labelFailed(state: ConsoleState, observationId: string,
                            error: string): ConsoleState {
  return {
    ...state,
    pendingLabels: state.pendingLabels.map((p) =>
      p.observationId === observationId
        ? { ...p, error, attempts: p.attempts + 1 }
        : p),
  };
}

/** Append a live assessment; duplicates by observation id are dropped so
 * every received assessment renders exactly once. */
export function feedEvent(state: ConsoleState, event: Assessment):
    ConsoleState {
  if (event.observation_id !== null &&
      state.feed.some((e) => e.observation_id === event.observation_id)) {
    return state;
  }
  return { ...state, feed: [event, ...state.feed] };
}

export function setPolicyDraft(state: ConsoleState, draft: Policy | null):
    ConsoleState {
  // editing the draft invalidates any cached projection
  return { ...state, policyDraft: draft, whatIf: null };
}

export function setWhatIf(state: ConsoleState, result: WhatIfResult):
    ConsoleState {
  return { ...state, whatIf: result };
}
