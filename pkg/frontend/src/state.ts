/** Session flow: start -> answer* -> report. Thin client, all logic server-side. */

import { ApiError, ConsultationApi, SessionSnapshot } from "./api.js";

export type FlowPhase = "picking" | "asking" | "done" | "error";

export interface FlowState {
  phase: FlowPhase;
  snapshot: SessionSnapshot | null;
  error: string | null;
  /** kept across failures so a retry can resume the same session */
  sessionId: string | null;
}

export function initialFlow(): FlowState {
  return { phase: "picking", snapshot: null, error: null, sessionId: null };
}

function fromSnapshot(snapshot: SessionSnapshot): FlowState {
  return {
    phase: snapshot.status === "awaiting_answer" ? "asking" : "done",
    snapshot,
    error: null,
    sessionId: snapshot.id,
  };
}

function fromFailure(state: FlowState, err: unknown): FlowState {
  const message = err instanceof ApiError
    ? `${err.envelope.code}: ${err.envelope.message}`
    : `network failure: ${String(err)}`;
  return { ...state, phase: "error", error: message };
}

export async function startSession(api: ConsultationApi,
                                   symptoms: Record<string, boolean>): Promise<FlowState> {
  try {
    return fromSnapshot(await api.createSession(symptoms));
  } catch (err) {
    return fromFailure(initialFlow(), err);
  }
}

export async function answerQuestion(api: ConsultationApi, state: FlowState,
                                     answer: boolean): Promise<FlowState> {
  const snapshot = state.snapshot;
  if (!snapshot || !snapshot.question) {
    return { ...state, phase: "error", error: "no pending question" };
  }
  try {
    return fromSnapshot(await api.answer(snapshot.id, answer, snapshot.question.turn));
  } catch (err) {
    return fromFailure(state, err);
  }
}

/** Refetch the session after a network failure, keeping the same id. */
export async function resumeSession(api: ConsultationApi, state: FlowState): Promise<FlowState> {
  if (!state.sessionId) {
    return initialFlow();
  }
  try {
    return fromSnapshot(await api.getSession(state.sessionId));
  } catch (err) {
    return fromFailure(state, err);
  }
}
