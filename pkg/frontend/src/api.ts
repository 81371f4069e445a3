/** Typed client for the consultation service endpoints. */

export interface Question {
  symptom: string;
  turn: number;
}

export interface DiseaseSuspect {
  disease: string;
  probability: number;
}

export interface TurnExplanation {
  turn: number;
  suspected_diseases: DiseaseSuspect[];
  posterior: number[];
  mu: number | null;
  dominant_logic: "ensure" | "distinguish" | null;
  action: { kind: "query" | "diagnose"; name: string };
  stop_reason: string | null;
  score_breakdown?: { ensure_share: number; distinguish_share: number };
  related_diseases?: string[];
}

export interface Report {
  disease: string;
  confidence: number;
  supporting_symptoms: string[];
  stop_reason: string | null;
}

export interface SessionSnapshot {
  id: string;
  status: "awaiting_answer" | "diagnosed" | "expired";
  turn: number;
  question: Question | null;
  report: Report | null;
  trace_history: TurnExplanation[];
}

export interface Catalog {
  diseases: string[];
  symptoms: string[];
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(public status: number, public envelope: ErrorEnvelope) {
    super(envelope.message);
  }
}

async function request<T>(base: string, method: string, path: string, body?: unknown): Promise<T> {
  const response = await fetch(base + path, {
    method,
    headers: { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const payload = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, payload as ErrorEnvelope);
  }
  return payload as T;
}

export class ConsultationApi {
  constructor(private base: string = "") {}

  getCatalog(): Promise<Catalog> {
    return request(this.base, "GET", "/api/catalog");
  }

  createSession(symptoms: Record<string, boolean>): Promise<SessionSnapshot> {
    return request(this.base, "POST", "/api/sessions", { symptoms });
  }

  answer(sessionId: string, answer: boolean, turn: number): Promise<SessionSnapshot> {
    return request(this.base, "POST", `/api/sessions/${sessionId}/answer`, { answer, turn });
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return request(this.base, "GET", `/api/sessions/${sessionId}`);
  }

  explain(sessionId: string): Promise<{ id: string; turns: TurnExplanation[] }> {
    return request(this.base, "GET", `/api/sessions/${sessionId}/explain`);
  }
}
