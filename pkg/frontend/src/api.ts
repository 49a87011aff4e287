// Typed client for the session endpoints. The UI holds no pipeline logic:
// every decision comes back from the server in these payloads.

export interface StepFeedback {
  stage: string;
  detail: string;
}

export interface AnswerPayload {
  type: "answer";
  markdown: string;
  sql: string;
  steps: StepFeedback[];
}

export interface ClarificationOption {
  index: number;
  canonical: string;
}

export interface ClarificationPayload {
  type: "clarification";
  raw_value: string;
  options: ClarificationOption[];
  allow_pass_through: boolean;
}

export interface FailurePayload {
  type: "failure";
  message: string;
}

export type StepResultPayload = AnswerPayload | ClarificationPayload | FailurePayload;

export interface HistoryEntry {
  kind: "user" | "step" | "clarification" | "answer" | "failure";
  text: string;
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      if (body && typeof body.error === "string") detail = body.error;
    } catch {
      // keep the status code
    }
    throw new Error(detail);
  }
  return (await response.json()) as T;
}

export class SessionApi {
  private sessionId: string | null = null;

  constructor(private readonly baseUrl: string = "") {}

  async ensureSession(): Promise<string> {
    if (this.sessionId === null) {
      const created = await asJson<{ session_id: string }>(
        await fetch(`${this.baseUrl}/sessions`, { method: "POST" }),
      );
      this.sessionId = created.session_id;
    }
    return this.sessionId;
  }

  async submitQuery(text: string): Promise<StepResultPayload> {
    const sid = await this.ensureSession();
    return asJson<StepResultPayload>(
      await fetch(`${this.baseUrl}/sessions/${sid}/query`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text }),
      }),
    );
  }

  async clarify(selection: number | "pass"): Promise<StepResultPayload> {
    const sid = await this.ensureSession();
    return asJson<StepResultPayload>(
      await fetch(`${this.baseUrl}/sessions/${sid}/clarify`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ selection }),
      }),
    );
  }

  async history(): Promise<HistoryEntry[]> {
    const sid = await this.ensureSession();
    const payload = await asJson<{ entries: HistoryEntry[] }>(
      await fetch(`${this.baseUrl}/sessions/${sid}/history`),
    );
    return payload.entries;
  }
}
