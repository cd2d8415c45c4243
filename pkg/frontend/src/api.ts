// REST client for the review service. Every reviewer action is exactly one
// POST; the UI then re-reads server state (no client-side label inference).

import type {
  AppConfig,
  FeedbackAck,
  PairDetail,
  PairSummary,
  PatientLabel,
  Verdict,
} from './types';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(private config: AppConfig) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = {
      'Content-Type': 'application/json',
      'X-Actor-Id': this.config.actorId,
    };
    if (this.config.token) {
      headers['Authorization'] = `Bearer ${this.config.token}`;
    }
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.config.baseUrl}${path}`, {
      ...init,
      headers: { ...this.headers(), ...(init?.headers ?? {}) },
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === 'string') detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async listPairs(): Promise<PairSummary[]> {
    const body = await this.request<{ pairs: PairSummary[] }>('/pairs');
    return body.pairs;
  }

  async getAssessments(patientId: string, trialId: string): Promise<PairDetail> {
    return this.request<PairDetail>(
      `/pairs/${encodeURIComponent(patientId)}/${encodeURIComponent(trialId)}/assessments`,
    );
  }

  async submitReview(
    patientId: string,
    trialId: string,
    criterionId: string,
    humanVerdict: Verdict,
  ): Promise<FeedbackAck> {
    return this.request<FeedbackAck>('/feedback', {
      method: 'POST',
      body: JSON.stringify({
        patient_id: patientId,
        trial_id: trialId,
        criterion_id: criterionId,
        human_verdict: humanVerdict,
      }),
    });
  }

  async classifyPatient(
    patientId: string,
    trialId: string,
    label: PatientLabel,
  ): Promise<FeedbackAck> {
    return this.request<FeedbackAck>('/classification', {
      method: 'POST',
      body: JSON.stringify({ patient_id: patientId, trial_id: trialId, label }),
    });
  }

  pageUrl(path: string): string {
    return `${this.config.baseUrl}${path}`;
  }

  async fetchExport(): Promise<unknown> {
    return this.request<unknown>('/export');
  }
}
