// API payload types, mirroring the review service JSON.

export type Verdict = 'Met' | 'Unmet' | 'Unknown';
export type PatientLabel = 'ToScreen' | 'NotEligible';

export interface PairSummary {
  patient_id: string;
  trial_id: string;
  trial_title: string;
  criteria: number;
  reviewed: number;
  pending: number;
  classification: PatientLabel | null;
}

export interface RelevanceInfo {
  relevant: boolean;
  rationale: string;
  checked_page_id: string | null;
}

export interface AssessmentRow {
  assessment_id: string;
  patient_id: string;
  trial_id: string;
  criterion_id: string;
  criterion_description: string;
  criterion_kind: string | null;
  verdict: Verdict;
  rationale: string;
  source_page_ids: string[];
  page_image_urls: string[];
  human_verdict: Verdict | null;
  strategy: string;
  as_of_date: string;
  failed: boolean;
  error: string | null;
}

export interface PairDetail {
  patient_id: string;
  trial_id: string;
  relevance: RelevanceInfo | null;
  classification: PatientLabel | null;
  assessments: AssessmentRow[];
}

export interface FeedbackAck {
  event_id: string;
  stored: boolean;
  deduplicated: boolean;
}

export interface AppConfig {
  baseUrl: string;
  token: string | null;
  actorId: string;
}
