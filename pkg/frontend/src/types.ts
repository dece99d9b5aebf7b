export type ReviewStatus = 'Pending' | 'ConfirmedEvasion' | 'Rejected';

export interface QueueEntry {
  post_id: string;
  score: number;
  status: ReviewStatus;
  reviewer: string | null;
  reviewed_at: number | null;
  hashtags: string[];
  comment: string;
  media_kind: string | null;
  media_ref: string | number | null;
  contact_channels: string[];
}

export interface QueuePage {
  page: number;
  size: number;
  total: number;
  entries: QueueEntry[];
}

export interface VerdictAck {
  ok: boolean;
  post_id: string;
  status: ReviewStatus;
  reviewed_at: number;
}

export interface ExportRow {
  post_id: string;
  hidden_economy: boolean;
  verdict: ReviewStatus;
  reviewer: string | null;
  reviewed_at: number | null;
}

export interface UiConfig {
  serviceUrl: string;
  token?: string;
  reviewer?: string;
  pageSize?: number;
}
