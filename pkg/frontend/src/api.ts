import type { ExportRow, QueuePage, ReviewStatus, UiConfig, VerdictAck } from './types.js';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin client over the review service; every verdict write goes through
 *  postVerdict -- there is no other mutation path in the UI. */
export class ApiClient {
  private fetchFn: FetchLike;

  constructor(private config: UiConfig, fetchFn?: FetchLike) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (this.config.token) {
      headers['Authorization'] = `Bearer ${this.config.token}`;
    }
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.config.serviceUrl}${path}`, {
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

  health(): Promise<{ status: string; model_loaded: boolean; queue_size: number }> {
    return this.request('/api/health');
  }

  fetchQueue(page: number, size: number): Promise<QueuePage> {
    return this.request(`/api/queue?page=${page}&size=${size}`);
  }

  postVerdict(postId: string, verdict: ReviewStatus, reviewer: string, force = false): Promise<VerdictAck> {
    return this.request('/api/verdict', {
      method: 'POST',
      body: JSON.stringify({ post_id: postId, verdict, reviewer, force }),
    });
  }

  fetchExportLabels(): Promise<ExportRow[]> {
    return this.request('/api/export/labels');
  }
}
