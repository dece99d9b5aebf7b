import { ApiClient, ApiError } from './api.js';
import { QueueStore } from './store.js';
import { SessionTracker } from './session.js';
import type { ReviewStatus } from './types.js';

export interface Notice {
  kind: 'error' | 'conflict' | 'info';
  message: string;
}

export interface ControllerEvents {
  onChange: () => void;
  onNotice: (notice: Notice) => void;
}

const POLL_INTERVAL_MS = 30_000;

/** Orchestrates queue paging, selection, optimistic verdicts and polling. */
export class ReviewController {
  store = new QueueStore();
  session = new SessionTracker();
  selected = 0;
  offline = false;
  private pollHandle: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: ApiClient,
    private reviewer: string,
    private events: ControllerEvents,
  ) {}

  get verdictsEnabled(): boolean {
    return !this.offline;
  }

  async loadPage(page: number, size = this.store.size): Promise<void> {
    try {
      const data = await this.api.fetchQueue(page, size);
      this.store.setPage(data);
      this.selected = Math.min(this.selected, Math.max(0, this.store.cards.length - 1));
      this.offline = false;
      this.events.onChange();
    } catch (err) {
      this.handleFailure(err, 'queue load failed');
    }
  }

  /** Reconcile with the service; used by the 30s poll and manual refresh. */
  async refresh(): Promise<void> {
    await this.loadPage(this.store.page);
  }

  startPolling(intervalMs = POLL_INTERVAL_MS): void {
    this.stopPolling();
    this.pollHandle = setInterval(() => void this.refresh(), intervalMs);
  }

  stopPolling(): void {
    if (this.pollHandle !== null) {
      clearInterval(this.pollHandle);
      this.pollHandle = null;
    }
  }

  select(index: number): void {
    if (this.store.cards.length === 0) return;
    this.selected = Math.max(0, Math.min(index, this.store.cards.length - 1));
    this.events.onChange();
  }

  next(): void {
    this.select(this.selected + 1);
  }

  previous(): void {
    this.select(this.selected - 1);
  }

  confirmSelected(): Promise<void> {
    return this.applyVerdict('ConfirmedEvasion');
  }

  rejectSelected(): Promise<void> {
    return this.applyVerdict('Rejected');
  }

  async applyVerdict(verdict: ReviewStatus, postId?: string): Promise<void> {
    if (!this.verdictsEnabled) {
      this.events.onNotice({ kind: 'error', message: 'offline: verdicts disabled' });
      return;
    }
    const card = postId ? this.store.find(postId) : this.store.cards[this.selected];
    if (!card) return;
    const id = card.acked.post_id;
    if (card.optimistic !== null) return; // one in-flight verdict per card

    this.store.beginVerdict(id, verdict);
    this.events.onChange();
    try {
      const ack = await this.api.postVerdict(id, verdict, this.reviewer);
      this.store.commitVerdict(id, ack);
      this.session.record(ack.status);
      this.events.onChange();
    } catch (err) {
      this.store.rollbackVerdict(id);
      if (err instanceof ApiError && err.status === 409) {
        this.events.onNotice({
          kind: 'conflict',
          message: `post ${id} was already reviewed: ${err.message}`,
        });
        void this.refresh(); // reconcile with the authoritative status
      } else {
        this.handleFailure(err, `verdict on ${id} failed`);
      }
      this.events.onChange();
    }
  }

  private handleFailure(err: unknown, context: string): void {
    if (err instanceof ApiError) {
      this.events.onNotice({ kind: 'error', message: `${context}: ${err.message}` });
    } else {
      // network-level failure: flip offline until a poll succeeds
      this.offline = true;
      this.events.onNotice({ kind: 'error', message: `${context}: service unreachable` });
    }
    this.events.onChange();
  }
}
