import type { QueueEntry, QueuePage, ReviewStatus, VerdictAck } from './types.js';

export interface CardState {
  /** last service-acknowledged entry -- never locally mutated */
  acked: QueueEntry;
  /** optimistic status while a verdict is in flight, or null */
  optimistic: ReviewStatus | null;
}

/** Client queue state. The UI never invents state: a card shows either the
 *  last acknowledged status or an explicitly marked optimistic one, and a
 *  failed write always rolls back to the acknowledged value. */
export class QueueStore {
  cards: CardState[] = [];
  page = 0;
  size = 20;
  total = 0;

  setPage(data: QueuePage): void {
    this.page = data.page;
    this.size = data.size;
    this.total = data.total;
    this.cards = data.entries.map((entry) => ({ acked: entry, optimistic: null }));
  }

  find(postId: string): CardState | undefined {
    return this.cards.find((c) => c.acked.post_id === postId);
  }

  beginVerdict(postId: string, verdict: ReviewStatus): CardState {
    const card = this.find(postId);
    if (!card) throw new Error(`no card for post ${postId}`);
    if (card.optimistic !== null) throw new Error(`verdict already in flight for ${postId}`);
    card.optimistic = verdict;
    return card;
  }

  commitVerdict(postId: string, ack: VerdictAck): void {
    const card = this.find(postId);
    if (!card) return;
    card.acked = { ...card.acked, status: ack.status, reviewed_at: ack.reviewed_at };
    card.optimistic = null;
  }

  rollbackVerdict(postId: string): void {
    const card = this.find(postId);
    if (!card) return;
    card.optimistic = null;
  }

  displayStatus(card: CardState): { status: ReviewStatus; optimistic: boolean } {
    if (card.optimistic !== null) return { status: card.optimistic, optimistic: true };
    return { status: card.acked.status, optimistic: false };
  }
}
