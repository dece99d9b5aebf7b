import { formatPrecision } from './format.js';
import type { ReviewStatus } from './types.js';

export interface SessionSummary {
  confirmed: number;
  rejected: number;
  reviewed: number;
  /** confirmed / reviewed to 3 decimals, or null before the first verdict
   *  (the summary stays hidden until something was reviewed) */
  precision: string | null;
}

/** Counts of this session's verdicts and the running precision of the
 *  reviewed head of the queue. */
export class SessionTracker {
  private confirmed = 0;
  private rejected = 0;

  record(verdict: ReviewStatus): void {
    if (verdict === 'ConfirmedEvasion') this.confirmed += 1;
    else if (verdict === 'Rejected') this.rejected += 1;
  }

  get reviewed(): number {
    return this.confirmed + this.rejected;
  }

  summary(): SessionSummary {
    return {
      confirmed: this.confirmed,
      rejected: this.rejected,
      reviewed: this.reviewed,
      precision: formatPrecision(this.confirmed, this.rejected),
    };
  }

  reset(): void {
    this.confirmed = 0;
    this.rejected = 0;
  }
}
