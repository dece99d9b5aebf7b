/** Display formatting for queue cards and the session summary. */

export function formatScore(score: number): string {
  return score.toFixed(3);
}

export function formatPrecision(confirmed: number, rejected: number): string | null {
  const reviewed = confirmed + rejected;
  if (reviewed === 0) return null;
  return (confirmed / reviewed).toFixed(3);
}

/** Video posts were featurized from a noise substitute, not real frames;
 *  reviewers need to see that the visual channel was degraded. */
export function mediaBadge(mediaKind: string | null): string {
  switch (mediaKind) {
    case 'video_placeholder':
      return 'VIDEO - noise substitute';
    case 'image':
      return 'IMAGE';
    case 'precomputed_embedding':
      return 'EMBEDDING ONLY';
    default:
      return 'NO MEDIA INFO';
  }
}

export function commentExcerpt(comment: string, maxLength = 140): string {
  if (comment.length <= maxLength) return comment;
  return comment.slice(0, maxLength - 1).trimEnd() + '…';
}

export function statusLabel(status: string, optimistic: boolean): string {
  return optimistic ? `${status} (saving…)` : status;
}
