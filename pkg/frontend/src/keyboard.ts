export type ReviewAction = 'next' | 'previous' | 'confirm' | 'reject' | 'refresh';

interface KeyEventLike {
  key: string;
  targetTag?: string;
}

/** Keyboard-first review: officers work the queue without the mouse.
 *  Keys are ignored while focus is in a text field. */
export function mapKey(event: KeyEventLike): ReviewAction | null {
  const tag = (event.targetTag ?? '').toLowerCase();
  if (tag === 'input' || tag === 'textarea' || tag === 'select') return null;
  switch (event.key) {
    case 'j':
    case 'ArrowDown':
      return 'next';
    case 'k':
    case 'ArrowUp':
      return 'previous';
    case 'c':
    case 'y':
      return 'confirm';
    case 'r':
    case 'n':
      return 'reject';
    case 'g':
      return 'refresh';
    default:
      return null;
  }
}
