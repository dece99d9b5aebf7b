import { commentExcerpt, formatScore, mediaBadge, statusLabel } from './format.js';
import type { ReviewController, Notice } from './controller.js';
import type { CardState } from './store.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function statusClass(status: string, optimistic: boolean): string {
  const base = status === 'ConfirmedEvasion' ? 'confirmed' : status === 'Rejected' ? 'rejected' : 'pending';
  return optimistic ? `status ${base} optimistic` : `status ${base}`;
}

function renderCard(controller: ReviewController, card: CardState, index: number): HTMLElement {
  const { status, optimistic } = controller.store.displayStatus(card);
  const root = el('article', index === controller.selected ? 'card selected' : 'card');
  root.dataset.postId = card.acked.post_id;

  const head = el('header');
  head.appendChild(el('span', 'post-id', card.acked.post_id));
  head.appendChild(el('span', 'score', formatScore(card.acked.score)));
  head.appendChild(el('span', statusClass(status, optimistic), statusLabel(status, optimistic)));
  root.appendChild(head);

  const media = el('div', 'media');
  if (card.acked.media_kind === 'image' && typeof card.acked.media_ref === 'string') {
    media.appendChild(el('span', 'badge image', mediaBadge('image')));
    media.appendChild(el('span', 'media-ref', String(card.acked.media_ref)));
  } else {
    media.appendChild(el('span', 'badge', mediaBadge(card.acked.media_kind)));
  }
  root.appendChild(media);

  root.appendChild(el('p', 'comment', commentExcerpt(card.acked.comment)));

  const tags = el('div', 'hashtags');
  for (const tag of card.acked.hashtags) {
    tags.appendChild(el('span', 'chip', `#${tag}`));
  }
  root.appendChild(tags);

  if (card.acked.contact_channels.length > 0) {
    const contacts = el('div', 'contacts');
    for (const channel of card.acked.contact_channels) {
      contacts.appendChild(el('span', 'chip contact', channel));
    }
    root.appendChild(contacts);
  }

  const actions = el('div', 'actions');
  const confirm = el('button', 'confirm', 'Confirm (c)');
  confirm.disabled = !controller.verdictsEnabled || optimistic;
  confirm.addEventListener('click', () => void controller.applyVerdict('ConfirmedEvasion', card.acked.post_id));
  const reject = el('button', 'reject', 'Reject (r)');
  reject.disabled = !controller.verdictsEnabled || optimistic;
  reject.addEventListener('click', () => void controller.applyVerdict('Rejected', card.acked.post_id));
  actions.append(confirm, reject);
  root.appendChild(actions);

  root.addEventListener('click', () => controller.select(index));
  return root;
}

export function renderApp(controller: ReviewController, root: HTMLElement, notice: Notice | null): void {
  root.replaceChildren();

  const header = el('header', 'topbar');
  header.appendChild(el('h1', undefined, 'Review queue'));
  if (controller.offline) {
    header.appendChild(el('span', 'offline', 'OFFLINE - verdicts disabled'));
  }
  const summary = controller.session.summary();
  if (summary.precision !== null) {
    header.appendChild(
      el(
        'span',
        'session',
        `session: ${summary.confirmed} confirmed / ${summary.rejected} rejected - precision ${summary.precision}`,
      ),
    );
  }
  root.appendChild(header);

  if (notice) {
    root.appendChild(el('div', `banner ${notice.kind}`, notice.message));
  }

  const list = el('main', 'queue');
  controller.store.cards.forEach((card, index) => {
    list.appendChild(renderCard(controller, card, index));
  });
  if (controller.store.cards.length === 0) {
    list.appendChild(el('p', 'empty', 'Queue is empty.'));
  }
  root.appendChild(list);

  const pager = el('footer', 'pager');
  pager.appendChild(
    el('span', undefined, `page ${controller.store.page} - ${controller.store.total} posts total`),
  );
  const prev = el('button', undefined, 'Prev page');
  prev.disabled = controller.store.page === 0;
  prev.addEventListener('click', () => void controller.loadPage(controller.store.page - 1));
  const next = el('button', undefined, 'Next page');
  next.disabled = (controller.store.page + 1) * controller.store.size >= controller.store.total;
  next.addEventListener('click', () => void controller.loadPage(controller.store.page + 1));
  pager.append(prev, next);
  root.appendChild(pager);
}
