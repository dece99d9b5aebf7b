import { ApiClient } from './api.js';
import { ReviewController, Notice } from './controller.js';
import { mapKey } from './keyboard.js';
import { renderApp } from './view.js';
import type { UiConfig } from './types.js';

async function loadConfig(): Promise<UiConfig> {
  const response = await fetch('./config.json');
  if (!response.ok) throw new Error('config.json missing next to index.html');
  return (await response.json()) as UiConfig;
}

async function bootstrap(): Promise<void> {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app container');

  const config = await loadConfig();
  const api = new ApiClient(config);
  let notice: Notice | null = null;
  let noticeTimer: ReturnType<typeof setTimeout> | null = null;

  const controller = new ReviewController(api, config.reviewer ?? 'officer', {
    onChange: () => renderApp(controller, root, notice),
    onNotice: (n) => {
      notice = n;
      renderApp(controller, root, notice);
      if (noticeTimer) clearTimeout(noticeTimer);
      noticeTimer = setTimeout(() => {
        notice = null;
        renderApp(controller, root, notice);
      }, 6000);
    },
  });

  document.addEventListener('keydown', (event) => {
    const action = mapKey({
      key: event.key,
      targetTag: event.target instanceof HTMLElement ? event.target.tagName : undefined,
    });
    if (!action) return;
    event.preventDefault();
    switch (action) {
      case 'next':
        controller.next();
        break;
      case 'previous':
        controller.previous();
        break;
      case 'confirm':
        void controller.confirmSelected();
        break;
      case 'reject':
        void controller.rejectSelected();
        break;
      case 'refresh':
        void controller.refresh();
        break;
    }
  });

  await controller.loadPage(0, config.pageSize ?? 20);
  controller.startPolling();
}

void bootstrap();
