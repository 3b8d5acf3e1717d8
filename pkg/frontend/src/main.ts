/**
 * Browser bootstrap: wires the queue controller, renderer and keyboard
 * shortcuts to the DOM. The API base defaults to the serving origin and
 * can be overridden with ?api=http://host:port for development.
 */

import { ApiClient } from './api.js';
import { actionForKey } from './keyboard.js';
import { QueueController } from './queue.js';
import { renderQueue } from './view.js';

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get('api');
  return (override ?? window.location.origin).replace(/\/$/, '');
}

export function start(root: HTMLElement): QueueController {
  const queue = new QueueController(new ApiClient(apiBase()));

  const paint = () => {
    root.innerHTML = renderQueue(queue);
  };

  const act = async (task: Promise<void>) => {
    await task;
    paint();
  };

  root.addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    if (!action) return;
    if (action === 'retry') void act(queue.load());
    if (action === 'show-more') {
      queue.showMore();
      paint();
    }
    if (action === 'approve' || action === 'reject') {
      void act(queue.decide(Number(target.dataset.id), action));
    }
  });

  document.addEventListener('keydown', (event) => {
    const typing = (event.target as HTMLElement | null)?.tagName === 'INPUT';
    const action = actionForKey(event.key, typing ?? false);
    if (!action) return;
    event.preventDefault();
    if (action.type === 'next') {
      queue.next();
      paint();
    } else if (action.type === 'prev') {
      queue.prev();
      paint();
    } else {
      const current = queue.selected();
      if (current) void act(queue.decide(current.suggestion.id, action.type));
    }
  });

  void act(queue.load());
  return queue;
}

if (typeof document !== 'undefined') {
  const root = document.getElementById('app');
  if (root) start(root);
}
