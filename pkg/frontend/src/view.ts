/**
 * Pure HTML rendering. Every function returns a string, so the full view
 * layer is testable without a DOM; main.ts assigns the result to
 * innerHTML and delegates events by data attributes.
 *
 * Scores are printed exactly as served (no client-side recomputation).
 */

import type { Notice, QueueController } from './queue.js';
import type { SuggestionView } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function renderBreadcrumbs(view: SuggestionView): string {
  const crumbs = view.parentPath
    .map((ref) => `<span class="crumb" data-node-id="${ref.id}">${escapeHtml(ref.label)}</span>`)
    .join('<span class="crumb-sep"> &rsaquo; </span>');
  return `<nav class="breadcrumbs">${crumbs}</nav>`;
}

export function renderScoreBadge(view: SuggestionView): string {
  const cls = view.suggestion.low_confidence ? 'score-badge low-confidence' : 'score-badge';
  const title = view.suggestion.low_confidence ? ' title="below the acceptance threshold"' : '';
  return `<span class="${cls}"${title}>${view.suggestion.score}</span>`;
}

export function renderSiblings(view: SuggestionView): string {
  if (view.siblings.length === 0) {
    return '<div class="siblings empty">no siblings yet</div>';
  }
  const chips = view.siblings.map((s) => `<span class="chip">${escapeHtml(s)}</span>`).join(' ');
  return `<div class="siblings">${chips}</div>`;
}

export function renderItem(view: SuggestionView, selected: boolean): string {
  const s = view.suggestion;
  return `
  <li class="item${selected ? ' selected' : ''}" data-id="${s.id}">
    <header>
      <span class="child">${escapeHtml(s.child_label)}</span>
      <span class="arrow">&rarr;</span>
      <span class="parent">${escapeHtml(view.parentLabel)}</span>
      ${renderScoreBadge(view)}
    </header>
    ${renderBreadcrumbs(view)}
    ${renderSiblings(view)}
    <footer>
      <span class="created">queued ${escapeHtml(s.created_at)}</span>
      <button data-action="approve" data-id="${s.id}">approve (a)</button>
      <button data-action="reject" data-id="${s.id}">reject (r)</button>
    </footer>
  </li>`;
}

export function renderNotices(notices: Notice[]): string {
  if (notices.length === 0) return '';
  const lines = notices
    .map((n) => `<div class="notice ${n.kind}">${escapeHtml(n.text)}</div>`)
    .join('');
  return `<div class="notices">${lines}</div>`;
}

export function renderTreePanel(queue: QueueController): string {
  const node = queue.lastDecidedParent;
  if (!node) return '<aside class="tree-panel empty">no recent approvals</aside>';
  const children = node.children
    .map((c) => `<li>${escapeHtml(c.label)}</li>`)
    .join('');
  return `<aside class="tree-panel">
    <h2>${escapeHtml(node.label)}</h2>
    <ul class="children">${children}</ul>
  </aside>`;
}

export function renderQueue(queue: QueueController): string {
  if (queue.connection === 'unreachable') {
    return `<div class="banner unreachable">
      service unreachable &mdash; nothing was lost
      <button data-action="retry">retry</button>
    </div>${renderNotices(queue.notices)}`;
  }
  if (queue.connection === 'loading') {
    return '<div class="banner loading">loading&hellip;</div>';
  }
  if (queue.items.length === 0) {
    return `${renderNotices(queue.notices)}
      <div class="empty-state">no pending suggestions</div>${renderTreePanel(queue)}`;
  }
  const selectedId = queue.selected()?.suggestion.id;
  const items = queue
    .visibleItems()
    .map((v) => renderItem(v, v.suggestion.id === selectedId))
    .join('\n');
  const more = queue.hasMore()
    ? `<button class="show-more" data-action="show-more">show ${
        queue.items.length - queue.visibleItems().length
      } more</button>`
    : '';
  return `${renderNotices(queue.notices)}
  <main class="layout">
    <ol class="queue">${items}</ol>
    ${renderTreePanel(queue)}
  </main>
  ${more}
  <footer class="hints">a approve &middot; r reject &middot; j/k navigate</footer>`;
}
