/**
 * Review-queue state machine: loading, ordering, pagination, keyboard
 * cursor, and optimistic decisions with rollback.
 *
 * Decision flow: the item is removed optimistically, then
 *   2xx        -> stays removed, the proposed parent's node view refreshes;
 *   409        -> someone else decided it: refresh to the decided status
 *                 and surface a notice (never restored to pending);
 *   404        -> the suggestion is gone server-side: drop it, notice;
 *   other/no response -> restore the item exactly where it was.
 */

import { ApiClient, ApiError, UnreachableError } from './api.js';
import type { Decision, NodeInfo, Suggestion, SuggestionView } from './types.js';

export interface Notice {
  kind: 'info' | 'conflict' | 'error';
  text: string;
}

export type ConnectionState = 'loading' | 'ready' | 'unreachable';

const SIBLING_LIMIT = 10;

export function compareForQueue(a: SuggestionView, b: SuggestionView): number {
  // score desc, then age asc (older created_at first), then id for stability
  if (a.suggestion.score !== b.suggestion.score) return b.suggestion.score - a.suggestion.score;
  if (a.suggestion.created_at !== b.suggestion.created_at)
    return a.suggestion.created_at < b.suggestion.created_at ? -1 : 1;
  return a.suggestion.id - b.suggestion.id;
}

export class QueueController {
  items: SuggestionView[] = [];
  cursor = 0;
  pageSize: number;
  visibleCount: number;
  connection: ConnectionState = 'loading';
  notices: Notice[] = [];
  /** Node view of the most recent approval's parent (the "tree panel"). */
  lastDecidedParent: NodeInfo | null = null;
  private inFlight = new Set<number>();

  constructor(
    private readonly api: ApiClient,
    pageSize = 25,
  ) {
    this.pageSize = pageSize;
    this.visibleCount = pageSize;
  }

  async load(): Promise<void> {
    this.connection = 'loading';
    try {
      const pending = await this.api.getSuggestions('pending');
      const views = await Promise.all(pending.map((s) => this.enrich(s)));
      this.items = views.sort(compareForQueue);
      this.cursor = Math.min(this.cursor, Math.max(0, this.items.length - 1));
      this.visibleCount = this.pageSize;
      this.connection = 'ready';
    } catch (err) {
      if (err instanceof UnreachableError) {
        this.connection = 'unreachable'; // retry banner; queue data kept
        return;
      }
      throw err;
    }
  }

  private async enrich(suggestion: Suggestion): Promise<SuggestionView> {
    const node = await this.api.getNode(suggestion.proposed_parent);
    return {
      suggestion,
      parentLabel: node.label,
      parentPath: [...node.path_to_root].reverse(),
      siblings: node.children.slice(0, SIBLING_LIMIT).map((c) => c.label),
    };
  }

  visibleItems(): SuggestionView[] {
    return this.items.slice(0, this.visibleCount);
  }

  hasMore(): boolean {
    return this.items.length > this.visibleCount;
  }

  showMore(): void {
    this.visibleCount = Math.min(this.items.length, this.visibleCount + this.pageSize);
  }

  selected(): SuggestionView | null {
    return this.items[this.cursor] ?? null;
  }

  next(): void {
    if (this.cursor < Math.min(this.items.length, this.visibleCount) - 1) this.cursor += 1;
  }

  prev(): void {
    if (this.cursor > 0) this.cursor -= 1;
  }

  pushNotice(notice: Notice): void {
    this.notices.push(notice);
    if (this.notices.length > 5) this.notices.shift();
  }

  async decide(id: number, decision: Decision, note?: string): Promise<void> {
    if (this.inFlight.has(id)) return; // one dispatch per item
    const index = this.items.findIndex((v) => v.suggestion.id === id);
    if (index < 0) return;
    const [removed] = this.items.splice(index, 1); // optimistic removal
    if (this.cursor >= this.items.length) this.cursor = Math.max(0, this.items.length - 1);
    this.inFlight.add(id);
    try {
      const decided = await this.api.decide(id, decision, note);
      this.pushNotice({
        kind: 'info',
        text: `#${id} "${decided.child_label}" ${decided.status}`,
      });
      if (decision === 'approve') {
        try {
          this.lastDecidedParent = await this.api.getNode(decided.proposed_parent);
        } catch {
          this.lastDecidedParent = null; // panel refresh is best-effort
        }
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // concurrent reviewer won: reflect the decided status, keep it
        // out of the pending list
        const fresh = await this.refreshStatus(id);
        this.pushNotice({
          kind: 'conflict',
          text: `#${id} was already ${fresh ?? 'decided'} by another reviewer`,
        });
      } else if (err instanceof ApiError && err.status === 404) {
        this.pushNotice({ kind: 'error', text: `#${id} no longer exists` });
      } else {
        // network failure or server error: restore to pending locally
        this.items.splice(Math.min(index, this.items.length), 0, removed);
        this.items.sort(compareForQueue);
        const reason = err instanceof ApiError ? `HTTP ${err.status}` : 'network failure';
        this.pushNotice({ kind: 'error', text: `#${id} not decided (${reason}); restored` });
      }
    } finally {
      this.inFlight.delete(id);
    }
  }

  private async refreshStatus(id: number): Promise<string | null> {
    try {
      const all = await this.api.getSuggestions();
      const found = all.find((s) => s.id === id);
      return found ? found.status : null;
    } catch {
      return null;
    }
  }
}
