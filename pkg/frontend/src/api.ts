/**
 * Typed client over the taxoforge HTTP API.
 *
 * The only mutations this module can issue are the two decision
 * endpoints and batch-suggest; everything else is a read. The fetch
 * implementation is injectable so tests run against a mock backend.
 */

import type { Decision, NodeInfo, Stats, Suggestion, SuggestionStatus } from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** Network-level failure (server unreachable, aborted, DNS...). */
export class UnreachableError extends Error {}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new UnreachableError(String(err));
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (body && body.detail !== undefined) detail = JSON.stringify(body.detail);
      } catch {
        // keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  getStats(): Promise<Stats> {
    return this.request<Stats>('/stats');
  }

  getSuggestions(status?: SuggestionStatus): Promise<Suggestion[]> {
    const query = status ? `?status=${status}` : '';
    return this.request<Suggestion[]>(`/suggestions${query}`);
  }

  getNode(id: number): Promise<NodeInfo> {
    return this.request<NodeInfo>(`/node/${id}`);
  }

  decide(id: number, decision: Decision, note?: string): Promise<Suggestion> {
    return this.request<Suggestion>(`/suggestions/${id}/${decision}`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(note ? { reviewer_note: note } : {}),
    });
  }

  batchSuggest(phrases: string[], topK = 1): Promise<{ created: Suggestion[]; skipped_existing: string[] }> {
    return this.request('/suggestions/batch', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ phrases, top_k: topK }),
    });
  }
}
