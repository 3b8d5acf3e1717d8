import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError, UnreachableError } from '../src/api.js';
import { MockBackend, standardBackend } from './mock_backend.js';

function client(backend: MockBackend): ApiClient {
  return new ApiClient('http://mock', backend.fetch);
}

describe('ApiClient', () => {
  it('fetches suggestions filtered by status', async () => {
    const backend = standardBackend();
    backend.addSuggestion({ id: 1, proposed_parent: 1 });
    backend.addSuggestion({ id: 2, proposed_parent: 2, status: 'approved' });
    const pending = await client(backend).getSuggestions('pending');
    expect(pending.map((s) => s.id)).toEqual([1]);
    const all = await client(backend).getSuggestions();
    expect(all).toHaveLength(2);
  });

  it('fetches node context with path and children', async () => {
    const backend = standardBackend();
    const node = await client(backend).getNode(1);
    expect(node.label).toBe('interior');
    expect(node.path_to_root.map((p) => p.label)).toEqual(['interior', 'root']);
    expect(node.children.map((c) => c.label)).toEqual(['gym', 'loft']);
  });

  it('posts approve exactly once with the note in the body', async () => {
    const backend = standardBackend();
    backend.addSuggestion({ id: 7, proposed_parent: 1 });
    const decided = await client(backend).decide(7, 'approve', 'looks right');
    expect(decided.status).toBe('approved');
    expect(decided.reviewer_note).toBe('looks right');
    const posts = backend.requests.filter((r) => r.method === 'POST');
    expect(posts).toEqual([{ method: 'POST', path: '/suggestions/7/approve' }]);
  });

  it('maps HTTP failures to ApiError with status', async () => {
    const backend = standardBackend();
    await expect(client(backend).decide(99, 'reject')).rejects.toMatchObject({ status: 404 });
    backend.addSuggestion({ id: 5, proposed_parent: 1, status: 'rejected' });
    try {
      await client(backend).decide(5, 'approve');
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(409);
    }
  });

  it('maps network failures to UnreachableError', async () => {
    const backend = standardBackend();
    backend.offline = true;
    await expect(client(backend).getStats()).rejects.toBeInstanceOf(UnreachableError);
  });

  it('only ever issues the allowed mutations', async () => {
    const backend = standardBackend();
    backend.addSuggestion({ id: 1, proposed_parent: 1 });
    const api = client(backend);
    await api.getSuggestions('pending');
    await api.getNode(1);
    await api.decide(1, 'reject');
    await api.batchSuggest(['wine cellar'], 1);
    const mutations = backend.requests.filter((r) => r.method !== 'GET');
    const allowed = /^\/suggestions\/(\d+)\/(approve|reject)$|^\/suggestions\/batch$/;
    for (const request of mutations) {
      expect(request.path).toMatch(allowed);
    }
  });
});
