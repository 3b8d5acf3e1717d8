/** Wire types, mirroring the taxoforge HTTP API verbatim. */

export type SuggestionStatus = 'pending' | 'approved' | 'rejected';

export interface Suggestion {
  id: number;
  child_label: string;
  proposed_parent: number;
  score: number;
  status: SuggestionStatus;
  created_at: string;
  decided_at: string | null;
  reviewer_note: string | null;
  low_confidence: boolean;
}

export interface NodeRef {
  id: number;
  label: string;
}

export interface NodeInfo {
  id: number;
  label: string;
  kind: string;
  parent: number | null;
  depth: number;
  path_to_root: NodeRef[];
  children: Array<NodeRef & { kind: string }>;
}

export interface Stats {
  num_nodes: number;
  num_edges: number;
  num_parents: number;
  num_leaves: number;
  max_depth: number;
  pending_suggestions: number;
}

/** A suggestion enriched with the context a reviewer needs. */
export interface SuggestionView {
  suggestion: Suggestion;
  parentLabel: string;
  /** Root-first path down to the proposed parent. */
  parentPath: NodeRef[];
  /** First 10 sibling labels under the proposed parent. */
  siblings: string[];
}

export type Decision = 'approve' | 'reject';
