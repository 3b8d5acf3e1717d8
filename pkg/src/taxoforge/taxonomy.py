"""Rooted taxonomy tree: node identity, parent links, traversal, mutation
with invariant enforcement, statistics and on-disk serialization.

Structure invariants maintained by every mutation:

* exactly one root (id 0, no parent), edge count = node count - 1;
* every node reaches the root by parent pointers (no cycles);
* labels are unique across the whole tree (normalized form);
* the children index is the exact inverse of the parent pointers, each
  child list kept in ascending node-id order. Ids are assigned
  monotonically, so for plain insertions this is insertion order, and it
  is the order the id-sorted file format preserves across round-trips.

The type is safe to hand between threads but not to mutate concurrently;
callers serialize writers (see taxoforge.workspace).
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from taxoforge.errors import (
    CycleError,
    DataFormatError,
    DuplicateLabelError,
    RootViolationError,
    UnknownNodeError,
)
from taxoforge.text import normalize_phrase

NodeId = int

ROOT_ID: NodeId = 0
ROOT_LABEL = "root"


class NodeKind(str, Enum):
    ROOT = "root"
    CATEGORY = "category"
    KEYPHRASE = "keyphrase"


@dataclass(frozen=True)
class TaxonomyNode:
    id: NodeId
    label: str
    kind: NodeKind
    parent: NodeId | None  # None only for the root


@dataclass(frozen=True)
class TaxonomyStats:
    num_nodes: int
    num_edges: int
    num_parents: int  # non-root nodes with >= 1 child
    num_leaves: int  # non-root nodes with 0 children
    max_depth: int  # edges on the longest root-to-leaf path


class Taxonomy:
    """Mutable rooted tree of labeled nodes."""

    def __init__(self, root_label: str = ROOT_LABEL):
        root_label = normalize_phrase(root_label)
        if not root_label:
            raise DataFormatError("root label is empty after normalization")
        root = TaxonomyNode(ROOT_ID, root_label, NodeKind.ROOT, None)
        self._nodes: dict[NodeId, TaxonomyNode] = {ROOT_ID: root}
        self._children: dict[NodeId, list[NodeId]] = {ROOT_ID: []}
        self._by_label: dict[str, NodeId] = {root_label: ROOT_ID}
        self._next_id: NodeId = ROOT_ID + 1

    # -- lookup ----------------------------------------------------------

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node_id: NodeId) -> bool:
        return node_id in self._nodes

    def node(self, node_id: NodeId) -> TaxonomyNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"no node with id {node_id}") from None

    def node_ids(self) -> list[NodeId]:
        return sorted(self._nodes)

    def children(self, node_id: NodeId) -> tuple[NodeId, ...]:
        self.node(node_id)
        return tuple(self._children[node_id])

    def find_label(self, label: str) -> NodeId | None:
        return self._by_label.get(label)

    def labels(self) -> set[str]:
        return set(self._by_label)

    def nodes_of_kind(self, *kinds: NodeKind) -> list[TaxonomyNode]:
        wanted = set(kinds)
        return [self._nodes[i] for i in sorted(self._nodes) if self._nodes[i].kind in wanted]

    def candidate_parents(self, include_root: bool = False) -> list[NodeId]:
        """Ids of nodes with at least one child, ascending; root optional."""
        ids = [i for i in sorted(self._nodes) if self._children[i]]
        if not include_root:
            ids = [i for i in ids if i != ROOT_ID]
        return ids

    # -- traversal -------------------------------------------------------

    def path_to_root(self, node_id: NodeId) -> list[NodeId]:
        """Ids from the node (first) up to the root (last)."""
        node = self.node(node_id)
        path = [node.id]
        while node.parent is not None:
            node = self._nodes[node.parent]
            path.append(node.id)
        return path

    def depth(self, node_id: NodeId) -> int:
        return len(self.path_to_root(node_id)) - 1

    def ancestor_at_resolution(self, node_id: NodeId, r: int) -> NodeId:
        """Walk up r parent steps, clamped so the result is never the root.

        r=1 is the "parent" resolution, r=2 "grandparent". A walk that
        would land on or pass the root stops at the depth-1 ancestor.
        """
        if r < 1:
            raise ValueError(f"resolution must be >= 1, got {r}")
        node = self.node(node_id)
        if node.id == ROOT_ID:
            raise RootViolationError("root has no resolution ancestor")
        current = node
        for _ in range(r):
            parent = self._nodes[current.parent]
            if parent.id == ROOT_ID:
                break
            current = parent
        return current.id

    def subtree_ids(self, node_id: NodeId) -> list[NodeId]:
        """Preorder ids of the subtree rooted at node_id (inclusive)."""
        self.node(node_id)
        out: list[NodeId] = []
        stack = [node_id]
        while stack:
            nid = stack.pop()
            out.append(nid)
            stack.extend(reversed(self._children[nid]))
        return out

    def is_descendant(self, node_id: NodeId, ancestor_id: NodeId) -> bool:
        """True when ancestor_id lies strictly above node_id."""
        path = self.path_to_root(node_id)
        return ancestor_id in path[1:]

    # -- mutation --------------------------------------------------------

    def add_node(self, label: str, parent: NodeId, kind: NodeKind) -> NodeId:
        """Attach a new leaf under parent. Label must be normalized and unique."""
        if kind == NodeKind.ROOT:
            raise RootViolationError("cannot add a second root")
        if not label or normalize_phrase(label) != label:
            raise DataFormatError(f"label {label!r} is not a normalized phrase")
        if label in self._by_label:
            raise DuplicateLabelError(f"label {label!r} already in taxonomy")
        self.node(parent)
        node_id = self._next_id
        self._next_id += 1
        self._nodes[node_id] = TaxonomyNode(node_id, label, kind, parent)
        self._children[node_id] = []
        self._children[parent].append(node_id)  # ids grow, list stays sorted
        self._by_label[label] = node_id
        return node_id

    def move_node(self, node_id: NodeId, new_parent: NodeId) -> None:
        """Reattach node_id (with its whole subtree) under new_parent."""
        node = self.node(node_id)
        self.node(new_parent)
        if node.id == ROOT_ID:
            raise RootViolationError("cannot move the root")
        if new_parent == node_id or self.is_descendant(new_parent, node_id):
            raise CycleError(
                f"cannot move node {node_id} under {new_parent}: target is in its subtree"
            )
        old_parent = node.parent
        if new_parent == old_parent:
            return
        self._children[old_parent].remove(node_id)
        bisect.insort(self._children[new_parent], node_id)
        self._nodes[node_id] = TaxonomyNode(node.id, node.label, node.kind, new_parent)

    # -- statistics ------------------------------------------------------

    def stats(self) -> TaxonomyStats:
        num_nodes = len(self._nodes)
        num_parents = sum(
            1 for i in self._nodes if i != ROOT_ID and self._children[i]
        )
        num_leaves = sum(
            1 for i in self._nodes if i != ROOT_ID and not self._children[i]
        )
        max_depth = 0
        # iterative depths: children are visited after their parent
        depths = {ROOT_ID: 0}
        stack = list(self._children[ROOT_ID])
        while stack:
            nid = stack.pop()
            d = depths[self._nodes[nid].parent] + 1
            depths[nid] = d
            if d > max_depth:
                max_depth = d
            stack.extend(self._children[nid])
        return TaxonomyStats(num_nodes, num_nodes - 1, num_parents, num_leaves, max_depth)

    def check_invariants(self) -> None:
        """Raise AssertionError when any structural invariant is broken.

        Used by tests and by load(); mutations preserve these by
        construction.
        """
        n = len(self._nodes)
        edges = sum(1 for node in self._nodes.values() if node.parent is not None)
        assert edges == n - 1, "edge count != node count - 1"
        roots = [x for x in self._nodes.values() if x.kind == NodeKind.ROOT]
        assert len(roots) == 1 and roots[0].id == ROOT_ID and roots[0].parent is None
        reached = set(self.subtree_ids(ROOT_ID))
        assert reached == set(self._nodes), "not every node reaches the root"
        for nid, kids in self._children.items():
            assert kids == sorted(kids)
            for kid in kids:
                assert self._nodes[kid].parent == nid, "children index out of sync"
        labels = [x.label for x in self._nodes.values()]
        assert len(set(labels)) == len(labels), "duplicate labels"

    # -- serialization ---------------------------------------------------

    FORMAT_VERSION = 1

    def to_json(self) -> str:
        records = []
        for nid in sorted(self._nodes):
            node = self._nodes[nid]
            rec: dict = {"id": node.id, "label": node.label, "kind": node.kind.value}
            if node.parent is not None:
                rec["parent"] = node.parent
            records.append(rec)
        doc = {"version": self.FORMAT_VERSION, "nodes": records}
        return json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Taxonomy":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"invalid JSON: {exc}") from exc
        if not isinstance(doc, dict) or set(doc) != {"version", "nodes"}:
            raise DataFormatError("expected exactly the fields 'version' and 'nodes'")
        if doc["version"] != cls.FORMAT_VERSION:
            raise DataFormatError(f"unsupported version {doc['version']!r}")
        nodes = doc["nodes"]
        if not isinstance(nodes, list) or not nodes:
            raise DataFormatError("'nodes' must be a non-empty list")

        first = nodes[0]
        cls._check_record(first)
        if first["id"] != ROOT_ID or first["kind"] != "root" or "parent" in first:
            raise DataFormatError("first node must be the parentless root with id 0")
        taxonomy = cls(root_label=first["label"])

        # pass 1: register nodes (parents may reference later ids after moves)
        last_id = ROOT_ID
        for rec in nodes[1:]:
            cls._check_record(rec)
            nid = rec["id"]
            if nid <= last_id:
                raise DataFormatError("nodes must be listed in ascending id order")
            last_id = nid
            if rec["kind"] == "root" or "parent" not in rec:
                raise DataFormatError(f"node {nid} must have a parent and non-root kind")
            label = rec["label"]
            if not label or normalize_phrase(label) != label:
                raise DataFormatError(f"label {label!r} is not a normalized phrase")
            if label in taxonomy._by_label:
                raise DataFormatError(f"duplicate label {label!r}")
            taxonomy._nodes[nid] = TaxonomyNode(nid, label, NodeKind(rec["kind"]), rec["parent"])
            taxonomy._children[nid] = []
            taxonomy._by_label[label] = nid

        # pass 2: children index; ascending id scan keeps each list sorted
        for nid in sorted(taxonomy._nodes):
            if nid == ROOT_ID:
                continue
            parent = taxonomy._nodes[nid].parent
            if parent not in taxonomy._nodes:
                raise DataFormatError(f"node {nid} references unknown parent {parent}")
            taxonomy._children[parent].append(nid)

        taxonomy._next_id = last_id + 1
        try:
            taxonomy.check_invariants()
        except AssertionError as exc:
            raise DataFormatError(f"structural check failed: {exc}") from exc
        return taxonomy

    @staticmethod
    def _check_record(rec) -> None:
        if not isinstance(rec, dict):
            raise DataFormatError("node record must be an object")
        allowed = {"id", "label", "kind", "parent"}
        unknown = set(rec) - allowed
        if unknown:
            raise DataFormatError(f"unknown node fields: {sorted(unknown)}")
        if not {"id", "label", "kind"} <= set(rec):
            raise DataFormatError("node record needs id, label and kind")
        if not isinstance(rec["id"], int) or isinstance(rec["id"], bool) or rec["id"] < 0:
            raise DataFormatError(f"id must be a non-negative integer, got {rec['id']!r}")
        if rec["kind"] not in {k.value for k in NodeKind}:
            raise DataFormatError(f"unknown kind {rec['kind']!r}")
        if "parent" in rec and (not isinstance(rec["parent"], int) or isinstance(rec["parent"], bool)):
            raise DataFormatError("parent must be an integer id")

    def save(self, path: str | Path) -> None:
        from taxoforge.workspace import atomic_write_text

        atomic_write_text(Path(path), self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "Taxonomy":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
