"""Quality metrics: reference-ontology precision, subtree embedding
similarity, and a 2-D principal-component export for inspection plots.

All operations are read-only over taxonomy and model snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from taxoforge.embedding import EmbeddingModel
from taxoforge.errors import DataFormatError, DegeneratePhraseError, EmptyOverlapError
from taxoforge.taxonomy import ROOT_ID, NodeId, Taxonomy

__all__ = [
    "ReferenceOntology",
    "PrecisionStrategy",
    "PrecisionReport",
    "reference_precision",
    "subtree_similarity",
    "random_tree_similarity_baseline",
    "ProjectionResult",
    "export_projection",
    "write_projection",
]


@dataclass(frozen=True)
class ReferenceOntology:
    """Directed (child, parent) hypernym pairs from an external resource."""

    edges: frozenset[tuple[str, str]]

    def __post_init__(self):
        for child, parent in self.edges:
            if child == parent:
                raise DataFormatError(f"self-loop {child!r} in reference ontology")

    def vocabulary(self) -> set[str]:
        return {w for edge in self.edges for w in edge}

    @classmethod
    def load(cls, path: str | Path) -> "ReferenceOntology":
        """Parse lines "child<TAB>parent" of normalized phrases."""
        edges = set()
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise DataFormatError("expected 'child<TAB>parent'", line=lineno)
            if parts[0] == parts[1]:
                raise DataFormatError(f"self-loop {parts[0]!r}", line=lineno)
            edges.add((parts[0], parts[1]))
        return cls(frozenset(edges))


class PrecisionStrategy(str, Enum):
    RANDOM = "random"
    EMBEDDING_SIMILARITY = "embedding_similarity"
    TAXONOMY = "taxonomy"


@dataclass(frozen=True)
class PrecisionReport:
    strategy: PrecisionStrategy
    numerator: int
    denominator: int
    precision: float
    seed: int | None
    proposals: tuple[tuple[str, str], ...]  # (child label, proposed parent label)


def reference_precision(
    taxonomy: Taxonomy,
    reference: ReferenceOntology,
    model: EmbeddingModel | None,
    strategy: PrecisionStrategy | str,
    seed: int | None = 0,
) -> PrecisionReport:
    """Fraction of proposed (child, parent) edges found in the reference.

    The shared denominator is the number of reference edges with both
    endpoints among taxonomy labels. Every taxonomy label appearing as a
    child in that edge set proposes one parent - a seeded uniform pick, a
    cosine argmax, or its actual taxonomy parent - and the numerator
    counts proposals present in the reference.
    """
    strategy = PrecisionStrategy(strategy)
    if not reference.edges:
        raise DataFormatError("reference ontology is empty")
    if strategy is PrecisionStrategy.EMBEDDING_SIMILARITY and model is None:
        raise ValueError("embedding_similarity strategy requires a trained model")

    labels = taxonomy.labels()
    overlap_edges = {(c, p) for c, p in reference.edges if c in labels and p in labels}
    denominator = len(overlap_edges)
    if denominator == 0:
        raise EmptyOverlapError("no reference edge has both endpoints in the taxonomy")
    children = sorted({c for c, _ in overlap_edges})

    candidate_ids = taxonomy.candidate_parents()
    candidate_labels = [taxonomy.node(c).label for c in candidate_ids]

    # a node never proposes itself as its own parent
    proposals: list[tuple[str, str]] = []
    if strategy is PrecisionStrategy.TAXONOMY:
        for child in children:
            parent_id = taxonomy.node(taxonomy.find_label(child)).parent
            if parent_id is not None:
                proposals.append((child, taxonomy.node(parent_id).label))
    elif strategy is PrecisionStrategy.RANDOM:
        if not candidate_labels:
            raise DataFormatError("taxonomy has no candidate parents")
        rng = np.random.default_rng(seed)
        for child in children:
            eligible = [lbl for lbl in candidate_labels if lbl != child]
            if eligible:
                proposals.append((child, eligible[int(rng.integers(len(eligible)))]))
    else:
        vectors = [(lbl, model.phrase_vector(lbl)) for lbl in sorted(candidate_labels)]
        usable = [(lbl, v.values) for lbl, v in vectors if not v.degenerate]
        if not usable:
            raise DegeneratePhraseError("no candidate parent has a usable embedding")
        matrix = np.stack([vec for _, vec in usable])
        for child in children:
            cv = model.phrase_vector(child)
            if cv.degenerate:
                continue
            sims = matrix @ cv.values
            order = np.argsort(-sims, kind="stable")
            for idx in order:
                if usable[int(idx)][0] != child:
                    proposals.append((child, usable[int(idx)][0]))
                    break

    numerator = sum(1 for pair in proposals if pair in reference.edges)
    return PrecisionReport(
        strategy=strategy,
        numerator=numerator,
        denominator=denominator,
        precision=numerator / denominator,
        seed=seed if strategy is PrecisionStrategy.RANDOM else None,
        proposals=tuple(proposals),
    )


# -- subtree similarity -------------------------------------------------------


def _embeddable_vectors(
    taxonomy: Taxonomy, model: EmbeddingModel, node_ids: list[NodeId]
) -> list[tuple[NodeId, np.ndarray]]:
    out = []
    for nid in node_ids:
        if nid == ROOT_ID:
            continue
        vec = model.phrase_vector(taxonomy.node(nid).label)
        if not vec.degenerate:
            out.append((nid, vec.values))
    return out


def _mean_pairwise_cosine(vectors: list[np.ndarray]) -> float:
    matrix = np.stack(vectors)
    sims = np.clip(matrix @ matrix.T, -1.0, 1.0)
    n = len(vectors)
    upper = sims[np.triu_indices(n, k=1)]
    return float(upper.mean())


def subtree_similarity(
    taxonomy: Taxonomy, model: EmbeddingModel, subtree_root: NodeId
) -> tuple[float, int]:
    """Mean pairwise cosine over all unique node pairs in a subtree.

    Includes the subtree root itself, never the global root; nodes with
    degenerate embeddings cannot form pairs and are left out of the size.
    """
    usable = _embeddable_vectors(taxonomy, model, taxonomy.subtree_ids(subtree_root))
    if len(usable) < 2:
        raise DegeneratePhraseError("subtree needs at least 2 embeddable nodes")
    return _mean_pairwise_cosine([v for _, v in usable]), len(usable)


def random_tree_similarity_baseline(
    labels: list[str], model: EmbeddingModel, size: int, seed: int = 0
) -> float:
    """Subtree-similarity arithmetic over a seeded random label sample."""
    if size < 2 or len(labels) < size:
        raise ValueError(f"need 2 <= size <= len(labels), got size={size}, n={len(labels)}")
    rng = np.random.default_rng(seed)
    picked = [labels[int(i)] for i in rng.choice(len(labels), size=size, replace=False)]
    vectors = [model.phrase_vector(lbl) for lbl in picked]
    usable = [v.values for v in vectors if not v.degenerate]
    if len(usable) < 2:
        raise DegeneratePhraseError("sample needs at least 2 embeddable labels")
    return _mean_pairwise_cosine(usable)


# -- projection export --------------------------------------------------------


@dataclass(frozen=True)
class ProjectionResult:
    rows: tuple[tuple[str, str, float, float], ...]  # label, group, x, y
    rank_deficient: bool
    explained_variance: tuple[float, float]


def _power_iteration(
    matrix: np.ndarray, rng: np.random.Generator, tol: float = 1e-9, max_iter: int = 1000
) -> tuple[np.ndarray, float]:
    """Dominant eigenpair of a PSD matrix by power iteration."""
    v = rng.standard_normal(matrix.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = matrix @ v
        norm = np.linalg.norm(w)
        if norm < tol:
            return v, 0.0
        w /= norm
        if np.linalg.norm(w - v) < tol:
            v = w
            break
        v = w
    return v, float(v @ matrix @ v)


def export_projection(
    taxonomy: Taxonomy,
    model: EmbeddingModel,
    group_by_depth: int = 1,
    seed: int = 0,
) -> ProjectionResult:
    """Project node embeddings onto their top-2 principal components.

    Groups carry the label of each node's ancestor at the requested depth
    (the node itself when it sits at or above that depth). With fewer
    than two informative components the second coordinate is zeroed and
    the result flagged rank-deficient.
    """
    if group_by_depth < 1:
        raise ValueError("group_by_depth must be >= 1")
    usable = _embeddable_vectors(taxonomy, model, taxonomy.node_ids())
    if len(usable) < 3:
        raise DegeneratePhraseError("projection needs at least 3 embeddable nodes")

    matrix = np.stack([vec for _, vec in usable])
    centered = matrix - matrix.mean(axis=0)
    cov = centered.T @ centered / len(usable)

    rng = np.random.default_rng(seed)
    v1, lam1 = _power_iteration(cov, rng)
    deflated = cov - lam1 * np.outer(v1, v1)
    v2, lam2 = _power_iteration(deflated, rng)

    rank_deficient = lam2 <= max(lam1, 1.0) * 1e-12
    xs = centered @ v1
    ys = centered @ v2 if not rank_deficient else np.zeros(len(usable))

    rows = []
    for (nid, _), x, y in zip(usable, xs, ys):
        node = taxonomy.node(nid)
        path_down = list(reversed(taxonomy.path_to_root(nid)))  # root .. node
        group_id = path_down[min(group_by_depth, len(path_down) - 1)]
        rows.append((node.label, taxonomy.node(group_id).label, float(x), float(y)))
    rows.sort(key=lambda r: r[0])
    return ProjectionResult(tuple(rows), rank_deficient, (float(lam1), float(max(lam2, 0.0))))


def write_projection(result: ProjectionResult, path: str | Path) -> None:
    """Write "label<TAB>group<TAB>x<TAB>y" lines with 6-decimal coordinates."""
    from taxoforge.workspace import atomic_write_text

    lines = [f"{label}\t{group}\t{x:.6f}\t{y:.6f}" for label, group, x, y in result.rows]
    atomic_write_text(Path(path), "\n".join(lines) + ("\n" if lines else ""))
