"""Link-validity scoring: labeled pair generation, a pluggable scorer with
a logistic reference implementation, edge pruning with argmax
reattachment, and the suggestion queue feeding human review.

The scorer interface admits richer models (the intended production scorer
is a text classifier); everything here only assumes ``score`` returns a
probability and is deterministic for a fixed trained state.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from taxoforge.embedding import EmbeddingModel, cosine
from taxoforge.errors import (
    DataFormatError,
    SingleClassError,
    SuggestionExpiredError,
    SuggestionStateError,
)
from taxoforge.taxonomy import ROOT_ID, NodeId, NodeKind, Taxonomy
from taxoforge.text import char_trigrams, normalize_phrase
from taxoforge.validation import require_open_unit_interval

__all__ = [
    "LinkSample",
    "FeatureVector",
    "compute_features",
    "LinkScorer",
    "LogisticLinkScorer",
    "EdgeSuggestion",
    "SuggestionStatus",
    "PruneReport",
    "generate_pairs",
    "fit_reference_scorer",
    "prune_and_reattach",
    "suggest_edges",
    "apply_decision",
    "save_pairs",
    "load_pairs",
]


@dataclass(frozen=True)
class LinkSample:
    """A labeled (child, candidate-parent) pair; 1 = valid edge."""

    child_label: str
    parent_label: str
    label: int

    def __post_init__(self):
        if self.child_label == self.parent_label:
            raise DataFormatError("child and parent labels must differ")
        if self.label not in (0, 1):
            raise DataFormatError(f"label must be 0 or 1, got {self.label!r}")


FEATURE_NAMES = (
    "cosine_sim",
    "trigram_jaccard",
    "token_overlap",
    "substring_flag",
    "len_diff",
    "parent_depth_norm",
)


@dataclass(frozen=True)
class FeatureVector:
    """Cheap pair features standing in for a learned text representation."""

    cosine_sim: float
    trigram_jaccard: float
    token_overlap: float
    substring_flag: float
    len_diff: float
    parent_depth_norm: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES])


def _jaccard(a: set, b: set) -> float:
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def compute_features(
    child_label: str,
    parent_label: str,
    model: EmbeddingModel | None = None,
    taxonomy: Taxonomy | None = None,
) -> FeatureVector:
    """Features for one (child, parent) pair.

    The cosine feature is 0 without a model or for degenerate phrases;
    parent depth is 0 when no taxonomy is given or the parent label is
    not a node in it.
    """
    cosine_sim = 0.0
    if model is not None:
        cv, pv = model.phrase_vector(child_label), model.phrase_vector(parent_label)
        if not cv.degenerate and not pv.degenerate:
            cosine_sim = cosine(cv, pv)
    depth_norm = 0.0
    if taxonomy is not None:
        parent_id = taxonomy.find_label(parent_label)
        if parent_id is not None:
            max_depth = taxonomy.stats().max_depth
            if max_depth > 0:
                depth_norm = taxonomy.depth(parent_id) / max_depth
    child_tokens, parent_tokens = set(child_label.split()), set(parent_label.split())
    longer = max(len(child_label), len(parent_label))
    return FeatureVector(
        cosine_sim=cosine_sim,
        trigram_jaccard=_jaccard(char_trigrams(child_label), char_trigrams(parent_label)),
        token_overlap=_jaccard(child_tokens, parent_tokens),
        substring_flag=float(child_label in parent_label or parent_label in child_label),
        len_diff=abs(len(child_label) - len(parent_label)) / longer if longer else 0.0,
        parent_depth_norm=depth_norm,
    )


@runtime_checkable
class LinkScorer(Protocol):
    """Anything that can judge the validity of a parent-child pair."""

    def score(self, child_label: str, parent_label: str, features: FeatureVector) -> float:
        """Probability in [0, 1] that the edge is valid."""
        ...


class LogisticLinkScorer(BaseEstimator):
    """Logistic regression over :class:`FeatureVector`, trained by seeded SGD.

    Weights start at zero and each epoch shuffles the samples with the
    seeded generator; the step size decays linearly to zero over the full
    run, so late epochs change the weights very little.
    """

    def __init__(self, epochs: int = 100, lr: float = 0.5, seed: int = 0):
        self.epochs = epochs
        self.lr = lr
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticLinkScorer":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if set(np.unique(y)) != {0.0, 1.0}:
            raise SingleClassError("training labels must contain both classes")
        rng = np.random.default_rng(self.seed)
        n, d = X.shape
        w = np.zeros(d)
        b = 0.0
        total = self.epochs * n
        step = 0
        for _ in range(self.epochs):
            for i in rng.permutation(n):
                lr = self.lr * (1.0 - step / total)
                step += 1
                # gradient of log-loss: (p - y) * x
                err = _sigmoid_scalar(float(X[i] @ w + b)) - y[i]
                w -= lr * err * X[i]
                b -= lr * err
        self.weights_ = w
        self.bias_ = b
        return self

    def predict_proba_raw(self, X: np.ndarray) -> np.ndarray:
        """P(valid) per row of X."""
        if not hasattr(self, "weights_"):
            raise NotFittedError("LogisticLinkScorer is not fitted yet")
        z = np.asarray(X, dtype=np.float64) @ self.weights_ + self.bias_
        return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))

    def score(self, child_label: str, parent_label: str, features: FeatureVector) -> float:
        return float(self.predict_proba_raw(features.to_array()[None, :])[0])


def _sigmoid_scalar(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-min(x, 60.0)))
    e = np.exp(max(x, -60.0))
    return e / (1.0 + e)


def log_loss_and_gradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, float]:
    """Mean log-loss of the logistic model and its gradient wrt (w, b)."""
    z = X @ w + b
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))
    eps = 1e-12
    loss = float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
    err = p - y
    return loss, X.T @ err / len(y), float(err.mean())


def fit_reference_scorer(
    samples: list[LinkSample],
    model: EmbeddingModel | None,
    epochs: int = 100,
    lr: float = 0.5,
    seed: int = 0,
    taxonomy: Taxonomy | None = None,
) -> LogisticLinkScorer:
    """Train the logistic reference scorer on labeled pairs."""
    X = np.stack(
        [compute_features(s.child_label, s.parent_label, model, taxonomy).to_array() for s in samples]
    )
    y = np.array([s.label for s in samples], dtype=np.float64)
    return LogisticLinkScorer(epochs=epochs, lr=lr, seed=seed).fit(X, y)


# -- pair generation --------------------------------------------------------


def generate_pairs(
    taxonomy: Taxonomy, negatives_per_positive: int = 1, seed: int = 0
) -> list[LinkSample]:
    """One positive per edge plus sampled negatives.

    For each non-root node, negative parents are drawn (seeded, without
    replacement) from candidate parents that are off the node's root path
    and outside its subtree. Nodes with no eligible negative parent just
    contribute fewer negatives.
    """
    candidates = taxonomy.candidate_parents(include_root=True)
    if len(candidates) < 2:
        raise DataFormatError("need at least 2 candidate parents to generate pairs")
    rng = np.random.default_rng(seed)
    positives: list[LinkSample] = []
    negatives: list[LinkSample] = []
    non_root = [nid for nid in taxonomy.node_ids() if nid != ROOT_ID]
    for nid in non_root:
        node = taxonomy.node(nid)
        positives.append(LinkSample(node.label, taxonomy.node(node.parent).label, 1))
        on_path = set(taxonomy.path_to_root(nid))
        in_subtree = set(taxonomy.subtree_ids(nid))
        eligible = [c for c in candidates if c not in on_path and c not in in_subtree]
        if not eligible:
            continue
        k = min(negatives_per_positive, len(eligible))
        picked = rng.choice(len(eligible), size=k, replace=False)
        for j in sorted(int(p) for p in picked):
            negatives.append(LinkSample(node.label, taxonomy.node(eligible[j]).label, 0))
    return positives + negatives


def save_pairs(samples: list[LinkSample], path: str | Path) -> None:
    from taxoforge.workspace import atomic_write_text

    lines = [f"{s.child_label}\t{s.parent_label}\t{s.label}" for s in samples]
    atomic_write_text(Path(path), "\n".join(lines) + ("\n" if lines else ""))


def load_pairs(path: str | Path) -> list[LinkSample]:
    samples = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3 or parts[2] not in ("0", "1"):
            raise DataFormatError("expected 'child<TAB>parent<TAB>{0|1}'", line=lineno)
        samples.append(LinkSample(parts[0], parts[1], int(parts[2])))
    return samples


# -- pruning ----------------------------------------------------------------


@dataclass(frozen=True)
class Reattachment:
    child: NodeId
    old_parent: NodeId
    new_parent: NodeId
    score: float
    low_confidence: bool


@dataclass(frozen=True)
class PruneReport:
    threshold: float
    exempt_top_level: bool
    invalid_edges: tuple[tuple[NodeId, NodeId, float], ...]  # child, parent, score
    reattachments: tuple[Reattachment, ...]
    unresolvable: tuple[NodeId, ...]

    def to_text(self) -> str:
        lines = [f"threshold={self.threshold:g} exempt_top_level={self.exempt_top_level}"]
        for child, parent, score in self.invalid_edges:
            lines.append(f"invalid\t{child}\t{parent}\t{score:.6f}")
        for r in self.reattachments:
            flag = "low_confidence" if r.low_confidence else "ok"
            lines.append(f"moved\t{r.child}\t{r.old_parent}\t{r.new_parent}\t{r.score:.6f}\t{flag}")
        for child in self.unresolvable:
            lines.append(f"unresolvable\t{child}")
        return "\n".join(lines) + "\n"


def prune_and_reattach(
    taxonomy: Taxonomy,
    scorer: LinkScorer,
    model: EmbeddingModel | None,
    threshold: float = 0.5,
    exempt_top_level: bool = True,
) -> PruneReport:
    """Score every edge, then move each invalid-edge child to the
    candidate parent with the highest score.

    Phase 1 scores all non-root edges (root-child edges skipped while
    ``exempt_top_level``). Phase 2 walks invalid children in ascending id
    order; candidates are the nodes that currently have a child,
    excluding the root, the child itself and its current descendants.
    The argmax move happens even when the winning score stays below the
    threshold; such edges are flagged low_confidence for review. Node
    count and label set never change.
    """
    require_open_unit_interval("threshold", threshold)

    def pair_score(child_id: NodeId, parent_id: NodeId) -> float:
        child, parent = taxonomy.node(child_id).label, taxonomy.node(parent_id).label
        return scorer.score(child, parent, compute_features(child, parent, model, taxonomy))

    invalid: list[tuple[NodeId, NodeId, float]] = []
    for nid in taxonomy.node_ids():
        if nid == ROOT_ID:
            continue
        parent = taxonomy.node(nid).parent
        if exempt_top_level and parent == ROOT_ID:
            continue
        score = pair_score(nid, parent)
        if score < threshold:
            invalid.append((nid, parent, score))

    reattachments: list[Reattachment] = []
    unresolvable: list[NodeId] = []
    for child, old_parent, _ in invalid:
        blocked = set(taxonomy.subtree_ids(child))  # includes the child itself
        candidates = [c for c in taxonomy.candidate_parents() if c not in blocked]
        if not candidates:
            unresolvable.append(child)
            continue
        best_id, best_score = None, -1.0
        for c in candidates:  # ascending ids: ties keep the smaller id
            s = pair_score(child, c)
            if s > best_score:
                best_id, best_score = c, s
        taxonomy.move_node(child, best_id)
        reattachments.append(
            Reattachment(child, old_parent, best_id, best_score, best_score < threshold)
        )
    return PruneReport(
        threshold, exempt_top_level, tuple(invalid), tuple(reattachments), tuple(unresolvable)
    )


# -- suggestions -------------------------------------------------------------


class SuggestionStatus(str, Enum):
    PENDING = "pending"
    APPROVED = "approved"
    REJECTED = "rejected"


@dataclass
class EdgeSuggestion:
    """A scored edge proposal awaiting a reviewer decision."""

    id: int
    child_label: str
    proposed_parent: NodeId
    score: float
    status: SuggestionStatus = SuggestionStatus.PENDING
    created_at: str = ""
    decided_at: str | None = None
    reviewer_note: str | None = None
    low_confidence: bool = False


def suggest_edges(
    taxonomy: Taxonomy,
    scorer: LinkScorer,
    model: EmbeddingModel | None,
    new_phrases: list[str],
    top_k: int = 1,
    start_id: int = 1,
    created_at: str = "",
) -> list[EdgeSuggestion]:
    """Top-k scored parent proposals per phrase, all pending.

    Ordering is deterministic: per phrase by score descending then node
    id ascending. Phrases that already exist as node labels are skipped.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    candidates = taxonomy.candidate_parents()
    suggestions: list[EdgeSuggestion] = []
    next_id = start_id
    for raw in new_phrases:
        phrase = normalize_phrase(raw)
        if not phrase or taxonomy.find_label(phrase) is not None:
            continue
        scored = []
        for c in candidates:
            parent_label = taxonomy.node(c).label
            features = compute_features(phrase, parent_label, model, taxonomy)
            scored.append((scorer.score(phrase, parent_label, features), c))
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        for score, c in scored[:top_k]:
            suggestions.append(
                EdgeSuggestion(next_id, phrase, c, score, created_at=created_at)
            )
            next_id += 1
    return suggestions


def apply_decision(
    taxonomy: Taxonomy,
    suggestion: EdgeSuggestion,
    decision: str,
    decided_at: str = "",
    reviewer_note: str | None = None,
) -> None:
    """Approve (attach or move the child) or reject (no taxonomy change).

    A suggestion whose proposed parent has vanished, or whose approval
    would create a cycle, is expired: the error propagates and the status
    stays pending.
    """
    if decision not in ("approve", "reject"):
        raise ValueError(f"decision must be 'approve' or 'reject', got {decision!r}")
    if suggestion.status != SuggestionStatus.PENDING:
        raise SuggestionStateError(f"suggestion {suggestion.id} already {suggestion.status.value}")
    if decision == "approve":
        if suggestion.proposed_parent not in taxonomy:
            raise SuggestionExpiredError(
                f"suggestion {suggestion.id}: parent {suggestion.proposed_parent} no longer exists"
            )
        existing = taxonomy.find_label(suggestion.child_label)
        if existing is None:
            taxonomy.add_node(suggestion.child_label, suggestion.proposed_parent, NodeKind.KEYPHRASE)
        else:
            if existing == suggestion.proposed_parent or taxonomy.is_descendant(
                suggestion.proposed_parent, existing
            ):
                raise SuggestionExpiredError(
                    f"suggestion {suggestion.id}: approving would create a cycle"
                )
            taxonomy.move_node(existing, suggestion.proposed_parent)
        suggestion.status = SuggestionStatus.APPROVED
    else:
        suggestion.status = SuggestionStatus.REJECTED
    suggestion.decided_at = decided_at
    suggestion.reviewer_note = reviewer_note
