"""Seed bootstrap and embedding-based expansion.

A seed file maps high-level category labels to keyword lists, producing a
2-level tree. Expansion then attaches new keyphrases under their nearest
category when the cosine similarity clears a threshold; everything below
the threshold lands in the skipped list for later review.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from taxoforge.embedding import EmbeddingModel, NNIndex
from taxoforge.errors import DataFormatError, DuplicateLabelError
from taxoforge.taxonomy import ROOT_ID, NodeKind, Taxonomy
from taxoforge.text import normalize_phrase
from taxoforge.validation import require_unit_interval

__all__ = [
    "SeedRecord",
    "AttachmentReport",
    "bootstrap_seed",
    "attach_by_embedding",
    "load_seed_file",
    "load_phrase_list",
]


@dataclass(frozen=True)
class SeedRecord:
    """One category with its keywords, all normalized and deduplicated."""

    category_label: str
    keyword_labels: tuple[str, ...]

    @classmethod
    def make(cls, category: str, keywords: list[str]) -> "SeedRecord":
        category = normalize_phrase(category)
        if not category:
            raise DataFormatError("seed category is empty after normalization")
        seen: dict[str, None] = {}
        for kw in keywords:
            kw = normalize_phrase(kw)
            if kw:
                seen.setdefault(kw)
        return cls(category, tuple(seen))


@dataclass
class AttachmentReport:
    """Outcome of one expansion pass."""

    threshold: float
    attached: list[tuple[str, str, float]] = field(default_factory=list)  # phrase, parent, sim
    skipped: list[tuple[str, float, str | None]] = field(default_factory=list)  # phrase, best sim, best label
    pre_existing: list[str] = field(default_factory=list)


def bootstrap_seed(records: list[SeedRecord]) -> Taxonomy:
    """Build the 2-level seed tree: root -> categories -> keywords."""
    if not records:
        raise DataFormatError("seed record list is empty")
    taxonomy = Taxonomy()
    for record in records:
        try:
            cat_id = taxonomy.add_node(record.category_label, ROOT_ID, NodeKind.CATEGORY)
            for keyword in record.keyword_labels:
                taxonomy.add_node(keyword, cat_id, NodeKind.KEYPHRASE)
        except DuplicateLabelError as exc:
            raise DuplicateLabelError(f"seed labels must be globally unique: {exc}") from exc
    return taxonomy


def attach_by_embedding(
    taxonomy: Taxonomy,
    model: EmbeddingModel,
    phrases: list[str],
    alpha: float = 0.80,
    target_kinds: frozenset[NodeKind] | set[NodeKind] = frozenset({NodeKind.CATEGORY}),
) -> AttachmentReport:
    """Attach each new phrase under its nearest target node when the
    cosine similarity reaches ``alpha``.

    The target index is a snapshot of the taxonomy at entry, so results
    do not depend on the order in which phrases attach. Phrases that are
    already node labels are reported as pre-existing; degenerate phrase
    vectors are recorded as skipped with a -inf similarity.
    """
    require_unit_interval("alpha", alpha)
    bad = set(target_kinds) - {NodeKind.CATEGORY, NodeKind.KEYPHRASE}
    if bad:
        raise ValueError(f"target_kinds may not include {sorted(k.value for k in bad)}")

    targets = taxonomy.nodes_of_kind(*target_kinds)
    index = NNIndex((node.label, model.phrase_vector(node.label)) for node in targets)
    report = AttachmentReport(threshold=alpha)
    for raw in phrases:
        phrase = normalize_phrase(raw)
        if not phrase:
            report.skipped.append((raw, -math.inf, None))
            continue
        if taxonomy.find_label(phrase) is not None:
            report.pre_existing.append(phrase)
            continue
        vector = model.phrase_vector(phrase)
        if vector.degenerate or len(index) == 0:
            report.skipped.append((phrase, -math.inf, None))
            continue
        label, similarity = index.query(vector)
        if similarity >= alpha:
            parent_id = taxonomy.find_label(label)
            taxonomy.add_node(phrase, parent_id, NodeKind.KEYPHRASE)
            report.attached.append((phrase, label, similarity))
        else:
            report.skipped.append((phrase, similarity, label))
    return report


def load_seed_file(path: str | Path) -> list[SeedRecord]:
    """Parse seed lines "category<TAB>keyword1|keyword2|..."."""
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataFormatError("expected 'category<TAB>kw1|kw2|...'", line=lineno)
        records.append(SeedRecord.make(parts[0], parts[1].split("|")))
    return records


def load_phrase_list(path: str | Path) -> list[str]:
    """One phrase per line; blank lines ignored."""
    return [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
