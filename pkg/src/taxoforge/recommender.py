"""Candidate listing generation for a search keyword.

Two methods: the substring baseline (query contained in an insight) and
taxonomy category intersection, where both the query and every listing
insight are coarsened to taxonomy categories at a chosen resolution and a
listing qualifies when the category sets intersect. Pure functions over
immutable snapshots; safe to evaluate many queries concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from taxoforge.embedding import EmbeddingModel, NNIndex
from taxoforge.errors import DataFormatError
from taxoforge.taxonomy import ROOT_ID, Taxonomy
from taxoforge.text import normalize_phrase
from taxoforge.validation import require_unit_interval

__all__ = [
    "Listing",
    "RecommendationResult",
    "CategoryMapper",
    "map_to_categories",
    "baseline_candidates",
    "taxonomy_candidates",
    "load_listings",
    "save_listings",
]


@dataclass(frozen=True)
class Listing:
    """A property with an id and its home-insight phrases."""

    listing_id: str
    insights: tuple[str, ...]
    region: str | None = None


@dataclass(frozen=True)
class RecommendationResult:
    query: str
    method: str  # "baseline" | "taxonomy"
    resolution: int | None
    query_categories: tuple[str, ...]
    candidates: frozenset[str]
    per_listing_matches: dict[str, tuple[str, ...]]
    query_unmapped: bool = False

    def to_record(self) -> dict:
        rec = {
            "query": self.query,
            "method": self.method,
            "resolution": self.resolution,
            "candidate_count": len(self.candidates),
            "candidates": sorted(self.candidates),
        }
        if self.method == "taxonomy":
            rec["query_categories"] = list(self.query_categories)
            rec["query_unmapped"] = self.query_unmapped
        return rec


class CategoryMapper:
    """Maps phrases to taxonomy categories at a resolution, with caching.

    A phrase anchors at its exact node when the label exists, otherwise
    at the nearest non-root node by embedding cosine when that similarity
    reaches alpha (and a model is available). The result is the label of
    the anchor's ancestor at the requested resolution.
    """

    def __init__(self, taxonomy: Taxonomy, model: EmbeddingModel | None, alpha: float = 0.80):
        require_unit_interval("alpha", alpha)
        self.taxonomy = taxonomy
        self.model = model
        self.alpha = alpha
        self._index: NNIndex | None = None
        self._cache: dict[tuple[str, int], frozenset[str]] = {}

    def _nn_index(self) -> NNIndex:
        if self._index is None:
            labels = [
                self.taxonomy.node(nid).label
                for nid in self.taxonomy.node_ids()
                if nid != ROOT_ID
            ]
            self._index = NNIndex.from_labels(self.model, labels)
        return self._index

    def map(self, phrase: str, r: int) -> frozenset[str]:
        if r < 1:
            raise ValueError("resolution must be >= 1")
        phrase = normalize_phrase(phrase)
        if not phrase:
            return frozenset()
        key = (phrase, r)
        cached = self._cache.get(key)
        if cached is not None:
            return cached

        anchor = self.taxonomy.find_label(phrase)
        if anchor == ROOT_ID:
            anchor = None
        if anchor is None and self.model is not None:
            vector = self.model.phrase_vector(phrase)
            if not vector.degenerate and len(self._nn_index()) > 0:
                label, similarity = self._nn_index().query(vector)
                if similarity >= self.alpha:
                    anchor = self.taxonomy.find_label(label)
        result = (
            frozenset()
            if anchor is None
            else frozenset({self.taxonomy.node(self.taxonomy.ancestor_at_resolution(anchor, r)).label})
        )
        self._cache[key] = result
        return result


def map_to_categories(
    taxonomy: Taxonomy,
    model: EmbeddingModel | None,
    phrase: str,
    r: int = 1,
    alpha: float = 0.80,
) -> frozenset[str]:
    """One-shot :class:`CategoryMapper` call; empty set when unanchored."""
    return CategoryMapper(taxonomy, model, alpha).map(phrase, r)


def baseline_candidates(store: list[Listing], query: str) -> RecommendationResult:
    """Listings where the normalized query is a substring of any insight."""
    normalized = normalize_phrase(query)
    if not normalized:
        raise DataFormatError("query is empty after normalization")
    candidates = set()
    matches: dict[str, tuple[str, ...]] = {}
    for listing in store:
        hit = tuple(insight for insight in listing.insights if normalized in insight)
        if hit:
            candidates.add(listing.listing_id)
            matches[listing.listing_id] = hit
    return RecommendationResult(
        query=normalized,
        method="baseline",
        resolution=None,
        query_categories=(),
        candidates=frozenset(candidates),
        per_listing_matches=matches,
    )


def taxonomy_candidates(
    store: list[Listing],
    taxonomy: Taxonomy,
    model: EmbeddingModel | None,
    query: str,
    r: int = 1,
    alpha: float = 0.80,
    mapper: CategoryMapper | None = None,
) -> RecommendationResult:
    """Listings whose insight categories intersect the query's categories."""
    normalized = normalize_phrase(query)
    if not normalized:
        raise DataFormatError("query is empty after normalization")
    if mapper is None:
        mapper = CategoryMapper(taxonomy, model, alpha)
    query_categories = mapper.map(normalized, r)

    candidates = set()
    matches: dict[str, tuple[str, ...]] = {}
    if query_categories:
        for listing in store:
            listing_categories: set[str] = set()
            for insight in listing.insights:
                listing_categories |= mapper.map(insight, r)
            shared = query_categories & listing_categories
            if shared:
                candidates.add(listing.listing_id)
                matches[listing.listing_id] = tuple(sorted(shared))
    return RecommendationResult(
        query=normalized,
        method="taxonomy",
        resolution=r,
        query_categories=tuple(sorted(query_categories)),
        candidates=frozenset(candidates),
        per_listing_matches=matches,
        query_unmapped=not query_categories,
    )


# -- listing store IO ---------------------------------------------------------


def load_listings(path: str | Path) -> list[Listing]:
    """Parse the JSON-lines listing store.

    Each line: {"listing_id": "...", "insights": [...], "region": "..."}
    with region optional. Insights are normalized and deduplicated in
    order; duplicate listing ids and unknown fields are rejected.
    """
    listings: list[Listing] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"invalid JSON ({exc.msg})", line=lineno) from exc
        if not isinstance(record, dict):
            raise DataFormatError("listing record must be an object", line=lineno)
        unknown = set(record) - {"listing_id", "insights", "region"}
        if unknown:
            raise DataFormatError(f"unknown listing fields: {sorted(unknown)}", line=lineno)
        if "listing_id" not in record or "insights" not in record:
            raise DataFormatError("listing needs listing_id and insights", line=lineno)
        listing_id = record["listing_id"]
        if not isinstance(listing_id, str) or not listing_id:
            raise DataFormatError("listing_id must be a non-empty string", line=lineno)
        if listing_id in seen:
            raise DataFormatError(
                f"duplicate listing_id {listing_id!r} (first seen on line {seen[listing_id]})",
                line=lineno,
            )
        seen[listing_id] = lineno
        raw_insights = record["insights"]
        if not isinstance(raw_insights, list) or not all(isinstance(i, str) for i in raw_insights):
            raise DataFormatError("insights must be a list of strings", line=lineno)
        deduped: dict[str, None] = {}
        for insight in raw_insights:
            normalized = normalize_phrase(insight)
            if normalized:
                deduped.setdefault(normalized)
        region = record.get("region")
        if region is not None and not isinstance(region, str):
            raise DataFormatError("region must be a string", line=lineno)
        listings.append(Listing(listing_id, tuple(deduped), region))
    return listings


def save_listings(listings: list[Listing], path: str | Path) -> None:
    from taxoforge.workspace import atomic_write_text

    lines = []
    for listing in listings:
        record: dict = {"listing_id": listing.listing_id, "insights": list(listing.insights)}
        if listing.region is not None:
            record["region"] = listing.region
        lines.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    atomic_write_text(Path(path), "\n".join(lines) + ("\n" if lines else ""))
