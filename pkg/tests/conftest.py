"""Shared fixtures: synthetic corpora, trained models and taxonomies.

Model training is the expensive part, so trained fixtures are
session-scoped and reused by both the unit tests and the acceptance
suite. Corpus generators use disjoint letter pools per topic so that
subword n-grams cannot leak similarity across topics.
"""

from __future__ import annotations

import numpy as np
import pytest

from taxoforge.embedding import EmbeddingConfig, EmbeddingModel, train_lines
from taxoforge.recommender import Listing
from taxoforge.taxonomy import ROOT_ID, NodeKind, Taxonomy

# letter pools with no shared characters; every generated word is unique
_POOLS = [
    "abcdefg",
    "hijklmn",
    "opqrstu",
    "vwxyz",
]


def make_topic_words(topic: int, count: int, rng: np.random.Generator) -> list[str]:
    """Distinct 6-letter words drawn from one topic's letter pool."""
    pool = _POOLS[topic % len(_POOLS)]
    words: list[str] = []
    seen = set()
    while len(words) < count:
        word = "".join(rng.choice(list(pool), size=6))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def make_topic_corpus(
    vocabularies: list[list[str]],
    sentences_per_topic: int,
    sentence_length: int,
    rng: np.random.Generator,
) -> list[str]:
    """Sentences drawn entirely within one topic's vocabulary."""
    lines = []
    for words in vocabularies:
        for _ in range(sentences_per_topic):
            picks = rng.choice(len(words), size=sentence_length)
            lines.append(" ".join(words[i] for i in picks))
    order = rng.permutation(len(lines))
    return [lines[i] for i in order]


@pytest.fixture(scope="session")
def two_topic_fixture():
    """Two disjoint-vocabulary topics, >= 2000 sentences, default config, seed 42.

    Sentence length and vocabulary size are chosen so that enough tokens
    survive the default frequent-word subsampling for the topics to
    separate decisively (the margin is ~8x the required 0.1).
    """
    rng = np.random.default_rng(1234)
    topic_a = make_topic_words(0, 60, rng)
    topic_b = make_topic_words(1, 60, rng)
    lines = make_topic_corpus([topic_a, topic_b], sentences_per_topic=1100, sentence_length=50, rng=rng)
    model = train_lines(lines, EmbeddingConfig(seed=42))
    return {"model": model, "topic_a": topic_a, "topic_b": topic_b, "lines": lines}


def topic_separation(model: EmbeddingModel, topic_a: list[str], topic_b: list[str]) -> float:
    """Mean intra-topic cosine minus mean inter-topic cosine over word vectors."""
    va = np.stack([model.phrase_vector(w).values for w in topic_a])
    vb = np.stack([model.phrase_vector(w).values for w in topic_b])

    def mean_offdiag(sims: np.ndarray) -> float:
        n = sims.shape[0]
        return float((sims.sum() - np.trace(sims)) / (n * (n - 1)))

    intra = 0.5 * (mean_offdiag(va @ va.T) + mean_offdiag(vb @ vb.T))
    inter = float((va @ vb.T).mean())
    return intra - inter


class ClusteredWorld:
    """A 3-level taxonomy over topic-clustered vocabulary, with a corpus
    whose co-occurrence structure mirrors the tree.

    Per super-category one letter pool; each of its two sub-categories
    owns a private token pool drawn from it. Sentences mix a sub's
    tokens with its own label on every line and the super label on some,
    so leaves sit closest to their sub, subs near their super, and
    different supers stay unrelated.
    """

    TOKENS_PER_SUB = 30
    LEAVES_PER_SUB = 10
    SENTENCES_PER_SUB = 420

    def __init__(self, seed: int = 5):
        rng = np.random.default_rng(seed)
        pools = [0, 1, 2]
        minted: set[str] = set()

        def fresh_words(pool: int, count: int) -> list[str]:
            out: list[str] = []
            while len(out) < count:
                for w in make_topic_words(pool, count, rng):
                    if w not in minted:
                        minted.add(w)
                        out.append(w)
                    if len(out) == count:
                        break
            return out

        self.supers = [fresh_words(p, 1)[0] for p in pools]
        self.subs = {s: fresh_words(p, 2) for s, p in zip(self.supers, pools)}
        self.leaf_tokens: dict[str, list[str]] = {}
        self.leaves: dict[str, list[str]] = {}
        for super_label, p in zip(self.supers, pools):
            for sub in self.subs[super_label]:
                tokens = fresh_words(p, self.TOKENS_PER_SUB)
                self.leaf_tokens[sub] = tokens
                self.leaves[sub] = [
                    f"{tokens[2 * i]} {tokens[2 * i + 1]}" for i in range(self.LEAVES_PER_SUB)
                ]

        # confusers: phrases built from the sibling sub's spare corpus
        # tokens but curated under the first sub, so the embedding argmax
        # disagrees with the taxonomy placement (the "golf under golf
        # course" effect)
        self.confusers: dict[str, str] = {}
        for super_label in self.supers:
            first, second = self.subs[super_label]
            spare = self.leaf_tokens[second]
            self.confusers[first] = f"{spare[20]} {spare[21]}"

        self.taxonomy = Taxonomy()
        for super_label in self.supers:
            sid = self.taxonomy.add_node(super_label, ROOT_ID, NodeKind.CATEGORY)
            for sub in self.subs[super_label]:
                cid = self.taxonomy.add_node(sub, sid, NodeKind.CATEGORY)
                for leaf in self.leaves[sub]:
                    self.taxonomy.add_node(leaf, cid, NodeKind.KEYPHRASE)
                if sub in self.confusers:
                    self.taxonomy.add_node(self.confusers[sub], cid, NodeKind.KEYPHRASE)

        lines = []
        for super_label in self.supers:
            for sub in self.subs[super_label]:
                tokens = self.leaf_tokens[sub]
                for _ in range(self.SENTENCES_PER_SUB):
                    picks = [tokens[int(i)] for i in rng.choice(len(tokens), size=36)]
                    picks += [sub] * 3
                    if rng.random() < 0.65:
                        picks.append(super_label)
                    order = rng.permutation(len(picks))
                    lines.append(" ".join(picks[i] for i in order))
        order = rng.permutation(len(lines))
        self.lines = [lines[i] for i in order]
        self.model = train_lines(
            self.lines,
            EmbeddingConfig(dim=80, epochs=5, buckets=65536, seed=42),
        )

    def all_labels(self) -> list[str]:
        return [
            self.taxonomy.node(n).label for n in self.taxonomy.node_ids() if n != ROOT_ID
        ]

    def true_reference_edges(self) -> set[tuple[str, str]]:
        """The curated (child, parent) pairs: every taxonomy edge below root."""
        edges = set()
        for nid in self.taxonomy.node_ids():
            node = self.taxonomy.node(nid)
            if node.parent not in (None, ROOT_ID):
                edges.add((node.label, self.taxonomy.node(node.parent).label))
        return edges


@pytest.fixture(scope="session")
def clustered_world() -> ClusteredWorld:
    return ClusteredWorld()


@pytest.fixture(scope="session")
def expansion_fixture(clustered_world):
    """3 categories x 20 candidate phrases with a spread of similarities.

    Categories are one sub per super. Three phrase bands per category:
    pure in-category token pairs (cosine ~1), pairs diluted by another
    trained pool (~0.85), and pairs of never-seen tokens whose subword
    buckets are untrained (low cosine, verified < 0.45 at build time), so
    a rising threshold peels the attachment set apart band by band.
    """
    from taxoforge.embedding import cosine as _cosine

    w = clustered_world
    taxonomy = Taxonomy()
    categories = [w.subs[s][0] for s in w.supers]
    for label in categories:
        taxonomy.add_node(label, ROOT_ID, NodeKind.CATEGORY)

    category_vectors = [w.model.phrase_vector(c) for c in categories]

    def best_to_category(phrase: str) -> float:
        vec = w.model.phrase_vector(phrase)
        return max(_cosine(vec, cv) for cv in category_vectors)

    rng = np.random.default_rng(2024)
    phrases: list[str] = []
    for i, super_label in enumerate(w.supers):
        own, sibling = w.subs[super_label]
        far = w.subs[w.supers[(i + 1) % len(w.supers)]][0]
        own_tokens = w.leaf_tokens[own]
        sibling_tokens = w.leaf_tokens[sibling]
        far_tokens = w.leaf_tokens[far]
        for k in range(8):  # pure in-category pairs, unseen as node labels
            phrases.append(f"{own_tokens[2 * k + 1]} {own_tokens[2 * k + 2]}")
        for k in range(3):  # diluted by the sibling sub's trained tokens
            phrases.append(f"{own_tokens[k]} {sibling_tokens[k]}")
        for k in range(3):  # diluted by a different super's vocabulary
            phrases.append(f"{own_tokens[k + 6]} {far_tokens[k]}")
        picked = 0
        while picked < 6:  # out-of-corpus pairs, kept only when clearly far
            a, b = make_topic_words(3, 2, rng)
            candidate = f"{a} {b}"
            if candidate not in phrases and best_to_category(candidate) < 0.45:
                phrases.append(candidate)
                picked += 1
    return {"taxonomy": taxonomy, "model": w.model, "phrases": phrases, "categories": categories}


@pytest.fixture()
def small_tree() -> Taxonomy:
    """root -> (interior -> {gym, loft}, exterior -> {patio})"""
    t = Taxonomy()
    interior = t.add_node("interior", ROOT_ID, NodeKind.CATEGORY)
    exterior = t.add_node("exterior", ROOT_ID, NodeKind.CATEGORY)
    t.add_node("gym", interior, NodeKind.KEYPHRASE)
    t.add_node("loft", interior, NodeKind.KEYPHRASE)
    t.add_node("patio", exterior, NodeKind.KEYPHRASE)
    return t


def random_tree(rng: np.random.Generator, n_nodes: int) -> Taxonomy:
    """Random tree by attaching each new node under a random existing one."""
    t = Taxonomy()
    ids = [ROOT_ID]
    for i in range(n_nodes - 1):
        parent = ids[int(rng.integers(len(ids)))]
        kind = NodeKind.CATEGORY if rng.random() < 0.4 else NodeKind.KEYPHRASE
        ids.append(t.add_node(f"node {i}", parent, kind))
    return t


class RecommendationWorld:
    """Listing store plus a 3-level taxonomy of token-family phrases.

    Families own globally unique equal-length tokens, so a query phrase
    is a substring of an insight only when its tokens appear adjacently
    inside the same family; the family category at r=1 then covers every
    baseline hit. Each family also carries 3-token keyphrases extending a
    2-token one, giving the baseline genuine non-exact substring matches.
    Listings mostly draw insights from one family with occasional imports
    from a sibling family under the same super-category.
    """

    def __init__(self, n_listings: int = 520, seed: int = 31):
        rng = np.random.default_rng(seed)
        minted: set[str] = set()

        def fresh_words(pool: int, count: int) -> list[str]:
            out: list[str] = []
            while len(out) < count:
                for w in make_topic_words(pool, count, rng):
                    if w not in minted:
                        minted.add(w)
                        out.append(w)
                    if len(out) == count:
                        break
            return out

        self.supers = ["zone one", "zone two"]
        self.families: dict[str, list[str]] = {}
        self.taxonomy = Taxonomy()
        self.keyphrases: dict[str, list[str]] = {}
        self.pair_phrases: dict[str, list[str]] = {}
        pool_cycle = [0, 1, 2, 3, 0, 1]
        fam_idx = 0
        for super_label in self.supers:
            sid = self.taxonomy.add_node(super_label, ROOT_ID, NodeKind.CATEGORY)
            fams = []
            for _ in range(3):
                tokens = fresh_words(pool_cycle[fam_idx], 14)
                family_label = f"{tokens[0]} group"
                fid = self.taxonomy.add_node(family_label, sid, NodeKind.CATEGORY)
                pairs, phrases = [], []
                for k in range(8):
                    phrase = f"{tokens[k + 1]} {tokens[k + 6]}"
                    self.taxonomy.add_node(phrase, fid, NodeKind.KEYPHRASE)
                    pairs.append(phrase)
                    phrases.append(phrase)
                for k in range(3):  # extend a pair with one more token
                    phrase = f"{pairs[k]} {tokens[k + 10]}"
                    self.taxonomy.add_node(phrase, fid, NodeKind.KEYPHRASE)
                    phrases.append(phrase)
                self.pair_phrases[family_label] = pairs
                self.keyphrases[family_label] = phrases
                fams.append(family_label)
                fam_idx += 1
            self.families[super_label] = fams

        self.listings: list[Listing] = []
        all_families = [f for fams in self.families.values() for f in fams]
        for i in range(n_listings):
            family = all_families[int(rng.integers(len(all_families)))]
            pool = list(self.keyphrases[family])
            count = int(rng.integers(2, 6))
            picks = [pool[int(j)] for j in rng.choice(len(pool), size=min(count, len(pool)), replace=False)]
            if rng.random() < 0.25:  # sibling-family import (same super)
                super_label = next(s for s, fams in self.families.items() if family in fams)
                sibling = [f for f in self.families[super_label] if f != family]
                other_pool = self.keyphrases[sibling[int(rng.integers(len(sibling)))]]
                picks.append(other_pool[int(rng.integers(len(other_pool)))])
            self.listings.append(Listing(f"z{i:05d}", tuple(dict.fromkeys(picks)), region="seattle"))

    def sample_queries(self, count: int, rng: np.random.Generator) -> list[str]:
        labels = [p for pairs in self.pair_phrases.values() for p in pairs]
        picks = rng.choice(len(labels), size=count, replace=False)
        return [labels[int(i)] for i in picks]


@pytest.fixture(scope="session")
def recommendation_world() -> RecommendationWorld:
    return RecommendationWorld()


@pytest.fixture(scope="session")
def tiny_model() -> EmbeddingModel:
    """Small, fast model for tests that just need some usable vectors."""
    rng = np.random.default_rng(9)
    words = make_topic_words(0, 30, rng) + make_topic_words(1, 30, rng)
    lines = [" ".join(words[int(i)] for i in rng.choice(60, size=8)) for _ in range(300)]
    return train_lines(
        lines, EmbeddingConfig(dim=24, epochs=2, min_count=1, subsample_t=1.0, buckets=1024, seed=3)
    )
