"""Global interpretable model.

Averages each category's pooled entity embeddings into a centroid, softmaxes
every pooled pattern's cosine similarities to those centroids into a
per-category probability distribution, and classifies entities by combining
the probabilities of the matching patterns with Noisy-Or.  The result is a
deterministic decision list that can be read, audited, and edited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bootstrap import PoolState
from .corpus import CooccurrenceMatrix, Vocabulary
from .embed import EmbeddingTable, cosine

#: Label returned for entities matched by no pooled pattern.
ABSTAIN = "ABSTAIN"


@dataclass
class DecisionEntry:
    pattern_id: int
    rendered: str
    pool_category: str
    probabilities: np.ndarray  # aligned with DecisionList.categories, sums to 1


@dataclass
class DecisionList:
    categories: list[str]
    entries: list[DecisionEntry]
    epoch: int

    def __post_init__(self):
        self._by_pattern = {
            e.pattern_id: (self.categories.index(e.pool_category), e.probabilities)
            for e in self.entries
        }

    def validate(self) -> None:
        for entry in self.entries:
            if abs(float(entry.probabilities.sum()) - 1.0) > 1e-9:
                raise AssertionError(
                    f"entry {entry.rendered!r} probabilities do not sum to 1"
                )

    def pattern_lookup(self, pattern_id: int):
        return self._by_pattern.get(pattern_id)


@dataclass
class Classification:
    label: str  # category name or ABSTAIN
    scores: np.ndarray  # per-category Noisy-Or scores
    contributing_patterns: int  # matching patterns in the winning pool


def category_centroid(category: str, pools: PoolState, table: EmbeddingTable) -> np.ndarray:
    """Componentwise mean of the pooled entities' custom vectors."""
    ids = pools.entity_ids(category)
    if not ids:
        raise ValueError(f"category {category!r} has an empty entity pool")
    return table.entity_vectors[ids].mean(axis=0)


def softmax(values: np.ndarray) -> np.ndarray:
    shifted = np.asarray(values, dtype=np.float64)
    shifted = shifted - shifted.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def pattern_probs(
    pattern_id: int, centroids: dict[str, np.ndarray], table: EmbeddingTable
) -> dict[str, float]:
    """Softmax over the pattern's cosine similarity to each category centroid."""
    vector = table.pattern_vectors[pattern_id]
    similarities = np.array([cosine(vector, centroids[c]) for c in centroids])
    probabilities = softmax(similarities)
    return dict(zip(centroids, probabilities))


def _assemble(
    pools: PoolState,
    epoch: int,
    rendered_of,
    entity_vector,
    pattern_vector,
) -> DecisionList:
    """Shared construction: centroids from ``entity_vector``, one entry per
    pooled pattern scored via ``pattern_vector``, sorted by peak probability."""
    categories = list(pools.categories)
    centroids = {}
    for category in categories:
        ids = pools.entity_ids(category)
        if not ids:
            raise ValueError(f"category {category!r} has an empty entity pool")
        centroids[category] = np.mean([entity_vector(e) for e in ids], axis=0)

    entries = []
    for category in categories:
        for p, _ in pools.patterns[category]:
            vector = pattern_vector(p)
            similarities = np.array([cosine(vector, centroids[c]) for c in categories])
            entries.append(
                DecisionEntry(p, rendered_of(p), category, softmax(similarities))
            )
    entries.sort(key=lambda e: (-float(e.probabilities.max()), e.rendered))
    return DecisionList(categories, entries, epoch)


def build_decision_list(
    pools: PoolState, table: EmbeddingTable, vocab: Vocabulary, epoch: int = 0
) -> DecisionList:
    """Decision list over all pooled patterns, scored with the custom table."""
    return _assemble(
        pools,
        epoch,
        rendered_of=lambda p: vocab.pattern_rendered[p],
        entity_vector=lambda e: table.entity_vectors[e],
        pattern_vector=lambda p: table.pattern_vectors[p],
    )


def _category_evidence(
    entity: int, dl: DecisionList, cooc: CooccurrenceMatrix
) -> tuple[np.ndarray, np.ndarray]:
    """Noisy-Or scores and matching-pattern counts per category for one entity."""
    n_categories = len(dl.categories)
    anti = np.ones(n_categories)
    matches = np.zeros(n_categories, dtype=np.int64)
    pattern_ids, _ = cooc.patterns_of(entity)
    for p in map(int, pattern_ids):
        hit = dl.pattern_lookup(p)
        if hit is None:
            continue
        c_idx, probabilities = hit
        anti[c_idx] *= 1.0 - float(probabilities[c_idx])
        matches[c_idx] += 1
    return 1.0 - anti, matches


def noisy_or_score(
    entity: int, category: str, dl: DecisionList, cooc: CooccurrenceMatrix
) -> float:
    """1 - product of (1 - prob_c) over the category's pooled patterns that
    match the entity; 0 when none match."""
    scores, _ = _category_evidence(entity, dl, cooc)
    return float(scores[dl.categories.index(category)])


def classify(entity: int, dl: DecisionList, cooc: CooccurrenceMatrix) -> Classification:
    """Assign the entity to the category with the highest Noisy-Or score.

    Ties break by category order.  Entities with no matching pooled pattern
    get ABSTAIN and a contributing-pattern count of 0.
    """
    scores, matches = _category_evidence(entity, dl, cooc)
    if not dl.categories or not np.any(scores > 0.0):
        return Classification(ABSTAIN, scores, 0)
    winner = int(np.argmax(scores))
    return Classification(dl.categories[winner], scores, int(matches[winner]))
