"""Independent brute-force reference implementations used as test oracles.

Everything here is written with plain Python loops and ``math`` so that it
shares no code path with the library's vectorized implementations.
"""

from __future__ import annotations

import math

import numpy as np

from emboot.corpus import CooccurrenceMatrix


class StubPools:
    """Minimal pool container for objective/gradient tests."""

    def __init__(self, categories, entity_pools, pattern_pools):
        self.categories = list(categories)
        self._entities = {c: list(entity_pools.get(c, [])) for c in categories}
        self._patterns = {c: list(pattern_pools.get(c, [])) for c in categories}

    def entity_ids(self, category):
        return list(self._entities[category])

    def pattern_ids(self, category):
        return list(self._patterns[category])


def sigmoid_ref(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def log_sigmoid_ref(x: float) -> float:
    return math.log(sigmoid_ref(x))


def objective_ref(table, cooc, pools, neg_assignment) -> float:
    """Term-by-term objective: skip-gram with fixed negatives, attract over
    unordered within-pool pairs, repel over ordered cross-pool pairs."""
    ent_vec = table.entity_vectors
    pat_vec = table.pattern_vectors

    def dot(u, v):
        return sum(float(a) * float(b) for a, b in zip(u, v))

    total = 0.0
    for (e, p), count in sorted(cooc.counts.items()):
        total += count * log_sigmoid_ref(dot(ent_vec[e], pat_vec[p]))
    for e in sorted(neg_assignment):
        for p in neg_assignment[e]:
            total += log_sigmoid_ref(-dot(ent_vec[e], pat_vec[p]))

    def pool_vectors(category):
        items = [ent_vec[e] for e in pools.entity_ids(category)]
        items += [pat_vec[p] for p in pools.pattern_ids(category)]
        return items

    for category in pools.categories:
        items = pool_vectors(category)
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                total += log_sigmoid_ref(dot(items[i], items[j]))

    for c1 in pools.categories:
        for c2 in pools.categories:
            if c1 == c2:
                continue
            for u in pool_vectors(c1):
                for v in pool_vectors(c2):
                    total += log_sigmoid_ref(-dot(u, v))
    return total


def random_instance(rng: np.random.Generator, n_entities=5, n_patterns=8, dim=5, n_categories=2):
    """Random small objective instance: co-occurrence counts, disjoint pools
    over both entities and patterns, and an eligible negative assignment."""
    from emboot.embed import EmbeddingTable

    counts = {}
    for e in range(n_entities):
        matched = rng.choice(n_patterns, size=rng.integers(1, n_patterns), replace=False)
        for p in matched:
            counts[(e, int(p))] = int(rng.integers(1, 4))
    cooc = CooccurrenceMatrix(counts, n_entities, n_patterns)

    vectors = rng.uniform(-0.5, 0.5, size=(n_entities + n_patterns, dim))
    table = EmbeddingTable(vectors, n_entities, n_patterns)

    categories = [f"C{i}" for i in range(n_categories)]
    entity_perm = rng.permutation(n_entities)
    pattern_perm = rng.permutation(n_patterns)
    entity_pools = {}
    pattern_pools = {}
    for i, c in enumerate(categories):
        entity_pools[c] = [int(e) for e in entity_perm[i::n_categories][:2]]
        pattern_pools[c] = [int(p) for p in pattern_perm[i::n_categories][:2]]
    pools = StubPools(categories, entity_pools, pattern_pools)

    negatives = {}
    for e in range(n_entities):
        eligible = [p for p in range(n_patterns) if (e, p) not in counts]
        if eligible:
            k = int(rng.integers(1, min(3, len(eligible)) + 1))
            negatives[e] = [int(p) for p in rng.choice(eligible, size=k, replace=False)]
    return table, cooc, pools, negatives


def levenshtein_ref(a: str, b: str) -> int:
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def label_propagation_ref(features, seed_labels, n_classes, gamma, max_iter=10000, tol=1e-6):
    """Dense fixed-point label propagation with clamped seeds."""
    n = features.shape[0]
    W = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            diff = features[i] - features[j]
            W[i, j] = math.exp(-gamma * float(np.dot(diff, diff)))
    T = W / W.sum(axis=1, keepdims=True)

    F = np.full((n, n_classes), 1.0 / n_classes)
    for i, label in seed_labels.items():
        F[i] = 0.0
        F[i, label] = 1.0
    for _ in range(max_iter):
        new = T @ F
        for i, label in seed_labels.items():
            new[i] = 0.0
            new[i, label] = 1.0
        if np.max(np.abs(new - F)) < tol:
            F = new
            break
        F = new
    return F


def pmi_recount(corpus, window, pools_by_category):
    """(rendered pattern, category) -> PMI recomputed by scanning the corpus
    and counting context n-gram emissions directly."""
    from collections import Counter

    emissions = []
    for m in corpus.mentions:
        sentence = corpus.sentences[m.sentence]
        surface = " ".join(sentence[m.start:m.end])
        for n in range(1, min(window, m.start) + 1):
            rendered = " ".join(sentence[m.start - n:m.start]) + " @ENTITY"
            emissions.append((surface, rendered))
        for n in range(1, min(window, len(sentence) - m.end) + 1):
            rendered = "@ENTITY " + " ".join(sentence[m.end:m.end + n])
            emissions.append((surface, rendered))

    N = len(emissions)
    pattern_totals = Counter(rendered for _, rendered in emissions)
    out = {}
    for category, surfaces in pools_by_category.items():
        member = set(surfaces)
        n_c = sum(1 for s, _ in emissions if s in member)
        joint = Counter(rendered for s, rendered in emissions if s in member)
        for rendered, n_p in pattern_totals.items():
            n_pc = joint.get(rendered, 0)
            if n_pc == 0:
                out[(rendered, category)] = float("-inf")
            else:
                out[(rendered, category)] = math.log((n_pc * N) / (n_p * n_c))
    return out
