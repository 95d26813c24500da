"""Comparison systems.

``epb_run`` is the ablation without custom embeddings: the same bootstrap
loop, but no embedding training and the custom-cosine feature block zeroed
(edit-distance, PMI, and pretrained-cosine features remain).
``epb_int_build`` constructs its decision list from pretrained word-averaged
vectors instead of the learned table.  ``lp_bootstrap_run`` replaces the
whole promotion machinery with label propagation over an RBF similarity
graph on raw co-occurrence count features, promoting the lowest-entropy
entities each epoch.
"""

from __future__ import annotations

import numpy as np

from .bootstrap import (
    BootstrapConfig,
    EpochRecord,
    PoolState,
    RunResult,
    Trace,
    init_pools,
    run,
)
from .corpus import Corpus, CooccurrenceMatrix, Vocabulary, generate_patterns
from .embed import PretrainedEmbeddings, init_table
from .interp import DecisionList, _assemble


def epb_run(
    config: BootstrapConfig,
    corpus: Corpus,
    seeds: dict[str, list[str]],
    pretrained: PretrainedEmbeddings | None = None,
) -> RunResult:
    """Bootstrap without custom embeddings (explicit pattern-based variant)."""
    return run(
        config,
        corpus,
        seeds,
        system="epb",
        pretrained=pretrained,
        train_embeddings=False,
        use_custom_features=False,
    )


def epb_int_build(
    pools: PoolState,
    vocab: Vocabulary,
    pretrained: PretrainedEmbeddings,
    epoch: int = 0,
) -> DecisionList:
    """Decision list scored in the pretrained space.

    Category centroids average the pooled entities' word-averaged vectors;
    pattern vectors average their context words.  A pattern whose tokens are
    all out of vocabulary has a zero vector, hence equal cosines and a
    uniform probability entry.
    """
    return _assemble(
        pools,
        epoch,
        rendered_of=lambda p: vocab.pattern_rendered[p],
        entity_vector=lambda e: pretrained.entity_vector(vocab.entity_surfaces[e]),
        pattern_vector=lambda p: pretrained.pattern_vector(vocab.patterns[p]),
    )


def label_propagation(
    features: np.ndarray,
    seed_labels: dict[int, int],
    n_classes: int,
    gamma: float,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> np.ndarray:
    """Propagate clamped seed labels over an RBF-kernel similarity graph.

    The transition matrix is the row-normalized kernel
    exp(-gamma * ||x_i - x_j||^2).  Unlabeled rows start uniform and iterate
    until the largest change drops below ``tol`` or ``max_iter`` sweeps.
    Returns one probability distribution per row; seed rows stay one-hot.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    X = np.asarray(features, dtype=np.float64)
    n = X.shape[0]
    for index in seed_labels:
        if not (0 <= index < n):
            raise ValueError(f"seed row {index} outside the feature matrix")

    squared = (X * X).sum(axis=1)
    distances = squared[:, None] + squared[None, :] - 2.0 * (X @ X.T)
    np.maximum(distances, 0.0, out=distances)
    kernel = np.exp(-gamma * distances)
    transition = kernel / kernel.sum(axis=1, keepdims=True)

    F = np.full((n, n_classes), 1.0 / n_classes)
    rows = np.array(sorted(seed_labels), dtype=np.int64)
    labels = np.array([seed_labels[int(i)] for i in rows], dtype=np.int64)
    clamp = np.zeros((len(rows), n_classes))
    clamp[np.arange(len(rows)), labels] = 1.0
    F[rows] = clamp

    for _ in range(max_iter):
        updated = transition @ F
        updated[rows] = clamp
        delta = float(np.max(np.abs(updated - F)))
        F = updated
        if delta < tol:
            break
    return F


def entropy(distributions: np.ndarray) -> np.ndarray:
    """Shannon entropy per row; 0 log 0 taken as 0."""
    P = np.asarray(distributions, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(P), 0.0)
    return -terms.sum(axis=1)


def lp_bootstrap_run(
    config: BootstrapConfig,
    corpus: Corpus,
    seeds: dict[str, list[str]],
    gamma: float | None = None,
    max_iter: int = 1000,
) -> RunResult:
    """Bootstrapping by label propagation.

    Each epoch propagates the current pools over the similarity graph, ranks
    unlabeled entities by ascending entropy, and adds each to its argmax
    category until every category has taken ``k_entities`` new members (an
    entity whose top category is already full waits for a later epoch).
    """
    config.validate()
    unlabeled = corpus.unlabeled()
    vocab, cooc = generate_patterns(unlabeled, config.window, config.min_freq)
    pools = init_pools(seeds, vocab)
    categories = pools.categories

    features = np.zeros((vocab.n_entities, vocab.n_patterns))
    for (e, p), count in cooc.counts.items():
        features[e, p] = count
    if gamma is None:
        gamma = 1.0 / max(vocab.n_patterns, 1)

    records = [
        EpochRecord(
            epoch=0,
            entity_promotions={
                c: [(vocab.entity_surfaces[e], None) for e in pools.entity_ids(c)]
                for c in categories
            },
            pattern_promotions={c: [] for c in categories},
            pools=pools.copy(),
        )
    ]

    for epoch in range(1, config.epochs + 1):
        seed_labels = {
            e: c_idx
            for c_idx, category in enumerate(categories)
            for e in pools.entity_ids(category)
        }
        F = label_propagation(
            features, seed_labels, len(categories), gamma, max_iter=max_iter
        )

        labeled = set(seed_labels)
        candidates = [e for e in range(vocab.n_entities) if e not in labeled]
        H = entropy(F)
        candidates.sort(
            key=lambda e: (
                H[e],
                -int(vocab.entity_freq[e]),
                vocab.entity_surfaces[e],
            )
        )

        budget = {c: config.k_entities for c in categories}
        promotions: dict[str, list[tuple[int, float]]] = {c: [] for c in categories}
        pools = pools.copy()
        for e in candidates:
            if all(v == 0 for v in budget.values()):
                break
            c_idx = int(np.argmax(F[e]))
            category = categories[c_idx]
            if budget[category] == 0:
                continue
            budget[category] -= 1
            pools.entities[category].append((e, epoch))
            promotions[category].append((e, float(F[e, c_idx])))

        records.append(
            EpochRecord(
                epoch=epoch,
                entity_promotions={
                    c: [(vocab.entity_surfaces[e], score) for e, score in promotions[c]]
                    for c in categories
                },
                pattern_promotions={c: [] for c in categories},
                pools=pools.copy(),
            )
        )

    table = init_table(0, 0, config.dim, config.rng_seed)
    trace = Trace("lp", list(categories), records)
    return RunResult(trace, vocab, cooc, table, pools, None)
