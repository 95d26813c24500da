"""Outer bootstrapping loop.

Starting from a handful of seed entities per category, each epoch (1) trains
the joint embeddings against the current pools, (2) promotes the patterns
ranking highest by PMI with each category's pooled entities, and (3) promotes
the candidate entities a multi-class classifier assigns to each category with
the highest confidence.  Pools only grow and stay disjoint across categories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .corpus import Corpus, CooccurrenceMatrix, Vocabulary, generate_patterns
from .embed import (
    DEFAULT_DIM,
    EmbeddingTable,
    PretrainedEmbeddings,
    TrainConfig,
    init_table,
    replace_seed,
    train_inner,
)

NEG_INF = float("-inf")

#: Candidate-entity features computed per category, in block order.
FEATURES_PER_CATEGORY = 7
(
    F_MIN_EDIT,
    F_MEAN_EDIT,
    F_SUM_PMI,
    F_AVG_COS_CUSTOM,
    F_MAX_COS_CUSTOM,
    F_AVG_COS_PRETRAINED,
    F_MAX_COS_PRETRAINED,
) = range(FEATURES_PER_CATEGORY)

#: A pattern must match at least this many distinct pooled entities of a
#: category before it can be promoted there.
MIN_PATTERN_SUPPORT = 2


@dataclass
class PoolState:
    """Per-category entity and pattern pools with promotion-epoch provenance.

    Seeds carry epoch 0.  Entity pools are pairwise disjoint across
    categories, as are pattern pools; pools never shrink.
    """

    categories: tuple[str, ...]
    entities: dict[str, list[tuple[int, int]]]
    patterns: dict[str, list[tuple[int, int]]]

    def entity_ids(self, category: str) -> list[int]:
        return [e for e, _ in self.entities[category]]

    def pattern_ids(self, category: str) -> list[int]:
        return [p for p, _ in self.patterns[category]]

    def pooled_entities(self) -> set[int]:
        return {e for cat in self.categories for e, _ in self.entities[cat]}

    def pooled_patterns(self) -> set[int]:
        return {p for cat in self.categories for p, _ in self.patterns[cat]}

    def copy(self) -> "PoolState":
        return PoolState(
            self.categories,
            {c: list(v) for c, v in self.entities.items()},
            {c: list(v) for c, v in self.patterns.items()},
        )

    def validate(self) -> None:
        for pools in (self.entities, self.patterns):
            seen: set[int] = set()
            for cat in self.categories:
                ids = [i for i, _ in pools[cat]]
                if len(set(ids)) != len(ids) or seen & set(ids):
                    raise ValueError("pools must be disjoint across categories")
                seen.update(ids)


def init_pools(seeds: dict[str, list[str]], vocab: Vocabulary) -> PoolState:
    """Entity pools holding exactly the seeds (epoch 0), empty pattern pools.

    Every seed surface must exist in the corpus entity vocabulary and no
    surface may be seeded under two categories.
    """
    if not seeds:
        raise ValueError("seed mapping is empty: no categories to bootstrap")
    claimed: dict[str, str] = {}
    entities: dict[str, list[tuple[int, int]]] = {}
    for category, surfaces in seeds.items():
        rows = []
        for surface in surfaces:
            if surface not in vocab.entity_index:
                raise ValueError(f"seed entity {surface!r} not found in the corpus")
            if surface in claimed:
                raise ValueError(
                    f"seed entity {surface!r} listed under both "
                    f"{claimed[surface]!r} and {category!r}"
                )
            claimed[surface] = category
            rows.append((vocab.entity_index[surface], 0))
        entities[category] = rows
    categories = tuple(seeds)
    pools = PoolState(categories, entities, {c: [] for c in categories})
    pools.validate()
    return pools


def _category_match_stats(
    cooc: CooccurrenceMatrix, entity_ids: list[int]
) -> tuple[np.ndarray, np.ndarray, int]:
    """Joint counts n(p, c) and distinct pooled-entity match counts for one
    category's entity pool, plus the pool's total match count n(c)."""
    joint = np.zeros(cooc.n_patterns, dtype=np.int64)
    distinct = np.zeros(cooc.n_patterns, dtype=np.int64)
    for e in entity_ids:
        pattern_ids, counts = cooc.patterns_of(e)
        joint[pattern_ids] += counts
        distinct[pattern_ids] += 1
    return joint, distinct, int(cooc.entity_marginals[list(entity_ids)].sum())


def _pmi_from_counts(n_pc: int, n_p: int, n_c: int, total: int) -> float:
    if n_pc == 0:
        return NEG_INF
    return math.log((n_pc * total) / (n_p * n_c))


def pmi(pattern: int, category: str, cooc: CooccurrenceMatrix, pools: PoolState) -> float:
    """Pointwise mutual information between a pattern and a category.

    Joint counts are taken over the category's pooled entities:
    log(n(p,c) * N / (n(p) * n(c))).  Returns -inf when the pattern never
    matches a pooled entity, which sorts last in rankings.
    """
    n_p = int(cooc.pattern_marginals[pattern])
    if n_p <= 0:
        raise ValueError(f"pattern {pattern} has no corpus matches")
    pooled = pools.entity_ids(category)
    entity_ids, counts = cooc.entities_of(pattern)
    members = set(pooled)
    n_pc = int(sum(c for e, c in zip(entity_ids, counts) if int(e) in members))
    n_c = int(cooc.entity_marginals[pooled].sum())
    return _pmi_from_counts(n_pc, n_p, n_c, cooc.total)


def promote_patterns(
    pools: PoolState,
    cooc: CooccurrenceMatrix,
    vocab: Vocabulary,
    epoch: int,
    k_patterns: int,
) -> tuple[PoolState, dict[str, list[tuple[int, float]]]]:
    """Append each category's top-PMI unpooled patterns.

    Eligible patterns match at least MIN_PATTERN_SUPPORT distinct pooled
    entities of the category.  Ties break by higher joint count, then by
    rendered form.  Returns the grown pools and the per-category promotions
    with their PMI scores.
    """
    new_pools = pools.copy()
    taken = pools.pooled_patterns()
    promotions: dict[str, list[tuple[int, float]]] = {}
    for category in pools.categories:
        joint, distinct, n_c = _category_match_stats(cooc, pools.entity_ids(category))
        scored = []
        for p in np.nonzero(distinct >= MIN_PATTERN_SUPPORT)[0]:
            p = int(p)
            if p in taken:
                continue
            score = _pmi_from_counts(
                int(joint[p]), int(cooc.pattern_marginals[p]), n_c, cooc.total
            )
            scored.append((p, score, int(joint[p])))
        scored.sort(key=lambda item: (-item[1], -item[2], vocab.pattern_rendered[item[0]]))
        chosen = scored[:k_patterns]
        new_pools.patterns[category].extend((p, epoch) for p, _, _ in chosen)
        taken.update(p for p, _, _ in chosen)
        promotions[category] = [(p, score) for p, score, _ in chosen]
    return new_pools, promotions


def candidate_entities(pools: PoolState, cooc: CooccurrenceMatrix) -> list[int]:
    """Unpooled entities matched by at least one pooled pattern, ascending id."""
    pooled = pools.pooled_entities()
    candidates: set[int] = set()
    for p in pools.pooled_patterns():
        entity_ids, _ = cooc.entities_of(p)
        candidates.update(int(e) for e in entity_ids)
    return sorted(candidates - pooled)


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance over characters, unit edit costs."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return matrix / safe


def pretrained_entity_matrix(
    vocab: Vocabulary, pretrained: PretrainedEmbeddings | None
) -> np.ndarray | None:
    if pretrained is None:
        return None
    rows = [pretrained.entity_vector(s) for s in vocab.entity_surfaces]
    return np.array(rows) if rows else np.zeros((0, pretrained.dim))


class CandidateFeaturizer:
    """Per-epoch feature computation for entity promotion.

    For each category the block holds: min and mean normalized edit distance
    to the pooled entity surfaces, the summed PMI of the category's pooled
    patterns matching the entity, and average/maximum cosine similarity to
    the pooled entities under both the custom table and the pretrained
    vectors.  With ``use_custom=False`` (the explicit-pattern ablation) the
    custom-cosine columns are zeroed.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        cooc: CooccurrenceMatrix,
        pools: PoolState,
        table: EmbeddingTable,
        pretrained_entities: np.ndarray | None = None,
        use_custom: bool = True,
    ):
        self.vocab = vocab
        self.cooc = cooc
        self.pools = pools
        self.use_custom = use_custom
        self.categories = pools.categories
        self._pool_ids: dict[str, list[int]] = {}
        self._pool_codes = {}
        self._pool_custom: dict[str, np.ndarray] = {}
        self._pool_pretrained: dict[str, np.ndarray | None] = {}
        self._pmi_maps: dict[str, dict[int, float]] = {}
        self._custom_units = _unit_rows(table.entity_vectors) if use_custom else None
        self._pretrained_units = (
            _unit_rows(pretrained_entities) if pretrained_entities is not None else None
        )

        for category in self.categories:
            ids = pools.entity_ids(category)
            if not ids:
                raise ValueError(f"category {category!r} has an empty entity pool")
            self._pool_ids[category] = ids
            surfaces = [vocab.entity_surfaces[e] for e in ids]
            self._pool_codes[category] = _kernels.encode_strings(surfaces)
            if self._custom_units is not None:
                self._pool_custom[category] = self._custom_units[ids]
            self._pool_pretrained[category] = (
                self._pretrained_units[ids] if self._pretrained_units is not None else None
            )

            joint, _, n_c = _category_match_stats(cooc, ids)
            pmi_map = {}
            for p in pools.pattern_ids(category):
                value = _pmi_from_counts(
                    int(joint[p]), int(cooc.pattern_marginals[p]), n_c, cooc.total
                )
                if math.isfinite(value):
                    pmi_map[p] = value
            self._pmi_maps[category] = pmi_map

    def features(
        self,
        entity_ids: list[int],
        exclude: dict[int, tuple[str, int]] | None = None,
    ) -> np.ndarray:
        """Feature matrix for ``entity_ids``.

        ``exclude`` maps a row index to (category, position in that pool) and
        drops that pool member from the row's statistics; it is used to
        featurize pooled entities for classifier training without letting
        them match themselves.
        """
        n = len(entity_ids)
        X = np.zeros((n, FEATURES_PER_CATEGORY * len(self.categories)))
        if n == 0:
            return X
        exclude = exclude or {}

        surfaces = [self.vocab.entity_surfaces[e] for e in entity_ids]
        cand_codes, cand_lengths = _kernels.encode_strings(surfaces)

        for c_idx, category in enumerate(self.categories):
            base = c_idx * FEATURES_PER_CATEGORY
            pool_codes, pool_lengths = self._pool_codes[category]
            edit = _kernels.edit_distance_matrix(
                cand_codes, cand_lengths, pool_codes, pool_lengths
            )
            custom = (
                self._custom_units[entity_ids] @ self._pool_custom[category].T
                if self.use_custom
                else None
            )
            pretrained_pool = self._pool_pretrained[category]
            pretrained = (
                self._pretrained_units[entity_ids] @ pretrained_pool.T
                if pretrained_pool is not None
                else None
            )

            pool_size = len(self._pool_ids[category])
            for row in range(n):
                keep = None
                excluded = exclude.get(row)
                if excluded is not None and excluded[0] == category and pool_size > 1:
                    keep = np.arange(pool_size) != excluded[1]
                e_row = edit[row] if keep is None else edit[row][keep]
                X[row, base + F_MIN_EDIT] = e_row.min()
                X[row, base + F_MEAN_EDIT] = e_row.mean()
                if custom is not None:
                    c_row = custom[row] if keep is None else custom[row][keep]
                    X[row, base + F_AVG_COS_CUSTOM] = c_row.mean()
                    X[row, base + F_MAX_COS_CUSTOM] = c_row.max()
                if pretrained is not None:
                    p_row = pretrained[row] if keep is None else pretrained[row][keep]
                    X[row, base + F_AVG_COS_PRETRAINED] = p_row.mean()
                    X[row, base + F_MAX_COS_PRETRAINED] = p_row.max()

            pmi_map = self._pmi_maps[category]
            for row, e in enumerate(entity_ids):
                matched, _ = self.cooc.patterns_of(e)
                X[row, base + F_SUM_PMI] = sum(
                    pmi_map[p] for p in map(int, matched) if p in pmi_map
                )
        return X

    def pool_training_set(self) -> tuple[np.ndarray, np.ndarray]:
        """Features and category labels for all pooled entities, each
        featurized against the pools with itself left out."""
        ids: list[int] = []
        labels: list[int] = []
        exclude: dict[int, tuple[str, int]] = {}
        for c_idx, category in enumerate(self.categories):
            for position, e in enumerate(self._pool_ids[category]):
                exclude[len(ids)] = (category, position)
                ids.append(e)
                labels.append(c_idx)
        return self.features(ids, exclude=exclude), np.array(labels, dtype=np.int64)


def featurize(
    entity: int,
    pools: PoolState,
    cooc: CooccurrenceMatrix,
    vocab: Vocabulary,
    table: EmbeddingTable,
    pretrained_entities: np.ndarray | None = None,
    use_custom: bool = True,
) -> np.ndarray:
    """Feature vector for a single candidate entity (see CandidateFeaturizer)."""
    featurizer = CandidateFeaturizer(
        vocab, cooc, pools, table, pretrained_entities, use_custom
    )
    return featurizer.features([entity])[0]


@dataclass
class PromotionModel:
    """Multinomial logistic regression over standardized features."""

    categories: tuple[str, ...]
    weights: np.ndarray  # (n_categories, n_features)
    bias: np.ndarray  # (n_categories,)
    mean: np.ndarray
    scale: np.ndarray

    def _logits(self, X: np.ndarray) -> np.ndarray:
        Xs = (np.asarray(X, dtype=np.float64) - self.mean) / self.scale
        return Xs @ self.weights.T + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        logits = self._logits(X)
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        return p / p.sum(axis=1, keepdims=True)

    def log_likelihood(self, X: np.ndarray, labels: np.ndarray) -> float:
        probs = self.predict_proba(X)
        return float(np.log(probs[np.arange(len(labels)), labels]).sum())


def train_promotion_classifier(
    features: np.ndarray,
    labels: np.ndarray,
    categories: tuple[str, ...],
    l2: float = 1.0,
    iterations: int = 200,
) -> PromotionModel:
    """Fit by full-batch gradient ascent on the L2-regularized log-likelihood.

    Features are standardized with the training statistics; the bias is not
    regularized.  The step size is 1/L for a smoothness bound L computed from
    the data, so the fit is deterministic (zero init, fixed iterations).
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n, dim = X.shape
    n_categories = len(categories)
    if n_categories < 2:
        raise ValueError("promotion classifier needs at least 2 categories")
    present = np.bincount(y, minlength=n_categories)
    if np.any(present == 0):
        missing = categories[int(np.argmin(present))]
        raise ValueError(f"category {missing!r} has no pooled entities to train on")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    scale = np.where(std > 1e-12, std, 1.0)
    Xs = (X - mean) / scale

    augmented = np.hstack([Xs, np.ones((n, 1))])
    spectral = np.linalg.svd(augmented, compute_uv=False)[0]
    smoothness = 0.5 * spectral**2 / n + l2 / n
    step = 1.0 / smoothness

    Y = np.zeros((n, n_categories))
    Y[np.arange(n), y] = 1.0
    W = np.zeros((n_categories, dim))
    b = np.zeros(n_categories)
    for _ in range(iterations):
        logits = Xs @ W.T + b
        logits -= logits.max(axis=1, keepdims=True)
        P = np.exp(logits)
        P /= P.sum(axis=1, keepdims=True)
        R = Y - P
        W += step * ((R.T @ Xs) - l2 * W) / n
        b += step * R.sum(axis=0) / n

    return PromotionModel(tuple(categories), W, b, mean, scale)


def promote_entities(
    pools: PoolState,
    model: PromotionModel,
    candidates: list[int],
    features: np.ndarray,
    vocab: Vocabulary,
    epoch: int,
    k_entities: int,
) -> tuple[PoolState, dict[str, list[tuple[int, float]]]]:
    """Assign the top-confidence candidates to each category.

    Claims are processed globally in descending probability, so a candidate
    wanted by two categories goes where its probability is higher and the
    other category falls through to its next-best candidate.  Ties break by
    higher corpus frequency, then surface, then category order.
    """
    new_pools = pools.copy()
    promotions: dict[str, list[tuple[int, float]]] = {c: [] for c in pools.categories}
    if not candidates:
        return new_pools, promotions

    probs = model.predict_proba(features)
    claims = []
    for position, entity in enumerate(candidates):
        surface = vocab.entity_surfaces[entity]
        freq = int(vocab.entity_freq[entity])
        for c_idx, category in enumerate(pools.categories):
            claims.append(
                (-probs[position, c_idx], -freq, surface, c_idx, position, entity)
            )
    claims.sort()

    assigned: set[int] = set()
    remaining = {c: k_entities for c in pools.categories}
    for neg_prob, _, _, c_idx, position, entity in claims:
        category = pools.categories[c_idx]
        if entity in assigned or remaining[category] == 0:
            continue
        assigned.add(entity)
        remaining[category] -= 1
        new_pools.entities[category].append((entity, epoch))
        promotions[category].append((entity, -neg_prob))
    return new_pools, promotions


@dataclass
class BootstrapConfig:
    epochs: int = 20
    k_entities: int = 10
    k_patterns: int = 10
    window: int = 4
    dim: int = DEFAULT_DIM
    min_freq: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    rng_seed: int = 0

    def validate(self) -> None:
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.k_entities < 1 or self.k_patterns < 1:
            raise ValueError("promotion budgets must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        self.train.validate()


@dataclass
class EpochRecord:
    """One epoch's promotions (surfaces/rendered patterns with scores) plus a
    snapshot of the pools after the epoch.  Seeds appear at epoch 0 with a
    null score."""

    epoch: int
    entity_promotions: dict[str, list[tuple[str, float | None]]]
    pattern_promotions: dict[str, list[tuple[str, float]]]
    pools: PoolState


@dataclass
class Trace:
    system: str
    categories: list[str]
    records: list[EpochRecord]

    def final_pools(self) -> PoolState:
        return self.records[-1].pools


@dataclass
class RunResult:
    trace: Trace
    vocab: Vocabulary
    cooc: CooccurrenceMatrix
    table: EmbeddingTable
    pools: PoolState
    pretrained: PretrainedEmbeddings | None = None


def derived_seeds(rng_seed: int, count: int) -> list[int]:
    """Stable child seeds for the run's random stages."""
    children = np.random.SeedSequence(rng_seed).spawn(count)
    return [int(c.generate_state(1)[0]) for c in children]


def run(
    config: BootstrapConfig,
    corpus: Corpus,
    seeds: dict[str, list[str]],
    *,
    system: str = "emboot",
    pretrained: PretrainedEmbeddings | None = None,
    train_embeddings: bool = True,
    use_custom_features: bool = True,
) -> RunResult:
    """Run the full bootstrap and return the per-epoch trace plus the final
    vocabulary, co-occurrence matrix, embedding table, and pools.

    Gold mention labels are stripped before any statistics are computed, so
    training only ever sees entity boundaries.
    """
    config.validate()
    unlabeled = corpus.unlabeled()
    vocab, cooc = generate_patterns(unlabeled, config.window, config.min_freq)
    pools = init_pools(seeds, vocab)

    stage_seeds = derived_seeds(config.rng_seed, config.epochs + 1)
    table = init_table(vocab.n_entities, vocab.n_patterns, config.dim, stage_seeds[0])
    pretrained_entities = pretrained_entity_matrix(vocab, pretrained)

    records = [
        EpochRecord(
            epoch=0,
            entity_promotions={
                c: [(vocab.entity_surfaces[e], None) for e in pools.entity_ids(c)]
                for c in pools.categories
            },
            pattern_promotions={c: [] for c in pools.categories},
            pools=pools.copy(),
        )
    ]

    for epoch in range(1, config.epochs + 1):
        if train_embeddings:
            table = train_inner(
                table, cooc, pools, replace_seed(config.train, stage_seeds[epoch])
            )

        pools, pattern_promotions = promote_patterns(
            pools, cooc, vocab, epoch, config.k_patterns
        )

        candidates = candidate_entities(pools, cooc)
        featurizer = CandidateFeaturizer(
            vocab, cooc, pools, table, pretrained_entities, use_custom_features
        )
        X_train, y_train = featurizer.pool_training_set()
        model = train_promotion_classifier(X_train, y_train, pools.categories)
        X_cand = featurizer.features(candidates)
        pools, entity_promotions = promote_entities(
            pools, model, candidates, X_cand, vocab, epoch, config.k_entities
        )
        pools.validate()

        records.append(
            EpochRecord(
                epoch=epoch,
                entity_promotions={
                    c: [(vocab.entity_surfaces[e], score) for e, score in entity_promotions[c]]
                    for c in pools.categories
                },
                pattern_promotions={
                    c: [(vocab.pattern_rendered[p], score) for p, score in pattern_promotions[c]]
                    for c in pools.categories
                },
                pools=pools.copy(),
            )
        )

    trace = Trace(system, list(pools.categories), records)
    return RunResult(trace, vocab, cooc, table, pools, pretrained)
