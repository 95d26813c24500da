"""Joint entity/pattern embedding training.

All entities and patterns share one table of d-dimensional vectors, trained
by stochastic gradient ascent on an objective with three parts: a skip-gram
term over entity-pattern co-occurrences with sampled negative patterns, an
attract term pulling items pooled under the same category together, and a
repel term pushing items of different categories apart.  The per-category
pools act as the (light) supervision; they come from the bootstrap loop.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .corpus import SLOT, CooccurrenceMatrix, Pattern

DEFAULT_DIM = 15


class ConfigurationError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass
class EmbeddingTable:
    """Dense vectors for every entity and pattern.

    Entity rows come first in ``vectors``; pattern ``p`` lives at row
    ``n_entities + p``.
    """

    vectors: np.ndarray
    n_entities: int
    n_patterns: int

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def entity_vectors(self) -> np.ndarray:
        return self.vectors[: self.n_entities]

    @property
    def pattern_vectors(self) -> np.ndarray:
        return self.vectors[self.n_entities:]

    def pattern_row(self, pattern_id: int) -> int:
        return self.n_entities + pattern_id

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.vectors.copy(), self.n_entities, self.n_patterns)


@dataclass
class TrainConfig:
    inner_epochs: int = 100
    learning_rate: float = 0.05
    lr_floor: float = 0.0001
    neg_samples: int = 5
    rng_seed: int = 0

    def validate(self) -> None:
        if self.inner_epochs < 0:
            raise ConfigurationError("inner_epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.neg_samples < 1:
            raise ConfigurationError("neg_samples must be >= 1")


def init_table(
    n_entities: int, n_patterns: int, dim: int = DEFAULT_DIM, rng_seed: int = 0
) -> EmbeddingTable:
    """Random table with components i.i.d. uniform on [-0.5/dim, +0.5/dim]."""
    if n_entities < 0 or n_patterns < 0 or dim < 1:
        raise ConfigurationError("table sizes must be non-negative and dim >= 1")
    rng = np.random.default_rng(rng_seed)
    bound = 0.5 / dim
    vectors = rng.uniform(-bound, bound, size=(n_entities + n_patterns, dim))
    return EmbeddingTable(vectors, n_entities, n_patterns)


def sigmoid(x):
    """Numerically stable logistic function, element-wise."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    z = np.exp(x[~positive])
    out[~positive] = z / (1.0 + z)
    if out.ndim == 0:
        return float(out)
    return out


def log_sigmoid(x):
    """log(sigmoid(x)) without overflow for large negative x."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def negative_sampling_weights(cooc: CooccurrenceMatrix) -> np.ndarray:
    """Pattern unigram distribution raised to the 3/4 power (unnormalized)."""
    return cooc.pattern_marginals.astype(np.float64) ** 0.75


def sample_negative_patterns(
    entity: int, k: int, cooc: CooccurrenceMatrix, rng: np.random.Generator
) -> list[int]:
    """Draw up to ``k`` distinct patterns never seen with ``entity``.

    Draws follow the 3/4-power pattern unigram distribution, rejecting
    positives and repeats.  When fewer than ``k`` patterns are eligible, all
    eligible ones are returned.
    """
    positives = set(int(p) for p in cooc.patterns_of(entity)[0])
    n_eligible = cooc.n_patterns - len(positives)
    if n_eligible <= 0:
        return []
    if n_eligible <= k:
        return [p for p in range(cooc.n_patterns) if p not in positives]
    weights = negative_sampling_weights(cooc)
    cumulative = np.cumsum(weights)
    total = cumulative[-1]
    drawn: list[int] = []
    seen: set[int] = set()
    while len(drawn) < k:
        r = rng.random() * total
        p = int(np.searchsorted(cumulative, r, side="right"))
        p = min(p, cooc.n_patterns - 1)
        if p in positives or p in seen:
            continue
        seen.add(p)
        drawn.append(p)
    return drawn


def _pool_param_indices(pools, table: EmbeddingTable) -> list[np.ndarray]:
    """Per-category arrays of parameter-row indices (entities, then the
    category's patterns offset past the entity block)."""
    groups = []
    for category in pools.categories:
        rows = [int(e) for e in pools.entity_ids(category)]
        rows += [table.n_entities + int(p) for p in pools.pattern_ids(category)]
        for row in rows:
            if not (0 <= row < table.vectors.shape[0]):
                raise ConfigurationError(
                    f"pooled item row {row} missing from embedding table"
                )
        groups.append(np.array(rows, dtype=np.int64))
    return groups


def _positive_arrays(cooc: CooccurrenceMatrix):
    entities = np.repeat(np.arange(cooc.n_entities, dtype=np.int64), cooc.row_sizes())
    return entities, cooc.ent_indices, cooc.ent_data


def objective(
    table: EmbeddingTable,
    cooc: CooccurrenceMatrix,
    pools,
    neg_assignment: dict[int, list[int]],
) -> float:
    """Training objective for a fixed assignment of negative patterns.

    Skip-gram part: every stored (entity, pattern) pair contributes its count
    times log-sigmoid of the dot product, plus one log-sigmoid(-dot) term per
    assigned negative.  Attract: log-sigmoid(dot) over unordered item pairs
    within each category's pooled entities and patterns.  Repel: ordered
    category pairs, log-sigmoid(-dot) over their cross pairs.  Always <= 0.
    """
    V = table.vectors
    total = 0.0

    ent, pat, weight = _positive_arrays(cooc)
    if len(ent):
        s = np.einsum("ij,ij->i", V[ent], V[table.n_entities + pat])
        total += float(np.dot(weight, log_sigmoid(s)))

    for entity, negatives in sorted(neg_assignment.items()):
        for p in negatives:
            s = float(np.dot(V[entity], V[table.n_entities + int(p)]))
            total += float(log_sigmoid(-s))

    groups = _pool_param_indices(pools, table)
    for rows in groups:
        if len(rows) >= 2:
            gram = V[rows] @ V[rows].T
            iu = np.triu_indices(len(rows), k=1)
            total += float(log_sigmoid(gram[iu]).sum())

    for i, rows_a in enumerate(groups):
        for j, rows_b in enumerate(groups):
            if i == j or len(rows_a) == 0 or len(rows_b) == 0:
                continue
            cross = V[rows_a] @ V[rows_b].T
            total += float(log_sigmoid(-cross).sum())

    return total


def objective_gradient(
    table: EmbeddingTable,
    cooc: CooccurrenceMatrix,
    pools,
    neg_assignment: dict[int, list[int]],
) -> np.ndarray:
    """Analytic gradient of :func:`objective` w.r.t. every table component."""
    V = table.vectors
    grad = np.zeros_like(V)

    ent, pat, weight = _positive_arrays(cooc)
    if len(ent):
        rows_p = table.n_entities + pat
        s = np.einsum("ij,ij->i", V[ent], V[rows_p])
        coeff = weight * sigmoid(-s)
        np.add.at(grad, ent, coeff[:, None] * V[rows_p])
        np.add.at(grad, rows_p, coeff[:, None] * V[ent])

    for entity, negatives in sorted(neg_assignment.items()):
        for p in negatives:
            row = table.n_entities + int(p)
            s = float(np.dot(V[entity], V[row]))
            coeff = sigmoid(s)
            grad[entity] -= coeff * V[row]
            grad[row] -= coeff * V[entity]

    groups = _pool_param_indices(pools, table)
    for rows in groups:
        if len(rows) < 2:
            continue
        gram = V[rows] @ V[rows].T
        coeff = sigmoid(-gram)
        np.fill_diagonal(coeff, 0.0)
        np.add.at(grad, rows, coeff @ V[rows])

    for i, rows_a in enumerate(groups):
        for j, rows_b in enumerate(groups):
            if i == j or len(rows_a) == 0 or len(rows_b) == 0:
                continue
            cross = V[rows_a] @ V[rows_b].T
            coeff = sigmoid(cross)
            # each ordered pool pair contributes to both sides' rows
            np.add.at(grad, rows_a, -(coeff @ V[rows_b]))
            np.add.at(grad, rows_b, -(coeff.T @ V[rows_a]))

    return grad


def train_inner(
    table: EmbeddingTable,
    cooc: CooccurrenceMatrix,
    pools,
    cfg: TrainConfig,
) -> EmbeddingTable:
    """Run ``cfg.inner_epochs`` ascent sweeps and return the updated table.

    Each sweep visits every positive (entity, pattern) occurrence in a fresh
    shuffled order, drawing ``neg_samples`` fresh negatives per visit, then
    every attract pair and every repel pair.  The learning rate decays
    linearly from ``learning_rate`` to ``lr_floor`` across sweeps.  The input
    table is not modified.
    """
    cfg.validate()
    result = table.copy()
    if cfg.inner_epochs == 0:
        return result

    ent, pat, weight = _positive_arrays(cooc)
    pos_entities = np.repeat(ent, weight)
    pos_patterns = np.repeat(pat, weight)

    weights = negative_sampling_weights(cooc)
    total_weight = weights.sum()
    if total_weight > 0:
        neg_cum = np.cumsum(weights) / total_weight
    else:
        neg_cum = np.ones(max(cooc.n_patterns, 1))

    groups = _pool_param_indices(pools, table)
    pool_indptr = np.zeros(len(groups) + 1, dtype=np.int64)
    for i, rows in enumerate(groups):
        pool_indptr[i + 1] = pool_indptr[i] + len(rows)
    pool_items = (
        np.concatenate(groups) if groups else np.empty(0, dtype=np.int64)
    ).astype(np.int64)

    status = _kernels.train_embeddings(
        result.vectors,
        pos_entities,
        pos_patterns,
        cooc.ent_indptr,
        cooc.ent_indices,
        neg_cum,
        cfg.neg_samples,
        pool_items,
        pool_indptr,
        cfg.inner_epochs,
        cfg.learning_rate,
        cfg.lr_floor,
        np.uint32(cfg.rng_seed & 0xFFFFFFFF),
    )
    if status >= 0:
        raise TrainingError(
            f"non-finite embedding component after sweep {status}; "
            f"reduce the learning rate ({cfg.learning_rate})"
        )
    return result


class PretrainedEmbeddings:
    """Word vectors loaded from file; multi-word items average their
    in-vocabulary words and degrade to the zero vector when none are known."""

    def __init__(self, words: list[str], matrix: np.ndarray):
        if len(words) != matrix.shape[0]:
            raise ValueError("word list and matrix row count differ")
        self.index = {w: i for i, w in enumerate(words)}
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.dim = self.matrix.shape[1]

    def tokens_vector(self, tokens) -> np.ndarray:
        rows = [self.index[t] for t in tokens if t in self.index]
        if not rows:
            return np.zeros(self.dim)
        return self.matrix[rows].mean(axis=0)

    def entity_vector(self, surface: str) -> np.ndarray:
        return self.tokens_vector(surface.split())

    def pattern_vector(self, pattern: Pattern) -> np.ndarray:
        return self.tokens_vector(t for t in pattern.tokens if t != SLOT)


def replace_seed(cfg: TrainConfig, seed: int) -> TrainConfig:
    return replace(cfg, rng_seed=int(seed))
