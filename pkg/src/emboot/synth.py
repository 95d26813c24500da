"""Synthetic corpus generation.

Builds desk-scale corpora with planted structure: each category owns a word
vocabulary and a set of one-sided context patterns; every mention surrounds
its entity with context n-grams drawn from the entity's category (or, with
probability ``noise_rate`` per side, from another category).  The planted
pattern-to-category truth ships with the corpus so experiments can measure
recovery.  Entity surfaces are neutral random strings, so edit distance
carries no category signal by construction.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .corpus import LEFT, RIGHT, Corpus, Mention, Pattern, render_pattern
from .embed import PretrainedEmbeddings

LETTERS = np.array(list(string.ascii_lowercase))


@dataclass
class SynthSpec:
    categories: int = 4
    entities_per_category: int = 250
    patterns_per_category: int = 20
    mentions_per_entity: float = 5.0
    noise_rate: float = 0.1
    rng_seed: int = 0

    def validate(self) -> None:
        if min(self.categories, self.entities_per_category, self.patterns_per_category) < 1:
            raise ValueError("all synthetic counts must be >= 1")
        if self.mentions_per_entity < 1:
            raise ValueError("mentions_per_entity must be >= 1")
        if not (0.0 <= self.noise_rate < 1.0):
            raise ValueError("noise_rate must lie in [0, 1)")


@dataclass
class SynthCorpus:
    corpus: Corpus  # carries gold labels in the mentions
    categories: list[str]
    pattern_truth: dict[str, str]  # rendered pattern (and sub-pattern) -> category
    entity_gold: dict[str, str]  # entity surface -> category
    word_categories: dict[str, str]  # every generated token -> its category


def _fresh_token(rng: np.random.Generator, used: set[str]) -> str:
    while True:
        length = int(rng.integers(4, 8))
        token = "".join(rng.choice(LETTERS, size=length))
        if token not in used:
            used.add(token)
            return token


def synth_corpus(spec: SynthSpec) -> SynthCorpus:
    """Generate a labeled corpus plus the planted pattern truth.

    Deterministic for a fixed ``rng_seed``.  Each mention becomes one
    sentence: [left context] [entity tokens] [right context], where each
    side's n-gram is one of the planted patterns (possibly from a noise
    category).  The truth map covers every emitted sub-pattern, keyed by
    rendered form.
    """
    spec.validate()
    rng = np.random.default_rng(spec.rng_seed)
    categories = [f"CAT{i + 1}" for i in range(spec.categories)]
    used_tokens: set[str] = set()
    word_categories: dict[str, str] = {}

    patterns: dict[str, list[Pattern]] = {}
    for category in categories:
        n_words = max(6, 2 * spec.patterns_per_category)
        words = [_fresh_token(rng, used_tokens) for _ in range(n_words)]
        for w in words:
            word_categories[w] = category
        own: list[Pattern] = []
        seen: set[tuple[str, tuple[str, ...]]] = set()
        for j in range(spec.patterns_per_category):
            side = LEFT if j % 2 == 0 else RIGHT
            while True:
                length = int(rng.integers(1, 5))
                tokens = tuple(rng.choice(words, size=length))
                if (side, tokens) not in seen:
                    seen.add((side, tokens))
                    break
            own.append(Pattern(side, tokens))
        patterns[category] = own

    pattern_truth: dict[str, str] = {}
    for category, own in patterns.items():
        for pattern in own:
            for n in range(1, len(pattern.tokens) + 1):
                sub_tokens = (
                    pattern.tokens[-n:] if pattern.side == LEFT else pattern.tokens[:n]
                )
                pattern_truth[render_pattern(Pattern(pattern.side, sub_tokens))] = category

    entities: dict[str, list[str]] = {}
    entity_gold: dict[str, str] = {}
    for category in categories:
        surfaces = []
        for _ in range(spec.entities_per_category):
            first = _fresh_token(rng, used_tokens)
            second = _fresh_token(rng, used_tokens)
            word_categories[first] = category
            word_categories[second] = category
            surface = f"{first} {second}"
            surfaces.append(surface)
            entity_gold[surface] = category
        entities[category] = surfaces

    def context(side: str, home: str) -> tuple[str, ...]:
        source = home
        if spec.noise_rate > 0 and rng.random() < spec.noise_rate:
            others = [c for c in categories if c != home]
            source = others[int(rng.integers(len(others)))] if others else home
        sided = [p for p in patterns[source] if p.side == side]
        if not sided:
            return ()
        return sided[int(rng.integers(len(sided)))].tokens

    sentences: list[list[str]] = []
    mentions: list[Mention] = []
    for category in categories:
        for surface in entities[category]:
            entity_tokens = surface.split()
            count = 1 + int(rng.poisson(spec.mentions_per_entity - 1.0))
            for _ in range(count):
                left = list(context(LEFT, category))
                right = list(context(RIGHT, category))
                tokens = left + entity_tokens + right
                mentions.append(
                    Mention(
                        len(sentences),
                        len(left),
                        len(left) + len(entity_tokens),
                        category,
                    )
                )
                sentences.append(tokens)

    return SynthCorpus(
        Corpus(sentences, mentions), categories, pattern_truth, entity_gold, word_categories
    )


def select_seeds(synthetic: SynthCorpus, per_category: int = 10) -> dict[str, list[str]]:
    """The most frequent entities of each category, as a seeds mapping."""
    frequency: dict[str, int] = {}
    for m in synthetic.corpus.mentions:
        surface = synthetic.corpus.surface(m)
        frequency[surface] = frequency.get(surface, 0) + 1
    seeds = {}
    for category in synthetic.categories:
        members = [s for s, c in synthetic.entity_gold.items() if c == category]
        members.sort(key=lambda s: (-frequency.get(s, 0), s))
        seeds[category] = members[:per_category]
    return seeds


def synthetic_pretrained(
    synthetic: SynthCorpus,
    dim: int = 25,
    signal: float = 1.0,
    noise: float = 1.0,
    rng_seed: int = 0,
) -> PretrainedEmbeddings:
    """Word vectors for the synthetic vocabulary: a category prototype plus
    Gaussian noise, so the pretrained space carries real but diluted
    category information."""
    rng = np.random.default_rng(rng_seed)
    prototypes = {}
    for category in synthetic.categories:
        v = rng.normal(size=dim)
        prototypes[category] = v / np.linalg.norm(v)
    words = sorted(synthetic.word_categories)
    matrix = np.empty((len(words), dim))
    for i, word in enumerate(words):
        proto = prototypes[synthetic.word_categories[word]]
        matrix[i] = signal * proto + noise * rng.normal(size=dim)
    return PretrainedEmbeddings(words, matrix)
