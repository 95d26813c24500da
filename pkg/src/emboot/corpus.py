"""Corpus ingestion and entity/pattern statistics.

Reads CoNLL-style column files into a tokenized corpus with entity-mention
spans, extracts the unique multi-word entities, generates one-sided n-gram
context patterns around each mention, and counts entity-pattern
co-occurrences.  Everything downstream (embedding training, pattern
promotion, the decision list) consumes the structures built here.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

LEFT = "LEFT"
RIGHT = "RIGHT"

#: Placeholder token occupying the entity slot in a rendered pattern.
SLOT = "@ENTITY"

#: First column of CoNLL document-separator lines; such lines are skipped.
DOC_SEPARATOR = "-DOCSTART-"

#: Accepted input formats: name -> expected number of columns.
FORMAT_COLUMNS = {"conll2003": 4, "2col": 2}

DEFAULT_WINDOW = 4


class CorpusFormatError(ValueError):
    """Raised for malformed corpus input; carries the offending line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class Mention:
    """An entity mention: token span [start, end) of a sentence.

    ``label`` is the gold category.  It exists for evaluation and seed
    selection only; no training code path reads it (the bootstrap loop
    operates on an unlabeled view of the corpus).
    """

    sentence: int
    start: int
    end: int
    label: str


@dataclass
class Corpus:
    sentences: list[list[str]]
    mentions: list[Mention]

    def surface(self, mention: Mention) -> str:
        tokens = self.sentences[mention.sentence][mention.start:mention.end]
        return " ".join(tokens)

    def unlabeled(self) -> "Corpus":
        """Copy of this corpus with all gold labels blanked out."""
        return Corpus(
            sentences=self.sentences,
            mentions=[replace(m, label="") for m in self.mentions],
        )

    def validate(self) -> None:
        """Check span bounds and per-sentence non-overlap."""
        spans: dict[int, list[tuple[int, int]]] = {}
        for m in self.mentions:
            sent = self.sentences[m.sentence]
            if not (0 <= m.start < m.end <= len(sent)):
                raise ValueError(f"mention span {m} out of bounds")
            spans.setdefault(m.sentence, []).append((m.start, m.end))
        for sent_spans in spans.values():
            sent_spans.sort()
            for (s1, e1), (s2, _) in zip(sent_spans, sent_spans[1:]):
                if s2 < e1:
                    raise ValueError("overlapping mentions in one sentence")


def parse_conll(text: str, fmt: str = "conll2003") -> Corpus:
    """Parse column-formatted BIO-tagged text into a :class:`Corpus`.

    One token per line, blank lines separate sentences, the final column is
    the BIO entity tag.  ``fmt`` selects the expected column count
    (``conll2003`` = 4 columns, ``2col`` = 2).  A dangling ``I-`` tag (no
    preceding ``B-``/``I-`` of the same category) opens a new mention, which
    keeps ingestion total on noisy or IOB1-style data.
    """
    if fmt not in FORMAT_COLUMNS:
        raise ValueError(f"unknown corpus format {fmt!r}; expected one of {sorted(FORMAT_COLUMNS)}")
    n_columns = FORMAT_COLUMNS[fmt]

    sentences: list[list[str]] = []
    mentions: list[Mention] = []

    tokens: list[str] = []
    tags: list[str] = []

    def flush_sentence() -> None:
        if not tokens:
            return
        sentence_index = len(sentences)
        sentences.append(list(tokens))
        start = None
        category = None
        for i, tag in enumerate(tags):
            if tag == "O":
                kind, cat = "O", None
            elif tag.startswith("B-") or tag.startswith("I-"):
                kind, cat = tag[0], tag[2:]
            else:
                kind, cat = "O", None  # unknown tag treated as outside
            continues = kind == "I" and category is not None and cat == category
            if start is not None and not continues:
                mentions.append(Mention(sentence_index, start, i, category))
                start, category = None, None
            if kind in ("B", "I") and not continues:
                start, category = i, cat
        if start is not None:
            mentions.append(Mention(sentence_index, start, len(tags), category))
        tokens.clear()
        tags.clear()

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            flush_sentence()
            continue
        columns = line.split()
        if columns[0] == DOC_SEPARATOR:
            flush_sentence()
            continue
        if len(columns) != n_columns:
            raise CorpusFormatError(
                f"expected {n_columns} columns, found {len(columns)}", line_number
            )
        tokens.append(columns[0])
        tags.append(columns[-1])
    flush_sentence()

    return Corpus(sentences=sentences, mentions=mentions)


def detect_format(text: str) -> str:
    """Guess the column format from the first data line."""
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.split()[0] == DOC_SEPARATOR:
            continue
        width = len(line.split())
        for name, columns in FORMAT_COLUMNS.items():
            if width == columns:
                return name
        raise CorpusFormatError(f"no known format has {width} columns", 1)
    return "conll2003"  # empty input: any format parses it


def extract_entities(corpus: Corpus) -> dict[str, int]:
    """Map each distinct mention surface (case preserved, space-joined) to
    its mention count, in order of first occurrence."""
    frequencies: dict[str, int] = {}
    for mention in corpus.mentions:
        surface = corpus.surface(mention)
        frequencies[surface] = frequencies.get(surface, 0) + 1
    return frequencies


@dataclass(frozen=True)
class Pattern:
    """A one-sided n-gram context.  LEFT patterns hold the tokens immediately
    preceding the entity slot, RIGHT patterns the tokens following it."""

    side: str
    tokens: tuple[str, ...]

    def __post_init__(self):
        if self.side not in (LEFT, RIGHT):
            raise ValueError(f"bad pattern side {self.side!r}")
        if not self.tokens:
            raise ValueError("pattern needs at least one token")


def render_pattern(pattern: Pattern) -> str:
    """Display form with the slot marker on the entity side."""
    body = " ".join(pattern.tokens)
    if pattern.side == LEFT:
        return f"{body} {SLOT}"
    return f"{SLOT} {body}"


def parse_rendered_pattern(rendered: str) -> Pattern:
    """Inverse of :func:`render_pattern`."""
    parts = tuple(rendered.split())
    if len(parts) >= 2 and parts[0] == SLOT:
        return Pattern(RIGHT, parts[1:])
    if len(parts) >= 2 and parts[-1] == SLOT:
        return Pattern(LEFT, parts[:-1])
    raise ValueError(f"not a rendered pattern: {rendered!r}")


@dataclass
class Vocabulary:
    """Entity and pattern index maps shared by all downstream modules.

    Ids are assigned in order of first occurrence in the corpus, which makes
    vocabulary construction deterministic.
    """

    entity_surfaces: list[str]
    entity_freq: np.ndarray  # int64, mention count per entity id
    patterns: list[Pattern]
    entity_index: dict[str, int] = field(default_factory=dict)
    pattern_index: dict[str, int] = field(default_factory=dict)
    pattern_rendered: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.entity_index:
            self.entity_index = {s: i for i, s in enumerate(self.entity_surfaces)}
        if not self.pattern_rendered:
            self.pattern_rendered = [render_pattern(p) for p in self.patterns]
        if not self.pattern_index:
            self.pattern_index = {r: i for i, r in enumerate(self.pattern_rendered)}

    @property
    def n_entities(self) -> int:
        return len(self.entity_surfaces)

    @property
    def n_patterns(self) -> int:
        return len(self.patterns)


class CooccurrenceMatrix:
    """Sparse entity x pattern match counts with marginals.

    Stores the raw count dict plus CSR/CSC index arrays for fast row and
    column access.  Immutable once built.
    """

    def __init__(self, counts: dict[tuple[int, int], int], n_entities: int, n_patterns: int):
        self.counts = dict(counts)
        self.n_entities = n_entities
        self.n_patterns = n_patterns

        self.entity_marginals = np.zeros(n_entities, dtype=np.int64)
        self.pattern_marginals = np.zeros(n_patterns, dtype=np.int64)
        for (e, p), c in self.counts.items():
            if c < 1:
                raise ValueError("stored co-occurrence counts must be >= 1")
            self.entity_marginals[e] += c
            self.pattern_marginals[p] += c
        self.total = int(self.entity_marginals.sum())

        items = sorted(self.counts.items())
        ents = np.array([e for (e, _), _ in items], dtype=np.int64)
        pats = np.array([p for (_, p), _ in items], dtype=np.int64)
        vals = np.array([c for _, c in items], dtype=np.int64)

        self.ent_indptr = np.zeros(n_entities + 1, dtype=np.int64)
        np.add.at(self.ent_indptr, ents + 1, 1)
        np.cumsum(self.ent_indptr, out=self.ent_indptr)
        self.ent_indices = pats
        self.ent_data = vals

        order = np.lexsort((ents, pats))
        self.pat_indptr = np.zeros(n_patterns + 1, dtype=np.int64)
        np.add.at(self.pat_indptr, pats + 1, 1)
        np.cumsum(self.pat_indptr, out=self.pat_indptr)
        self.pat_indices = ents[order]
        self.pat_data = vals[order]

    def count(self, entity: int, pattern: int) -> int:
        return self.counts.get((entity, pattern), 0)

    def patterns_of(self, entity: int) -> tuple[np.ndarray, np.ndarray]:
        """Pattern ids (sorted) and counts for one entity row."""
        lo, hi = self.ent_indptr[entity], self.ent_indptr[entity + 1]
        return self.ent_indices[lo:hi], self.ent_data[lo:hi]

    def entities_of(self, pattern: int) -> tuple[np.ndarray, np.ndarray]:
        """Entity ids (sorted) and counts for one pattern column."""
        lo, hi = self.pat_indptr[pattern], self.pat_indptr[pattern + 1]
        return self.pat_indices[lo:hi], self.pat_data[lo:hi]

    def row_sizes(self) -> np.ndarray:
        return np.diff(self.ent_indptr)

    def validate(self) -> None:
        total = sum(self.counts.values())
        if not (
            total == self.total
            and total == int(self.entity_marginals.sum())
            and total == int(self.pattern_marginals.sum())
        ):
            raise AssertionError("co-occurrence marginals out of sync with counts")


def mention_context_spans(
    sentence_length: int, start: int, end: int, window: int
) -> list[tuple[str, int, int]]:
    """Token spans [lo, hi) of every context n-gram emitted for one mention.

    LEFT spans of lengths 1..min(window, start) end at the mention start;
    RIGHT spans of lengths 1..min(window, room right) begin at the mention
    end.  Spans never cross sentence boundaries; tokens belonging to
    neighboring mentions are consumed literally.
    """
    spans = []
    for n in range(1, min(window, start) + 1):
        spans.append((LEFT, start - n, start))
    for n in range(1, min(window, sentence_length - end) + 1):
        spans.append((RIGHT, end, end + n))
    return spans


def generate_patterns(
    corpus: Corpus, window: int = DEFAULT_WINDOW, min_freq: int = 1
) -> tuple[Vocabulary, CooccurrenceMatrix]:
    """Build the entity/pattern vocabularies and the co-occurrence matrix.

    Every mention emits one count per context n-gram up to ``window`` tokens
    on each side.  With ``min_freq`` > 1, entities with fewer mentions and
    patterns with a smaller total match count are dropped and the surviving
    ids are reassigned (first-occurrence order preserved).
    """
    if window < 1:
        raise ValueError("window must be >= 1")

    entity_freq = extract_entities(corpus)
    entity_surfaces = list(entity_freq)
    entity_ids = {s: i for i, s in enumerate(entity_surfaces)}

    patterns: list[Pattern] = []
    pattern_ids: dict[Pattern, int] = {}
    counts: Counter[tuple[int, int]] = Counter()

    for mention in corpus.mentions:
        sentence = corpus.sentences[mention.sentence]
        entity = entity_ids[corpus.surface(mention)]
        for side, lo, hi in mention_context_spans(
            len(sentence), mention.start, mention.end, window
        ):
            pattern = Pattern(side, tuple(sentence[lo:hi]))
            pid = pattern_ids.get(pattern)
            if pid is None:
                pid = len(patterns)
                pattern_ids[pattern] = pid
                patterns.append(pattern)
            counts[(entity, pid)] += 1

    if min_freq > 1:
        pattern_totals = Counter()
        for (_, p), c in counts.items():
            pattern_totals[p] += c
        keep_entities = [i for i, s in enumerate(entity_surfaces) if entity_freq[s] >= min_freq]
        keep_patterns = [i for i in range(len(patterns)) if pattern_totals[i] >= min_freq]
        entity_remap = {old: new for new, old in enumerate(keep_entities)}
        pattern_remap = {old: new for new, old in enumerate(keep_patterns)}
        entity_surfaces = [entity_surfaces[i] for i in keep_entities]
        patterns = [patterns[i] for i in keep_patterns]
        counts = Counter(
            {
                (entity_remap[e], pattern_remap[p]): c
                for (e, p), c in counts.items()
                if e in entity_remap and p in pattern_remap
            }
        )

    vocabulary = Vocabulary(
        entity_surfaces=entity_surfaces,
        entity_freq=np.array([entity_freq[s] for s in entity_surfaces], dtype=np.int64),
        patterns=patterns,
    )
    matrix = CooccurrenceMatrix(counts, vocabulary.n_entities, vocabulary.n_patterns)
    return vocabulary, matrix
