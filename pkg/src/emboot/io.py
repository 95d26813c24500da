"""File formats for corpora, seeds, embeddings, and run artifacts.

All emitted decimals use 6 fractional digits so that repeated runs diff
cleanly.  A run directory holds ``trace.jsonl`` (one JSON object per epoch
with that epoch's promotions), ``metrics.csv`` (system, epoch, throughput,
precision), ``embeddings.tsv`` (``E:<surface>`` / ``P:<pattern>`` rows), and
``decision_list.tsv`` (rendered pattern plus one probability column per
category).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bootstrap import PoolState, Trace
from .corpus import Corpus, Vocabulary, detect_format, parse_conll
from .embed import EmbeddingTable, PretrainedEmbeddings
from .evaluate import CurvePoint, DecisionListEvaluation
from .interp import DecisionEntry, DecisionList
from .synth import SynthSpec

DECIMALS = 6


def _fmt(value: float) -> str:
    return f"{value:.{DECIMALS}f}"


# -- corpora ----------------------------------------------------------------


def load_corpus(path, fmt: str = "auto") -> Corpus:
    text = Path(path).read_text(encoding="utf-8")
    if fmt == "auto":
        fmt = detect_format(text)
    return parse_conll(text, fmt)


def write_conll(corpus: Corpus, path) -> None:
    """Two-column (token, BIO tag) serialization with gold labels."""
    tags_by_sentence = [["O"] * len(s) for s in corpus.sentences]
    for m in corpus.mentions:
        tags = tags_by_sentence[m.sentence]
        tags[m.start] = f"B-{m.label}"
        for i in range(m.start + 1, m.end):
            tags[i] = f"I-{m.label}"
    with open(path, "w", encoding="utf-8") as handle:
        for tokens, tags in zip(corpus.sentences, tags_by_sentence):
            for token, tag in zip(tokens, tags):
                handle.write(f"{token} {tag}\n")
            handle.write("\n")


# -- seeds and synthetic specs ----------------------------------------------


def load_seeds(path) -> dict[str, list[str]]:
    seeds = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(seeds, dict) or not all(
        isinstance(v, list) for v in seeds.values()
    ):
        raise ValueError(f"{path}: seeds file must map category -> list of surfaces")
    return seeds


def write_seeds(seeds: dict[str, list[str]], path) -> None:
    Path(path).write_text(json.dumps(seeds, indent=2) + "\n", encoding="utf-8")


def load_synth_spec(path) -> SynthSpec:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    known = SynthSpec.__dataclass_fields__
    unknown = set(data) - set(known)
    if unknown:
        raise ValueError(f"{path}: unknown synthetic-spec fields {sorted(unknown)}")
    return SynthSpec(**data)


def write_pattern_truth(truth: dict[str, str], path) -> None:
    Path(path).write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n", "utf-8")


# -- pretrained word vectors -------------------------------------------------


def load_pretrained(path) -> PretrainedEmbeddings:
    """TSV: word followed by the vector components, one word per row."""
    words: list[str] = []
    rows: list[list[float]] = []
    width = None
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise ValueError(f"{path}:{line_number}: expected word + components")
            if width is None:
                width = len(parts) - 1
            elif len(parts) - 1 != width:
                raise ValueError(f"{path}:{line_number}: inconsistent vector width")
            words.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if not words:
        raise ValueError(f"{path}: no vectors found")
    return PretrainedEmbeddings(words, np.array(rows))


def write_pretrained(pretrained: PretrainedEmbeddings, path) -> None:
    words = sorted(pretrained.index, key=pretrained.index.get)
    with open(path, "w", encoding="utf-8") as handle:
        for word in words:
            row = pretrained.matrix[pretrained.index[word]]
            handle.write(word + "\t" + "\t".join(_fmt(x) for x in row) + "\n")


# -- embedding tables ---------------------------------------------------------


def write_embeddings_tsv(table: EmbeddingTable, vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for e, surface in enumerate(vocab.entity_surfaces):
            row = table.entity_vectors[e]
            handle.write(f"E:{surface}\t" + "\t".join(_fmt(x) for x in row) + "\n")
        for p, rendered in enumerate(vocab.pattern_rendered):
            row = table.pattern_vectors[p]
            handle.write(f"P:{rendered}\t" + "\t".join(_fmt(x) for x in row) + "\n")


def load_embeddings_tsv(path, vocab: Vocabulary) -> EmbeddingTable:
    """Rebuild a table aligned to ``vocab`` from an embeddings TSV."""
    entities: dict[str, np.ndarray] = {}
    patterns: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            key, *components = line.split("\t")
            vector = np.array([float(x) for x in components])
            if key.startswith("E:"):
                entities[key[2:]] = vector
            elif key.startswith("P:"):
                patterns[key[2:]] = vector
            else:
                raise ValueError(f"{path}: row key {key!r} lacks an E:/P: prefix")
    dim = len(next(iter(entities.values()), next(iter(patterns.values()), np.zeros(1))))
    vectors = np.zeros((vocab.n_entities + vocab.n_patterns, dim))
    for e, surface in enumerate(vocab.entity_surfaces):
        if surface not in entities:
            raise ValueError(f"{path}: no vector for entity {surface!r}")
        vectors[e] = entities[surface]
    for p, rendered in enumerate(vocab.pattern_rendered):
        if rendered not in patterns:
            raise ValueError(f"{path}: no vector for pattern {rendered!r}")
        vectors[vocab.n_entities + p] = patterns[rendered]
    return EmbeddingTable(vectors, vocab.n_entities, vocab.n_patterns)


# -- decision lists ------------------------------------------------------------


def write_decision_list_tsv(dl: DecisionList, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("pattern\t" + "\t".join(dl.categories) + "\n")
        for entry in dl.entries:
            handle.write(
                entry.rendered
                + "\t"
                + "\t".join(_fmt(p) for p in entry.probabilities)
                + "\n"
            )


def read_decision_list_tsv(path) -> tuple[list[str], list[tuple[str, np.ndarray]]]:
    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty decision list file")
    header = lines[0].split("\t")
    if header[0] != "pattern":
        raise ValueError(f"{path}: first column must be 'pattern'")
    categories = header[1:]
    rows = []
    for line in lines[1:]:
        parts = line.split("\t")
        rows.append((parts[0], np.array([float(x) for x in parts[1:]])))
    return categories, rows


def decision_list_from_files(dl_path, trace: "TraceData", vocab: Vocabulary) -> DecisionList:
    """Recombine a decision-list TSV with the pool provenance in a trace."""
    categories, rows = read_decision_list_tsv(dl_path)
    pools, final_epoch = pools_from_trace(trace, vocab)
    pool_of = {
        p: category for category in pools.categories for p in pools.pattern_ids(category)
    }
    entries = []
    for rendered, probabilities in rows:
        pid = vocab.pattern_index.get(rendered)
        if pid is None:
            raise ValueError(f"decision-list pattern {rendered!r} not in this corpus")
        if pid not in pool_of:
            raise ValueError(f"decision-list pattern {rendered!r} absent from the trace pools")
        entries.append(DecisionEntry(pid, rendered, pool_of[pid], probabilities))
    return DecisionList(list(categories), entries, final_epoch)


# -- traces ---------------------------------------------------------------------


@dataclass
class TraceRecord:
    epoch: int
    entity_promotions: dict[str, list[tuple[str, float | None]]]
    pattern_promotions: dict[str, list[tuple[str, float]]]


@dataclass
class TraceData:
    system: str
    categories: list[str]
    records: list[TraceRecord]


def write_trace_jsonl(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in trace.records:
            line = {
                "system": trace.system,
                "epoch": record.epoch,
                "promoted": {
                    category: {
                        "entities": [
                            [surface, None if score is None else round(score, DECIMALS)]
                            for surface, score in record.entity_promotions[category]
                        ],
                        "patterns": [
                            [rendered, round(score, DECIMALS)]
                            for rendered, score in record.pattern_promotions[category]
                        ],
                    }
                    for category in trace.categories
                },
            }
            handle.write(json.dumps(line) + "\n")


def read_trace(path) -> TraceData:
    records = []
    system = None
    categories: list[str] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            data = json.loads(line)
            if system is None:
                system = data["system"]
                categories = list(data["promoted"])
            records.append(
                TraceRecord(
                    epoch=int(data["epoch"]),
                    entity_promotions={
                        c: [(s, score) for s, score in block["entities"]]
                        for c, block in data["promoted"].items()
                    },
                    pattern_promotions={
                        c: [(r, score) for r, score in block["patterns"]]
                        for c, block in data["promoted"].items()
                    },
                )
            )
    if system is None:
        raise ValueError(f"{path}: empty trace")
    return TraceData(system, categories, records)


def pools_from_trace(trace: TraceData, vocab: Vocabulary) -> tuple[PoolState, int]:
    """Rebuild the final pools from a trace's per-epoch promotions."""
    categories = tuple(trace.categories)
    entities = {c: [] for c in categories}
    patterns = {c: [] for c in categories}
    final_epoch = 0
    for record in trace.records:
        final_epoch = max(final_epoch, record.epoch)
        for category in categories:
            for surface, _ in record.entity_promotions[category]:
                if surface not in vocab.entity_index:
                    raise ValueError(f"trace entity {surface!r} not in this corpus")
                entities[category].append((vocab.entity_index[surface], record.epoch))
            for rendered, _ in record.pattern_promotions[category]:
                if rendered not in vocab.pattern_index:
                    raise ValueError(f"trace pattern {rendered!r} not in this corpus")
                patterns[category].append((vocab.pattern_index[rendered], record.epoch))
    pools = PoolState(categories, entities, patterns)
    pools.validate()
    return pools, final_epoch


# -- metrics ----------------------------------------------------------------------


def write_metrics_csv(curves: dict[str, list[CurvePoint]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["system", "epoch", "throughput", "precision"])
        for system, points in curves.items():
            for point in points:
                writer.writerow(
                    [system, point.epoch, point.throughput, _fmt(point.precision)]
                )


def read_metrics_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as handle:
        return [
            {
                "system": row["system"],
                "epoch": int(row["epoch"]),
                "throughput": int(row["throughput"]),
                "precision": float(row["precision"]),
            }
            for row in csv.DictReader(handle)
        ]


def write_dl_evaluation(evaluation: DecisionListEvaluation, path) -> None:
    payload = {
        "n_entities": evaluation.n_entities,
        "n_predicted": evaluation.n_predicted,
        "n_correct": evaluation.n_correct,
        "abstain_rate": round(evaluation.abstain_rate, DECIMALS),
        "accuracy": None
        if evaluation.accuracy is None
        else round(evaluation.accuracy, DECIMALS),
        "histogram": {str(k): v for k, v in evaluation.histogram.items()},
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_predictions_tsv(rows, categories: list[str], path) -> None:
    """Rows: (surface, label, contributing_patterns, scores array)."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(
            "entity\tlabel\tmatching_patterns\t"
            + "\t".join(f"score_{c}" for c in categories)
            + "\n"
        )
        for surface, label, n_matching, scores in rows:
            handle.write(
                f"{surface}\t{label}\t{n_matching}\t"
                + "\t".join(_fmt(s) for s in scores)
                + "\n"
            )
