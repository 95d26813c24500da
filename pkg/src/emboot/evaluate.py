"""Evaluation: precision-throughput curves and decision-list accuracy.

Throughput counts the entities promoted so far (seeds excluded: they are
given, not classified); precision is the fraction promoted into their gold
category.  Decision-list evaluation reports accuracy over non-abstained
entities, the abstain rate, and the histogram of how many patterns fired
per prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import CooccurrenceMatrix, Corpus
from .interp import ABSTAIN, DecisionList, classify


@dataclass
class CurvePoint:
    epoch: int
    throughput: int  # cumulative promoted entities, seeds excluded
    precision: float  # 1.0 by convention at zero throughput


def gold_entity_labels(corpus: Corpus) -> dict[str, str]:
    """Majority gold label per entity surface (ties keep the first seen)."""
    votes: dict[str, dict[str, int]] = {}
    order: dict[str, dict[str, int]] = {}
    for m in corpus.mentions:
        surface = corpus.surface(m)
        votes.setdefault(surface, {})
        order.setdefault(surface, {})
        if m.label not in votes[surface]:
            order[surface][m.label] = len(order[surface])
        votes[surface][m.label] = votes[surface].get(m.label, 0) + 1
    return {
        surface: max(counts, key=lambda lab: (counts[lab], -order[surface][lab]))
        for surface, counts in votes.items()
    }


def precision_throughput(trace, gold: dict[str, str]) -> list[CurvePoint]:
    """Cumulative curve over a trace's epoch records."""
    points = []
    promoted = 0
    correct = 0
    for record in trace.records:
        if record.epoch > 0:
            for category, promotions in record.entity_promotions.items():
                for surface, _ in promotions:
                    if surface not in gold:
                        raise ValueError(
                            f"promoted entity {surface!r} has no gold label"
                        )
                    promoted += 1
                    if gold[surface] == category:
                        correct += 1
        precision = correct / promoted if promoted else 1.0
        points.append(CurvePoint(record.epoch, promoted, precision))
    return points


def final_precision(points: list[CurvePoint]) -> float:
    return points[-1].precision


@dataclass
class DecisionListEvaluation:
    n_entities: int
    n_predicted: int
    n_correct: int
    abstain_rate: float
    accuracy: float | None  # over non-abstained; None when nothing predicted
    histogram: dict[int, int]  # contributing-pattern count -> predictions

    def fraction_with_at_most(self, k: int) -> float:
        if self.n_predicted == 0:
            return 0.0
        return sum(n for c, n in self.histogram.items() if c <= k) / self.n_predicted


def evaluate_decision_list(
    dl: DecisionList,
    entity_ids: list[int],
    gold: dict[str, str],
    cooc: CooccurrenceMatrix,
    vocab,
) -> DecisionListEvaluation:
    """Classify every entity and summarize accuracy, abstentions, and the
    per-prediction contributing-pattern histogram."""
    n_predicted = 0
    n_correct = 0
    histogram: dict[int, int] = {}
    for e in entity_ids:
        result = classify(e, dl, cooc)
        if result.label == ABSTAIN:
            continue
        n_predicted += 1
        histogram[result.contributing_patterns] = (
            histogram.get(result.contributing_patterns, 0) + 1
        )
        if gold.get(vocab.entity_surfaces[e]) == result.label:
            n_correct += 1
    n = len(entity_ids)
    return DecisionListEvaluation(
        n_entities=n,
        n_predicted=n_predicted,
        n_correct=n_correct,
        abstain_rate=(n - n_predicted) / n if n else 1.0,
        accuracy=n_correct / n_predicted if n_predicted else None,
        histogram=dict(sorted(histogram.items())),
    )
