"""Entity-level scoring: mention extraction and exact-match P/R/F1."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DataError


@dataclass(frozen=True)
class MentionSpan:
    """A typed mention over the token interval [start, end)."""

    start: int
    end: int
    type: str

    def __post_init__(self):
        if not self.start < self.end:
            raise DataError(f"empty mention span ({self.start}, {self.end})")


def extract_mentions(labels) -> list[MentionSpan]:
    """Read maximal B-t (I-t)* runs out of a BIO sequence.

    An I-t without a preceding B-t/I-t of the same type starts a new
    mention (conlleval-style repair). Any label that is not B-/I- closes
    the open mention.
    """
    labels = list(labels)
    mentions: list[MentionSpan] = []
    open_start = None
    open_type = None

    def close(end):
        nonlocal open_start, open_type
        if open_start is not None:
            mentions.append(MentionSpan(open_start, end, open_type))
            open_start, open_type = None, None

    for i, label in enumerate(labels):
        if label.startswith("B-"):
            close(i)
            open_start, open_type = i, label[2:]
        elif label.startswith("I-"):
            t = label[2:]
            if open_type != t:
                close(i)
                open_start, open_type = i, t
        else:
            close(i)
    close(len(labels))
    return mentions


def typed_mentions(weak_labels, skip_types=("NT",)) -> list[MentionSpan]:
    """Mentions recoverable from weak labels, dropping type-less NT spans."""
    return [m for m in extract_mentions(weak_labels) if m.type not in skip_types]


def render_bio(mentions, length: int) -> list[str]:
    """Inverse of extract_mentions for well-formed, non-overlapping span lists."""
    labels = ["O"] * length
    for m in sorted(mentions, key=lambda m: m.start):
        if m.end > length:
            raise DataError(f"mention {m} exceeds sentence length {length}")
        labels[m.start] = f"B-{m.type}"
        for i in range(m.start + 1, m.end):
            labels[i] = f"I-{m.type}"
    return labels


@dataclass
class TypeScore:
    precision: float
    recall: float
    f1: float
    n_gold: int
    n_predicted: int
    n_correct: int


@dataclass
class EvalResult:
    precision: float
    recall: float
    f1: float
    n_gold: int
    n_predicted: int
    n_correct: int
    per_type: dict[str, TypeScore] = field(default_factory=dict)

    @staticmethod
    def _prf(correct: int, predicted: int, gold: int) -> tuple[float, float, float]:
        p = correct / predicted if predicted else 0.0
        r = correct / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return p, r, f

    @classmethod
    def from_counts(cls, correct: int, predicted: int, gold: int,
                    per_type_counts: dict[str, tuple[int, int, int]]) -> "EvalResult":
        p, r, f = cls._prf(correct, predicted, gold)
        per_type = {}
        for t, (c, pr, g) in sorted(per_type_counts.items()):
            tp, tr, tf = cls._prf(c, pr, g)
            per_type[t] = TypeScore(tp, tr, tf, g, pr, c)
        return cls(p, r, f, gold, predicted, correct, per_type)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "mentions": {
                "gold": self.n_gold,
                "predicted": self.n_predicted,
                "correct": self.n_correct,
            },
            "per_type": {
                t: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "gold": s.n_gold,
                    "predicted": s.n_predicted,
                    "correct": s.n_correct,
                }
                for t, s in self.per_type.items()
            },
        }


def evaluate(gold_sentences, predicted_sentences) -> EvalResult:
    """Exact-match mention scoring over aligned label sequences.

    A predicted mention counts iff its (start, end, type) triple appears in
    the same sentence's gold mentions.
    """
    gold_sentences = list(gold_sentences)
    predicted_sentences = list(predicted_sentences)
    if len(gold_sentences) != len(predicted_sentences):
        raise DataError(
            f"{len(gold_sentences)} gold vs {len(predicted_sentences)} predicted sentences"
        )
    total_correct = total_pred = total_gold = 0
    per_type: dict[str, list[int]] = {}
    for idx, (gold, pred) in enumerate(zip(gold_sentences, predicted_sentences)):
        if len(gold) != len(pred):
            raise DataError(f"sentence {idx}: {len(gold)} gold vs {len(pred)} predicted tokens")
        gold_set = set(extract_mentions(gold))
        pred_set = set(extract_mentions(pred))
        correct = gold_set & pred_set
        total_correct += len(correct)
        total_pred += len(pred_set)
        total_gold += len(gold_set)
        for m in gold_set:
            per_type.setdefault(m.type, [0, 0, 0])[2] += 1
        for m in pred_set:
            per_type.setdefault(m.type, [0, 0, 0])[1] += 1
        for m in correct:
            per_type.setdefault(m.type, [0, 0, 0])[0] += 1
    counts = {t: (c[0], c[1], c[2]) for t, c in per_type.items()}
    return EvalResult.from_counts(total_correct, total_pred, total_gold, counts)
