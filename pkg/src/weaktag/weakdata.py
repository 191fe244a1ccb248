"""Weak label induction, sentence scoring, and corpus splitting.

Anchored sentences become weakly labeled sentences: anchor spans receive
B-t/I-t labels for the induced type (or B-NT/I-NT when no type can be
induced) and every other token is UN. Each sentence is then scored for
annotation confidence (how trustworthy its labels are) and coverage (what
fraction of tokens carry a typed label), and the corpus is partitioned
into a high-quality set and a noisy set by thresholds on those scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DataError
from .labels import B_NO_TYPE, I_NO_TYPE, NO_TYPE, UNLABELED, TypeSystem
from .taxonomy import EntityCatalog, GammaMapping, TaxonomyGraph, induce_entity_type


@dataclass(frozen=True)
class Anchor:
    """A linked mention span: token interval [start, end) plus an entity id."""

    start: int
    end: int
    entity: str


@dataclass(frozen=True)
class AnchoredSentence:
    tokens: tuple[str, ...]
    anchors: tuple[Anchor, ...]
    doc_id: str = ""

    def __post_init__(self):
        n = len(self.tokens)
        occupied = [False] * n
        for a in self.anchors:
            if not (0 <= a.start < a.end <= n):
                raise DataError(f"anchor span ({a.start}, {a.end}) out of bounds for {n} tokens")
            for i in range(a.start, a.end):
                if occupied[i]:
                    raise DataError(f"overlapping anchors at token {i}")
                occupied[i] = True

    def span_text(self, anchor: Anchor) -> str:
        return " ".join(self.tokens[anchor.start : anchor.end])


@dataclass
class WeaklyLabeledSentence:
    """A sentence with one weak label per token plus its quality scores.

    ``anchor_types``/``anchor_probs`` retain, per anchor, the induced type
    (or NT) and the induction probability, which the confidence score needs.
    """

    tokens: tuple[str, ...]
    weak_labels: tuple[str, ...]
    anchors: tuple[Anchor, ...]
    anchor_types: tuple[str, ...]
    anchor_probs: tuple[float, ...]
    doc_id: str = ""
    sent_id: int = 0
    quality: float | None = None
    coverage: float | None = None

    def __post_init__(self):
        if len(self.weak_labels) != len(self.tokens):
            raise DataError(
                f"{len(self.weak_labels)} labels for {len(self.tokens)} tokens"
            )
        if len(self.anchor_types) != len(self.anchors) or len(self.anchor_probs) != len(self.anchors):
            raise DataError("anchor annotations do not align with anchors")

    def span_text(self, anchor: Anchor) -> str:
        return " ".join(self.tokens[anchor.start : anchor.end])

    def unlabeled_positions(self) -> tuple[int, ...]:
        return tuple(i for i, lab in enumerate(self.weak_labels) if lab == UNLABELED)


@dataclass
class InductionWarnings:
    """Counters for recoverable induction problems."""

    missing_entities: int = 0


def induce_sentence_labels(
    sentence: AnchoredSentence,
    catalog: EntityCatalog,
    taxonomy: TaxonomyGraph,
    gamma: GammaMapping,
    type_system: TypeSystem,
    warnings: InductionWarnings | None = None,
    sent_id: int = 0,
) -> WeaklyLabeledSentence:
    """Assign a weak label to every token of one anchored sentence.

    Tokens outside anchors become UN. Within an anchor the induced type t
    yields B-t then I-t...; when the entity has no usable categories the
    span becomes B-NT/I-NT. Entities missing from the catalog are treated
    as having an empty category set and counted in ``warnings``.
    """
    labels = [UNLABELED] * len(sentence.tokens)
    anchor_types: list[str] = []
    anchor_probs: list[float] = []
    for anchor in sentence.anchors:
        cats = catalog.category_set(anchor.entity)
        if cats is None:
            if warnings is not None:
                warnings.missing_entities += 1
            cats = frozenset()
        induced_type, prob = induce_entity_type(cats, taxonomy, gamma, type_system)
        anchor_types.append(induced_type)
        anchor_probs.append(prob)
        if induced_type == NO_TYPE:
            begin, inside = B_NO_TYPE, I_NO_TYPE
        else:
            begin, inside = type_system.begin(induced_type), type_system.inside(induced_type)
        labels[anchor.start] = begin
        for i in range(anchor.start + 1, anchor.end):
            labels[i] = inside
    return WeaklyLabeledSentence(
        tokens=sentence.tokens,
        weak_labels=tuple(labels),
        anchors=sentence.anchors,
        anchor_types=tuple(anchor_types),
        anchor_probs=tuple(anchor_probs),
        doc_id=sentence.doc_id,
        sent_id=sent_id,
    )


def induce_corpus(
    corpus,
    catalog: EntityCatalog,
    taxonomy: TaxonomyGraph,
    gamma: GammaMapping,
    type_system: TypeSystem,
) -> tuple[list[WeaklyLabeledSentence], InductionWarnings]:
    warnings = InductionWarnings()
    sentences = [
        induce_sentence_labels(s, catalog, taxonomy, gamma, type_system, warnings, sent_id=i)
        for i, s in enumerate(corpus)
    ]
    return sentences, warnings


@dataclass
class LinkPrior:
    """Relative frequency of each induced type per anchored span string."""

    _probs: dict[str, dict[str, float]] = field(default_factory=dict)

    def probability(self, span_text: str, type_name: str) -> float:
        return self._probs.get(span_text, {}).get(type_name, 0.0)

    def distribution(self, span_text: str) -> dict[str, float]:
        return dict(self._probs.get(span_text, {}))


def estimate_link_prior(sentences: list[WeaklyLabeledSentence]) -> LinkPrior:
    """Count induced type assignments per span string over all anchors and normalize.

    NT assignments participate in the counts, so the distribution reflects
    every observed link of a span, not just the typed ones.
    """
    counts: dict[str, dict[str, int]] = {}
    for s in sentences:
        for anchor, induced_type in zip(s.anchors, s.anchor_types):
            span = s.span_text(anchor)
            per_span = counts.setdefault(span, {})
            per_span[induced_type] = per_span.get(induced_type, 0) + 1
    probs: dict[str, dict[str, float]] = {}
    for span, per_span in counts.items():
        total = sum(per_span.values())
        probs[span] = {t: c / total for t, c in per_span.items()}
    return LinkPrior(probs)


def annotation_confidence(sentence: WeaklyLabeledSentence, prior: LinkPrior) -> float:
    """Average over tokens of (induction probability x link prior); typed anchors only.

    Every token of a typed anchor contributes the product of its anchor's
    induction probability and the span's link prior; UN and NT tokens
    contribute zero.
    """
    if not sentence.tokens:
        raise DataError("cannot score an empty sentence")
    total = 0.0
    for anchor, induced_type, prob in zip(
        sentence.anchors, sentence.anchor_types, sentence.anchor_probs
    ):
        if induced_type == NO_TYPE:
            continue
        span = sentence.span_text(anchor)
        total += (anchor.end - anchor.start) * prob * prior.probability(span, induced_type)
    return total / len(sentence.tokens)


def annotation_coverage(sentence: WeaklyLabeledSentence) -> float:
    """Fraction of tokens carrying a typed label. NT and UN do not count."""
    if not sentence.tokens:
        raise DataError("cannot score an empty sentence")
    labeled = sum(1 for lab in sentence.weak_labels if lab not in (UNLABELED, B_NO_TYPE, I_NO_TYPE))
    return labeled / len(sentence.tokens)


def score_sentences(sentences: list[WeaklyLabeledSentence], prior: LinkPrior) -> None:
    """Fill in quality and coverage for every sentence, in place."""
    for s in sentences:
        s.quality = annotation_confidence(s, prior)
        s.coverage = annotation_coverage(s)


@dataclass
class SplitCorpus:
    high_quality: list[WeaklyLabeledSentence]
    noisy: list[WeaklyLabeledSentence]
    theta_q: float
    theta_n: float


def split_corpus(
    sentences: list[WeaklyLabeledSentence], theta_q: float, theta_n: float
) -> SplitCorpus:
    """Partition scored sentences into high-quality and noisy sets.

    A sentence is high-quality iff quality >= theta_q and coverage >= theta_n.
    """
    for name, theta in (("theta_q", theta_q), ("theta_n", theta_n)):
        if not 0.0 <= theta <= 1.0:
            raise ConfigurationError(f"{name} must lie in [0, 1], got {theta}")
    high, noisy = [], []
    for s in sentences:
        if s.quality is None or s.coverage is None:
            raise DataError(f"sentence {s.sent_id} has not been scored")
        if s.quality >= theta_q and s.coverage >= theta_n:
            high.append(s)
        else:
            noisy.append(s)
    return SplitCorpus(high_quality=high, noisy=noisy, theta_q=theta_q, theta_n=theta_n)


@dataclass
class CorpusStatistics:
    """Per-word corpus statistics feeding the non-entity sampling features.

    tf and df are max-normalized to [0, 1]; entity_ratio is the fraction of
    a word's occurrences that fall inside anchor spans.
    """

    _entity_ratio: dict[str, float]
    _tf: dict[str, float]
    _df: dict[str, float]
    sentence_count: int
    token_count: int

    def entity_ratio(self, word: str) -> float:
        return self._entity_ratio.get(word, 0.0)

    def tf(self, word: str) -> float:
        return self._tf.get(word, 0.0)

    def df(self, word: str) -> float:
        return self._df.get(word, 0.0)


def compute_corpus_statistics(sentences) -> CorpusStatistics:
    """Count term/document frequencies and in-anchor occurrence ratios.

    Accepts any sentence objects exposing tokens, anchors, and doc_id.
    Documents are identified by doc_id; sentences with an empty doc_id each
    count as their own document.
    """
    sentences = list(sentences)
    term_counts: dict[str, int] = {}
    entity_counts: dict[str, int] = {}
    doc_words: dict[str, set[str]] = {}
    token_count = 0
    for idx, s in enumerate(sentences):
        doc_key = s.doc_id if s.doc_id else f"__sentence_{idx}"
        words_here = doc_words.setdefault(doc_key, set())
        inside = [False] * len(s.tokens)
        for a in s.anchors:
            for i in range(a.start, a.end):
                inside[i] = True
        for i, w in enumerate(s.tokens):
            term_counts[w] = term_counts.get(w, 0) + 1
            token_count += 1
            if inside[i]:
                entity_counts[w] = entity_counts.get(w, 0) + 1
            words_here.add(w)
    doc_counts: dict[str, int] = {}
    for words in doc_words.values():
        for w in words:
            doc_counts[w] = doc_counts.get(w, 0) + 1
    max_tf = max(term_counts.values(), default=0)
    max_df = max(doc_counts.values(), default=0)
    return CorpusStatistics(
        _entity_ratio={w: entity_counts.get(w, 0) / c for w, c in term_counts.items()},
        _tf={w: c / max_tf for w, c in term_counts.items()},
        _df={w: c / max_df for w, c in doc_counts.items()},
        sentence_count=len(sentences),
        token_count=token_count,
    )


TEST_COVERAGE_FLOOR = 0.3  # test sentences must exceed this coverage


@dataclass
class DatasetPartition:
    """The train/validation/test split of a scored, partitioned corpus.

    ``train_noisy`` is usable for classification pretraining only; it never
    contributes to validation or test.
    """

    train_hq: list[WeaklyLabeledSentence]
    train_noisy: list[WeaklyLabeledSentence]
    validation: list[WeaklyLabeledSentence]
    test: list[WeaklyLabeledSentence]
    seed: int = 0

    def partition_of(self) -> dict[int, str]:
        out: dict[int, str] = {}
        for name, group in (
            ("train", self.train_hq),
            ("train-noisy", self.train_noisy),
            ("validation", self.validation),
            ("test", self.test),
        ):
            for s in group:
                out[s.sent_id] = name
        return out


def partition_datasets(split: SplitCorpus, seed: int = 0) -> DatasetPartition:
    """Carve test and validation sets out of the high-quality data.

    Test takes the top 25% by quality among high-quality sentences whose
    coverage exceeds 0.3; validation is a seeded random 25% of the
    remaining high-quality sentences; everything else trains (noisy data
    is kept separately for the classification stage).
    """
    hq = split.high_quality
    if not hq:
        raise DataError(
            "no high-quality sentences; relax theta_q/theta_n to admit more data"
        )
    eligible = [s for s in hq if (s.coverage or 0.0) > TEST_COVERAGE_FLOOR]
    order = sorted(range(len(eligible)), key=lambda i: (-(eligible[i].quality or 0.0), i))
    n_test = len(eligible) // 4
    test_ids = {eligible[i].sent_id for i in order[:n_test]}
    test = [s for s in hq if s.sent_id in test_ids]

    remaining = [s for s in hq if s.sent_id not in test_ids]
    rng = np.random.default_rng(seed)
    n_val = len(remaining) // 4
    val_positions = set(rng.permutation(len(remaining))[:n_val].tolist())
    validation = [s for i, s in enumerate(remaining) if i in val_positions]
    train_hq = [s for i, s in enumerate(remaining) if i not in val_positions]
    return DatasetPartition(
        train_hq=train_hq,
        train_noisy=list(split.noisy),
        validation=validation,
        test=test,
        seed=seed,
    )
