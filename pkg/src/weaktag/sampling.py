"""Non-entity sampling: stochastically pin unlabeled words to O.

Each UN position gets an independent Bernoulli draw with probability
(alpha/3) * (l1*f1 + l2*(1-f2) + l3*f3), where f1 says whether the token
adjoins an anchored mention, f2 is the word's in-anchor occurrence ratio,
and f3 its term frequency times document frequency. The draw streams are
keyed per sentence so corpora can be sampled in any order or in parallel
without changing the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .labels import UNLABELED
from .weakdata import CorpusStatistics, WeaklyLabeledSentence


@dataclass(frozen=True)
class SamplingConfig:
    alpha: float = 0.9
    lambda1: float = 0.0
    lambda2: float = 0.9
    lambda3: float = 0.1
    seed: int = 0
    resample_each_epoch: bool = False

    def __post_init__(self):
        for name in ("alpha", "lambda1", "lambda2", "lambda3"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")
        if self.seed < 0:
            raise ConfigurationError("sampling seed must be non-negative")


def feature_scores(
    position: int,
    sentence: WeaklyLabeledSentence,
    stats: CorpusStatistics,
) -> tuple[float, float, float]:
    """(adjoins-an-entity, in-anchor ratio, tf*df) for one UN position."""
    if sentence.weak_labels[position] != UNLABELED:
        raise ContractViolation(
            f"position {position} holds {sentence.weak_labels[position]!r}, not UN"
        )
    f1 = 0.0
    for a in sentence.anchors:
        if a.start <= position - 1 < a.end or a.start <= position + 1 < a.end:
            f1 = 1.0
            break
    word = sentence.tokens[position]
    f2 = stats.entity_ratio(word)
    f3 = stats.tf(word) * stats.df(word)
    return f1, f2, f3


def sample_probability(f1: float, f2: float, f3: float, config: SamplingConfig) -> float:
    return (config.alpha / 3.0) * (
        config.lambda1 * f1 + config.lambda2 * (1.0 - f2) + config.lambda3 * f3
    )


def apply_sampling(
    sentence: WeaklyLabeledSentence,
    stats: CorpusStatistics,
    config: SamplingConfig,
    epoch: int = 0,
) -> frozenset[int]:
    """Positions pinned to O for this sentence (and epoch, when resampling).

    The RNG stream is keyed by (seed, sentence id, epoch) so the same
    configuration always reproduces the same sample set.
    """
    epoch_key = epoch if config.resample_each_epoch else 0
    rng = np.random.default_rng((config.seed, sentence.sent_id, epoch_key))
    sampled = []
    for i in sentence.unlabeled_positions():
        p = sample_probability(*feature_scores(i, sentence, stats), config)
        if rng.random() < p:
            sampled.append(i)
    return frozenset(sampled)
