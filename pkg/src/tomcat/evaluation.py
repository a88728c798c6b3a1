"""Topic coherence via sliding-window NPMI, classification accuracy, and a
synthetic corpus generator with known topic supports for end-to-end checks."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .corpus import RawCorpus, Vocabulary
from .networks import DirichletPrior, Network, sample_prior, top_words, topic_word_distributions


class EvaluationError(ValueError):
    """Unusable evaluation input (empty reference, too few words, ...)."""


@dataclass
class CoocStats:
    """Boolean co-occurrence counts over sliding-window virtual documents."""

    window_size: int
    virtual_doc_count: int
    word_doc_counts: dict[int, int]
    pair_doc_counts: dict[tuple[int, int], int]


@dataclass
class TopicReport:
    topic_id: int
    word_distribution: np.ndarray
    top_words: list[str]
    npmi: float


def build_cooc(reference_docs: list[list[str]], vocab: Vocabulary,
               window_size: int) -> CoocStats:
    """Slide a width-window boolean window (stride 1) over each document.

    Every window position is one virtual document; words and unordered word
    pairs are counted at most once per window. Windows shorter than the
    document still yield one virtual document. Tokens outside the vocabulary
    occupy window slots but are never counted.
    """
    if window_size < 2:
        raise EvaluationError("window_size must be >= 2")
    if not reference_docs:
        raise EvaluationError("empty reference corpus")
    word_counts: Counter = Counter()
    pair_counts: Counter = Counter()
    virtual_docs = 0
    for doc in reference_docs:
        ids = [vocab.index.get(tok) for tok in doc]
        positions = max(1, len(ids) - window_size + 1)
        virtual_docs += positions
        for start in range(positions):
            present = sorted({w for w in ids[start:start + window_size] if w is not None})
            word_counts.update(present)
            pair_counts.update(combinations(present, 2))
    return CoocStats(window_size=window_size, virtual_doc_count=virtual_docs,
                     word_doc_counts=dict(word_counts), pair_doc_counts=dict(pair_counts))


_NPMI_EPS = 1e-12


def npmi_pair(stats: CoocStats, wi: int, wj: int) -> float:
    """Normalized pointwise mutual information of one unordered word pair.

    Returns -1 when either marginal is zero; otherwise
    log((P(i,j)+eps) / (P(i) P(j))) / -log(P(i,j)+eps) with eps = 1e-12.
    """
    if wi == wj:
        raise EvaluationError("npmi_pair needs two distinct words")
    m = stats.virtual_doc_count
    p_i = stats.word_doc_counts.get(wi, 0) / m
    p_j = stats.word_doc_counts.get(wj, 0) / m
    if p_i == 0.0 or p_j == 0.0:
        return -1.0
    key = (wi, wj) if wi < wj else (wj, wi)
    p_ij = stats.pair_doc_counts.get(key, 0) / m + _NPMI_EPS
    return math.log(p_ij / (p_i * p_j)) / -math.log(p_ij)


def topic_npmi(stats: CoocStats, word_ids: list[int]) -> float:
    """Mean npmi_pair over all unordered pairs of the given topic words."""
    if len(word_ids) < 2:
        raise EvaluationError("topic coherence needs at least 2 words")
    scores = [npmi_pair(stats, wi, wj) for wi, wj in combinations(word_ids, 2)]
    return float(np.mean(scores))


def model_coherence(generator: Network, vocab: Vocabulary, stats: CoocStats,
                    n: int = 10) -> tuple[list[TopicReport], float]:
    """Per-topic NPMI of the generator's top-n words, plus the mean across topics."""
    rows = topic_word_distributions(generator)
    reports = []
    for k in range(rows.shape[0]):
        words = top_words(rows[k], vocab, n)
        ids = [vocab.id_of(w) for w in words]
        reports.append(TopicReport(topic_id=k, word_distribution=rows[k],
                                   top_words=words, npmi=topic_npmi(stats, ids)))
    return reports, float(np.mean([r.npmi for r in reports]))


def format_coherence_report(reports: list[TopicReport], mean: float) -> str:
    lines = [f"{r.topic_id}\t{r.npmi:.9g}\t{' '.join(r.top_words)}" for r in reports]
    lines.append(f"mean\t{mean:.9g}")
    return "\n".join(lines) + "\n"


def classify_accuracy(encoder: Network, classifier: Network,
                      rows: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of argmax-correct predictions of C(E(x)) in eval mode.

    Ties resolve to the lowest class id.
    """
    labels = np.asarray(labels)
    if rows.shape[0] != labels.shape[0]:
        raise EvaluationError("labels must align with rows")
    z, _ = encoder.forward(rows, train=False)
    probs, _ = classifier.forward(z, train=False)
    return float((probs.argmax(axis=1) == labels).mean())


@dataclass
class SyntheticSpec:
    """LDA-style corpus with disjoint per-topic word supports."""

    num_topics: int
    words_per_topic: int
    num_docs: int
    doc_length: int
    doc_topic_alpha: float
    seed: int

    def __post_init__(self):
        if min(self.num_topics, self.words_per_topic, self.num_docs, self.doc_length) < 1:
            raise EvaluationError("synthetic corpus dimensions must be positive")
        if self.doc_topic_alpha <= 0:
            raise EvaluationError("doc_topic_alpha must be positive")

    @property
    def vocab_size(self) -> int:
        return self.num_topics * self.words_per_topic


def make_synthetic(spec: SyntheticSpec) -> tuple[RawCorpus, list[list[int]]]:
    """Generate documents by drawing a topic mixture per document, then a
    topic per token, then a uniform word from that topic's support.

    Labels are the argmax of each document's mixture. Returns the corpus and
    the ground-truth word-id support of every topic.
    """
    rng = np.random.default_rng(spec.seed)
    supports = [list(range(k * spec.words_per_topic, (k + 1) * spec.words_per_topic))
                for k in range(spec.num_topics)]
    prior = DirichletPrior(spec.num_topics, spec.doc_topic_alpha)
    thetas = sample_prior(prior, spec.num_docs, rng)
    docs = []
    labels = []
    for theta in thetas:
        topics = rng.choice(spec.num_topics, size=spec.doc_length, p=theta)
        offsets = rng.integers(0, spec.words_per_topic, size=spec.doc_length)
        words = topics * spec.words_per_topic + offsets
        ids, counts = np.unique(words, return_counts=True)
        docs.append({int(w): int(c) for w, c in zip(ids, counts)})
        labels.append(int(theta.argmax()))
    corpus = RawCorpus(docs, spec.vocab_size, labels=labels, num_classes=spec.num_topics)
    return corpus, supports


def synthetic_vocabulary(spec: SyntheticSpec) -> Vocabulary:
    """Token names for a synthetic corpus, one per word id."""
    width = len(str(spec.vocab_size - 1))
    return Vocabulary([f"w{idx:0{width}d}" for idx in range(spec.vocab_size)])


def greedy_topic_matches(learned: np.ndarray,
                         supports: list[list[int]]) -> list[tuple[int, int, float]]:
    """Greedy one-to-one pairing of learned topics with true supports.

    Repeatedly pairs the (topic, support) combination with the highest
    remaining mass-on-support; returns (topic index, support index, mass)
    triples, one per true support.
    """
    if learned.shape[0] < len(supports):
        raise EvaluationError("need at least as many learned topics as true supports")
    mass = np.stack([learned[:, sup].sum(axis=1) for sup in supports], axis=1)
    available = mass.copy()
    matches = []
    for _ in range(len(supports)):
        k, t = np.unravel_index(np.argmax(available), available.shape)
        matches.append((int(k), int(t), float(mass[k, t])))
        available[k, :] = -np.inf
        available[:, t] = -np.inf
    return matches


def topic_recovery_score(learned: np.ndarray, supports: list[list[int]]) -> float:
    """Mean, over greedily matched true topics, of the probability mass the
    matched learned topic places on that support. Invariant under permutation
    of the learned rows."""
    matches = greedy_topic_matches(learned, supports)
    return float(np.mean([m for _, _, m in matches]))
