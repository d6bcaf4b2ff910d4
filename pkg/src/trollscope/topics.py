"""Topic modelling by collapsed Gibbs sampling plus C_V topic coherence.

The sampler keeps the three standard count tables and resamples every
token's topic per sweep; distributions come from the smoothed counts of
the final state.  Coherence follows the boolean-sliding-window / NPMI /
one-set-segmentation recipe: each top word gets a vector of its NPMI
with every word in the set, the set itself the elementwise sum of those
vectors, and the score is the mean cosine between the two, clamped to
[0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .ingest import CleanTweet


@dataclass(frozen=True)
class LdaConfig:
    iterations: int = 1000
    burn_in: int = 200
    alpha: float | None = None  # defaults to 1/K
    beta: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.burn_in < 0:
            raise DataError("iterations must be >= 1 and burn_in >= 0")


def _as_token_lists(corpus) -> list[list[str]]:
    docs = [list(t.lemmas) if isinstance(t, CleanTweet) else list(t) for t in corpus]
    return [d for d in docs if d]


class TopicModel:
    """Fitted LDA state: topic-word (phi) and document-topic (theta) rows."""

    def __init__(self, phi: np.ndarray, theta: np.ndarray, words: list[str],
                 alpha: float, beta: float, seed: int, iterations: int,
                 assignments: np.ndarray | None = None):
        self.phi = phi
        self.theta = theta
        self.words = words
        self.word_index = {w: i for i, w in enumerate(words)}
        self.alpha = alpha
        self.beta = beta
        self.seed = seed
        self.iterations = iterations
        self.assignments = assignments

    @property
    def n_topics(self) -> int:
        return self.phi.shape[0]

    @property
    def n_words(self) -> int:
        return self.phi.shape[1]


def fit_lda(corpus, n_topics: int, config: LdaConfig | None = None) -> TopicModel:
    """Collapsed Gibbs sampling with symmetric priors (alpha=1/K, beta=0.01
    unless overridden).  Deterministic under the config seed."""
    config = config or LdaConfig()
    docs = _as_token_lists(corpus)
    if not docs:
        raise DataError("empty corpus")
    if n_topics < 1:
        raise DataError("need at least one topic")

    words = sorted({w for doc in docs for w in doc})
    if n_topics > len(words):
        raise DataError(f"{n_topics} topics exceed the {len(words)} distinct words")
    widx = {w: i for i, w in enumerate(words)}
    V = len(words)
    D = len(docs)
    K = n_topics
    alpha = config.alpha if config.alpha is not None else 1.0 / K
    beta = config.beta

    # flat token stream with document boundaries
    token_word = np.concatenate([
        np.array([widx[w] for w in doc], dtype=np.int64) for doc in docs
    ])
    token_doc = np.concatenate([
        np.full(len(doc), d, dtype=np.int64) for d, doc in enumerate(docs)
    ])
    n_tokens = token_word.size

    rng = np.random.default_rng(config.seed)
    z = rng.integers(0, K, size=n_tokens)

    n_wk = np.zeros((V, K))
    n_dk = np.zeros((D, K))
    n_k = np.zeros(K)
    np.add.at(n_wk, (token_word, z), 1.0)
    np.add.at(n_dk, (token_doc, z), 1.0)
    np.add.at(n_k, z, 1.0)

    v_beta = V * beta
    total_sweeps = config.burn_in + config.iterations
    if K == 1:
        total_sweeps = 0  # single topic: assignments cannot change

    for _ in range(total_sweeps):
        uniforms = rng.random(n_tokens)
        for i in range(n_tokens):
            w = token_word[i]
            d = token_doc[i]
            k_old = z[i]
            n_wk[w, k_old] -= 1.0
            n_dk[d, k_old] -= 1.0
            n_k[k_old] -= 1.0
            weights = (n_dk[d] + alpha) * (n_wk[w] + beta) / (n_k + v_beta)
            cumulative = np.cumsum(weights)
            k_new = int(np.searchsorted(cumulative, uniforms[i] * cumulative[-1]))
            if k_new >= K:  # numeric edge at the far end of the cdf
                k_new = K - 1
            z[i] = k_new
            n_wk[w, k_new] += 1.0
            n_dk[d, k_new] += 1.0
            n_k[k_new] += 1.0

    assert n_wk.sum() == n_tokens and n_dk.sum() == n_tokens

    phi = (n_wk.T + beta) / (n_k[:, None] + v_beta)
    theta = (n_dk + alpha) / (n_dk.sum(axis=1, keepdims=True) + K * alpha)
    return TopicModel(
        phi=phi, theta=theta, words=words, alpha=alpha, beta=beta,
        seed=config.seed, iterations=config.iterations, assignments=z,
    )


def top_words(model: TopicModel, topic: int, n: int = 10) -> list[tuple[str, float]]:
    """The n highest-probability words of one topic, ties broken by
    vocabulary order."""
    if not (0 <= topic < model.n_topics):
        raise DataError(f"topic {topic} out of range")
    if not (1 <= n <= model.n_words):
        raise DataError(f"n must lie in [1, {model.n_words}]")
    row = model.phi[topic]
    # stable sort on -p leaves equal probabilities in vocabulary order
    order = np.argsort(-row, kind="stable")[:n]
    return [(model.words[i], float(row[i])) for i in order]


# ---------------------------------------------------------------------------
# C_V coherence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoherenceConfig:
    window: int = 110
    epsilon: float = 1e-12
    top_n: int = 10


def _window_counts(
    docs: list[list[str]], words: set[str], window: int
) -> tuple[dict[str, float], dict[tuple[str, str], float], int]:
    """Boolean sliding-window occurrence and co-occurrence counts.

    Documents shorter than the window contribute a single window."""
    occur: dict[str, int] = {w: 0 for w in words}
    joint: dict[tuple[str, str], int] = {}
    n_windows = 0
    for doc in docs:
        if len(doc) <= window:
            spans = [doc]
        else:
            spans = [doc[i : i + window] for i in range(len(doc) - window + 1)]
        for span in spans:
            n_windows += 1
            present = sorted(words.intersection(span))
            for i, w in enumerate(present):
                occur[w] += 1
                for v in present[i:]:
                    key = (w, v)
                    joint[key] = joint.get(key, 0) + 1
    return occur, joint, n_windows


def _npmi(p_joint: float, p_a: float, p_b: float, epsilon: float) -> float:
    if p_a == 0.0 or p_b == 0.0:
        return 0.0
    if p_joint >= 1.0:
        return 1.0  # complete co-occurrence
    num = math.log((p_joint + epsilon) / (p_a * p_b))
    den = -math.log(p_joint + epsilon)
    return num / den


def cv_coherence(
    word_list: Sequence[str],
    reference_corpus,
    config: CoherenceConfig | None = None,
) -> float:
    """One-set-segmentation C_V score of a word set against a corpus.

    Words absent from every window get all-zero NPMI vectors (their
    cosine contribution is zero).  Invariant under permutation of the
    input list; clamped to [0, 1].
    """
    config = config or CoherenceConfig()
    words = list(dict.fromkeys(word_list))  # dedupe, order-stably
    if not words:
        raise DataError("empty word list")
    docs = _as_token_lists(reference_corpus)
    occur, joint, n_windows = _window_counts(docs, set(words), config.window)
    if n_windows == 0:
        raise DataError("reference corpus has no windows")

    p = {w: occur[w] / n_windows for w in words}

    def joint_p(a: str, b: str) -> float:
        key = (a, b) if a <= b else (b, a)
        return joint.get(key, 0) / n_windows

    n = len(words)
    vectors = np.zeros((n, n))
    for i, a in enumerate(words):
        if p[a] == 0.0:
            continue  # absent word: zero vector, recorded by staying zero
        for j, b in enumerate(words):
            vectors[i, j] = _npmi(joint_p(a, b), p[a], p[b], config.epsilon)

    aggregate = vectors.sum(axis=0)
    agg_norm = float(np.linalg.norm(aggregate))
    sims = []
    for i in range(n):
        norm_i = float(np.linalg.norm(vectors[i]))
        if norm_i == 0.0 or agg_norm == 0.0:
            sims.append(0.0)
        else:
            sims.append(float(vectors[i] @ aggregate / (norm_i * agg_norm)))
    return float(np.clip(np.mean(sims), 0.0, 1.0))


def model_coherence(
    model: TopicModel, reference_corpus, config: CoherenceConfig | None = None
) -> dict:
    """Per-topic and mean C_V for a fitted model's top-N word lists."""
    config = config or CoherenceConfig()
    per_topic = []
    for k in range(model.n_topics):
        names = [w for w, _ in top_words(model, k, min(config.top_n, model.n_words))]
        per_topic.append(cv_coherence(names, reference_corpus, config))
    return {
        "per_topic": per_topic,
        "mean": float(np.mean(per_topic)),
        "top_n": config.top_n,
        "window": config.window,
    }


def coherence_sweep(
    corpus,
    k_range: Iterable[int],
    lda_config: LdaConfig | None = None,
    coherence_config: CoherenceConfig | None = None,
) -> list[dict]:
    """Fit one seeded model per K and score it; rows are plot-ready."""
    lda_config = lda_config or LdaConfig()
    rows = []
    for k in k_range:
        cfg = LdaConfig(
            iterations=lda_config.iterations,
            burn_in=lda_config.burn_in,
            alpha=lda_config.alpha,
            beta=lda_config.beta,
            seed=lda_config.seed + k,  # independent chain per K
        )
        model = fit_lda(corpus, k, cfg)
        score = model_coherence(model, corpus, coherence_config)
        rows.append({
            "k": k,
            "mean_cv": score["mean"],
            "per_topic_cv": score["per_topic"],
            "seed": cfg.seed,
        })
    return rows


def topword_gap(model: TopicModel) -> dict:
    """Per-topic probability gap between the two most probable words,
    with spread statistics over topics."""
    gaps = []
    per_topic = []
    for k in range(model.n_topics):
        pairs = top_words(model, k, min(2, model.n_words))
        p1 = pairs[0][1]
        p2 = pairs[1][1] if len(pairs) > 1 else 0.0
        gap = p1 - p2
        gaps.append(gap)
        per_topic.append({"topic": k, "p1": p1, "p2": p2, "gap": gap})
    arr = np.array(gaps)
    return {
        "per_topic": per_topic,
        "sd": float(arr.std()),
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
    }
