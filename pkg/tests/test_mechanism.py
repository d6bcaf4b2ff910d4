"""End-to-end analysis checks on a corpus with the troll mechanism planted.

The generator encodes the hypothesized production process directly: troll
tweets push a handful of signal words into every context over a few loose
topics, while genuine tweets follow a clean multi-topic mixture with mild
cross-topic spillover.  The analysis chain should then show the expected
qualitative signatures: lower topic coherence for the troll side, a larger
first-vs-second top-word probability gap, and wider dispersion of extreme
within-tweet cosines.
"""

import numpy as np
import pytest

from trollscope.embed import Word2VecConfig, train_word2vec
from trollscope.ingest import CleanTweet
from trollscope.stats import cosine_dispersion_report
from trollscope.topics import LdaConfig, coherence_sweep, fit_lda, topword_gap


def mechanism_corpus(seed=0, n_per_class=800, spill=0.2):
    rng = np.random.default_rng(seed)
    signal = ["signal0", "signal1", "signal2"]
    troll_topics = [[f"tt{k}w{i}" for i in range(20)] for k in range(4)]
    gen_topics = [[f"gt{k}w{i}" for i in range(30)] for k in range(6)]
    troll, genuine = [], []
    for _ in range(n_per_class):
        k = int(rng.integers(0, 4))
        n = int(rng.integers(5, 10))
        words = list(rng.choice(troll_topics[k], size=n))
        for s in rng.choice(signal, size=int(rng.integers(1, 3)), replace=False):
            if rng.random() < 0.9:
                words.insert(int(rng.integers(0, len(words))), str(s))
        troll.append(CleanTweet(tuple(words), 0))
        k = int(rng.integers(0, 6))
        n = int(rng.integers(5, 11))
        words = [
            str(rng.choice(gen_topics[int(rng.integers(0, 6))] if rng.random() < spill
                           else gen_topics[k]))
            for _ in range(n)
        ]
        genuine.append(CleanTweet(tuple(words), 1))
    return troll, genuine


@pytest.fixture(scope="module")
def corpus():
    return mechanism_corpus()


def test_signal_pollution_lowers_topic_coherence(corpus):
    troll, genuine = corpus
    cfg = LdaConfig(iterations=120, burn_in=40, seed=2)
    troll_rows = {r["k"]: r["mean_cv"] for r in coherence_sweep(troll, [5, 11], cfg)}
    gen_rows = {r["k"]: r["mean_cv"] for r in coherence_sweep(genuine, [5, 11], cfg)}
    for k in (5, 11):
        assert gen_rows[k] > troll_rows[k], (k, gen_rows, troll_rows)


def test_signal_words_dominate_topic_heads(corpus):
    troll, genuine = corpus
    cfg = LdaConfig(iterations=120, burn_in=40, seed=2)
    troll_gap = topword_gap(fit_lda(troll, 5, cfg))["mean"]
    gen_gap = topword_gap(fit_lda(genuine, 5, cfg))["mean"]
    assert troll_gap > gen_gap


def test_signal_mixing_widens_cosine_dispersion(corpus):
    troll, genuine = corpus
    model = train_word2vec(
        troll + genuine,
        Word2VecConfig(dim=24, window=3, epochs=3, min_count=1, seed=5),
    )
    rep = cosine_dispersion_report(troll, genuine, model, sample_n=500, seed=9)
    assert rep["min_cosine"]["a"]["sd"] > rep["min_cosine"]["b"]["sd"]
