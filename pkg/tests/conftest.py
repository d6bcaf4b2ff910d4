"""Shared fixtures: the worked-example arrays, synthetic corpora, and the
acceptance-report hook that prints one line per criterion."""

from __future__ import annotations

import numpy as np
import pytest

# ---------------------------------------------------------------------------
# frozen worked-example data: a 14-token tweet with one repeated word and
# the 90 admissible pair cosines it produces under the reference vectors
# ---------------------------------------------------------------------------

WORKED_TWEET = [
    "past", "time", "stop", "turn", "blind", "eye", "deaf",
    "ear", "children", "wait", "bear", "time", "end", "suffer",
]

WORKED_PAIR_COSINES = np.array([
    0.23084405, 0.165006, 0.09426032, 0.018875737, 0.08728446, -0.035145633,
    -0.21513806, 0.15835008, 0.39891496, 0.031234484, 0.23084405, 0.42888537,
    0.15516211, 0.3253909, 0.23327011, -0.052872457, 0.049503084, -0.10375977,
    -0.15152891, 0.2545478, 0.4174173, 0.014464399, 0.29235175, 0.13149995,
    0.31327742, 0.12590031, 0.0901772, -0.06048733, -0.048911296, 0.20062421,
    0.22691028, -0.08247886, 0.3253909, 0.6127991, 0.105595976, 0.3352162,
    0.18447617, 0.12916106, 0.062038686, 0.15504947, 0.3920124, 0.07559819,
    0.23327011, 0.23965108, 0.18687809, 0.45571902, 0.43940967, 0.2538958,
    0.16856779, 0.13967085, 0.1353369, -0.052872457, 0.043003216, 0.14657624,
    0.30956715, 0.3490589, 0.16273755, 0.17156608, 0.104764484, 0.049503084,
    0.039942108, 0.061188716, 0.461818, 0.14407241, 0.057416767, 0.14238377,
    -0.10375977, -0.09211613, 0.11603537, -0.023796022, 0.03380314, 0.15804541,
    -0.15152891, -0.24166468, 0.031274837, 0.17082833, 0.16026187, 0.2545478,
    0.26816827, 0.32470933, 0.052134376, 0.4174173, 0.24416408, 0.22999296,
    0.014464399, 0.046255637, 0.23251586, 0.29235175, 0.13149995, 0.23462225,
])

WORKED_WORD_COUNTS = [315, 2432, 1186, 398, 42, 145, 11, 9, 866, 298, 215, 2432, 1038, 152]


@pytest.fixture
def worked_tweet() -> list[str]:
    return list(WORKED_TWEET)


@pytest.fixture
def worked_pair_cosines() -> np.ndarray:
    return WORKED_PAIR_COSINES.copy()


def worked_example_model():
    """Reconstruct word vectors realizing the 90 fixture cosines.

    The pair cosines define a 14x14 Gram matrix (unit diagonal, repeated
    word sharing one vector) that is positive semidefinite because it
    came from real vectors, so an eigendecomposition recovers unit
    vectors reproducing every pair cosine.  This lets the production
    pair-enumeration and statistics code run on the exact fixture
    geometry instead of re-deriving the numbers outside it.
    """
    from trollscope.embed import EmbeddingModel, Word2VecConfig

    n = len(WORKED_TWEET)
    gram = np.eye(n)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            if WORKED_TWEET[i] == WORKED_TWEET[j]:
                gram[i, j] = gram[j, i] = 1.0
                continue
            gram[i, j] = gram[j, i] = WORKED_PAIR_COSINES[k]
            k += 1
    assert k == len(WORKED_PAIR_COSINES)
    eigvals, eigvecs = np.linalg.eigh(gram)
    assert eigvals.min() > -1e-10  # transcription sanity: Gram must be PSD
    vectors = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    words, rows = [], []
    for i, w in enumerate(WORKED_TWEET):
        if w not in words:
            words.append(w)
            rows.append(vectors[i])
    return EmbeddingModel(words, np.array(rows), Word2VecConfig(dim=n))


def worked_example_vocabulary():
    """Vocabulary whose counts reproduce the 14 fixture frequencies."""
    from trollscope.encode import Vocabulary

    counts = {}
    for w, c in zip(WORKED_TWEET, WORKED_WORD_COUNTS):
        counts[w] = c
    ranked = sorted(counts.items(), key=lambda kv: -kv[1])
    return Vocabulary([w for w, _ in ranked], [c for _, c in ranked])


# ---------------------------------------------------------------------------
# raw-text synthetic datasets for pipeline tests
# ---------------------------------------------------------------------------

_RAW_VERBS = ["vote", "march", "shout", "argue", "listen", "report", "claim",
              "attack", "defend", "protest", "debate", "promise"]
_RAW_NOUNS_A = ["country", "border", "enemy", "crowd", "police", "riot",
                "scandal", "leader", "traitor", "agenda"]
_RAW_NOUNS_B = ["committee", "budget", "healthcare", "bill", "community",
                "veteran", "economy", "education", "family", "district"]
_RAW_FILLER = ["today", "really", "never", "always", "people", "again",
               "new", "big", "proud", "strong"]


def write_raw_datasets(dir_path, n_per_class: int = 2000, seed: int = 21,
                       overlap: float = 0.3):
    """Two synthetic raw-tweet CSV files with partially separable styles.

    Label-0 text leans on pool A plus obligatory signal words, label-1 on
    pool B; ``overlap`` controls how often a tweet borrows from the other
    pool, which sets the achievable classification accuracy.  Texts carry
    inflections, URLs, mentions and stopwords so the full cleaning chain
    has real work to do.
    """
    import numpy as np

    rng = np.random.default_rng(seed)
    suffixes = ["", "s", "ed", "ing"]

    def sentence(label: int) -> str:
        pool = _RAW_NOUNS_A if label == 0 else _RAW_NOUNS_B
        other = _RAW_NOUNS_B if label == 0 else _RAW_NOUNS_A
        n_words = int(rng.integers(5, 12))
        words = []
        for _ in range(n_words):
            r = rng.random()
            if r < 0.25:
                words.append(_RAW_VERBS[rng.integers(0, len(_RAW_VERBS))]
                             + suffixes[rng.integers(0, 4)])
            elif r < 0.6:
                src = other if rng.random() < overlap else pool
                words.append(src[rng.integers(0, len(src))])
            elif r < 0.8:
                words.append(_RAW_FILLER[rng.integers(0, len(_RAW_FILLER))])
            else:
                words.append(["the", "a", "to", "about", "and", "we", "they"]
                             [rng.integers(0, 7)])
        if label == 0 and rng.random() < 0.8:
            words.insert(int(rng.integers(0, len(words))), "outrage")
        if rng.random() < 0.15:
            words.append("https://t.co/abc123")
        if rng.random() < 0.1:
            words.append("@somebody")
        return " ".join(words)

    troll_path = dir_path / "troll_raw.csv"
    genuine_path = dir_path / "genuine_raw.csv"
    with open(troll_path, "w", encoding="utf-8") as fh:
        fh.write("content\n")
        for _ in range(n_per_class):
            fh.write(f'"{sentence(0)}"\n')
    with open(genuine_path, "w", encoding="utf-8") as fh:
        fh.write("text,who\n")
        for _ in range(n_per_class):
            fh.write(f'"{sentence(1)}",1\n')
    return troll_path, genuine_path


# ---------------------------------------------------------------------------
# the acceptance reporter: tests register pass/fail lines that get echoed
# in the terminal summary
# ---------------------------------------------------------------------------

_ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    _ACCEPTANCE_LINES.append(f"criterion {number:>2}: {status}  {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
