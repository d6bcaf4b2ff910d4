"""Corpus diagnostics and the per-tweet regression variables.

Seven predictors per tweet: three from pair cosines (cm, csd, cr), mean
corpus frequency (mf), relative length (rl), mean vocabulary rank (uwr)
and the cross-tweet words representation score (ctwr); the outcome pr is
1 for a correctly classified tweet and 0 for a misclassified one.

A note on ``cr``: despite the name "range" it is the sum of the extreme
pair cosines (max + min), not their difference; that is the statistic
the downstream regression was calibrated against, so it is reproduced
verbatim.  With negative minima it can be far below max - min and can
itself go negative.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .encode import Vocabulary
from .embed import EmbeddingModel, pairwise_cosines
from .errors import DataError
from .ingest import CleanTweet


# ---------------------------------------------------------------------------
# corpus diagnostics
# ---------------------------------------------------------------------------

def ttr(subset: Sequence[CleanTweet]) -> dict:
    """Token count, lemma-type count and type/token ratio (percent)."""
    if not subset:
        raise DataError("TTR of an empty subset is undefined")
    tokens = 0
    types: set[str] = set()
    for tw in subset:
        tokens += len(tw.lemmas)
        types.update(tw.lemmas)
    return {
        "tokens": tokens,
        "types": len(types),
        "ttr_percent": 100.0 * len(types) / tokens,
    }


def lemma_overlap(right: Sequence[CleanTweet], wrong: Sequence[CleanTweet]) -> dict:
    """Unique/shared lemma counts between two subsets, plus per-tweet
    counts of tweets containing at least one unique / shared lemma."""
    right_types = {w for tw in right for w in tw.lemmas}
    wrong_types = {w for tw in wrong for w in tw.lemmas}
    shared = right_types & wrong_types

    def tweet_counts(tweets: Sequence[CleanTweet], unique: set[str]) -> dict:
        with_unique = sum(1 for tw in tweets if any(w in unique for w in tw.lemmas))
        with_shared = sum(1 for tw in tweets if any(w in shared for w in tw.lemmas))
        return {"tweets": len(tweets), "with_unique": with_unique, "with_shared": with_shared}

    unique_right = right_types - shared
    unique_wrong = wrong_types - shared
    return {
        "right": {
            "types": len(right_types),
            "unique": len(unique_right),
            "unique_ratio": 100.0 * len(unique_right) / len(right_types) if right_types else 0.0,
            "shared": len(shared),
            "shared_ratio": 100.0 * len(shared) / len(right_types) if right_types else 0.0,
            **tweet_counts(right, unique_right),
        },
        "wrong": {
            "types": len(wrong_types),
            "unique": len(unique_wrong),
            "unique_ratio": 100.0 * len(unique_wrong) / len(wrong_types) if wrong_types else 0.0,
            "shared": len(shared),
            "shared_ratio": 100.0 * len(shared) / len(wrong_types) if wrong_types else 0.0,
            **tweet_counts(wrong, unique_wrong),
        },
        "shared": len(shared),
    }


# ---------------------------------------------------------------------------
# per-tweet variables
# ---------------------------------------------------------------------------

def pairwise_cosine_stats(
    tweet: CleanTweet | Sequence[str], model: EmbeddingModel
) -> tuple[float, float, float] | None:
    """(cm, csd, cr) over the tweet's admissible pair cosines.

    cm is the mean, csd the population standard deviation and cr the sum
    of the extremes (see module docstring).  None when fewer than two
    vectorized words leave no admissible pair; such rows are excluded
    from the regression.
    """
    lemmas = tweet.lemmas if isinstance(tweet, CleanTweet) else tweet
    vals = pairwise_cosines(lemmas, model)
    if vals.size == 0:
        return None
    return float(vals.mean()), float(vals.std()), float(vals.max() + vals.min())


def mean_word_frequency(
    tweet: CleanTweet | Sequence[str], vocab: Vocabulary, oov_count: int = 1
) -> float:
    """Mean corpus count over the tweet's tokens, counted per occurrence."""
    lemmas = tweet.lemmas if isinstance(tweet, CleanTweet) else tweet
    if not lemmas:
        raise DataError("mean word frequency of an empty tweet is undefined")
    return float(np.mean([vocab.count(w, oov_count) for w in lemmas]))


def relative_length(tweet: CleanTweet | Sequence[str], corpus_mean_len: float) -> float:
    lemmas = tweet.lemmas if isinstance(tweet, CleanTweet) else tweet
    if corpus_mean_len <= 0:
        raise DataError("corpus mean length must be positive")
    return len(lemmas) / corpus_mean_len


def unique_words_ratio(tweet: CleanTweet | Sequence[str], vocab: Vocabulary) -> float:
    """Mean frequency-rank index over the tweet's tokens (OOV ranks V+1)."""
    lemmas = tweet.lemmas if isinstance(tweet, CleanTweet) else tweet
    if not lemmas:
        raise DataError("unique words ratio of an empty tweet is undefined")
    return float(np.mean([vocab.index(w) for w in lemmas]))


def mean_tweet_length(corpus: Iterable[CleanTweet]) -> float:
    lengths = [len(t.lemmas) for t in corpus]
    if not lengths:
        raise DataError("empty corpus has no mean length")
    return float(np.mean(lengths))


# ---------------------------------------------------------------------------
# signal-lemma sets and the ctwr score
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignalSets:
    """Lemma memberships driving the ctwr weights.

    ``core_right`` / ``core_wrong`` are the lemmas exclusive to one
    subset; shared lemmas are split into ``ext_right`` / ``ext_wrong``
    by comparing their per-subset occurrence-count z-scores (ties join
    neither side).
    """

    core_right: frozenset[str]
    core_wrong: frozenset[str]
    ext_right: frozenset[str]
    ext_wrong: frozenset[str]

    @property
    def core(self) -> frozenset[str]:
        return self.core_right | self.core_wrong

    @property
    def ext(self) -> frozenset[str]:
        return self.ext_right | self.ext_wrong


def _occurrence_counts(tweets: Sequence[CleanTweet], members: set[str]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for tw in tweets:
        for w in tw.lemmas:
            if w in members:
                counts[w] = counts.get(w, 0) + 1
    return counts


def build_signal_sets(
    right: Sequence[CleanTweet], wrong: Sequence[CleanTweet]
) -> SignalSets:
    right_types = {w for tw in right for w in tw.lemmas}
    wrong_types = {w for tw in wrong for w in tw.lemmas}
    shared = right_types & wrong_types

    core_right = frozenset(right_types - shared)
    core_wrong = frozenset(wrong_types - shared)

    if not shared:
        return SignalSets(core_right, core_wrong, frozenset(), frozenset())

    r_counts = _occurrence_counts(right, shared)
    w_counts = _occurrence_counts(wrong, shared)
    # every shared lemma occurs in both subsets by construction
    words = sorted(shared)
    rc = np.array([r_counts[w] for w in words], dtype=np.float64)
    wc = np.array([w_counts[w] for w in words], dtype=np.float64)

    def zscores(x: np.ndarray) -> np.ndarray:
        sd = x.std()
        if sd == 0:
            return np.zeros_like(x)
        return (x - x.mean()) / sd

    zr, zw = zscores(rc), zscores(wc)
    ext_right = frozenset(w for w, a, b in zip(words, zr, zw) if a > b)
    ext_wrong = frozenset(w for w, a, b in zip(words, zr, zw) if a < b)
    return SignalSets(core_right, core_wrong, ext_right, ext_wrong)


def ctwr_score(tweet: CleanTweet | Sequence[str], sets: SignalSets) -> float:
    """Biasedness/unbiasedness weight ratio over the tweet's tokens.

    Core signal lemmas add 1.1 to the numerator, extended ones 0.5, all
    other words 0.1 (and 1.1 to the denominator); every token adds at
    least 0.1 to both sides, so the ratio is always defined.
    """
    lemmas = tweet.lemmas if isinstance(tweet, CleanTweet) else tweet
    if not lemmas:
        raise DataError("ctwr of an empty tweet is undefined")
    prob1 = 0.0
    prob2 = 0.0
    for w in lemmas:
        if w in sets.core_right or w in sets.core_wrong:
            prob1 += 1.1
            prob2 += 0.1
        elif w in sets.ext_right or w in sets.ext_wrong:
            prob1 += 0.5
            prob2 += 0.1
        else:
            prob1 += 0.1
            prob2 += 1.1
    return prob1 / prob2


# ---------------------------------------------------------------------------
# feature matrix assembly
# ---------------------------------------------------------------------------

FEATURE_COLUMNS = ("cm", "csd", "cr", "mf", "rl", "uwr", "ctwr")


@dataclass(frozen=True)
class FeatureRow:
    tweet_id: int
    cm: float
    csd: float
    cr: float
    mf: float
    rl: float
    uwr: float
    ctwr: float
    pr: int

    def values(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in FEATURE_COLUMNS}


@dataclass
class FeatureMatrix:
    rows: list[FeatureRow]
    corpus_mean_len: float
    vocab_hash: str
    seed: int
    skipped_no_pairs: int = 0
    sidecar: dict = field(default_factory=dict)

    def design(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, y) arrays in FEATURE_COLUMNS order."""
        X = np.array([[getattr(r, c) for c in FEATURE_COLUMNS] for r in self.rows])
        y = np.array([r.pr for r in self.rows], dtype=np.float64)
        return X, y

    def save_csv(self, path: str | Path) -> None:
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tweet_id", *FEATURE_COLUMNS, "pr"])
            for r in self.rows:
                writer.writerow(
                    [r.tweet_id, *(repr(getattr(r, c)) for c in FEATURE_COLUMNS), r.pr]
                )
        meta = {
            "corpus_mean_len": self.corpus_mean_len,
            "vocab_hash": self.vocab_hash,
            "seed": self.seed,
            "skipped_no_pairs": self.skipped_no_pairs,
            **self.sidecar,
        }
        path.with_suffix(path.suffix + ".meta.json").write_text(
            json.dumps(meta, indent=2), encoding="utf-8"
        )

    @classmethod
    def load_csv(cls, path: str | Path) -> "FeatureMatrix":
        path = Path(path)
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                rows.append(FeatureRow(
                    tweet_id=int(rec["tweet_id"]),
                    **{c: float(rec[c]) for c in FEATURE_COLUMNS},
                    pr=int(rec["pr"]),
                ))
        meta = json.loads(path.with_suffix(path.suffix + ".meta.json").read_text())
        return cls(
            rows=rows,
            corpus_mean_len=meta["corpus_mean_len"],
            vocab_hash=meta["vocab_hash"],
            seed=meta["seed"],
            skipped_no_pairs=meta.get("skipped_no_pairs", 0),
            sidecar=meta,
        )


def compute_feature_row(
    tweet_id: int,
    tweet: CleanTweet,
    pr: int,
    vocab: Vocabulary,
    model: EmbeddingModel,
    sets: SignalSets,
    corpus_mean_len: float,
) -> FeatureRow | None:
    """All seven variables for one tweet, or None when it has no
    admissible cosine pair."""
    stats = pairwise_cosine_stats(tweet, model)
    if stats is None:
        return None
    cm, csd, cr = stats
    return FeatureRow(
        tweet_id=tweet_id,
        cm=cm,
        csd=csd,
        cr=cr,
        mf=mean_word_frequency(tweet, vocab),
        rl=relative_length(tweet, corpus_mean_len),
        uwr=unique_words_ratio(tweet, vocab),
        ctwr=ctwr_score(tweet, sets),
        pr=pr,
    )


def build_feature_matrix(
    right: Sequence[CleanTweet],
    wrong: Sequence[CleanTweet],
    vocab: Vocabulary,
    model: EmbeddingModel,
    per_class: int,
    seed: int = 0,
    corpus_mean_len: float | None = None,
    sets: SignalSets | None = None,
) -> FeatureMatrix:
    """Balanced feature table from the right/wrong partitions.

    Signal sets and the corpus mean length come from the *full*
    partitions; the balanced sample only selects which rows are emitted.
    Tweets without an admissible cosine pair are skipped and replacements
    drawn, so the output stays balanced at ``per_class`` per outcome.
    """
    if per_class < 1:
        raise DataError("per_class must be >= 1")
    if len(right) < per_class or len(wrong) < per_class:
        raise DataError(
            f"need {per_class} per class, have right={len(right)} wrong={len(wrong)}"
        )
    sets = sets or build_signal_sets(right, wrong)
    if corpus_mean_len is None:
        corpus_mean_len = mean_tweet_length(list(right) + list(wrong))

    rng = np.random.default_rng(seed)
    rows: list[FeatureRow] = []
    skipped = 0
    next_id = 0
    for pr, subset in ((1, right), (0, wrong)):
        order = rng.permutation(len(subset))
        taken = 0
        for i in order:
            if taken == per_class:
                break
            row = compute_feature_row(
                next_id, subset[i], pr, vocab, model, sets, corpus_mean_len
            )
            if row is None:
                skipped += 1
                continue
            rows.append(row)
            next_id += 1
            taken += 1
        if taken < per_class:
            raise DataError(
                f"class pr={pr}: only {taken} of {per_class} tweets have cosine pairs"
            )
    return FeatureMatrix(
        rows=rows,
        corpus_mean_len=corpus_mean_len,
        vocab_hash=vocab.content_hash(),
        seed=seed,
        skipped_no_pairs=skipped,
    )


def build_disjoint_feature_matrices(
    right: Sequence[CleanTweet],
    wrong: Sequence[CleanTweet],
    vocab: Vocabulary,
    model: EmbeddingModel,
    n_train: int,
    n_holdout: int,
    seed: int = 0,
    corpus_mean_len: float | None = None,
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Balanced training and holdout feature tables over disjoint tweets.

    One shuffled pass per class fills the training quota first, then the
    holdout quota, so no tweet appears in both tables.  Signal sets and
    corpus statistics are computed once from the full partitions and
    shared by both tables.
    """
    sets = build_signal_sets(right, wrong)
    if corpus_mean_len is None:
        corpus_mean_len = mean_tweet_length(list(right) + list(wrong))
    rng = np.random.default_rng(seed)

    def collect(subset: Sequence[CleanTweet], pr: int):
        order = rng.permutation(len(subset))
        needed = n_train + n_holdout
        rows: list[FeatureRow] = []
        skipped = 0
        for i in order:
            if len(rows) == needed:
                break
            row = compute_feature_row(
                0, subset[i], pr, vocab, model, sets, corpus_mean_len
            )
            if row is None:
                skipped += 1
                continue
            rows.append(row)
        if len(rows) < needed:
            raise DataError(
                f"class pr={pr}: only {len(rows)} tweets with cosine pairs, "
                f"need {needed}"
            )
        return rows[:n_train], rows[n_train:], skipped

    train_r, hold_r, skip_r = collect(right, 1)
    train_w, hold_w, skip_w = collect(wrong, 0)

    def renumber(rows: list[FeatureRow]) -> list[FeatureRow]:
        out = []
        for i, r in enumerate(rows):
            out.append(FeatureRow(i, r.cm, r.csd, r.cr, r.mf, r.rl, r.uwr, r.ctwr, r.pr))
        return out

    common = dict(
        corpus_mean_len=corpus_mean_len,
        vocab_hash=vocab.content_hash(),
        seed=seed,
        skipped_no_pairs=skip_r + skip_w,
    )
    return (
        FeatureMatrix(rows=renumber(train_r + train_w), **common),
        FeatureMatrix(rows=renumber(hold_r + hold_w), **common),
    )
