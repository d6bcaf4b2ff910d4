"""Frequency-ranked vocabulary, integer encoding, and seeded splits.

Vocabulary indices run 1..V ordered by descending corpus count (ties by
first appearance); 0 is the padding id and V+1 the reserved out-of-
vocabulary id used when a frozen vocabulary meets new text.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .ingest import CleanTweet

PAD_ID = 0


class Vocabulary:
    """Bijective lemma <-> index map ranked by corpus frequency."""

    def __init__(self, words_by_rank: Sequence[str], counts_by_rank: Sequence[int]):
        if len(words_by_rank) != len(counts_by_rank):
            raise DataError("words and counts must align")
        self.index_of = {w: i + 1 for i, w in enumerate(words_by_rank)}
        self.word_of = {i + 1: w for i, w in enumerate(words_by_rank)}
        # counts[0] is the padding slot and stays 0
        self.counts = np.zeros(len(words_by_rank) + 1, dtype=np.int64)
        self.counts[1:] = np.asarray(counts_by_rank, dtype=np.int64)
        if len(self.counts) > 2 and np.any(np.diff(self.counts[1:]) > 0):
            raise DataError("counts must be non-increasing in rank")

    def __len__(self) -> int:
        return len(self.index_of)

    @property
    def size(self) -> int:
        return len(self.index_of)

    @property
    def oov_id(self) -> int:
        return len(self.index_of) + 1

    def index(self, lemma: str, oov_to_reserved: bool = True) -> int | None:
        idx = self.index_of.get(lemma)
        if idx is not None:
            return idx
        return self.oov_id if oov_to_reserved else None

    def count(self, lemma: str, oov_count: int = 1) -> int:
        idx = self.index_of.get(lemma)
        return int(self.counts[idx]) if idx is not None else oov_count

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for i in range(1, self.size + 1):
            h.update(f"{i},{self.word_of[i]},{self.counts[i]}\n".encode("utf-8"))
        return h.hexdigest()

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "lemma", "count"])
            for i in range(1, self.size + 1):
                writer.writerow([i, self.word_of[i], int(self.counts[i])])

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        words, counts = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                words.append(row["lemma"])
                counts.append(int(row["count"]))
        return cls(words, counts)


def build_vocabulary(corpus: Sequence[CleanTweet]) -> Vocabulary:
    """Rank all distinct lemmas by descending count; ties keep corpus order."""
    if not corpus:
        raise DataError("cannot build a vocabulary from an empty corpus")
    counts: dict[str, int] = {}
    for tweet in corpus:
        for lemma in tweet.lemmas:
            counts[lemma] = counts.get(lemma, 0) + 1
    # dict preserves insertion (= first appearance) order, so a stable sort
    # on -count leaves ties in first-appearance order
    ranked = sorted(counts.items(), key=lambda kv: -kv[1])
    words = [w for w, _ in ranked]
    return Vocabulary(words, [counts[w] for w in words])


@dataclass(frozen=True)
class EncodedTweet:
    ids: np.ndarray  # fixed length pad_len, zero-padded
    onehot: np.ndarray  # [1,0] for label 0, [0,1] for label 1
    truncated: bool = False


def label_to_onehot(label: int) -> np.ndarray:
    if label == 0:
        return np.array([1, 0], dtype=np.int8)
    if label == 1:
        return np.array([0, 1], dtype=np.int8)
    raise DataError(f"cannot one-hot encode label {label!r}")


def encode_tweet(
    tweet: CleanTweet,
    vocab: Vocabulary,
    pad_len: int,
    oov_to_reserved: bool = True,
) -> EncodedTweet:
    """Integer-encode one tweet, zero-padded (or right-truncated) to pad_len."""
    ids = [vocab.index(l, oov_to_reserved) for l in tweet.lemmas]
    ids = [i for i in ids if i is not None]
    truncated = len(ids) > pad_len
    if truncated:
        ids = ids[:pad_len]
    arr = np.zeros(pad_len, dtype=np.int32)
    arr[: len(ids)] = ids
    return EncodedTweet(ids=arr, onehot=label_to_onehot(tweet.label), truncated=truncated)


def decode_ids(ids: Sequence[int], vocab: Vocabulary) -> list[str]:
    """Inverse of encode_tweet for in-vocabulary ids; strips padding."""
    out = []
    for i in ids:
        i = int(i)
        if i == PAD_ID:
            continue
        if i == vocab.oov_id:
            out.append("<oov>")
        else:
            out.append(vocab.word_of[i])
    return out


@dataclass
class EncodedDataset:
    """Row-aligned id matrix, one-hot labels, and raw labels for a tweet set."""

    ids: np.ndarray  # (n, pad_len) int32
    onehot: np.ndarray  # (n, 2) int8
    labels: np.ndarray  # (n,) int8
    pad_len: int
    vocab_hash: str
    seed: int = 0  # the sampling/split seed that produced this subset
    truncated_count: int = 0

    def __len__(self) -> int:
        return self.ids.shape[0]

    def save(self, path: str | Path) -> None:
        np.savez_compressed(
            path,
            ids=self.ids,
            onehot=self.onehot,
            labels=self.labels,
            pad_len=np.array([self.pad_len]),
            vocab_hash=np.array([self.vocab_hash]),
            seed=np.array([self.seed]),
            truncated_count=np.array([self.truncated_count]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "EncodedDataset":
        with np.load(path, allow_pickle=False) as z:
            return cls(
                ids=z["ids"],
                onehot=z["onehot"],
                labels=z["labels"],
                pad_len=int(z["pad_len"][0]),
                vocab_hash=str(z["vocab_hash"][0]),
                seed=int(z["seed"][0]) if "seed" in z else 0,
                truncated_count=int(z["truncated_count"][0]),
            )

    def save_csv(self, path: str | Path) -> None:
        """Matrix rendering: first pad_len columns are token ids, the last
        two the one-hot label; the header comment carries the metadata."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(
                f"# pad_len={self.pad_len} vocab_hash={self.vocab_hash} "
                f"seed={self.seed}\n"
            )
            writer = csv.writer(fh)
            writer.writerow(
                [f"id{i}" for i in range(self.pad_len)] + ["onehot0", "onehot1"]
            )
            for row, oh in zip(self.ids, self.onehot):
                writer.writerow([*row.tolist(), *oh.tolist()])

    @classmethod
    def load_csv(cls, path: str | Path) -> "EncodedDataset":
        with open(path, newline="", encoding="utf-8") as fh:
            header = fh.readline()
            if not header.startswith("#"):
                raise DataError(f"{path}: missing metadata header")
            meta = dict(item.split("=", 1) for item in header[1:].split())
            reader = csv.reader(fh)
            next(reader)  # column-name row
            rows = [[int(c) for c in row] for row in reader if row]
        pad_len = int(meta["pad_len"])
        data = np.array(rows, dtype=np.int64)
        onehot = data[:, pad_len:].astype(np.int8)
        return cls(
            ids=data[:, :pad_len].astype(np.int32),
            onehot=onehot,
            labels=np.argmax(onehot, axis=1).astype(np.int8),
            pad_len=pad_len,
            vocab_hash=meta["vocab_hash"],
            seed=int(meta["seed"]),
        )


def encode_corpus(
    corpus: Sequence[CleanTweet],
    vocab: Vocabulary,
    pad_len: int | None = None,
    oov_to_reserved: bool = True,
) -> EncodedDataset:
    """Encode a whole corpus; pad_len defaults to the longest tweet."""
    if not corpus:
        raise DataError("cannot encode an empty corpus")
    if any(t.label not in (0, 1) for t in corpus):
        raise DataError("encoding requires labeled (0/1) tweets")
    if pad_len is None:
        pad_len = max(len(t.lemmas) for t in corpus)
    rows = [encode_tweet(t, vocab, pad_len, oov_to_reserved) for t in corpus]
    return EncodedDataset(
        ids=np.stack([r.ids for r in rows]),
        onehot=np.stack([r.onehot for r in rows]),
        labels=np.array([t.label for t in corpus], dtype=np.int8),
        pad_len=pad_len,
        vocab_hash=vocab.content_hash(),
        truncated_count=sum(r.truncated for r in rows),
    )


@dataclass(frozen=True)
class SplitSpec:
    sample_size: int
    test_fraction: float
    validation_fraction: float  # of the post-test remainder
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.test_fraction < 1.0):
            raise ConfigError("test_fraction must lie in (0, 1)")
        if not (0.0 < self.validation_fraction < 1.0):
            raise ConfigError("validation_fraction must lie in (0, 1)")
        if self.sample_size < 3:
            raise ConfigError("sample_size too small to split three ways")


@dataclass
class Split:
    train: list[CleanTweet]
    validation: list[CleanTweet]
    test: list[CleanTweet]
    spec: SplitSpec
    per_class: dict[str, dict[int, int]] = field(default_factory=dict)


def sample_and_split(corpus: Sequence[CleanTweet], spec: SplitSpec) -> Split:
    """Seeded sample of ``spec.sample_size`` tweets partitioned into
    train / validation / test; identical seeds give identical splits."""
    if spec.sample_size > len(corpus):
        raise DataError(
            f"sample_size {spec.sample_size} exceeds corpus size {len(corpus)}"
        )
    rng = np.random.default_rng(spec.rng_seed)
    picked = rng.choice(len(corpus), size=spec.sample_size, replace=False)
    sample = [corpus[i] for i in picked]

    n_test = int(round(spec.sample_size * spec.test_fraction))
    rest = sample[n_test:]
    test = sample[:n_test]
    n_val = int(round(len(rest) * spec.validation_fraction))
    validation = rest[:n_val]
    train = rest[n_val:]

    def class_counts(tweets: list[CleanTweet]) -> dict[int, int]:
        out: dict[int, int] = {}
        for t in tweets:
            out[t.label] = out.get(t.label, 0) + 1
        return out

    return Split(
        train=train,
        validation=validation,
        test=test,
        spec=spec,
        per_class={
            "train": class_counts(train),
            "validation": class_counts(validation),
            "test": class_counts(test),
        },
    )


def balanced_sample(
    corpus: Sequence[CleanTweet], per_class: int, rng_seed: int
) -> list[CleanTweet]:
    """Seeded sample of ``per_class`` tweets from each of labels 0 and 1."""
    rng = np.random.default_rng(rng_seed)
    out: list[CleanTweet] = []
    for label in (0, 1):
        pool = [t for t in corpus if t.label == label]
        if len(pool) < per_class:
            raise DataError(f"class {label} has only {len(pool)} tweets, need {per_class}")
        picked = rng.choice(len(pool), size=per_class, replace=False)
        out.extend(pool[i] for i in picked)
    return out
