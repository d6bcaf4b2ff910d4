"""Skip-gram word embeddings with negative sampling, trained from scratch.

The trainer is single-threaded and fully deterministic under its seed:
sentences are visited in corpus order, the learning rate decays linearly
with processed tokens, and the unigram^0.75 negative table is sampled
from one generator.  Loss per epoch is tracked so convergence is
observable and testable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .ingest import CleanTweet


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    # stable: -log(1 + e^-x) for x > 0, x - log(1 + e^x) otherwise
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = -np.log1p(np.exp(-x[pos]))
    out[~pos] = x[~pos] - np.log1p(np.exp(x[~pos]))
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sgns_loss_and_grads(
    center_vec: np.ndarray, target_vecs: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative-sampling loss and its exact gradients for one instance.

    ``labels`` holds 1 for the true context row(s) and 0 for noise rows.
    Returns (loss, d_center, d_targets); the trainer applies the same
    algebra, so finite-difference checks of this function cover the
    production update.
    """
    scores = target_vecs @ center_vec
    signed = np.where(labels > 0, scores, -scores)
    loss = float(-_log_sigmoid(signed).sum())
    residual = _sigmoid(scores) - labels
    d_center = residual @ target_vecs
    d_targets = np.outer(residual, center_vec)
    return loss, d_center, d_targets


@dataclass(frozen=True)
class Word2VecConfig:
    dim: int = 100
    window: int = 3
    epochs: int = 5
    min_count: int = 5
    negatives: int = 5
    learning_rate: float = 0.025
    seed: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.min_count < 1 or self.window < 1 or self.epochs < 1:
            raise DataError("dim, window, epochs and min_count must all be >= 1")


class EmbeddingModel:
    """Dense vector per qualifying word plus the config that produced it."""

    def __init__(self, words: Sequence[str], vectors: np.ndarray, config: Word2VecConfig,
                 counts: Sequence[int] | None = None,
                 epoch_losses: Sequence[float] | None = None):
        if vectors.ndim != 2 or vectors.shape[0] != len(words):
            raise DataError("vector matrix must have one row per word")
        self.words = list(words)
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.config = config
        self.counts = list(counts) if counts is not None else [0] * len(words)
        self.epoch_losses = list(epoch_losses) if epoch_losses is not None else []
        self._row = {w: i for i, w in enumerate(self.words)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __contains__(self, word: str) -> bool:
        return word in self._row

    def __len__(self) -> int:
        return len(self.words)

    def vector(self, word: str) -> np.ndarray:
        try:
            return self.vectors[self._row[word]]
        except KeyError:
            raise KeyError(f"word {word!r} has no vector") from None

    def vocab_hash(self) -> str:
        h = hashlib.sha256()
        for w, c in zip(self.words, self.counts):
            h.update(f"{w},{c}\n".encode("utf-8"))
        return h.hexdigest()

    # -- persistence --------------------------------------------------------

    def save_text(self, path: str | Path) -> None:
        """Plain-text form: a metadata header line, then 'word v1 ... vd'
        rows.  Vectors are written with repr so doubles survive exactly;
        corpus counts live only in the binary form."""
        cfg = self.config
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(
                f"#trollscope-embedding dim={cfg.dim} window={cfg.window} "
                f"epochs={cfg.epochs} min_count={cfg.min_count} seed={cfg.seed} "
                f"negatives={cfg.negatives} lr={cfg.learning_rate!r} "
                f"vocab_hash={self.vocab_hash()}\n"
            )
            for w, vec in zip(self.words, self.vectors):
                nums = " ".join(repr(float(v)) for v in vec)
                fh.write(f"{w} {nums}\n")

    @classmethod
    def load_text(cls, path: str | Path) -> "EmbeddingModel":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline()
            if not header.startswith("#trollscope-embedding"):
                raise DataError(f"{path}: not an embedding file")
            kv = dict(item.split("=", 1) for item in header.split()[1:])
            config = Word2VecConfig(
                dim=int(kv["dim"]), window=int(kv["window"]), epochs=int(kv["epochs"]),
                min_count=int(kv["min_count"]), negatives=int(kv["negatives"]),
                learning_rate=float(kv["lr"]), seed=int(kv["seed"]),
            )
            words, rows = [], []
            for line in fh:
                parts = line.split()
                words.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        vectors = np.array(rows, dtype=np.float64).reshape(len(words), config.dim)
        return cls(words, vectors, config)

    def save_npz(self, path: str | Path) -> None:
        cfg = self.config
        np.savez_compressed(
            path,
            words=np.array(self.words),
            counts=np.array(self.counts, dtype=np.int64),
            vectors=self.vectors,
            losses=np.array(self.epoch_losses, dtype=np.float64),
            config=np.array([cfg.dim, cfg.window, cfg.epochs, cfg.min_count,
                             cfg.negatives, cfg.seed], dtype=np.int64),
            lr=np.array([cfg.learning_rate]),
        )

    @classmethod
    def load_npz(cls, path: str | Path) -> "EmbeddingModel":
        with np.load(path, allow_pickle=False) as z:
            c = z["config"]
            config = Word2VecConfig(
                dim=int(c[0]), window=int(c[1]), epochs=int(c[2]), min_count=int(c[3]),
                negatives=int(c[4]), learning_rate=float(z["lr"][0]), seed=int(c[5]),
            )
            return cls([str(w) for w in z["words"]], z["vectors"], config,
                       [int(x) for x in z["counts"]], [float(x) for x in z["losses"]])


def train_word2vec(
    corpus: Iterable[CleanTweet] | Sequence[Sequence[str]],
    config: Word2VecConfig | None = None,
) -> EmbeddingModel:
    """Train skip-gram/negative-sampling vectors on a lemma corpus."""
    config = config or Word2VecConfig()
    sentences = [
        list(t.lemmas) if isinstance(t, CleanTweet) else list(t) for t in corpus
    ]
    if not sentences:
        raise DataError("empty corpus")

    counts: dict[str, int] = {}
    for sent in sentences:
        for w in sent:
            counts[w] = counts.get(w, 0) + 1
    vocab_words = sorted(
        (w for w, c in counts.items() if c >= config.min_count),
        key=lambda w: -counts[w],
    )
    # stable sort keeps first-appearance order inside equal counts
    if not vocab_words:
        raise DataError(f"no word reaches min_count={config.min_count}")
    row = {w: i for i, w in enumerate(vocab_words)}
    vocab_counts = np.array([counts[w] for w in vocab_words], dtype=np.float64)

    rng = np.random.default_rng(config.seed)
    d = config.dim
    w_in = (rng.random((len(vocab_words), d)) - 0.5) / d
    w_out = np.zeros((len(vocab_words), d))

    noise_cdf = np.cumsum(vocab_counts ** 0.75)
    noise_cdf /= noise_cdf[-1]

    encoded = [
        np.array([row[w] for w in sent if w in row], dtype=np.int64)
        for sent in sentences
    ]
    tokens_per_epoch = sum(len(s) for s in encoded)
    total_tokens = max(1, tokens_per_epoch * config.epochs)
    lr0 = config.learning_rate
    min_lr = lr0 * 1e-4

    window = config.window
    n_neg = config.negatives
    processed = 0
    epoch_losses: list[float] = []

    for _ in range(config.epochs):
        loss_sum = 0.0
        n_pairs = 0
        for ids in encoded:
            lr = max(min_lr, lr0 * (1.0 - processed / total_tokens))
            processed += len(ids)
            n = len(ids)
            if n < 2:
                continue
            for pos in range(n):
                center = ids[pos]
                lo = 0 if pos < window else pos - window
                ctx = np.concatenate((ids[lo:pos], ids[pos + 1 : pos + 1 + window]))
                if ctx.size == 0:
                    continue
                k = ctx.size
                negs = np.searchsorted(noise_cdf, rng.random((k, n_neg)))
                keep = negs != ctx[:, None]  # noise hitting the true context is skipped
                targets = np.concatenate((ctx, negs.ravel()[keep.ravel()]))
                labels = np.zeros(targets.size)
                labels[:k] = 1.0

                h = w_in[center]
                t_vecs = w_out[targets]
                scores = t_vecs @ h
                p = _sigmoid(scores)
                g = lr * (labels - p)
                np.add.at(w_out, targets, g[:, None] * h[None, :])
                w_in[center] += g @ t_vecs

                signed = np.where(labels > 0, scores, -scores)
                loss_sum += float(-_log_sigmoid(signed).sum())
                n_pairs += k
        epoch_losses.append(loss_sum / max(1, n_pairs))

    return EmbeddingModel(
        vocab_words, w_in, config,
        counts=[int(counts[w]) for w in vocab_words],
        epoch_losses=epoch_losses,
    )


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; zero vectors are rejected."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DataError("cosine undefined for a zero vector")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def embedding_matrix(vocab, model: EmbeddingModel) -> np.ndarray:
    """(V+1) x d matrix aligned with vocabulary ids; unvectorized words and
    the padding row stay all-zero."""
    mat = np.zeros((vocab.size + 1, model.dim))
    for idx in range(1, vocab.size + 1):
        word = vocab.word_of[idx]
        if word in model:
            mat[idx] = model.vector(word)
    return mat


def pairwise_cosines(lemmas: Sequence[str], model: EmbeddingModel) -> np.ndarray:
    """Cosines over all admissible token-position pairs of a tweet.

    Positions whose word has no vector are dropped first; every unordered
    position pair is admissible except those holding the same word twice.
    """
    kept = [w for w in lemmas if w in model]
    n = len(kept)
    if n < 2:
        return np.empty(0)
    vecs = np.stack([model.vector(w) for w in kept])
    norms = np.linalg.norm(vecs, axis=1)
    nonzero = norms > 0
    # zero vectors cannot occur from training, but guard anyway
    vecs, norms = vecs[nonzero], norms[nonzero]
    kept = [w for w, ok in zip(kept, nonzero) if ok]
    n = len(kept)
    if n < 2:
        return np.empty(0)
    unit = vecs / norms[:, None]
    sim = np.clip(unit @ unit.T, -1.0, 1.0)
    iu, ju = np.triu_indices(n, k=1)
    words = np.array(kept)
    admissible = words[iu] != words[ju]
    return sim[iu[admissible], ju[admissible]]


def tweet_minmax_cosine(
    tweet: CleanTweet | Sequence[str], model: EmbeddingModel
) -> tuple[float, float] | None:
    """Extreme pair cosines of one tweet, or None when no admissible pair."""
    lemmas = tweet.lemmas if isinstance(tweet, CleanTweet) else tweet
    vals = pairwise_cosines(lemmas, model)
    if vals.size == 0:
        return None
    return float(vals.max()), float(vals.min())
