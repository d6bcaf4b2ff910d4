"""The two classifier topologies and their persistence format.

Both end in a 2-way softmax read off a flattened per-step representation:

* feedforward: embedding -> dense(h, relu) -> dense(h, relu) -> flatten
  -> dense(2); the two hidden layers act per time step.
* blstm: embedding -> bidirectional LSTM (h per direction) -> per-step
  dense(h, relu) -> flatten -> dense(h, relu) -> dense(2).

Trainable parameter totals follow directly:

  feedforward: (V+1)d + (d+1)h + (h+1)h + (T*h+1)*2
  blstm:       (V+1)d + 2*4(dh + h^2 + h) + (2h+1)h + (T*h+1)h + (h+1)*2
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import DataError
from .layers import Bidirectional, Dense, Embedding, Flatten, Layer, LSTM, softmax

TOPOLOGY_FEEDFORWARD = "feedforward"
TOPOLOGY_BLSTM = "blstm"


class ClassifierModel:
    def __init__(self, topology: str, layers: list[Layer], vocab_size: int,
                 pad_len: int, embed_dim: int, hidden: int, init_mode: str,
                 seed: int, dtype=np.float64, vocab_hash: str = ""):
        self.topology = topology
        self.layers = layers
        self.vocab_size = vocab_size
        self.pad_len = pad_len
        self.embed_dim = embed_dim
        self.hidden = hidden
        self.init_mode = init_mode
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.vocab_hash = vocab_hash

    # -- forward / backward --------------------------------------------------

    def forward(self, ids: np.ndarray) -> np.ndarray:
        if ids.ndim != 2 or ids.shape[1] != self.pad_len:
            raise DataError(
                f"expected ids of shape (n, {self.pad_len}), got {ids.shape}"
            )
        x = ids
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dlogits: np.ndarray) -> None:
        grad = dlogits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.zero_grads()

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.params())

    # -- inference ------------------------------------------------------------

    def predict_proba(self, ids: np.ndarray, batch_size: int = 512) -> np.ndarray:
        chunks = []
        for start in range(0, len(ids), batch_size):
            chunks.append(softmax(self.forward(ids[start : start + batch_size])))
        return np.concatenate(chunks) if chunks else np.empty((0, 2))

    def predict(self, ids: np.ndarray, batch_size: int = 512) -> np.ndarray:
        """Hard labels by argmax; an exact tie goes to class 0."""
        proba = self.predict_proba(ids, batch_size)
        return np.argmax(proba, axis=1)

    # -- persistence ------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        arrays = {f"p{i}": p for i, p in enumerate(self.params())}
        np.savez_compressed(
            path,
            topology=np.array([self.topology]),
            meta=np.array([self.vocab_size, self.pad_len, self.embed_dim,
                           self.hidden, self.seed], dtype=np.int64),
            init_mode=np.array([self.init_mode]),
            dtype=np.array([self.dtype.str]),
            vocab_hash=np.array([self.vocab_hash]),
            **arrays,
        )

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierModel":
        with np.load(path, allow_pickle=False) as z:
            topology = str(z["topology"][0])
            v, pad_len, d, h, seed = (int(x) for x in z["meta"])
            init_mode = str(z["init_mode"][0])
            dtype = np.dtype(str(z["dtype"][0]))
            if topology == TOPOLOGY_FEEDFORWARD:
                model = build_feedforward(v, pad_len, d, h, seed=seed, dtype=dtype)
            elif topology == TOPOLOGY_BLSTM:
                model = build_blstm(v, pad_len, d, h, seed=seed, dtype=dtype)
            else:
                raise DataError(f"unknown topology {topology!r}")
            model.init_mode = init_mode
            model.vocab_hash = str(z["vocab_hash"][0]) if "vocab_hash" in z else ""
            for i, p in enumerate(model.params()):
                stored = z[f"p{i}"]
                if stored.shape != p.shape:
                    raise DataError("stored weights do not match the topology")
                p[...] = stored
        return model


def build_feedforward(vocab_size: int, pad_len: int, embed_dim: int = 100,
                      hidden: int = 100, seed: int = 0,
                      embedding_weights: np.ndarray | None = None,
                      dtype=np.float64) -> ClassifierModel:
    if vocab_size < 1 or pad_len < 1:
        raise DataError("vocab_size and pad_len must be >= 1")
    rng = np.random.default_rng(seed)
    layers: list[Layer] = [
        Embedding(vocab_size + 1, embed_dim, rng, embedding_weights, dtype),
        Dense(embed_dim, hidden, rng, relu=True, dtype=dtype),
        Dense(hidden, hidden, rng, relu=True, dtype=dtype),
        Flatten(),
        Dense(pad_len * hidden, 2, rng, relu=False, dtype=dtype),
    ]
    return ClassifierModel(
        TOPOLOGY_FEEDFORWARD, layers, vocab_size, pad_len, embed_dim, hidden,
        init_mode="pretrained-trainable" if embedding_weights is not None else "random",
        seed=seed, dtype=dtype,
    )


def build_blstm(vocab_size: int, pad_len: int, embed_dim: int = 100,
                hidden: int = 100, seed: int = 0,
                embedding_weights: np.ndarray | None = None,
                dtype=np.float64) -> ClassifierModel:
    if vocab_size < 1 or pad_len < 1:
        raise DataError("vocab_size and pad_len must be >= 1")
    rng = np.random.default_rng(seed)
    layers: list[Layer] = [
        Embedding(vocab_size + 1, embed_dim, rng, embedding_weights, dtype),
        Bidirectional(LSTM(embed_dim, hidden, rng, dtype), LSTM(embed_dim, hidden, rng, dtype)),
        Dense(2 * hidden, hidden, rng, relu=True, dtype=dtype),
        Flatten(),
        Dense(pad_len * hidden, hidden, rng, relu=True, dtype=dtype),
        Dense(hidden, 2, rng, relu=False, dtype=dtype),
    ]
    return ClassifierModel(
        TOPOLOGY_BLSTM, layers, vocab_size, pad_len, embed_dim, hidden,
        init_mode="pretrained-trainable" if embedding_weights is not None else "random",
        seed=seed, dtype=dtype,
    )
