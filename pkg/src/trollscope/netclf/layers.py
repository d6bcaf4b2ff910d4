"""Neural network layers with explicit forward/backward passes.

Everything is plain numpy.  Each layer stores its parameters and the
matching gradient buffers; ``backward`` consumes the upstream gradient,
accumulates parameter gradients and returns the input gradient.  Double
precision is the default so finite-difference checks are meaningful;
builders may request float32 for speed.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, onehot: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean categorical cross-entropy and its gradient w.r.t. the logits."""
    p = softmax(logits)
    n = logits.shape[0]
    loss = float(-np.sum(onehot * np.log(np.clip(p, 1e-300, None))) / n)
    grad = (p - onehot) / n
    return loss, grad


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Layer:
    params: list[np.ndarray]
    grads: list[np.ndarray]

    def forward(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray | None:  # pragma: no cover
        raise NotImplementedError

    def zero_grads(self) -> None:
        for g in self.grads:
            g[...] = 0.0

    def parameter_count(self) -> int:
        return sum(p.size for p in self.params)


class Embedding(Layer):
    """Integer ids -> dense rows.  Row 0 is the padding slot; ids beyond
    the table (the reserved out-of-vocabulary id) fall back to row 0 at
    lookup, which keeps the table exactly (V+1) x d."""

    def __init__(self, rows: int, dim: int, rng: np.random.Generator,
                 weights: np.ndarray | None = None, dtype=np.float64):
        if weights is not None:
            if weights.shape != (rows, dim):
                raise DataError(f"embedding weights must be {(rows, dim)}")
            w = np.asarray(weights, dtype=dtype).copy()
        else:
            w = rng.uniform(-0.05, 0.05, size=(rows, dim)).astype(dtype)
        self.w = w
        self.params = [self.w]
        self.grads = [np.zeros_like(self.w)]
        self._ids: np.ndarray | None = None

    def forward(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids)
        ids = np.where(ids >= self.w.shape[0], 0, ids)
        self._ids = ids
        return self.w[ids]

    def backward(self, dout: np.ndarray) -> None:
        flat_ids = self._ids.reshape(-1)
        flat_dout = dout.reshape(-1, self.w.shape[1])
        np.add.at(self.grads[0], flat_ids, flat_dout)
        return None


class Dense(Layer):
    """Affine map on the last axis, optionally through relu.  Applied to a
    (batch, time, features) input it acts per time step, which is exactly
    the time-distributed use in both topologies."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 relu: bool = False, dtype=np.float64):
        limit = np.sqrt(6.0 / (n_in + n_out))
        self.w = rng.uniform(-limit, limit, size=(n_in, n_out)).astype(dtype)
        self.b = np.zeros(n_out, dtype=dtype)
        self.relu = relu
        self.params = [self.w, self.b]
        self.grads = [np.zeros_like(self.w), np.zeros_like(self.b)]
        self._x: np.ndarray | None = None
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        z = x @ self.w + self.b
        if self.relu:
            self._mask = z > 0
            return np.where(self._mask, z, 0.0)
        return z

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self.relu:
            dout = dout * self._mask
        x2 = self._x.reshape(-1, self.w.shape[0])
        d2 = dout.reshape(-1, self.w.shape[1])
        self.grads[0] += x2.T @ d2
        self.grads[1] += d2.sum(axis=0)
        return dout @ self.w.T


class Flatten(Layer):
    def __init__(self):
        self.params = []
        self.grads = []
        self._shape: tuple | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout.reshape(self._shape)


class LSTM(Layer):
    """Single-direction LSTM returning the full hidden sequence.

    Gate order in the fused weight matrices is (input, forget, candidate,
    output); the forget-gate bias starts at 1 and everything else at 0.
    """

    def __init__(self, n_in: int, n_hidden: int, rng: np.random.Generator,
                 dtype=np.float64):
        h = n_hidden
        limit_w = np.sqrt(6.0 / (n_in + 4 * h))
        limit_u = np.sqrt(6.0 / (h + 4 * h))
        self.w = rng.uniform(-limit_w, limit_w, size=(n_in, 4 * h)).astype(dtype)
        self.u = rng.uniform(-limit_u, limit_u, size=(h, 4 * h)).astype(dtype)
        self.b = np.zeros(4 * h, dtype=dtype)
        self.b[h : 2 * h] = 1.0
        self.n_hidden = h
        self.params = [self.w, self.u, self.b]
        self.grads = [np.zeros_like(self.w), np.zeros_like(self.u), np.zeros_like(self.b)]
        self._cache: list[tuple] = []
        self._x_shape: tuple | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        B, T, _ = x.shape
        h = self.n_hidden
        self._x_shape = x.shape
        self._cache = []
        h_t = np.zeros((B, h), dtype=x.dtype)
        c_t = np.zeros((B, h), dtype=x.dtype)
        out = np.empty((B, T, h), dtype=x.dtype)
        for t in range(T):
            x_t = x[:, t, :]
            a = x_t @ self.w + h_t @ self.u + self.b
            i = _sigmoid(a[:, :h])
            f = _sigmoid(a[:, h : 2 * h])
            g = np.tanh(a[:, 2 * h : 3 * h])
            o = _sigmoid(a[:, 3 * h :])
            c_prev = c_t
            c_t = f * c_prev + i * g
            tanh_c = np.tanh(c_t)
            h_prev = h_t
            h_t = o * tanh_c
            out[:, t, :] = h_t
            self._cache.append((x_t, h_prev, c_prev, i, f, g, o, tanh_c))
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        B, T, _ = self._x_shape
        h = self.n_hidden
        dx = np.zeros(self._x_shape, dtype=dout.dtype)
        dh_next = np.zeros((B, h), dtype=dout.dtype)
        dc_next = np.zeros((B, h), dtype=dout.dtype)
        dW, dU, db = self.grads
        for t in reversed(range(T)):
            x_t, h_prev, c_prev, i, f, g, o, tanh_c = self._cache[t]
            dh = dout[:, t, :] + dh_next
            do = dh * tanh_c
            dc = dc_next + dh * o * (1.0 - tanh_c**2)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc_next = dc * f
            da = np.concatenate(
                (
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g**2),
                    do * o * (1.0 - o),
                ),
                axis=1,
            )
            dW += x_t.T @ da
            dU += h_prev.T @ da
            db += da.sum(axis=0)
            dx[:, t, :] = da @ self.w.T
            dh_next = da @ self.u.T
        return dx


class Bidirectional(Layer):
    """Runs one LSTM over the sequence and a twin over its reverse, then
    concatenates the per-step states (forward states first)."""

    def __init__(self, forward_cell: LSTM, backward_cell: LSTM):
        if forward_cell.n_hidden != backward_cell.n_hidden:
            raise DataError("both directions must share the hidden size")
        self.fwd = forward_cell
        self.bwd = backward_cell
        self.params = self.fwd.params + self.bwd.params
        self.grads = self.fwd.grads + self.bwd.grads

    def forward(self, x: np.ndarray) -> np.ndarray:
        out_f = self.fwd.forward(x)
        out_b = self.bwd.forward(np.ascontiguousarray(x[:, ::-1, :]))[:, ::-1, :]
        return np.concatenate((out_f, out_b), axis=2)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        h = self.fwd.n_hidden
        dx_f = self.fwd.backward(np.ascontiguousarray(dout[:, :, :h]))
        dx_b = self.bwd.backward(np.ascontiguousarray(dout[:, ::-1, h:]))
        return dx_f + dx_b[:, ::-1, :]

    def zero_grads(self) -> None:
        self.fwd.zero_grads()
        self.bwd.zero_grads()
