"""Small fully connected ReLU networks with hand-written backprop and Adam.

All parameters of a network live in one flat float64 buffer; the per-layer
weight matrices and bias vectors are views into it. Optimizers, target-network
syncs and weight exchange therefore act on a single array.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

HIDDEN = (64, 64)


class ShapeError(ValueError):
    pass


class Mlp:
    """``dims[0] -> dims[1] -> ... -> dims[-1]``, ReLU on hidden layers, linear output.

    Weights are stored ``(fan_in, fan_out)`` so a batch ``x`` of shape
    ``(n, fan_in)`` maps through ``x @ W + b``.
    """

    def __init__(self, dims, rng: np.random.Generator | None = None, out_scale: float = 1.0):
        self.dims = tuple(int(d) for d in dims)
        if len(self.dims) < 2 or min(self.dims) < 1:
            raise ShapeError(f"bad layer dims {self.dims}")
        self.params = np.zeros(self.n_params)
        self.weights, self.biases = self._views(self.params)
        if rng is not None:
            for i, w in enumerate(self.weights):
                bound = np.sqrt(6.0 / w.shape[0])
                w[...] = rng.uniform(-bound, bound, size=w.shape)
            self.weights[-1] *= out_scale

    @property
    def n_params(self) -> int:
        return sum(a * b + b for a, b in zip(self.dims[:-1], self.dims[1:]))

    def _views(self, flat):
        weights, biases, k = [], [], 0
        for a, b in zip(self.dims[:-1], self.dims[1:]):
            weights.append(flat[k:k + a * b].reshape(a, b))
            k += a * b
            biases.append(flat[k:k + b])
            k += b
        return weights, biases

    def zeros_like_params(self):
        flat = np.zeros(self.n_params)
        return flat, self._views(flat)

    def copy(self) -> "Mlp":
        other = Mlp(self.dims)
        other.params[:] = self.params
        return other

    def load(self, flat) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != self.params.shape:
            raise ShapeError(f"expected {self.params.shape[0]} parameters, got {flat.shape}")
        self.params[:] = flat

    def forward(self, x):
        """Network output for one input vector or a batch of rows."""
        h = np.asarray(x, dtype=float)
        if h.shape[-1] != self.dims[0]:
            raise ShapeError(f"input width {h.shape[-1]} != {self.dims[0]}")
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h

    def forward_cached(self, x):
        """Batched forward pass that also returns the activations for :meth:`backward`."""
        h = np.atleast_2d(np.asarray(x, dtype=float))
        if h.shape[-1] != self.dims[0]:
            raise ShapeError(f"input width {h.shape[-1]} != {self.dims[0]}")
        acts = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return h, acts

    def backward(self, cache, grad_out) -> np.ndarray:
        """Flat parameter gradient given dLoss/dOutput for the cached batch."""
        if cache is None:
            raise ValueError("backward needs the cache returned by forward_cached")
        acts = cache
        flat, (gw, gb) = self.zeros_like_params()
        delta = np.atleast_2d(np.asarray(grad_out, dtype=float))
        if delta.shape != acts[-1].shape:
            raise ShapeError(f"output gradient shape {delta.shape} != {acts[-1].shape}")
        for i in range(len(self.weights) - 1, -1, -1):
            gw[i][...] = acts[i].T @ delta
            gb[i][...] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        return flat


class Adam:
    def __init__(self, n_params: int, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        """Descend ``grads`` in place on ``params`` (and return them).

        Uses the folded form ``lr_t * m / (sqrt(v) + eps_t)`` with
        ``lr_t = lr * sqrt(1 - b2^t) / (1 - b1^t)`` and ``eps_t = eps * sqrt(1 - b2^t)``,
        algebraically identical to dividing by the bias-corrected moments.
        """
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        self.m *= b1
        self.m += (1.0 - b1) * grads
        self.v *= b2
        self.v += (1.0 - b2) * (grads * grads)
        c2 = np.sqrt(1.0 - b2 ** self.t)
        lr_t = self.lr * c2 / (1.0 - b1 ** self.t)
        denom = np.sqrt(self.v)
        denom += self.eps * c2
        params -= lr_t * (self.m / denom)
        return params


def softmax(logits):
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits):
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def entropy(logits):
    logp = log_softmax(logits)
    return -(np.exp(logp) * logp).sum(axis=-1)


def sample_categorical(probs, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(j, len(cdf) - 1)


class Categorical:
    """Discrete distribution over actions parameterized by logits."""

    def __init__(self, logits):
        self.logits = np.asarray(logits, dtype=float)
        self.log_probs = log_softmax(self.logits)
        self.probs = np.exp(self.log_probs)

    def sample(self, rng: np.random.Generator) -> int:
        return sample_categorical(self.probs, rng)

    def entropy(self) -> float:
        return float(-(self.probs * self.log_probs).sum())

    def mode(self) -> int:
        return int(np.argmax(self.logits))


# -- serialization ---------------------------------------------------------

SNAPSHOT_FORMAT = "bertrand-arena-mlp/1"


def save_networks(path, nets: dict[str, Mlp]) -> Path:
    """Write ``<path>.bin`` (little-endian float64, nets concatenated) and a
    ``<path>.json`` sidecar with labels, layer dims and offsets."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries, offset = [], 0
    for label, net in nets.items():
        entries.append({"label": label, "dims": list(net.dims), "offset": offset, "count": net.n_params})
        offset += net.n_params
    flat = np.concatenate([net.params for net in nets.values()]).astype("<f8")
    path.with_suffix(".bin").write_bytes(flat.tobytes())
    path.with_suffix(".json").write_text(json.dumps({"format": SNAPSHOT_FORMAT, "nets": entries}, indent=2) + "\n")
    return path


def load_networks(path) -> dict[str, Mlp]:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta.get("format") != SNAPSHOT_FORMAT:
        raise ShapeError(f"unknown snapshot format {meta.get('format')!r}")
    flat = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
    total = sum(e["count"] for e in meta["nets"])
    if flat.size != total:
        raise ShapeError(f"snapshot holds {flat.size} values, sidecar describes {total}")
    nets = {}
    for e in meta["nets"]:
        net = Mlp(e["dims"])
        if net.n_params != e["count"]:
            raise ShapeError(f"layer dims {e['dims']} imply {net.n_params} params, sidecar says {e['count']}")
        net.load(flat[e["offset"]:e["offset"] + e["count"]])
        nets[e["label"]] = net
    return nets
