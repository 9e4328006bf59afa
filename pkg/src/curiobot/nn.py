"""Minimal dense-network engine with exact backpropagation.

Networks are stacks of fully connected layers (tanh/relu/sigmoid/linear),
stored as plain numpy arrays in double precision. Two optimizers are
provided (SGD with momentum, Adam), plus a finite-difference gradient
checker and a binary weight-file format.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

ACTIVATIONS = ("tanh", "relu", "sigmoid", "linear")

_WEIGHT_MAGIC = b"CURIONN1"
_ACT_CODE = {"tanh": 0, "relu": 1, "sigmoid": 2, "linear": 3}
_ACT_NAME = {v: k for k, v in _ACT_CODE.items()}


def _apply_activation(z: np.ndarray, name: str) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "linear":
        return z
    raise ValueError(f"unknown activation {name!r}")


def _activation_grad(z: np.ndarray, a: np.ndarray, name: str) -> np.ndarray:
    """Elementwise derivative of the activation, from pre/post values."""
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "linear":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class DenseLayer:
    """One fully connected layer: out = act(weights @ x + biases)."""

    weights: np.ndarray  # (out_dim, in_dim)
    biases: np.ndarray   # (out_dim,)
    activation: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError("weights must be a matrix")
        if self.biases.shape != (self.weights.shape[0],):
            raise ValueError("bias length must equal the layer's output dim")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise ValueError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


class Network:
    """An ordered stack of DenseLayers with chained dimensions."""

    def __init__(self, layers):
        layers = list(layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(
                    f"layer dimensions do not chain: {a.out_dim} -> {b.in_dim}"
                )
        self.layers = layers

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the network; accepts a single vector or a (n, in_dim) batch."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.in_dim:
            raise ValueError(f"input length {a.shape[1]} != in_dim {self.in_dim}")
        for layer in self.layers:
            a = _apply_activation(a @ layer.weights.T + layer.biases, layer.activation)
        return a[0] if single else a

    def forward_cached(self, x: np.ndarray):
        """Forward pass keeping per-layer pre/post activations for backward."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.in_dim:
            raise ValueError(f"input length {a.shape[1]} != in_dim {self.in_dim}")
        inputs = [a]
        zs = []
        for layer in self.layers:
            z = a @ layer.weights.T + layer.biases
            a = _apply_activation(z, layer.activation)
            zs.append(z)
            inputs.append(a)
        cache = {"inputs": inputs, "zs": zs, "n_layers": len(self.layers)}
        out = inputs[-1][0] if single else inputs[-1]
        return out, cache

    def backward(self, cache, loss_grad: np.ndarray):
        """Exact gradients of the scalar whose output-gradient is loss_grad.

        Returns a list of (dW, db) pairs, one per layer, shaped like the
        layer parameters. loss_grad must match the cached forward's output.
        """
        if cache.get("n_layers") != len(self.layers):
            raise ValueError("cache does not match this network")
        inputs, zs = cache["inputs"], cache["zs"]
        for layer, a_in in zip(self.layers, inputs):
            if a_in.shape[1] != layer.in_dim:
                raise ValueError("cache does not match this network")
        g = np.asarray(loss_grad, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        if g.shape != inputs[-1].shape:
            raise ValueError("loss_grad shape does not match cached output")
        grads = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            delta = g * _activation_grad(zs[i], inputs[i + 1], layer.activation)
            grads[i] = (delta.T @ inputs[i], delta.sum(axis=0))
            if i > 0:
                g = delta @ layer.weights
        return grads


def init_network(layer_spec, rng: np.random.Generator) -> Network:
    """Build a network from (in_dim, out_dim, activation) triples.

    Weights are uniform in [-s, s] with s = sqrt(6 / (in_dim + out_dim)),
    biases zero. Deterministic for a given generator state.
    """
    layers = []
    for in_dim, out_dim, activation in layer_spec:
        if in_dim < 1 or out_dim < 1:
            raise ValueError("layer dimensions must be positive")
        s = np.sqrt(6.0 / (in_dim + out_dim))
        w = rng.uniform(-s, s, size=(out_dim, in_dim))
        layers.append(DenseLayer(w, np.zeros(out_dim), activation))
    return Network(layers)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over components of squared differences."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    d = pred - target
    return float(np.mean(d * d))


def mse_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Gradient of mse_loss w.r.t. pred (batch inputs give the batch-mean loss grad)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return 2.0 * (pred - target) / pred.size


@dataclass
class TrainingBatch:
    inputs: np.ndarray   # (n, in_dim)
    targets: np.ndarray  # (n, out_dim)

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=np.float64))
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError("inputs and targets must have equal row counts")
        if self.inputs.shape[0] < 1:
            raise ValueError("batch must contain at least one row")

    def __len__(self) -> int:
        return self.inputs.shape[0]


class SgdMomentum:
    """SGD with momentum: v <- momentum*v - lr*g; w <- w + v.

    `decay` reduces the learning rate as lr / (1 + decay * step).
    """

    kind = "sgd_momentum"

    def __init__(self, learning_rate=0.0014, momentum=0.8, decay=0.0):
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.decay = decay
        self.step_count = 0
        self._velocity = None

    def step(self, net: Network, grads) -> bool:
        if not _grads_finite(grads):
            logger.warning("non-finite gradients, optimizer step skipped")
            return False
        if self._velocity is None:
            self._velocity = [
                (np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in net.layers
            ]
        _check_grad_shapes(net, grads, self._velocity)
        lr = self.learning_rate / (1.0 + self.decay * self.step_count)
        for layer, (dw, db), (vw, vb) in zip(net.layers, grads, self._velocity):
            vw *= self.momentum
            vw -= lr * dw
            vb *= self.momentum
            vb -= lr * db
            layer.weights += vw
            layer.biases += vb
        self.step_count += 1
        return True


class Adam:
    """Adam with the usual bias-corrected moment estimates."""

    kind = "adam"

    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self._m = None
        self._v = None

    def step(self, net: Network, grads) -> bool:
        if not _grads_finite(grads):
            logger.warning("non-finite gradients, optimizer step skipped")
            return False
        if self._m is None:
            self._m = [
                (np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in net.layers
            ]
            self._v = [
                (np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in net.layers
            ]
        _check_grad_shapes(net, grads, self._m)
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for layer, (dw, db), (mw, mb), (vw, vb) in zip(net.layers, grads, self._m, self._v):
            mw *= self.beta1
            mw += (1.0 - self.beta1) * dw
            mb *= self.beta1
            mb += (1.0 - self.beta1) * db
            vw *= self.beta2
            vw += (1.0 - self.beta2) * dw * dw
            vb *= self.beta2
            vb += (1.0 - self.beta2) * db * db
            layer.weights -= self.learning_rate * (mw / c1) / (np.sqrt(vw / c2) + self.epsilon)
            layer.biases -= self.learning_rate * (mb / c1) / (np.sqrt(vb / c2) + self.epsilon)
        return True


def _grads_finite(grads) -> bool:
    return all(np.isfinite(dw).all() and np.isfinite(db).all() for dw, db in grads)


def _check_grad_shapes(net, grads, buffers):
    if len(grads) != len(net.layers):
        raise ValueError("gradient list length does not match the network")
    for layer, (dw, db), (bw, bb) in zip(net.layers, grads, buffers):
        if dw.shape != layer.weights.shape or db.shape != layer.biases.shape:
            raise ValueError("gradient shapes do not match layer parameters")
        if bw.shape != layer.weights.shape or bb.shape != layer.biases.shape:
            raise ValueError("optimizer state does not match the network")


def optimizer_step(net: Network, grads, state) -> bool:
    """Apply one update; returns False (step skipped) on non-finite gradients."""
    return state.step(net, grads)


def fit_epoch(net: Network, batch: TrainingBatch, state, minibatch_size: int,
              rng: np.random.Generator) -> float:
    """One pass over the batch in shuffled minibatches.

    The final minibatch may be short and is trained on as-is. Returns the
    mean of the pre-update minibatch losses.
    """
    if minibatch_size < 1:
        raise ValueError("minibatch_size must be >= 1")
    n = len(batch)
    perm = rng.permutation(n)
    losses = []
    for start in range(0, n, minibatch_size):
        idx = perm[start:start + minibatch_size]
        x, t = batch.inputs[idx], batch.targets[idx]
        out, cache = net.forward_cached(x)
        losses.append(mse_loss(out, t))
        grads = net.backward(cache, mse_grad(out, t))
        optimizer_step(net, grads, state)
    return float(np.mean(losses))


def _loss_from_layer(net: Network, layer_idx: int, z: np.ndarray,
                     target: np.ndarray) -> np.ndarray:
    """Per-row MSE loss of propagating pre-activations z through layers[layer_idx:]."""
    a = _apply_activation(z, net.layers[layer_idx].activation)
    for layer in net.layers[layer_idx + 1:]:
        a = _apply_activation(a @ layer.weights.T + layer.biases, layer.activation)
    d = a - target
    return np.mean(d * d, axis=1)


def _central_diff_for_layer(net, layer_idx, z_base, j_idx, dz, target, h, chunk=8192):
    """Central differences for parameters of one layer.

    Perturbing a single weight/bias of layer i shifts exactly one component
    of that layer's pre-activation; only layers i.. need re-evaluation.
    j_idx[p] is the shifted component for parameter p and dz[p] the shift
    produced by a +h parameter perturbation.
    """
    n = len(j_idx)
    fd = np.empty(n)
    rows = np.arange(chunk)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        m = stop - start
        zp = np.repeat(z_base, m, axis=0)
        zm = zp.copy()
        zp[rows[:m], j_idx[start:stop]] += dz[start:stop]
        zm[rows[:m], j_idx[start:stop]] -= dz[start:stop]
        loss_p = _loss_from_layer(net, layer_idx, zp, target)
        loss_m = _loss_from_layer(net, layer_idx, zm, target)
        fd[start:stop] = (loss_p - loss_m) / (2.0 * h)
    return fd


def gradcheck(net: Network, sample, h: float = 1e-5) -> float:
    """Max relative error between backprop and central differences.

    Checks every weight and bias against (L(p+h) - L(p-h)) / 2h on the MSE
    loss of one (input, target) sample. Relative error uses a unit-floored
    denominator so near-zero gradients are compared absolutely.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x, target = sample
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    out, cache = net.forward_cached(x)
    grads = net.backward(cache, mse_grad(out, target))
    inputs, zs = cache["inputs"], cache["zs"]
    target_row = target[None, :]
    max_err = 0.0
    for i, layer in enumerate(net.layers):
        a_prev = inputs[i][0]
        out_dim, in_dim = layer.weights.shape
        # weights, row-major: parameter (j, k) shifts z[j] by h * a_prev[k]
        j_w = np.repeat(np.arange(out_dim), in_dim)
        dz_w = h * np.tile(a_prev, out_dim)
        fd_w = _central_diff_for_layer(net, i, zs[i], j_w, dz_w, target_row, h)
        # biases: parameter j shifts z[j] by h
        j_b = np.arange(out_dim)
        dz_b = np.full(out_dim, h)
        fd_b = _central_diff_for_layer(net, i, zs[i], j_b, dz_b, target_row, h)
        dw, db = grads[i]
        for bp, fd in ((dw.ravel(), fd_w), (db, fd_b)):
            err = np.abs(bp - fd) / np.maximum(1.0, np.abs(bp) + np.abs(fd))
            max_err = max(max_err, float(err.max()))
    return max_err


def save_weights(net: Network, path) -> None:
    """Write the network in the binary weight-file format."""
    with open(path, "wb") as f:
        f.write(_WEIGHT_MAGIC)
        f.write(struct.pack("<I", len(net.layers)))
        for layer in net.layers:
            f.write(struct.pack("<IIB", layer.in_dim, layer.out_dim,
                                _ACT_CODE[layer.activation]))
            f.write(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(layer.biases, dtype="<f8").tobytes())


def load_weights(path) -> Network:
    """Read a network written by save_weights; round-trip is exact."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != _WEIGHT_MAGIC:
        raise ValueError(f"{path}: bad magic, not a weight file")
    off = 8
    try:
        (n_layers,) = struct.unpack_from("<I", data, off)
        off += 4
        layers = []
        for _ in range(n_layers):
            in_dim, out_dim, code = struct.unpack_from("<IIB", data, off)
            off += 9
            if in_dim < 1 or out_dim < 1:
                raise ValueError(f"{path}: non-positive layer dimension")
            if code not in _ACT_NAME:
                raise ValueError(f"{path}: unknown activation code {code}")
            nw = out_dim * in_dim
            w = np.frombuffer(data, dtype="<f8", count=nw, offset=off)
            off += nw * 8
            b = np.frombuffer(data, dtype="<f8", count=out_dim, offset=off)
            off += out_dim * 8
            layers.append(DenseLayer(w.reshape(out_dim, in_dim).copy(),
                                     b.copy(), _ACT_NAME[code]))
    except (struct.error, ValueError) as e:
        if isinstance(e, ValueError) and str(e).startswith(str(path)):
            raise
        raise ValueError(f"{path}: truncated or corrupt weight file") from e
    if off != len(data):
        raise ValueError(f"{path}: trailing bytes in weight file")
    return Network(layers)
