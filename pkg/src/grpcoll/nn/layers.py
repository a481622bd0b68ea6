"""Layer implementations with explicit forward/backward passes.

All math is float64. Each layer owns its parameter arrays and matching
gradient buffers; ``backward`` consumes the upstream gradient and returns the
gradient with respect to its input. Layers cache whatever the backward pass
needs from the most recent forward call, so a model instance must not be
trained from two tasks at once.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidDimensionError


def he_uniform(fan_in: int, shape, rng: np.random.Generator) -> np.ndarray:
    """He-style uniform init: U(-sqrt(6/fan_in), +sqrt(6/fan_in))."""
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    kind = "layer"

    @property
    def params(self) -> list[np.ndarray]:
        return []

    @property
    def grads(self) -> list[np.ndarray]:
        return []

    def forward(self, x, training=False, rng=None):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def config(self) -> dict:
        return {}


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator | None = None):
        self.n_in, self.n_out = n_in, n_out
        if rng is None:
            self.w = np.zeros((n_in, n_out))
        else:
            self.w = he_uniform(n_in, (n_in, n_out), rng)
        self.b = np.zeros(n_out)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    @property
    def params(self):
        return [self.w, self.b]

    @property
    def grads(self):
        return [self.dw, self.db]

    def forward(self, x, training=False, rng=None):
        if x.shape[1] != self.n_in:
            raise InvalidDimensionError(f"dense input {x.shape[1]} != {self.n_in}")
        self._x = x
        return x @ self.w + self.b

    def backward(self, dout):
        self.dw[...] = self._x.T @ dout
        self.db[...] = dout.sum(axis=0)
        return dout @ self.w.T

    def config(self):
        return {"n_in": self.n_in, "n_out": self.n_out}


class Conv2d(Layer):
    """Valid (unpadded) stride-1 convolution with square kernels, via im2col."""

    kind = "conv2d"

    def __init__(self, in_channels, out_channels, kernel=5, rng=None):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        fan_in = in_channels * kernel * kernel
        if rng is None:
            self.w = np.zeros((out_channels, in_channels, kernel, kernel))
        else:
            self.w = he_uniform(fan_in, (out_channels, in_channels, kernel, kernel), rng)
        self.b = np.zeros(out_channels)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    @property
    def params(self):
        return [self.w, self.b]

    @property
    def grads(self):
        return [self.dw, self.db]

    def _im2col(self, x):
        n, c, h, w = x.shape
        kk = self.kernel
        oh, ow = h - kk + 1, w - kk + 1
        s0, s1, s2, s3 = x.strides
        cols = np.lib.stride_tricks.as_strided(
            x,
            shape=(n, c, kk, kk, oh, ow),
            strides=(s0, s1, s2, s3, s2, s3),
            writeable=False,
        )
        # (n, oh*ow, c*kk*kk)
        return cols.transpose(0, 4, 5, 1, 2, 3).reshape(n, oh * ow, c * kk * kk), oh, ow

    def forward(self, x, training=False, rng=None):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise InvalidDimensionError(f"conv2d expects (n,{self.in_channels},h,w)")
        if x.shape[2] < self.kernel or x.shape[3] < self.kernel:
            raise InvalidDimensionError("input smaller than kernel")
        cols, oh, ow = self._im2col(np.ascontiguousarray(x))
        self._cols, self._xshape = cols, x.shape
        wmat = self.w.reshape(self.out_channels, -1)
        out = cols @ wmat.T + self.b
        return out.transpose(0, 2, 1).reshape(x.shape[0], self.out_channels, oh, ow)

    def backward(self, dout):
        n, _, oh, ow = dout.shape
        kk = self.kernel
        dflat = dout.reshape(n, self.out_channels, oh * ow).transpose(0, 2, 1)
        wmat = self.w.reshape(self.out_channels, -1)
        self.dw[...] = (
            np.einsum("npo,npc->oc", dflat, self._cols).reshape(self.w.shape)
        )
        self.db[...] = dflat.sum(axis=(0, 1))
        dcols = dflat @ wmat  # (n, oh*ow, c*kk*kk)
        dcols = dcols.reshape(n, oh, ow, self.in_channels, kk, kk)
        dx = np.zeros(self._xshape)
        for i in range(kk):
            for j in range(kk):
                dx[:, :, i : i + oh, j : j + ow] += dcols[:, :, :, :, i, j].transpose(
                    0, 3, 1, 2
                )
        return dx

    def config(self):
        return {
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel": self.kernel,
        }


class MaxPool2d(Layer):
    """Non-overlapping 2x2 max pooling."""

    kind = "maxpool"

    def __init__(self, size=2):
        self.size = size

    def forward(self, x, training=False, rng=None):
        n, c, h, w = x.shape
        s = self.size
        if h % s or w % s:
            raise InvalidDimensionError(f"pool input {h}x{w} not divisible by {s}")
        oh, ow = h // s, w // s
        windows = x.reshape(n, c, oh, s, ow, s).transpose(0, 1, 2, 4, 3, 5)
        windows = windows.reshape(n, c, oh, ow, s * s)
        self._argmax = windows.argmax(axis=-1)
        self._inshape = x.shape
        return np.take_along_axis(windows, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, dout):
        n, c, h, w = self._inshape
        s = self.size
        oh, ow = h // s, w // s
        dwin = np.zeros((n, c, oh, ow, s * s))
        np.put_along_axis(dwin, self._argmax[..., None], dout[..., None], axis=-1)
        dwin = dwin.reshape(n, c, oh, ow, s, s).transpose(0, 1, 2, 4, 3, 5)
        return dwin.reshape(n, c, h, w)

    def config(self):
        return {"size": self.size}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, training=False, rng=None):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout):
        return np.where(self._mask, dout, 0.0)


class Dropout(Layer):
    """Inverted dropout: active only in training mode, identity at eval."""

    kind = "dropout"

    def __init__(self, rate=0.5):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0,1), got {rate}")
        self.rate = rate

    def forward(self, x, training=False, rng=None):
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("training-mode dropout needs an rng")
        keep = 1.0 - self.rate
        self._mask = (rng.random(x.shape) < keep) / keep
        return x * self._mask

    def backward(self, dout):
        if self._mask is None:
            return dout
        return dout * self._mask

    def config(self):
        return {"rate": self.rate}


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, training=False, rng=None):
        self._inshape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._inshape)


class PadReshape(Layer):
    """Zero-pad a flat k-vector to side^2 and reshape to (1, side, side).

    Lets the image CNN accept compressed (k < d) projected inputs while
    keeping its topology.
    """

    kind = "pad_reshape"

    def __init__(self, input_dim: int, side: int):
        if side * side < input_dim:
            raise InvalidDimensionError(f"side {side} too small for dim {input_dim}")
        self.input_dim = input_dim
        self.side = side

    def forward(self, x, training=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise InvalidDimensionError(
                f"expected (n, {self.input_dim}), got {x.shape}"
            )
        n = x.shape[0]
        padded = np.zeros((n, self.side * self.side))
        padded[:, : self.input_dim] = x
        return padded.reshape(n, 1, self.side, self.side)

    def backward(self, dout):
        n = dout.shape[0]
        return dout.reshape(n, -1)[:, : self.input_dim]

    def config(self):
        return {"input_dim": self.input_dim, "side": self.side}


class Softmax(Layer):
    kind = "softmax"

    def forward(self, x, training=False, rng=None):
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        self._probs = e / e.sum(axis=1, keepdims=True)
        return self._probs

    def backward(self, dout):
        # Full Jacobian-vector product; the training loop fuses softmax with
        # cross-entropy and bypasses this.
        p = self._probs
        return p * (dout - (dout * p).sum(axis=1, keepdims=True))


LAYER_KINDS = {
    cls.kind: cls
    for cls in (Dense, Conv2d, MaxPool2d, ReLU, Dropout, Flatten, PadReshape, Softmax)
}
