"""Quadratic neurons, layers, and networks with exact forward/backward passes.

A quadratic neuron maps an input vector ``x`` of length ``n`` to the scalar

    (w_r . x + b_r) * (w_g . x + b_g) + w_b . (x * x) + c

so a single unit carves a conic decision boundary instead of a hyperplane.
Setting ``w_g = 0, w_b = 0, b_g = 1, c = 0`` collapses the unit to the
first-order neuron ``w_r . x + b_r``.

All arithmetic is float64.  Gradients are computed by hand-written
reverse-mode rules; every rule is validated against central finite
differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Input or architecture shape mismatch."""


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softmax(z):
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class Activation:
    """Elementwise (or, for softmax, last-axis) activation function."""

    KINDS = ("identity", "relu", "sigmoid", "softmax")

    def __init__(self, kind: str):
        if kind not in self.KINDS:
            raise ValueError(f"unknown activation {kind!r}; expected one of {self.KINDS}")
        self.kind = kind

    def __call__(self, z: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return z
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        if self.kind == "sigmoid":
            return _sigmoid(z)
        return _softmax(z)

    def chain(self, z: np.ndarray, y: np.ndarray, gy: np.ndarray) -> np.ndarray:
        """Backpropagate ``gy`` (gradient w.r.t. output ``y``) to the pre-activation."""
        if self.kind == "identity":
            return gy
        if self.kind == "relu":
            return gy * (z > 0)
        if self.kind == "sigmoid":
            return gy * y * (1.0 - y)
        # softmax Jacobian-vector product along the last axis
        return y * (gy - (gy * y).sum(axis=-1, keepdims=True))

    def __eq__(self, other):
        return isinstance(other, Activation) and other.kind == self.kind

    def __repr__(self):
        return f"Activation({self.kind!r})"


def as_activation(act) -> Activation:
    return act if isinstance(act, Activation) else Activation(act)


# ---------------------------------------------------------------------------
# single neuron
# ---------------------------------------------------------------------------

@dataclass
class QuadraticNeuron:
    """One quadratic unit: three weight vectors, two biases, one constant."""

    w_r: np.ndarray
    w_g: np.ndarray
    w_b: np.ndarray
    b_r: float
    b_g: float
    c: float

    def __post_init__(self):
        self.w_r = np.asarray(self.w_r, dtype=np.float64)
        self.w_g = np.asarray(self.w_g, dtype=np.float64)
        self.w_b = np.asarray(self.w_b, dtype=np.float64)
        if not (self.w_r.ndim == self.w_g.ndim == self.w_b.ndim == 1):
            raise ShapeError("weight vectors must be one-dimensional")
        if not (len(self.w_r) == len(self.w_g) == len(self.w_b) >= 1):
            raise ShapeError("weight vectors must share a common length n >= 1")

    @property
    def n(self) -> int:
        return len(self.w_r)


@dataclass
class NeuronGradients:
    w_r: np.ndarray
    w_g: np.ndarray
    w_b: np.ndarray
    b_r: float
    b_g: float
    c: float
    x: np.ndarray


def neuron_forward(neuron: QuadraticNeuron, x) -> float:
    """Evaluate one quadratic neuron on a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (neuron.n,):
        raise ShapeError(f"input has shape {x.shape}, neuron expects ({neuron.n},)")
    p = neuron.w_r @ x + neuron.b_r
    q = neuron.w_g @ x + neuron.b_g
    return float(p * q + neuron.w_b @ (x * x) + neuron.c)


def neuron_backward(neuron: QuadraticNeuron, x, upstream: float) -> NeuronGradients:
    """Gradients of ``upstream * neuron_forward(neuron, x)`` w.r.t. all inputs.

    With p = w_r.x + b_r and q = w_g.x + b_g the partials are
    q*x, p*x, x*x, q, p, 1 for (w_r, w_g, w_b, b_r, b_g, c) and
    q*w_r + p*w_g + 2*w_b*x for x.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (neuron.n,):
        raise ShapeError(f"input has shape {x.shape}, neuron expects ({neuron.n},)")
    p = neuron.w_r @ x + neuron.b_r
    q = neuron.w_g @ x + neuron.b_g
    g = float(upstream)
    return NeuronGradients(
        w_r=g * q * x,
        w_g=g * p * x,
        w_b=g * x * x,
        b_r=g * q,
        b_g=g * p,
        c=g,
        x=g * (q * neuron.w_r + p * neuron.w_g + 2.0 * neuron.w_b * x),
    )


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

class _QuadParams:
    """Shared storage for stacked per-neuron quadratic parameters."""

    def _init_params(self, width: int, n: int):
        self.w_r = np.zeros((width, n))
        self.w_g = np.zeros((width, n))
        self.w_b = np.zeros((width, n))
        self.b_r = np.zeros(width)
        self.b_g = np.zeros(width)
        self.c = np.zeros(width)

    def params(self) -> list:
        return [self.w_r, self.w_g, self.w_b, self.b_r, self.b_g, self.c]

    def neuron(self, i: int) -> QuadraticNeuron:
        """View of one unit's parameters (no copy)."""
        return QuadraticNeuron(
            self.w_r[i], self.w_g[i], self.w_b[i],
            float(self.b_r[i]), float(self.b_g[i]), float(self.c[i]),
        )

    def neurons(self):
        return [self.neuron(i) for i in range(len(self.b_r))]


class DenseQuadraticLayer(_QuadParams):
    """Fully-connected layer of quadratic neurons followed by an activation."""

    def __init__(self, in_dim: int, width: int, activation="identity"):
        if in_dim < 1 or width < 1:
            raise ShapeError("in_dim and width must be >= 1")
        self.in_dim = in_dim
        self.width = width
        self.activation = as_activation(activation)
        self._init_params(width, in_dim)

    @classmethod
    def from_neurons(cls, neurons, activation="identity") -> "DenseQuadraticLayer":
        ns = {nr.n for nr in neurons}
        if len(ns) != 1:
            raise ShapeError("all neurons in a layer must share the input length")
        layer = cls(ns.pop(), len(neurons), activation)
        for i, nr in enumerate(neurons):
            layer.w_r[i] = nr.w_r
            layer.w_g[i] = nr.w_g
            layer.w_b[i] = nr.w_b
            layer.b_r[i] = nr.b_r
            layer.b_g[i] = nr.b_g
            layer.c[i] = nr.c
        return layer

    def output_shape(self, in_shape: tuple) -> tuple:
        if in_shape != (self.in_dim,):
            raise ShapeError(f"dense layer expects input shape ({self.in_dim},), got {in_shape}")
        return (self.width,)

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cache(x)
        return y

    def forward_cache(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"expected (batch, {self.in_dim}) input, got {x.shape}")
        p = x @ self.w_r.T + self.b_r
        q = x @ self.w_g.T + self.b_g
        z = p * q + (x * x) @ self.w_b.T + self.c
        y = self.activation(z)
        return y, (x, p, q, z, y)

    def backward(self, cache, gy: np.ndarray):
        x, p, q, z, y = cache
        gz = self.activation.chain(z, y, gy)
        gp = gz * q
        gq = gz * p
        grads = [gp.T @ x, gq.T @ x, gz.T @ (x * x),
                 gp.sum(axis=0), gq.sum(axis=0), gz.sum(axis=0)]
        gx = gp @ self.w_r + gq @ self.w_g + 2.0 * (gz @ self.w_b) * x
        return gx, grads


class QuadConvLayer(_QuadParams):
    """Quadratic kernels slid over an image like a convolution.

    grouping="full": each kernel sees every input channel
    (n = kh*kw*c_in, one output map per kernel).
    grouping="depthwise": each kernel sees one channel at a time
    (n = kh*kw) and is applied to every channel, giving c_in*len(kernels)
    output maps ordered channel-major.
    """

    GROUPINGS = ("full", "depthwise")

    def __init__(self, in_channels: int, kernels: int, kh: int, kw: int,
                 stride: int = 1, grouping: str = "depthwise", activation="identity"):
        if min(in_channels, kernels, kh, kw, stride) < 1:
            raise ShapeError("channel, kernel, size and stride counts must be >= 1")
        if grouping not in self.GROUPINGS:
            raise ValueError(f"unknown grouping {grouping!r}")
        self.in_channels = in_channels
        self.kernels = kernels
        self.kh = kh
        self.kw = kw
        self.stride = stride
        self.grouping = grouping
        self.activation = as_activation(activation)
        n = kh * kw * (in_channels if grouping == "full" else 1)
        self._init_params(kernels, n)

    @property
    def width(self) -> int:
        return self.kernels

    @property
    def in_dim(self) -> int:
        return self.w_r.shape[1]

    @property
    def out_channels(self) -> int:
        if self.grouping == "full":
            return self.kernels
        return self.in_channels * self.kernels

    def output_shape(self, in_shape: tuple) -> tuple:
        if len(in_shape) != 3 or in_shape[0] != self.in_channels:
            raise ShapeError(
                f"conv layer expects ({self.in_channels}, H, W) input, got {in_shape}")
        _, h, w = in_shape
        if h < self.kh or w < self.kw:
            raise ShapeError(f"input {in_shape} smaller than kernel {self.kh}x{self.kw}")
        oh = (h - self.kh) // self.stride + 1
        ow = (w - self.kw) // self.stride + 1
        return (self.out_channels, oh, ow)

    def _patches(self, x):
        # (B, C, H, W) -> (B, C, OH, OW, kh, kw)
        win = np.lib.stride_tricks.sliding_window_view(x, (self.kh, self.kw), axis=(2, 3))
        return win[:, :, ::self.stride, ::self.stride]

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cache(x)
        return y

    def forward_cache(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ShapeError(f"expected (batch, {self.in_channels}, H, W) input, got {x.shape}")
        b = x.shape[0]
        _, oh, ow = self.output_shape(x.shape[1:])
        win = self._patches(x)
        if self.grouping == "full":
            # patch layout: channel-major, then kernel row, then kernel col
            pat = win.transpose(0, 2, 3, 1, 4, 5).reshape(b, oh * ow, self.in_dim)
        else:
            pat = win.reshape(b, self.in_channels, oh * ow, self.in_dim)
        p = pat @ self.w_r.T + self.b_r
        q = pat @ self.w_g.T + self.b_g
        z = p * q + (pat * pat) @ self.w_b.T + self.c
        y = self.activation(z)
        if self.grouping == "full":
            out = y.transpose(0, 2, 1).reshape(b, self.kernels, oh, ow)
        else:
            out = y.transpose(0, 1, 3, 2).reshape(b, self.out_channels, oh, ow)
        return out, (x.shape, pat, p, q, z, y, (oh, ow))

    def backward(self, cache, gy: np.ndarray):
        in_shape, pat, p, q, z, y, (oh, ow) = cache
        b = in_shape[0]
        if self.grouping == "full":
            g = gy.reshape(b, self.kernels, oh * ow).transpose(0, 2, 1)
        else:
            g = gy.reshape(b, self.in_channels, self.kernels, oh * ow).transpose(0, 1, 3, 2)
        gz = self.activation.chain(z, y, g)
        gp = gz * q
        gq = gz * p
        if self.grouping == "full":
            grads = [np.einsum("blk,bln->kn", gp, pat),
                     np.einsum("blk,bln->kn", gq, pat),
                     np.einsum("blk,bln->kn", gz, pat * pat),
                     gp.sum(axis=(0, 1)), gq.sum(axis=(0, 1)), gz.sum(axis=(0, 1))]
        else:
            grads = [np.einsum("bclk,bcln->kn", gp, pat),
                     np.einsum("bclk,bcln->kn", gq, pat),
                     np.einsum("bclk,bcln->kn", gz, pat * pat),
                     gp.sum(axis=(0, 1, 2)), gq.sum(axis=(0, 1, 2)), gz.sum(axis=(0, 1, 2))]
        gpat = gp @ self.w_r + gq @ self.w_g + 2.0 * (gz @ self.w_b) * pat
        gx = np.zeros(in_shape)
        s = self.stride
        if self.grouping == "full":
            gwin = gpat.reshape(b, oh, ow, self.in_channels, self.kh, self.kw)
            gwin = gwin.transpose(0, 3, 1, 2, 4, 5)
        else:
            gwin = gpat.reshape(b, self.in_channels, oh, ow, self.kh, self.kw)
        for i in range(self.kh):
            for j in range(self.kw):
                gx[:, :, i:i + (oh - 1) * s + 1:s, j:j + (ow - 1) * s + 1:s] += gwin[..., i, j]
        return gx, grads


class MaxPoolLayer:
    """Max pooling over square windows; gradients route to the max positions."""

    def __init__(self, window: int, stride: int):
        if window < 1 or stride < 1:
            raise ShapeError("window and stride must be >= 1")
        self.window = window
        self.stride = stride

    def params(self) -> list:
        return []

    def output_shape(self, in_shape: tuple) -> tuple:
        if len(in_shape) != 3:
            raise ShapeError(f"pooling expects (C, H, W) input, got {in_shape}")
        c, h, w = in_shape
        if h < self.window or w < self.window:
            raise ShapeError(f"input {in_shape} smaller than pooling window {self.window}")
        oh = (h - self.window) // self.stride + 1
        ow = (w - self.window) // self.stride + 1
        return (c, oh, ow)

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cache(x)
        return y

    def forward_cache(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4:
            raise ShapeError(f"expected (batch, C, H, W) input, got {x.shape}")
        w, s = self.window, self.stride
        win = np.lib.stride_tricks.sliding_window_view(x, (w, w), axis=(2, 3))
        win = win[:, :, ::s, ::s]
        b, c, oh, ow = win.shape[:4]
        flat = win.reshape(b, c, oh, ow, w * w)
        idx = flat.argmax(axis=-1)
        y = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
        return y, (x.shape, idx)

    def backward(self, cache, gy: np.ndarray):
        in_shape, idx = cache
        b, c, oh, ow = idx.shape
        w, s = self.window, self.stride
        rows = idx // w + (np.arange(oh) * s)[None, None, :, None]
        cols = idx % w + (np.arange(ow) * s)[None, None, None, :]
        bb = np.arange(b)[:, None, None, None]
        cc = np.arange(c)[None, :, None, None]
        gx = np.zeros(in_shape)
        np.add.at(gx, (bb, cc, rows, cols), gy)
        return gx, []


class FlattenLayer:
    """Collapse all non-batch axes into one feature axis."""

    def params(self) -> list:
        return []

    def output_shape(self, in_shape: tuple) -> tuple:
        return (int(np.prod(in_shape)),)

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cache(x)
        return y

    def forward_cache(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        return x.reshape(x.shape[0], -1), (x.shape,)

    def backward(self, cache, gy: np.ndarray):
        (in_shape,) = cache
        return gy.reshape(in_shape), []


QUAD_LAYER_TYPES = (DenseQuadraticLayer, QuadConvLayer)


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------

class Network:
    """Ordered layer stack with construction-time shape validation."""

    def __init__(self, input_shape, layers):
        self.input_shape = tuple(int(d) for d in input_shape)
        self.layers = list(layers)
        shape = self.input_shape
        for k, layer in enumerate(self.layers):
            try:
                shape = layer.output_shape(shape)
            except ShapeError as exc:
                raise ShapeError(f"layer {k}: {exc}") from None
        self.output_shape = shape

    @property
    def output_width(self) -> int:
        if len(self.output_shape) != 1:
            raise ShapeError("network output is not a flat vector")
        return self.output_shape[0]

    def quadratic_layers(self):
        """(index, layer) pairs for the layers that carry quadratic units."""
        return [(k, l) for k, l in enumerate(self.layers) if isinstance(l, QUAD_LAYER_TYPES)]

    def params(self) -> list:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1:] != self.input_shape:
            raise ShapeError(
                f"input shape {x.shape[1:]} does not match network input {self.input_shape}")
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def forward_cache(self, x: np.ndarray):
        x = self._check_input(x)
        caches = []
        for layer in self.layers:
            x, cache = layer.forward_cache(x)
            caches.append(cache)
        return x, caches

    def backward(self, caches, loss_grad: np.ndarray):
        """Reverse-mode pass; ``caches`` must come from ``forward_cache``."""
        if caches is None or len(caches) != len(self.layers):
            raise ValueError("backward requires the caches of a matching forward_cache call")
        grads = [None] * len(self.layers)
        g = loss_grad
        for k in range(len(self.layers) - 1, -1, -1):
            g, grads[k] = self.layers[k].backward(caches[k], g)
        flat = []
        for lg in grads:
            flat.extend(lg)
        return g, flat


def build_mlp(widths, hidden_activation="sigmoid", output_activation="sigmoid") -> Network:
    """All-dense quadratic network from a width list like (2, 6, 6, 1).

    Parameters start at zero; apply an initialization scheme before training.
    """
    widths = tuple(int(w) for w in widths)
    if len(widths) < 2:
        raise ShapeError("an MLP needs at least input and output widths")
    layers = []
    for k in range(len(widths) - 1):
        act = output_activation if k == len(widths) - 2 else hidden_activation
        layers.append(DenseQuadraticLayer(widths[k], widths[k + 1], act))
    return Network((widths[0],), layers)
