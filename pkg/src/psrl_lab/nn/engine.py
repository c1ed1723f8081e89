"""Minimal differentiable layer stack on float64 numpy arrays.

Gradients are computed by a recorded tape over a fixed layer sequence:
each layer caches its last forward input, and ``backward`` replays the
chain rule in reverse. Several backward passes against one forward are
allowed (composite losses accumulate into the same parameter grads).
"""

from __future__ import annotations

import numpy as np

Tensor = np.ndarray


class ConfigurationError(ValueError):
    """Network is wired inconsistently with the data fed to it."""


class UsageError(RuntimeError):
    """API called out of order (e.g. backward before any forward)."""


class Param:
    """A trainable array plus its gradient accumulator."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)


class Layer:
    def params(self) -> list[Param]:
        return []

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def backward(self, grad: Tensor) -> Tensor:
        raise NotImplementedError


class Dense(Layer):
    """Affine map: y = x @ W + b, x of shape (batch, in_dim)."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator | None = None):
        self.in_dim = in_dim
        self.out_dim = out_dim
        bound = np.sqrt(1.0 / in_dim)
        if rng is None:
            w = np.zeros((in_dim, out_dim))
        else:
            w = rng.uniform(-bound, bound, size=(in_dim, out_dim))
        self.weight = Param(w)
        self.bias = Param(np.zeros(out_dim))
        self._x: Tensor | None = None

    def params(self) -> list[Param]:
        return [self.weight, self.bias]

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ConfigurationError(
                f"{self!r} expected input (batch, {self.in_dim}), got {x.shape}"
            )
        self._x = x
        return x @ self.weight.value + self.bias.value

    def backward(self, grad: Tensor) -> Tensor:
        x = self._x
        self.weight.grad += x.T @ grad
        self.bias.grad += grad.sum(axis=0)
        return grad @ self.weight.value.T

    def __repr__(self) -> str:
        return f"Dense({self.in_dim}, {self.out_dim})"


class ReLU(Layer):
    def __init__(self):
        self._mask: Tensor | None = None

    def forward(self, x: Tensor) -> Tensor:
        self._mask = x > 0.0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad: Tensor) -> Tensor:
        return np.where(self._mask, grad, 0.0)

    def __repr__(self) -> str:
        return "ReLU()"


class Tanh(Layer):
    def __init__(self):
        self._y: Tensor | None = None

    def forward(self, x: Tensor) -> Tensor:
        self._y = np.tanh(x)
        return self._y

    def backward(self, grad: Tensor) -> Tensor:
        return grad * (1.0 - self._y * self._y)

    def __repr__(self) -> str:
        return "Tanh()"


class Flatten(Layer):
    def __init__(self):
        self._shape: tuple | None = None

    def forward(self, x: Tensor) -> Tensor:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad: Tensor) -> Tensor:
        return grad.reshape(self._shape)

    def __repr__(self) -> str:
        return "Flatten()"


def _im2col(x: Tensor, k: int, stride: int) -> Tensor:
    # (B, C, H, W) -> (B, C*k*k, out_h*out_w), contiguous for one matmul per batch
    windows = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride, :, :]
    b, c, oh, ow, _, _ = windows.shape
    cols = windows.transpose(0, 1, 4, 5, 2, 3).reshape(b, c * k * k, oh * ow)
    return np.ascontiguousarray(cols)


class Conv2d(Layer):
    """2-D convolution (cross-correlation), no padding, square kernel.

    Forward and backward run through an im2col buffer so the heavy work
    is a single matmul; `conv2d_naive` below is the loop reference.
    """

    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int = 1,
                 rng: np.random.Generator | None = None):
        if stride < 1:
            raise ConfigurationError(f"Conv2d stride must be >= 1, got {stride}")
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.kernel = kernel
        self.stride = stride
        bound = np.sqrt(1.0 / (in_ch * kernel * kernel))
        if rng is None:
            w = np.zeros((out_ch, in_ch, kernel, kernel))
        else:
            w = rng.uniform(-bound, bound, size=(out_ch, in_ch, kernel, kernel))
        self.weight = Param(w)
        self.bias = Param(np.zeros(out_ch))
        self._x: Tensor | None = None
        self._cols: Tensor | None = None

    def params(self) -> list[Param]:
        return [self.weight, self.bias]

    def _out_hw(self, h: int, w: int) -> tuple[int, int]:
        return ((h - self.kernel) // self.stride + 1,
                (w - self.kernel) // self.stride + 1)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise ConfigurationError(
                f"{self!r} expected input (batch, {self.in_ch}, H, W), got {x.shape}"
            )
        if x.shape[2] < self.kernel or x.shape[3] < self.kernel:
            raise ConfigurationError(f"{self!r} input {x.shape} smaller than kernel")
        self._x = x
        b = x.shape[0]
        oh, ow = self._out_hw(x.shape[2], x.shape[3])
        cols = _im2col(x, self.kernel, self.stride)
        self._cols = cols
        wmat = self.weight.value.reshape(self.out_ch, -1)
        out = wmat @ cols  # (B, out_ch, oh*ow) via broadcasting over batch
        out += self.bias.value[:, None]
        return out.reshape(b, self.out_ch, oh, ow)

    def backward(self, grad: Tensor) -> Tensor:
        x, cols = self._x, self._cols
        b, _, oh, ow = grad.shape
        k, s = self.kernel, self.stride
        gflat = grad.reshape(b, self.out_ch, oh * ow)
        wmat = self.weight.value.reshape(self.out_ch, -1)
        self.weight.grad += np.einsum("bol,bcl->oc", gflat, cols).reshape(self.weight.value.shape)
        self.bias.grad += gflat.sum(axis=(0, 2))
        dcols = np.einsum("oc,bol->bcl", wmat, gflat)
        dcols = dcols.reshape(b, self.in_ch, k, k, oh, ow)
        dx = np.zeros_like(x)
        # col2im: scatter-add each kernel offset back onto the input grid
        for i in range(k):
            for j in range(k):
                dx[:, :, i:i + s * oh:s, j:j + s * ow:s] += dcols[:, :, i, j, :, :]
        return dx

    def __repr__(self) -> str:
        return f"Conv2d({self.in_ch}, {self.out_ch}, kernel={self.kernel}, stride={self.stride})"


def conv2d_naive(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1) -> Tensor:
    """Loop reference for Conv2d.forward (slow, kept as the correctness anchor)."""
    b, c, h, w = x.shape
    out_ch, _, k, _ = weight.shape
    oh = (h - k) // stride + 1
    ow = (w - k) // stride + 1
    out = np.zeros((b, out_ch, oh, ow))
    for n in range(b):
        for o in range(out_ch):
            for ci in range(c):
                for y in range(oh):
                    for xo in range(ow):
                        patch = x[n, ci, y * stride:y * stride + k, xo * stride:xo * stride + k]
                        out[n, o, y, xo] += np.sum(patch * weight[o, ci])
            out[n, o] += bias[o]
    return out


class MaxPool2d(Layer):
    """Non-overlapping k x k max pooling; input H, W must divide by k."""

    def __init__(self, k: int):
        self.k = k
        self._x_shape: tuple | None = None
        self._argmax: Tensor | None = None

    def forward(self, x: Tensor) -> Tensor:
        b, c, h, w = x.shape
        k = self.k
        if h % k or w % k:
            raise ConfigurationError(f"{self!r} needs H, W divisible by {k}, got {x.shape}")
        self._x_shape = x.shape
        tiles = x.reshape(b, c, h // k, k, w // k, k).transpose(0, 1, 2, 4, 3, 5)
        tiles = tiles.reshape(b, c, h // k, w // k, k * k)
        self._argmax = tiles.argmax(axis=-1)
        return tiles.max(axis=-1)

    def backward(self, grad: Tensor) -> Tensor:
        b, c, h, w = self._x_shape
        k = self.k
        oh, ow = h // k, w // k
        dtiles = np.zeros((b, c, oh, ow, k * k))
        np.put_along_axis(dtiles, self._argmax[..., None], grad[..., None], axis=-1)
        dx = dtiles.reshape(b, c, oh, ow, k, k).transpose(0, 1, 2, 4, 3, 5)
        return dx.reshape(b, c, h, w)

    def __repr__(self) -> str:
        return f"MaxPool2d({self.k})"


class Network:
    """An ordered layer stack with tape-recorded forward activations."""

    def __init__(self, layers: list[Layer]):
        self.layers = layers
        self._has_forward = False

    def forward(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            try:
                x = layer.forward(x)
            except ConfigurationError as exc:
                raise ConfigurationError(f"layer {i}: {exc}") from None
        self._has_forward = True
        return x

    def backward(self, grad: Tensor) -> Tensor:
        """Accumulate parameter grads; returns the gradient w.r.t. the input
        so composed networks can keep chaining."""
        if not self._has_forward:
            raise UsageError("backward called before any forward pass")
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def params(self) -> list[Param]:
        out: list[Param] = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def zero_grads(self) -> None:
        for p in self.params():
            p.grad[...] = 0.0

    def num_params(self) -> int:
        return sum(p.value.size for p in self.params())

    def copy_params_from(self, other: "Network") -> None:
        mine, theirs = self.params(), other.params()
        if len(mine) != len(theirs):
            raise ConfigurationError("parameter lists differ; networks not congruent")
        for p, q in zip(mine, theirs):
            p.value[...] = q.value

    def param_vector(self) -> np.ndarray:
        if not self.params():
            return np.zeros(0)
        return np.concatenate([p.value.ravel() for p in self.params()])

    def checksum(self) -> bytes:
        import hashlib

        h = hashlib.sha256()
        for p in self.params():
            h.update(p.value.tobytes())
        return h.digest()

    def __repr__(self) -> str:
        inner = ", ".join(repr(l) for l in self.layers)
        return f"Network([{inner}])"


def mlp(dims: list[int], rng: np.random.Generator, hidden: str = "relu",
        out: str | None = None) -> Network:
    """Dense stack with the given activation between layers and on the output."""
    acts = {"relu": ReLU, "tanh": Tanh}
    layers: list[Layer] = []
    for i in range(len(dims) - 1):
        layers.append(Dense(dims[i], dims[i + 1], rng))
        if i < len(dims) - 2:
            layers.append(acts[hidden]())
    if out is not None:
        layers.append(acts[out]())
    return Network(layers)
