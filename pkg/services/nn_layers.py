import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from exceptions import MissingForwardCache, ShapeMismatch
from models import LayerKind, LayerSpec

logger = logging.getLogger(__name__)

Cache = Dict[str, Any]


# Kernels
def conv2d_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    span = size + 2 * padding - kernel
    if span < 0 or span % stride:
        raise ShapeMismatch(f"input size {size} incompatible with kernel {kernel}, "
                            f"stride {stride}, padding {padding}")
    return span // stride + 1


def _check_conv_shapes(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> None:
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeMismatch(f"conv2d expects x [N,C,H,W] and w [F,C,kh,kw], got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"input has {x.shape[1]} channels, kernel expects {w.shape[1]}")
    if b.shape != (w.shape[0],):
        raise ShapeMismatch(f"bias shape {b.shape} does not match {w.shape[0]} filters")


def conv2d_forward_naive(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                         stride: int = 1, padding: int = 0) -> np.ndarray:
    """Direct cross-correlation loops; the reference the fast path is checked against"""
    _check_conv_shapes(x, w, b)
    n_batch, channels, height, width = x.shape
    filters, _, kh, kw = w.shape
    out_h = conv2d_output_size(height, kh, stride, padding)
    out_w = conv2d_output_size(width, kw, stride, padding)
    y = np.zeros((n_batch, filters, out_h, out_w))
    for n in range(n_batch):
        for f in range(filters):
            for i in range(out_h):
                for j in range(out_w):
                    total = b[f]
                    for c in range(channels):
                        for u in range(kh):
                            row = i * stride + u - padding
                            if row < 0 or row >= height:
                                continue
                            for v in range(kw):
                                col = j * stride + v - padding
                                if 0 <= col < width:
                                    total += x[n, c, row, col] * w[f, c, u, v]
                    y[n, f, i, j] = total
    return y


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                   stride: int = 1, padding: int = 0) -> Tuple[np.ndarray, Cache]:
    """
    im2col cross-correlation

    Args:
        x: [N, C, H, W]
        w: [F, C, kh, kw]
        b: [F]

    Returns:
        (y [N, F, H', W'], cache for conv2d_backward)
    """
    _check_conv_shapes(x, w, b)
    n_batch, channels, height, width = x.shape
    filters, _, kh, kw = w.shape
    out_h = conv2d_output_size(height, kh, stride, padding)
    out_w = conv2d_output_size(width, kw, stride, padding)

    padded = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n_batch * out_h * out_w, channels * kh * kw)

    y = cols @ w.reshape(filters, -1).T + b
    y = np.ascontiguousarray(y.reshape(n_batch, out_h, out_w, filters).transpose(0, 3, 1, 2))
    cache = {"x_shape": x.shape, "cols": cols, "w": w, "stride": stride, "padding": padding}
    return y, cache


def conv2d_backward(dy: np.ndarray, cache: Optional[Cache]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dw, db)"""
    if cache is None:
        raise MissingForwardCache("conv2d backward called before forward")
    n_batch, channels, height, width = cache["x_shape"]
    w, stride, padding = cache["w"], cache["stride"], cache["padding"]
    filters, _, kh, kw = w.shape
    out_h, out_w = dy.shape[2], dy.shape[3]

    dy_mat = dy.transpose(0, 2, 3, 1).reshape(-1, filters)
    dw = (dy_mat.T @ cache["cols"]).reshape(w.shape)
    db = dy_mat.sum(axis=0)

    dcols = (dy_mat @ w.reshape(filters, -1)).reshape(n_batch, out_h, out_w, channels, kh, kw)
    dpadded = np.zeros((n_batch, channels, height + 2 * padding, width + 2 * padding))
    for u in range(kh):
        for v in range(kw):
            dpadded[:, :, u:u + stride * out_h:stride, v:v + stride * out_w:stride] += \
                dcols[:, :, :, :, u, v].transpose(0, 3, 1, 2)
    dx = dpadded[:, :, padding:padding + height, padding:padding + width]
    return np.ascontiguousarray(dx), dw, db


def maxpool2d_forward(x: np.ndarray, window: int = 2, stride: int = 2) -> Tuple[np.ndarray, Cache]:
    """Window maxima; ties go to the smallest flattened index within the window"""
    if x.ndim != 4:
        raise ShapeMismatch(f"maxpool expects [N,C,H,W], got {x.shape}")
    n_batch, channels, height, width = x.shape
    out_h = conv2d_output_size(height, window, stride, 0)
    out_w = conv2d_output_size(width, window, stride, 0)

    windows = sliding_window_view(x, (window, window), axis=(2, 3))[:, :, ::stride, ::stride]
    flat = windows.reshape(n_batch, channels, out_h, out_w, window * window)
    argmax = flat.argmax(axis=-1)
    y = np.take_along_axis(flat, argmax[..., None], axis=-1)[..., 0]
    cache = {"x_shape": x.shape, "argmax": argmax, "window": window, "stride": stride}
    return y, cache


def maxpool_backward(dy: np.ndarray, cache: Optional[Cache]) -> np.ndarray:
    """Route each output gradient to its window's stored argmax"""
    if cache is None:
        raise MissingForwardCache("maxpool backward called before forward")
    n_batch, channels, height, width = cache["x_shape"]
    argmax, window, stride = cache["argmax"], cache["window"], cache["stride"]
    out_h, out_w = argmax.shape[2], argmax.shape[3]

    if window == stride and height == out_h * window and width == out_w * window:
        routed = np.zeros((n_batch, channels, out_h, out_w, window * window))
        np.put_along_axis(routed, argmax[..., None], dy[..., None], axis=-1)
        routed = routed.reshape(n_batch, channels, out_h, out_w, window, window)
        return np.ascontiguousarray(routed.transpose(0, 1, 2, 4, 3, 5).reshape(n_batch, channels, height, width))

    dx = np.zeros(cache["x_shape"])
    n_idx, c_idx, i_idx, j_idx = np.indices(argmax.shape)
    rows = i_idx * stride + argmax // window
    cols = j_idx * stride + argmax % window
    np.add.at(dx, (n_idx, c_idx, rows, cols), dy)
    return dx


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, Cache]:
    """y = x @ w + b with w [in, out]"""
    if x.ndim != 2 or x.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ShapeMismatch(f"dense expects x [N,{w.shape[0]}], got {x.shape}")
    return x @ w + b, {"x": x, "w": w}


def dense_backward(dy: np.ndarray, cache: Optional[Cache]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if cache is None:
        raise MissingForwardCache("dense backward called before forward")
    return dy @ cache["w"].T, cache["x"].T @ dy, dy.sum(axis=0)


def relu_forward(x: np.ndarray) -> Tuple[np.ndarray, Cache]:
    return np.maximum(x, 0.0), {"positive": x > 0}


def relu_backward(dy: np.ndarray, cache: Optional[Cache]) -> np.ndarray:
    if cache is None:
        raise MissingForwardCache("relu backward called before forward")
    return dy * cache["positive"]


def dropout(x: np.ndarray, rate: float, training: bool,
            rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Inverted dropout

    Returns:
        (output, mask); mask is None when the call is the identity (eval mode or rate 0)
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dy: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    return dy if mask is None else dy * mask


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Fused softmax + categorical cross-entropy

    Returns:
        (mean loss over the batch, dL/dlogits = (p - y) / N)
    """
    if logits.shape != targets.shape or logits.ndim != 2:
        raise ShapeMismatch(f"logits {logits.shape} and targets {targets.shape} must both be [N, classes]")
    if not (np.all((targets == 0) | (targets == 1)) and np.all(targets.sum(axis=1) == 1)):
        raise ValueError("targets must be one-hot rows")

    n_batch = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -float(np.sum(targets * log_probs)) / n_batch
    grad = (np.exp(log_probs) - targets) / n_batch
    return loss, grad


def one_hot(labels: np.ndarray, classes: int) -> np.ndarray:
    targets = np.zeros((len(labels), classes))
    targets[np.arange(len(labels)), labels] = 1.0
    return targets


# Layers
class Layer:
    """A network stage with cached forward state and parameter gradients"""

    kind: LayerKind

    def __init__(self):
        self.params: List[np.ndarray] = []
        self.grads: List[np.ndarray] = []
        self.cache: Optional[Cache] = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spec(self) -> LayerSpec:
        return LayerSpec(kind=self.kind)


class Conv2D(Layer):
    kind = LayerKind.CONV2D

    def __init__(self, weight: np.ndarray, bias: np.ndarray, stride: int = 1, padding: int = 1):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.params = [weight, bias]

    def forward(self, x, training=False):
        y, self.cache = conv2d_forward(x, self.params[0], self.params[1], self.stride, self.padding)
        return y

    def backward(self, dy):
        dx, dw, db = conv2d_backward(dy, self.cache)
        self.grads = [dw, db]
        return dx

    def spec(self):
        weight = self.params[0]
        return LayerSpec(kind=self.kind, out_channels=weight.shape[0], kernel=weight.shape[2],
                         stride=self.stride, padding=self.padding)


class ReLU(Layer):
    kind = LayerKind.RELU

    def forward(self, x, training=False):
        y, self.cache = relu_forward(x)
        return y

    def backward(self, dy):
        return relu_backward(dy, self.cache)


class MaxPool2D(Layer):
    kind = LayerKind.MAXPOOL2D

    def __init__(self, window: int = 2, stride: int = 2):
        super().__init__()
        self.window = window
        self.stride = stride

    def forward(self, x, training=False):
        y, self.cache = maxpool2d_forward(x, self.window, self.stride)
        return y

    def backward(self, dy):
        return maxpool_backward(dy, self.cache)

    def spec(self):
        return LayerSpec(kind=self.kind, window=self.window, stride=self.stride)


class Dropout(Layer):
    kind = LayerKind.DROPOUT

    def __init__(self, rate: float, rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.rate = rate
        self.rng = rng

    def forward(self, x, training=False):
        y, mask = dropout(x, self.rate, training, self.rng)
        self.cache = {"mask": mask}
        return y

    def backward(self, dy):
        if self.cache is None:
            raise MissingForwardCache("dropout backward called before forward")
        return dropout_backward(dy, self.cache["mask"])

    def spec(self):
        return LayerSpec(kind=self.kind, rate=self.rate)


class Flatten(Layer):
    kind = LayerKind.FLATTEN

    def forward(self, x, training=False):
        self.cache = {"shape": x.shape}
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        if self.cache is None:
            raise MissingForwardCache("flatten backward called before forward")
        return dy.reshape(self.cache["shape"])


class Dense(Layer):
    kind = LayerKind.DENSE

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        super().__init__()
        self.params = [weight, bias]

    def forward(self, x, training=False):
        y, self.cache = dense_forward(x, self.params[0], self.params[1])
        return y

    def backward(self, dy):
        dx, dw, db = dense_backward(dy, self.cache)
        self.grads = [dw, db]
        return dx

    def spec(self):
        return LayerSpec(kind=self.kind, out_features=self.params[0].shape[1])
