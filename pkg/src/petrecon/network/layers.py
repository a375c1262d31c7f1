"""
Network layers with reverse-mode differentiation.

Every layer reads its parameters by name from a shared weight store, caches what it needs during
``forward`` and returns the input gradient from ``backward``, accumulating parameter gradients
into a dictionary. Tensors are ``(batch, channels, height, width)`` float64 arrays.
"""

from typing import Dict, MutableMapping, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

Gradients = Dict[str, np.ndarray]


def _pad_adjoint(g: np.ndarray, pad: int, mode: str) -> np.ndarray:
    """Adjoint of ``np.pad`` over the two spatial axes with ``edge`` or ``constant`` mode."""
    if pad == 0:
        return g
    inner = g[:, :, pad:-pad, pad:-pad].copy()
    if mode == "constant":
        return inner
    # Rows first on the full-width array, then columns
    rows = g[:, :, pad:-pad, :].copy()
    rows[:, :, 0, :] += g[:, :, :pad, :].sum(axis=2)
    rows[:, :, -1, :] += g[:, :, -pad:, :].sum(axis=2)
    inner = rows[:, :, :, pad:-pad].copy()
    inner[:, :, :, 0] += rows[:, :, :, :pad].sum(axis=3)
    inner[:, :, :, -1] += rows[:, :, :, -pad:].sum(axis=3)
    return inner


class Layer:
    """Base class of all layers."""

    def __init__(self, name: str):
        self.name = name

    def parameters(self) -> Dict[str, tuple]:
        """Shapes of the trainable parameters, keyed by full name."""
        return {}

    def buffers(self) -> Dict[str, np.ndarray]:
        """Initial values of the non-trainable buffers, keyed by full name."""
        return {}

    def forward(self, x: np.ndarray, weights: MutableMapping[str, np.ndarray], train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(
        self, g: np.ndarray, weights: MutableMapping[str, np.ndarray], grads: Optional[Gradients]
    ) -> np.ndarray:
        raise NotImplementedError


class Conv2d(Layer):
    """
    2D convolution through an im2col matrix product.

    Args:
        name: Parameter prefix
        in_channels: Input channel count
        out_channels: Output channel count
        kernel_size: Odd kernel size
        stride: 1 or 2
        padding_mode: ``edge`` (replicate) or ``constant`` (zeros)
    """

    def __init__(
        self, name: str, in_channels: int, out_channels: int, kernel_size: int = 3, stride: int = 1, padding_mode="edge"
    ):
        super().__init__(name)
        if kernel_size % 2 != 1:
            raise ValueError(f"Kernel size must be odd, got {kernel_size}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.k = kernel_size
        self.stride = stride
        self.pad = kernel_size // 2
        self.padding_mode = padding_mode
        self._cache = None

    @property
    def weight_name(self) -> str:
        return f"{self.name}.weight"

    @property
    def bias_name(self) -> str:
        return f"{self.name}.bias"

    def parameters(self) -> Dict[str, tuple]:
        return {
            self.weight_name: (self.out_channels, self.in_channels, self.k, self.k),
            self.bias_name: (self.out_channels,),
        }

    def forward(self, x, weights, train):
        b, c, h, w = x.shape
        p, k, s = self.pad, self.k, self.stride
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)), mode=self.padding_mode)
        windows = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        ho, wo = windows.shape[2], windows.shape[3]
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, c * k * k)
        kernel = weights[self.weight_name].reshape(self.out_channels, -1)
        out = cols @ kernel.T + weights[self.bias_name]
        self._cache = (x.shape, xp.shape, cols, ho, wo)
        return np.ascontiguousarray(out.reshape(b, ho, wo, self.out_channels).transpose(0, 3, 1, 2))

    def backward(self, g, weights, grads):
        x_shape, xp_shape, cols, ho, wo = self._cache
        b, c = x_shape[0], x_shape[1]
        k, s = self.k, self.stride
        g_mat = g.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)

        if grads is not None:
            grads[self.weight_name] = grads.get(self.weight_name, 0.0) + (g_mat.T @ cols).reshape(
                self.out_channels, c, k, k
            )
            grads[self.bias_name] = grads.get(self.bias_name, 0.0) + g_mat.sum(axis=0)

        kernel = weights[self.weight_name].reshape(self.out_channels, -1)
        g_cols = (g_mat @ kernel).reshape(b, ho, wo, c, k, k)
        g_xp = np.zeros(xp_shape, dtype=np.float64)
        for i in range(k):
            for j in range(k):
                g_xp[:, :, i : i + s * ho : s, j : j + s * wo : s] += g_cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return _pad_adjoint(g_xp, self.pad, self.padding_mode)


class ConvTranspose2d(Layer):
    """
    Stride-2 up-sampling convolution: zero insertion followed by a zero-padded convolution.

    The output is twice the input size along each spatial axis.
    """

    def __init__(self, name: str, in_channels: int, out_channels: int, kernel_size: int = 3):
        super().__init__(name)
        self.conv = Conv2d(name, in_channels, out_channels, kernel_size, stride=1, padding_mode="constant")

    def parameters(self):
        return self.conv.parameters()

    def forward(self, x, weights, train):
        b, c, h, w = x.shape
        up = np.zeros((b, c, 2 * h, 2 * w), dtype=np.float64)
        up[:, :, ::2, ::2] = x
        return self.conv.forward(up, weights, train)

    def backward(self, g, weights, grads):
        return np.ascontiguousarray(self.conv.backward(g, weights, grads)[:, :, ::2, ::2])


class BatchNorm2d(Layer):
    """
    Batch normalisation over batch and spatial axes.

    Train mode normalises with batch statistics and updates the running statistics by an
    exponential moving average; eval mode uses the running statistics.
    """

    def __init__(self, name: str, channels: int, momentum: float = 0.9, eps: float = 1e-5):
        super().__init__(name)
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.update_stats = True
        self._cache = None

    def parameters(self):
        return {f"{self.name}.gamma": (self.channels,), f"{self.name}.beta": (self.channels,)}

    def buffers(self):
        return {
            f"{self.name}.running_mean": np.zeros(self.channels),
            f"{self.name}.running_var": np.ones(self.channels),
        }

    def forward(self, x, weights, train):
        gamma = weights[f"{self.name}.gamma"][None, :, None, None]
        beta = weights[f"{self.name}.beta"][None, :, None, None]
        if train:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            if self.update_stats:
                rm, rv = f"{self.name}.running_mean", f"{self.name}.running_var"
                weights[rm] = self.momentum * weights[rm] + (1.0 - self.momentum) * mean
                weights[rv] = self.momentum * weights[rv] + (1.0 - self.momentum) * var
        else:
            mean = weights[f"{self.name}.running_mean"]
            var = weights[f"{self.name}.running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        self._cache = (train, x_hat, inv_std)
        return gamma * x_hat + beta

    def backward(self, g, weights, grads):
        train, x_hat, inv_std = self._cache
        gamma = weights[f"{self.name}.gamma"]
        if grads is not None:
            grads[f"{self.name}.gamma"] = grads.get(f"{self.name}.gamma", 0.0) + (g * x_hat).sum(axis=(0, 2, 3))
            grads[f"{self.name}.beta"] = grads.get(f"{self.name}.beta", 0.0) + g.sum(axis=(0, 2, 3))

        g_hat = g * gamma[None, :, None, None]
        scale = inv_std[None, :, None, None]
        if not train:
            return g_hat * scale
        n = g.shape[0] * g.shape[2] * g.shape[3]
        sum_g = g_hat.sum(axis=(0, 2, 3), keepdims=True)
        sum_gx = (g_hat * x_hat).sum(axis=(0, 2, 3), keepdims=True)
        return scale * (g_hat - sum_g / n - x_hat * sum_gx / n)


class ReLU(Layer):
    """Rectified linear unit."""

    def __init__(self, name: str):
        super().__init__(name)
        self.mask = None

    def forward(self, x, weights, train):
        self.mask = x > 0
        return np.where(self.mask, x, 0.0)

    def backward(self, g, weights, grads):
        return np.where(self.mask, g, 0.0)
