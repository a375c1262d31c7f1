"""
Residual encoder-decoder network.

The network maps a five-channel slice stack (a slice and its two neighbours on each side) to
one output slice. Down-sampling uses stride-2 convolutions, up-sampling stride-2 transposed
convolutions, encoder features are added (not concatenated) to the decoder, and the centre
input channel is added to the output.
"""

from collections import OrderedDict
from typing import Dict, Iterator, List, MutableMapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from petrecon.constants import CENTER_CHANNEL, NETWORK_IN_CHANNELS
from petrecon.errors import DimensionError
from petrecon.network.layers import BatchNorm2d, Conv2d, ConvTranspose2d, Gradients, Layer, ReLU

HEAD_INIT_SCALE = 0.1


class NetworkConfig(BaseModel):
    """
    Network architecture.

    Attributes:
        in_channels: Input channels, always 5
        scales: Number of encoder levels
        channels: Feature channels per level
        kernel_size: Odd convolution kernel size
        batch_norm: Insert batch normalisation after every hidden convolution
        residual: Add the centre input channel to the output
        bn_momentum: Weight of the old running statistics
        bn_eps: Variance offset of batch normalisation
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    in_channels: int = NETWORK_IN_CHANNELS
    scales: int = Field(3, ge=1)
    channels: Tuple[int, ...] = (16, 32, 64)
    kernel_size: int = Field(3, ge=1)
    batch_norm: bool = True
    residual: bool = True
    bn_momentum: float = Field(0.9, ge=0, lt=1)
    bn_eps: float = Field(1e-5, gt=0)

    @model_validator(mode="after")
    def _check(self) -> "NetworkConfig":
        if self.in_channels != NETWORK_IN_CHANNELS:
            raise ValueError(f"in_channels must be {NETWORK_IN_CHANNELS}")
        if self.kernel_size % 2 != 1:
            raise ValueError("kernel_size must be odd")
        if len(self.channels) != self.scales or min(self.channels) < 1:
            raise ValueError(f"channels needs one positive entry per scale ({self.scales})")
        return self

    @property
    def size_multiple(self) -> int:
        return 2 ** (self.scales - 1)


class NetworkWeights(MutableMapping):
    """
    Ordered mapping of parameter and buffer arrays.

    Args:
        arrays: Name -> array in network order
        parameter_names: Names of the trainable entries; the rest are buffers
    """

    def __init__(self, arrays: "OrderedDict[str, np.ndarray]", parameter_names: List[str]):
        self._arrays = OrderedDict((k, np.asarray(v, dtype=np.float64)) for k, v in arrays.items())
        self.parameter_names = list(parameter_names)

    def __getitem__(self, key: str) -> np.ndarray:
        return self._arrays[key]

    def __setitem__(self, key: str, value: np.ndarray) -> None:
        if key not in self._arrays:
            raise KeyError(f"Unknown weight '{key}'")
        self._arrays[key] = np.asarray(value, dtype=np.float64)

    def __delitem__(self, key: str) -> None:
        raise TypeError("Weights cannot be removed")

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    @property
    def buffer_names(self) -> List[str]:
        params = set(self.parameter_names)
        return [k for k in self._arrays if k not in params]

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {k: v.shape for k, v in self._arrays.items()}

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(OrderedDict((k, v.copy()) for k, v in self._arrays.items()), self.parameter_names)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self._arrays.values())


class ResidualUNet:
    """
    The residual U-net.

    Args:
        config: Architecture
        weights: Weights matching the architecture; use ``create`` for fresh ones
    """

    def __init__(self, config: NetworkConfig, weights: NetworkWeights):
        self.config = config
        self._build()
        expected = self.weight_shapes()
        if weights.shapes() != expected:
            raise DimensionError("Network weights do not match the architecture")
        self.weights = weights
        self._cache = None

    @classmethod
    def create(cls, config: NetworkConfig, seed: int = 0) -> "ResidualUNet":
        """A network with He-normal kernels, zero biases and unit batch-norm scales."""
        net = cls.__new__(cls)
        net.config = config
        net._build()
        rng = np.random.default_rng(seed)
        arrays = OrderedDict()
        parameter_names = []
        for layer in net._all_layers():
            for name, shape in layer.parameters().items():
                parameter_names.append(name)
                if name.endswith(".weight"):
                    fan_in = shape[1] * shape[2] * shape[3]
                    std = np.sqrt(2.0 / fan_in)
                    if layer is net.head:
                        std *= HEAD_INIT_SCALE
                    arrays[name] = rng.normal(0.0, std, size=shape)
                elif name.endswith(".gamma"):
                    arrays[name] = np.ones(shape)
                else:
                    arrays[name] = np.zeros(shape)
            arrays.update(layer.buffers())
        return cls(config, NetworkWeights(arrays, parameter_names))

    @classmethod
    def identity(cls, config: NetworkConfig) -> "ResidualUNet":
        """A residual network whose parameters are all zero, so it returns the centre channel."""
        net = cls.create(config)
        for name in net.weights.parameter_names:
            net.weights[name] = np.zeros_like(net.weights[name])
        return net

    def _build(self) -> None:
        cfg = self.config
        k = cfg.kernel_size
        ch = cfg.channels

        def block(prefix: str, c_in: int, c_out: int, stride: int = 1) -> List[Layer]:
            layers: List[Layer] = [Conv2d(f"{prefix}.conv", c_in, c_out, k, stride=stride)]
            if cfg.batch_norm:
                layers.append(BatchNorm2d(f"{prefix}.bn", c_out, cfg.bn_momentum, cfg.bn_eps))
            layers.append(ReLU(f"{prefix}.relu"))
            return layers

        self.encoder: List[List[Layer]] = []
        for level in range(cfg.scales):
            if level == 0:
                layers = block("enc0.in", cfg.in_channels, ch[0])
            else:
                layers = block(f"enc{level}.down", ch[level - 1], ch[level], stride=2)
            layers += block(f"enc{level}.block", ch[level], ch[level])
            self.encoder.append(layers)

        self.up: List[List[Layer]] = []
        self.decoder: List[List[Layer]] = []
        for level in range(cfg.scales - 2, -1, -1):
            up: List[Layer] = [ConvTranspose2d(f"dec{level}.up", ch[level + 1], ch[level], k)]
            if cfg.batch_norm:
                up.append(BatchNorm2d(f"dec{level}.up_bn", ch[level], cfg.bn_momentum, cfg.bn_eps))
            up.append(ReLU(f"dec{level}.up_relu"))
            self.up.append(up)
            self.decoder.append(block(f"dec{level}.block", ch[level], ch[level]))

        self.head = Conv2d("head", ch[0], 1, k)

    def _all_layers(self) -> List[Layer]:
        layers = [layer for group in self.encoder for layer in group]
        for up, dec in zip(self.up, self.decoder):
            layers += up + dec
        layers.append(self.head)
        return layers

    def weight_shapes(self) -> Dict[str, Tuple[int, ...]]:
        shapes = OrderedDict()
        for layer in self._all_layers():
            shapes.update(layer.parameters())
            shapes.update({name: value.shape for name, value in layer.buffers().items()})
        return shapes

    def check_input(self, x: np.ndarray) -> None:
        if x.ndim != 4 or x.shape[1] != self.config.in_channels:
            raise DimensionError(f"Expected input (batch, {self.config.in_channels}, h, w), got {x.shape}")
        m = self.config.size_multiple
        if x.shape[2] % m or x.shape[3] % m:
            raise DimensionError(f"Spatial size {x.shape[2:]} is not divisible by {m}")

    @staticmethod
    def _run(layers: List[Layer], x, weights, train):
        for layer in layers:
            x = layer.forward(x, weights, train)
        return x

    @staticmethod
    def _run_back(layers: List[Layer], g, weights, grads):
        for layer in reversed(layers):
            g = layer.backward(g, weights, grads)
        return g

    def forward(self, x: np.ndarray, mode: str = "eval", update_stats: bool = True) -> np.ndarray:
        """
        Run the network.

        Args:
            x: Input of shape ``(batch, 5, h, w)``
            mode: ``train`` normalises with batch statistics, ``eval`` with running statistics
            update_stats: In train mode, update the batch-norm running statistics

        Returns:
            np.ndarray: Output of shape ``(batch, 1, h, w)``
        """
        if mode not in ("train", "eval"):
            raise ValueError(f"Unknown mode '{mode}'")
        self.check_input(x)
        x = np.asarray(x, dtype=np.float64)
        train = mode == "train"
        w = self.weights
        for layer in self._all_layers():
            if isinstance(layer, BatchNorm2d):
                layer.update_stats = update_stats

        skips = []
        h = x
        for layers in self.encoder:
            h = self._run(layers, h, w, train)
            skips.append(h)
        for i, (up, dec) in enumerate(zip(self.up, self.decoder)):
            level = self.config.scales - 2 - i
            h = self._run(up, h, w, train) + skips[level]
            h = self._run(dec, h, w, train)
        out = self.head.forward(h, w, train)
        if self.config.residual:
            out = out + x[:, CENTER_CHANNEL : CENTER_CHANNEL + 1]
        self._cache = x.shape
        return out

    def backward(self, g: np.ndarray, grads: Optional[Gradients] = None) -> np.ndarray:
        """
        Back-propagate an output cotangent through the last forward pass.

        Args:
            g: Cotangent of shape ``(batch, 1, h, w)``
            grads: Dictionary receiving parameter gradients, None to skip them

        Returns:
            np.ndarray: Gradient with respect to the input
        """
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        x_shape = self._cache
        expected = (x_shape[0], 1, x_shape[2], x_shape[3])
        if g.shape != expected:
            raise DimensionError(f"Cotangent shape {g.shape} does not match output {expected}")
        w = self.weights

        gh = self.head.backward(g, w, grads)
        skip_grads = [None] * self.config.scales

        # Decoder stages ran from the deepest level up; walk them in reverse
        for stage in range(len(self.decoder) - 1, -1, -1):
            level = self.config.scales - 2 - stage
            gh = self._run_back(self.decoder[stage], gh, w, grads)
            skip_grads[level] = gh
            gh = self._run_back(self.up[stage], gh, w, grads)

        for level in range(self.config.scales - 1, -1, -1):
            if skip_grads[level] is not None:
                gh = gh + skip_grads[level]
            gh = self._run_back(self.encoder[level], gh, w, grads)
        gx = gh
        if self.config.residual:
            gx = gx.copy()
            gx[:, CENTER_CHANNEL : CENTER_CHANNEL + 1] += g
        return gx

    def relu_pattern(self) -> np.ndarray:
        """Concatenated activation masks of all ReLUs from the last forward pass."""
        masks = [layer.mask.ravel() for layer in self._all_layers() if isinstance(layer, ReLU)]
        return np.concatenate(masks) if masks else np.zeros(0, dtype=bool)


def forward(net: ResidualUNet, x: np.ndarray, mode: str = "eval") -> np.ndarray:
    """Run ``net`` on ``x``; see ``ResidualUNet.forward``."""
    return net.forward(x, mode)


def l2_loss(pred: np.ndarray, label: np.ndarray) -> float:
    """Mean squared error over all elements."""
    if pred.shape != label.shape:
        raise DimensionError(f"Prediction shape {pred.shape} does not match label {label.shape}")
    return float(np.mean((pred - label) ** 2))


def backward_weights(
    net: ResidualUNet, x: np.ndarray, label: np.ndarray, mode: str = "train", update_stats: bool = True
) -> Tuple[float, Gradients]:
    """
    Loss and exact parameter gradients of the mean squared error.

    Args:
        net: The network
        x: Input batch
        label: Target batch of shape ``(batch, 1, h, w)``
        mode: Forward mode, train by default
        update_stats: Update the batch-norm running statistics during the forward pass

    Returns:
        tuple: ``(loss, gradients)`` with one gradient per trainable parameter
    """
    pred = net.forward(x, mode, update_stats=update_stats)
    loss = l2_loss(pred, label)
    grads: Gradients = {}
    net.backward(2.0 * (pred - label) / pred.size, grads)
    for name in net.weights.parameter_names:
        if name not in grads:
            grads[name] = np.zeros_like(net.weights[name])
    return loss, grads


def vjp_input(net: ResidualUNet, x: np.ndarray, cotangent: np.ndarray, mode: str = "eval") -> np.ndarray:
    """
    Vector-Jacobian product of the network with respect to its input.

    Args:
        net: The network
        x: Input batch ``(batch, 5, h, w)``
        cotangent: Output cotangent ``(batch, 1, h, w)``
        mode: Forward mode, eval by default (train mode does not touch running statistics here)

    Returns:
        np.ndarray: ``J^T cotangent`` of the input's shape
    """
    net.forward(x, mode, update_stats=False)
    return net.backward(np.asarray(cotangent, dtype=np.float64))
