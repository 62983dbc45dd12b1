import json
import logging
from typing import List, Optional, Sequence

import numpy as np

from exceptions import ShapeMismatch
from models import CLASS_COUNT, IMAGE_SIZE, EmotionLabel, LayerKind, LayerSpec, Prediction, SpectroImage
from services.nn_layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, ReLU, softmax

logger = logging.getLogger(__name__)

CONV_CHANNELS = (32, 64, 128, 256)
CONV_DROPOUT = 0.25
DENSE_WIDTHS = (512, 256)
DENSE_DROPOUT = 0.5


class Network:
    """Ordered layer stack ending in class logits"""

    def __init__(self, layers: List[Layer], class_count: int = CLASS_COUNT,
                 rng: Optional[np.random.Generator] = None):
        self.layers = layers
        self.class_count = class_count
        self.rng = rng if rng is not None else np.random.default_rng(0)
        for layer in layers:
            if isinstance(layer, Dropout):
                layer.rng = self.rng

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, training=training)
        if x.ndim != 2 or x.shape[1] != self.class_count:
            raise ShapeMismatch(f"network produced {x.shape}, expected [N, {self.class_count}]")
        return x

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        grad = dlogits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self) -> List[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    def gradients(self) -> List[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def sgd_step(self, learning_rate: float) -> None:
        """theta <- theta - lr * grad, in place"""
        for param, grad in zip(self.parameters(), self.gradients()):
            param -= learning_rate * grad

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.forward(x, training=False))

    def layer_specs(self) -> List[LayerSpec]:
        return [layer.spec() for layer in self.layers]

    def rng_state(self) -> str:
        return json.dumps(self.rng.bit_generator.state, sort_keys=True, separators=(",", ":"))

    def set_rng_state(self, state: str) -> None:
        if state:
            self.rng.bit_generator.state = json.loads(state)

    @classmethod
    def from_specs(cls, specs: Sequence[LayerSpec], tensors: Sequence[np.ndarray],
                   rng_state: str = "") -> "Network":
        """Rebuild a network from its layer table and parameters in layer order"""
        tensors = list(tensors)
        layers: List[Layer] = []
        for spec in specs:
            if spec.kind in (LayerKind.CONV2D, LayerKind.DENSE):
                if len(tensors) < 2:
                    raise ShapeMismatch(f"layer {spec.kind.name} is missing its weight or bias tensor")
                weight, bias = tensors.pop(0), tensors.pop(0)
                if spec.kind == LayerKind.CONV2D:
                    layers.append(Conv2D(weight, bias, stride=spec.stride, padding=spec.padding))
                else:
                    layers.append(Dense(weight, bias))
            elif spec.kind == LayerKind.RELU:
                layers.append(ReLU())
            elif spec.kind == LayerKind.MAXPOOL2D:
                layers.append(MaxPool2D(window=spec.window, stride=spec.stride))
            elif spec.kind == LayerKind.DROPOUT:
                layers.append(Dropout(spec.rate))
            elif spec.kind == LayerKind.FLATTEN:
                layers.append(Flatten())
        if tensors:
            raise ShapeMismatch(f"{len(tensors)} tensors left over after rebuilding the layer table")

        class_count = next(s.out_features for s in reversed(specs) if s.kind == LayerKind.DENSE)
        network = cls(layers, class_count=class_count)
        network.set_rng_state(rng_state)
        return network


class NetworkService:
    """FSER architecture construction and inference"""

    @staticmethod
    def he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
        bound = np.sqrt(6.0 / fan_in)
        return rng.uniform(-bound, bound, size=shape)

    @staticmethod
    def build_fser_network(seed: int = 0) -> Network:
        """
        Four conv blocks (3x3 conv + ReLU + 2x2 max pool + dropout) and three dense layers

        Input is [N, 3, 64, 64]; spatial size after the blocks is 32, 16, 8, 4, so the
        flattened feature vector has 256 * 4 * 4 = 4096 entries.

        Args:
            seed: Seeds both the He-uniform initialization and the dropout generator

        Returns:
            Network with zero biases
        """
        rng = np.random.default_rng(seed)
        layers: List[Layer] = []
        in_channels = 3
        for channels in CONV_CHANNELS:
            weight = NetworkService.he_uniform(rng, (channels, in_channels, 3, 3), fan_in=in_channels * 9)
            layers += [
                Conv2D(weight, np.zeros(channels), stride=1, padding=1),
                ReLU(),
                MaxPool2D(window=2, stride=2),
                Dropout(CONV_DROPOUT),
            ]
            in_channels = channels

        layers.append(Flatten())
        in_features = in_channels * (IMAGE_SIZE // 2 ** len(CONV_CHANNELS)) ** 2
        for width in DENSE_WIDTHS:
            weight = NetworkService.he_uniform(rng, (in_features, width), fan_in=in_features)
            layers += [Dense(weight, np.zeros(width)), ReLU(), Dropout(DENSE_DROPOUT)]
            in_features = width
        weight = NetworkService.he_uniform(rng, (in_features, CLASS_COUNT), fan_in=in_features)
        layers.append(Dense(weight, np.zeros(CLASS_COUNT)))

        network = Network(layers, class_count=CLASS_COUNT, rng=rng)
        logger.debug(f"Built FSER network with {network.parameter_count()} parameters (seed={seed})")
        return network

    @staticmethod
    def images_to_batch(images: Sequence[SpectroImage]) -> np.ndarray:
        """Stack [64, 64, 3] images into an [N, 3, 64, 64] batch"""
        if not images:
            return np.zeros((0, 3, IMAGE_SIZE, IMAGE_SIZE))
        return np.ascontiguousarray(np.stack([img.pixels for img in images]).transpose(0, 3, 1, 2))

    @staticmethod
    def predict(network: Network, images: Sequence[SpectroImage], batch_size: int = 64) -> List[Prediction]:
        """Class distribution and argmax label per image, dropout disabled"""
        predictions = []
        for start in range(0, len(images), batch_size):
            batch = NetworkService.images_to_batch(images[start:start + batch_size])
            for row in network.predict_proba(batch):
                predictions.append(Prediction(
                    probabilities=[float(p) for p in row],
                    label=EmotionLabel(int(np.argmax(row))),
                ))
        return predictions
