from enum import Enum, IntEnum
from typing import List, Dict, Any, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

IMAGE_SIZE = 64
CLASS_COUNT = 8


# Labels and corpus bookkeeping
class EmotionLabel(IntEnum):
    """The 8 emotion classes; the ordinal is the network's output index"""

    ANGER = 0
    ANXIETY = 1
    CALM = 2
    DISGUST = 3
    HAPPINESS = 4
    NEUTRAL = 5
    SADNESS = 6
    SURPRISE = 7

    @property
    def display_name(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, text: str) -> "EmotionLabel":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"not an emotion class: {text!r}")


class Corpus(str, Enum):
    EMODB = "emodb"
    EMOVO = "emovo"
    SAVEE = "savee"
    RAVDESS = "ravdess"
    OTHER = "other"


class Split(str, Enum):
    UNASSIGNED = "unassigned"
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class SampleRecord(BaseModel):
    audio_path: str = Field(..., description="Path of the source WAV, relative to the manifest")
    image_path: Optional[str] = Field(None, description="Rendered 64x64 PPM, relative to the manifest")
    corpus: Corpus = Field(..., description="Source corpus")
    raw_label: str = Field(..., description="Emotion name as the source corpus spells it")
    label: EmotionLabel = Field(..., description="Mapped emotion class")
    split: Split = Field(default=Split.UNASSIGNED, description="Dataset split")
    is_augmented: bool = Field(default=False, description="True for generated training variants")

    @model_validator(mode="after")
    def _augmented_only_in_train(self) -> "SampleRecord":
        if self.is_augmented and self.split != Split.TRAIN:
            raise ValueError(f"augmented record {self.image_path} must be in the train split")
        return self


class DatasetManifest(BaseModel):
    records: List[SampleRecord] = Field(default_factory=list)
    seed: int = Field(default=0, description="Seed of the last split")

    @model_validator(mode="after")
    def _unique_originals(self) -> "DatasetManifest":
        seen = set()
        for record in self.records:
            if record.is_augmented:
                continue
            if record.audio_path in seen:
                raise ValueError(f"duplicate audio_path in manifest: {record.audio_path}")
            seen.add(record.audio_path)
        return self

    def originals(self) -> List[SampleRecord]:
        return [r for r in self.records if not r.is_augmented]

    def in_split(self, split: Split) -> List[SampleRecord]:
        return [r for r in self.records if r.split == split]


class ClassDistribution(BaseModel):
    counts: Dict[EmotionLabel, int] = Field(..., description="Records per class")
    percentages: Dict[EmotionLabel, float] = Field(..., description="100*count/total, 2 decimals half-up")
    total: int


# Audio and features
class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


class AudioClip(_ArrayModel):
    samples: np.ndarray = Field(..., description="Mono amplitudes in [-1, 1]")
    sample_rate: int = Field(..., gt=0, description="Hz")
    source_path: str = Field(default="", description="File the clip was decoded from")

    @field_validator("samples", mode="before")
    @classmethod
    def _as_float_array(cls, value: Any) -> np.ndarray:
        samples = np.asarray(value, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if np.max(np.abs(samples)) > 1.0:
            raise ValueError("samples must lie in [-1, 1]")
        return samples

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


class ComplexSpectrum(_ArrayModel):
    bins: np.ndarray = Field(..., description="Complex FFT bins")

    @field_validator("bins", mode="before")
    @classmethod
    def _power_of_two(cls, value: Any) -> np.ndarray:
        bins = np.asarray(value, dtype=np.complex128)
        n = bins.shape[-1] if bins.ndim else 0
        if n < 1 or n & (n - 1):
            raise ValueError(f"spectrum length {n} is not a power of two")
        return bins

    def as_pairs(self) -> List[Tuple[float, float]]:
        return [(float(b.real), float(b.imag)) for b in self.bins]


class Spectrogram(_ArrayModel):
    values: np.ndarray = Field(..., description="Power values [n_fft/2 + 1, n_frames]")
    sample_rate: int
    n_fft: int
    hop_length: int

    @model_validator(mode="after")
    def _check_shape(self) -> "Spectrogram":
        if self.values.shape[0] != self.n_fft // 2 + 1:
            raise ValueError(f"expected {self.n_fft // 2 + 1} frequency bins, got {self.values.shape[0]}")
        if np.any(self.values < 0):
            raise ValueError("power values must be non-negative")
        return self

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


class MelFilterbank(_ArrayModel):
    weights: np.ndarray = Field(..., description="[n_mels, n_fft/2 + 1] triangular weights")
    n_mels: int
    f_min: float
    f_max: float
    sample_rate: int
    n_fft: int
    edges_hz: np.ndarray = Field(..., description="n_mels + 2 band edges in Hz")
    empty_bands: List[int] = Field(default_factory=list, description="Rows with no FFT bin in their support")


class MelSpectrogram(_ArrayModel):
    values: np.ndarray = Field(..., description="[n_mels, n_frames] in dB, max 0")
    sample_rate: int
    n_fft: int
    hop_length: int
    top_db: float = 80.0

    @model_validator(mode="after")
    def _check_range(self) -> "MelSpectrogram":
        if self.values.size and self.values.max() - self.values.min() > self.top_db + 1e-9:
            raise ValueError(f"dynamic range exceeds {self.top_db} dB")
        return self

    @property
    def n_mels(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


# Images
class SpectroImage(_ArrayModel):
    pixels: np.ndarray = Field(..., description="[64, 64, 3] RGB in [0, 1], row 0 = highest frequency")
    label: Optional[EmotionLabel] = None

    @field_validator("pixels", mode="before")
    @classmethod
    def _check_pixels(cls, value: Any) -> np.ndarray:
        pixels = np.asarray(value, dtype=np.float64)
        if pixels.shape != (IMAGE_SIZE, IMAGE_SIZE, 3):
            raise ValueError(f"image must be {IMAGE_SIZE}x{IMAGE_SIZE}x3, got {pixels.shape}")
        if pixels.min() < 0.0 or pixels.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        return pixels


class Colormap(BaseModel):
    anchors: List[Tuple[float, Tuple[float, float, float]]]

    @field_validator("anchors")
    @classmethod
    def _check_anchors(cls, anchors):
        positions = [p for p, _ in anchors]
        if len(positions) < 2 or positions[0] != 0.0 or positions[-1] != 1.0:
            raise ValueError("colormap anchors must start at 0 and end at 1")
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise ValueError("colormap anchor positions must be strictly increasing")
        return anchors


# Augmentation
class AugmentConfig(BaseModel):
    width_shift_frac: float = Field(default=0.1, ge=0.0, le=0.5)
    height_shift_frac: float = Field(default=0.1, ge=0.0, le=0.5)
    zoom_range: Tuple[float, float] = Field(default=(0.9, 1.1), description="(low, high) scale factors")
    allow_hflip: bool = True
    variants_per_image: int = Field(default=20, ge=0)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("zoom_range")
    @classmethod
    def _check_zoom(cls, zoom_range):
        low, high = zoom_range
        if not (0.5 <= low <= high <= 2.0):
            raise ValueError(f"zoom range must satisfy 0.5 <= low <= high <= 2.0, got {zoom_range}")
        return zoom_range


class AugmentParams(BaseModel):
    dx: float
    dy: float
    scale: float
    flip: bool


# Network and training
class LayerKind(IntEnum):
    CONV2D = 1
    RELU = 2
    MAXPOOL2D = 3
    DROPOUT = 4
    FLATTEN = 5
    DENSE = 6


class LayerSpec(BaseModel):
    kind: LayerKind
    out_channels: int = 0
    kernel: int = 0
    stride: int = 0
    padding: int = 0
    window: int = 0
    rate: float = 0.0
    out_features: int = 0


class TrainConfig(BaseModel):
    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=0.001, gt=0.0)
    epochs: int = Field(default=400, ge=0)
    seed: int = Field(default=0, ge=0)
    shuffle: bool = True


class EpochLog(BaseModel):
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


class Checkpoint(_ArrayModel):
    version: int
    layers: List[LayerSpec]
    tensors: List[np.ndarray]
    epoch: int = 0
    rng_state: str = Field(default="", description="Dropout generator state as canonical JSON")


class Prediction(BaseModel):
    probabilities: List[float] = Field(..., description="One probability per EmotionLabel ordinal")
    label: EmotionLabel


# Metrics
class ConfusionMatrix(BaseModel):
    counts: List[List[int]] = Field(..., description="Rows = expected, columns = predicted")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


class ClassMetrics(BaseModel):
    label: EmotionLabel
    precision: float
    recall: float
    f1: float
    support: int
    auc: Optional[float] = None


class AverageMetrics(BaseModel):
    precision: float
    recall: float
    f1: float
    support: int
    auc: Optional[float] = None


class ClassificationReport(BaseModel):
    classes: List[ClassMetrics]
    accuracy: float
    macro: AverageMetrics
    weighted: AverageMetrics


# CLI
class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sample_rate: int = Field(default=48000, gt=0)
    n_fft: int = Field(default=512, gt=0)
    hop_length: int = Field(default=512, gt=0)
    n_mels: int = Field(default=64, ge=1)
    f_min: float = Field(default=0.0, ge=0.0)
    f_max: Optional[float] = None
    top_db: float = Field(default=80.0, gt=0.0)
    peak_normalize: bool = True
    strict_filterbank: bool = False

    width_shift_frac: float = Field(default=0.1, ge=0.0, le=0.5)
    height_shift_frac: float = Field(default=0.1, ge=0.0, le=0.5)
    zoom_low: float = 0.9
    zoom_high: float = 1.1
    allow_hflip: bool = True
    variants_per_image: int = Field(default=20, ge=0)

    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=0.001, gt=0.0)
    epochs: int = Field(default=400, ge=0)
    shuffle: bool = True
    seed: int = Field(default=0, ge=0)

    workers: int = Field(default=1, ge=1)
    images_dir: str = "images"
    output_dir: str = "outputs"
    checkpoint_path: str = "outputs/fser.ckpt"
    epoch_log_path: str = "outputs/epochs.csv"

    def augment_config(self) -> AugmentConfig:
        return AugmentConfig(
            width_shift_frac=self.width_shift_frac,
            height_shift_frac=self.height_shift_frac,
            zoom_range=(self.zoom_low, self.zoom_high),
            allow_hflip=self.allow_hflip,
            variants_per_image=self.variants_per_image,
            seed=self.seed,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            seed=self.seed,
            shuffle=self.shuffle,
        )


class CommandResult(BaseModel):
    success: bool
    data: Optional[Dict[str, Any]] = None
    message: str
    error: Optional[str] = None
    failures: List[str] = Field(default_factory=list, description="Per-item failure messages")
