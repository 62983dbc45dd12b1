"""
Shared pytest fixtures: synthetic WAV files and a small labeled corpus
"""

import os
import tempfile

# Timing logs of test runs stay out of the working tree
os.environ.setdefault("FSER_LOG_DIR", os.path.join(tempfile.gettempdir(), "fser-test-logs"))

from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from models import AudioClip, EmotionLabel  # noqa: E402
from services.audio_service import AudioService  # noqa: E402

SYNTHETIC_RATE = 16000
CLIPS_PER_CLASS = 3


def tone(frequency: float, seconds: float = 0.25, sample_rate: int = SYNTHETIC_RATE,
         amplitude: float = 0.5) -> AudioClip:
    t = np.arange(int(seconds * sample_rate)) / sample_rate
    return AudioClip(samples=amplitude * np.sin(2 * np.pi * frequency * t), sample_rate=sample_rate)


def write_tone(path: Path, frequency: float, seconds: float = 0.25, sample_rate: int = SYNTHETIC_RATE) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    AudioService.write_wav(tone(frequency, seconds, sample_rate), path)
    return path


def build_corpus(root: Path) -> Path:
    """Three tones per class under ``<root>/<emotion>/``, pitch rising with the class ordinal"""
    for label in EmotionLabel:
        for i in range(CLIPS_PER_CLASS):
            frequency = 200.0 * (label.value + 1) + 37.0 * i
            write_tone(root / label.name.lower() / f"clip{i}.wav", frequency)
    return root


@pytest.fixture
def wav_writer():
    return write_tone


@pytest.fixture
def synthetic_corpus(tmp_path) -> Path:
    """24 WAV files in the ``other`` corpus layout"""
    return build_corpus(tmp_path / "corpus")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
