import logging
import struct
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from exceptions import EmptyData, MalformedHeader, UnsupportedEncoding
from models import AudioClip

logger = logging.getLogger(__name__)

CANONICAL_SAMPLE_RATE = 48000
PCM_FORMAT_TAG = 1
PCM_SCALE = 32768.0

PathLike = Union[str, Path]


class AudioService:
    """RIFF/WAVE ingestion and waveform canonicalization"""

    @staticmethod
    def load_wav(path: PathLike) -> AudioClip:
        """
        Decode a 16-bit PCM RIFF/WAVE file into a mono clip

        Args:
            path: WAV file

        Returns:
            AudioClip with samples scaled by 1/32768; stereo is mixed down by channel mean
        """
        path = str(path)
        try:
            raw = Path(path).read_bytes()
        except OSError as e:
            raise MalformedHeader(f"cannot read file: {e.strerror}", path=path)

        fmt, data = AudioService._read_chunks(raw, path)
        format_tag, channels, sample_rate, block_align, bits = fmt

        if format_tag != PCM_FORMAT_TAG:
            raise UnsupportedEncoding(f"format tag {format_tag} is not PCM", path=path)
        if bits != 16:
            raise UnsupportedEncoding(f"{bits}-bit samples are not supported, expected 16", path=path)
        if channels not in (1, 2):
            raise UnsupportedEncoding(f"{channels} channels are not supported", path=path)
        if sample_rate <= 0:
            raise MalformedHeader(f"invalid sample rate {sample_rate}", path=path)
        if block_align != channels * 2:
            raise MalformedHeader(f"block align {block_align} does not match {channels} x 16-bit", path=path)
        if len(data) == 0:
            raise EmptyData("data chunk is empty", path=path)
        if len(data) % block_align:
            raise MalformedHeader("data chunk ends mid-frame", path=path)

        frames = np.frombuffer(data, dtype="<i2").astype(np.float64) / PCM_SCALE
        if channels == 2:
            frames = frames.reshape(-1, 2).mean(axis=1)

        logger.debug(f"Decoded {path}: {frames.size} samples at {sample_rate} Hz, {channels} channel(s)")
        return AudioClip(samples=frames, sample_rate=sample_rate, source_path=path)

    @staticmethod
    def _read_chunks(raw: bytes, path: str) -> Tuple[Tuple[int, int, int, int, int], bytes]:
        """Walk the RIFF chunk list; returns the parsed fmt fields and the data payload"""
        if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
            raise MalformedHeader("missing RIFF/WAVE header", path=path)

        chunks: Dict[bytes, bytes] = {}
        offset = 12
        while offset + 8 <= len(raw):
            tag, size = struct.unpack_from("<4sI", raw, offset)
            offset += 8
            if offset + size > len(raw):
                raise MalformedHeader(f"chunk {tag!r} is truncated", path=path)
            # Other chunks (LIST, fact, ...) are skipped
            if tag in (b"fmt ", b"data") and tag not in chunks:
                chunks[tag] = raw[offset:offset + size]
            offset += size + (size & 1)

        if b"fmt " not in chunks:
            raise MalformedHeader("missing fmt chunk", path=path)
        if b"data" not in chunks:
            raise MalformedHeader("missing data chunk", path=path)
        if len(chunks[b"fmt "]) < 16:
            raise MalformedHeader("fmt chunk shorter than 16 bytes", path=path)

        format_tag, channels, sample_rate, _byte_rate, block_align, bits = struct.unpack_from(
            "<HHIIHH", chunks[b"fmt "], 0
        )
        return (format_tag, channels, sample_rate, block_align, bits), chunks[b"data"]

    @staticmethod
    def write_wav(clip: AudioClip, path: PathLike) -> None:
        """Write a clip as mono 16-bit PCM"""
        pcm = np.clip(np.round(clip.samples * PCM_SCALE), -32768, 32767).astype("<i2")
        data = pcm.tobytes()
        header = struct.pack(
            "<4sI4s4sIHHIIHH4sI",
            b"RIFF", 36 + len(data), b"WAVE",
            b"fmt ", 16, PCM_FORMAT_TAG, 1, clip.sample_rate, clip.sample_rate * 2, 2, 16,
            b"data", len(data),
        )
        Path(path).write_bytes(header + data)

    @staticmethod
    def resample(clip: AudioClip, target_rate: int) -> AudioClip:
        """
        Linear-interpolation resampling

        Output sample k sits at input position k * rate / target_rate; positions past
        the last input sample take the last value.
        """
        if target_rate <= 0:
            raise ValueError(f"target rate must be positive, got {target_rate}")
        if target_rate == clip.sample_rate:
            return AudioClip(samples=clip.samples.copy(), sample_rate=clip.sample_rate,
                             source_path=clip.source_path)

        n_in = clip.samples.size
        n_out = max(1, int(round(n_in * target_rate / clip.sample_rate)))
        positions = np.arange(n_out) * (clip.sample_rate / target_rate)
        samples = np.interp(positions, np.arange(n_in), clip.samples)
        logger.debug(f"Resampled {clip.source_path} from {clip.sample_rate} Hz to {target_rate} Hz")
        return AudioClip(samples=samples, sample_rate=target_rate, source_path=clip.source_path)

    @staticmethod
    def peak_normalize(clip: AudioClip) -> AudioClip:
        """Scale so that max |sample| is 1.0; an all-zero clip is returned unchanged"""
        peak = float(np.max(np.abs(clip.samples)))
        if peak == 0.0 or peak == 1.0:
            return clip
        return AudioClip(samples=clip.samples / peak, sample_rate=clip.sample_rate,
                         source_path=clip.source_path)
