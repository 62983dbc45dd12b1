import logging
from typing import Any, Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from exceptions import ClipTooShort, DegenerateBand, NonPowerOfTwoLength
from models import AudioClip, ComplexSpectrum, MelFilterbank, MelSpectrogram, Spectrogram

logger = logging.getLogger(__name__)

DEFAULT_N_FFT = 512
DEFAULT_HOP = 512
DEFAULT_N_MELS = 64
DEFAULT_TOP_DB = 80.0
POWER_FLOOR = 1e-10

ArrayLike = Union[np.ndarray, list, tuple]


def is_power_of_two(n: int) -> bool:
    return n >= 1 and not (n & (n - 1))


class DSPService:
    """Spectral analysis: radix-2 FFT, STFT and mel features"""

    @staticmethod
    def _as_complex(signal: Any) -> np.ndarray:
        x = np.asarray(signal)
        # A sequence of (real, imaginary) pairs
        if x.ndim == 2 and x.shape[1] == 2 and not np.iscomplexobj(x):
            return x[:, 0].astype(np.float64) + 1j * x[:, 1].astype(np.float64)
        return x.astype(np.complex128)

    @staticmethod
    def fft_batch(frames: np.ndarray, inverse: bool = False) -> np.ndarray:
        """
        Iterative radix-2 decimation-in-time FFT over the last axis

        Args:
            frames: Complex or real array, last axis a power of two
            inverse: Apply the conjugate kernel and scale by 1/N

        Returns:
            complex128 array of the same shape
        """
        x = np.asarray(frames, dtype=np.complex128)
        n = x.shape[-1]
        if not is_power_of_two(n):
            raise NonPowerOfTwoLength(f"FFT length {n} is not a power of two")

        bits = n.bit_length() - 1
        indices = np.arange(n)
        reversed_indices = np.zeros(n, dtype=np.int64)
        for b in range(bits):
            reversed_indices |= ((indices >> b) & 1) << (bits - 1 - b)
        x = x[..., reversed_indices]

        batch_shape = x.shape[:-1]
        sign = 1.0 if inverse else -1.0
        half = 1
        while half < n:
            step = 2 * half
            twiddles = np.exp(sign * 2j * np.pi * np.arange(half) / step)
            blocks = x.reshape(*batch_shape, n // step, step)
            even = blocks[..., :half]
            odd = blocks[..., half:] * twiddles
            x = np.concatenate([even + odd, even - odd], axis=-1).reshape(*batch_shape, n)
            half = step

        if inverse:
            x = x / n
        return x

    @staticmethod
    def fft_radix2(signal: Any, inverse: bool = False) -> ComplexSpectrum:
        """Forward (or inverse) DFT of one signal given as complex values or (re, im) pairs"""
        x = DSPService._as_complex(signal)
        if x.ndim != 1:
            raise NonPowerOfTwoLength(f"expected a 1-D signal, got shape {x.shape}")
        return ComplexSpectrum(bins=DSPService.fft_batch(x, inverse=inverse))

    @staticmethod
    def naive_dft(signal: Any, inverse: bool = False) -> np.ndarray:
        """O(N^2) reference transform"""
        x = DSPService._as_complex(signal)
        n = x.size
        k = np.arange(n)
        # Reduce kn mod N before scaling so large products keep full precision
        phase = (np.outer(k, k) % n) / n
        sign = 1.0 if inverse else -1.0
        result = np.exp(sign * 2j * np.pi * phase) @ x
        return result / n if inverse else result

    @staticmethod
    def hann_window(length: int) -> np.ndarray:
        """Symmetric Hann window w[n] = 0.5 * (1 - cos(2 pi n / (N - 1)))"""
        if length == 1:
            return np.ones(1)
        n = np.arange(length)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / (length - 1)))

    @staticmethod
    def frame_count(length: int, n_fft: int, hop_length: int) -> int:
        return 1 + (length - n_fft) // hop_length

    @staticmethod
    def stft(clip: AudioClip, n_fft: int = DEFAULT_N_FFT, hop_length: int = DEFAULT_HOP) -> Spectrogram:
        """
        Power spectrogram of Hann-windowed frames

        Frames start at sample 0 with no center padding; a trailing partial frame is dropped.
        """
        if not is_power_of_two(n_fft):
            raise NonPowerOfTwoLength(f"n_fft {n_fft} is not a power of two")
        if hop_length < 1:
            raise ValueError(f"hop length must be positive, got {hop_length}")
        length = clip.samples.size
        if length < n_fft:
            raise ClipTooShort(f"clip has {length} samples, fewer than n_fft={n_fft}", path=clip.source_path or None)

        frames = sliding_window_view(clip.samples, n_fft)[::hop_length]
        spectrum = DSPService.fft_batch(frames * DSPService.hann_window(n_fft))
        power = np.abs(spectrum[:, : n_fft // 2 + 1]) ** 2
        return Spectrogram(values=power.T.copy(), sample_rate=clip.sample_rate, n_fft=n_fft, hop_length=hop_length)

    @staticmethod
    def hz_to_mel(f):
        """HTK-style mel scale, m = 2595 log10(1 + f/700)"""
        return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)

    @staticmethod
    def mel_to_hz(m):
        return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)

    @staticmethod
    def build_mel_filterbank(sample_rate: int, n_fft: int = DEFAULT_N_FFT, n_mels: int = DEFAULT_N_MELS,
                             f_min: float = 0.0, f_max: Optional[float] = None,
                             strict: bool = False) -> MelFilterbank:
        """
        Triangular mel filterbank with Slaney area normalization

        Args:
            sample_rate: Hz
            n_fft: FFT length
            n_mels: Number of bands
            f_min: Lowest edge in Hz
            f_max: Highest edge in Hz, defaults to sample_rate / 2
            strict: Raise DegenerateBand instead of reporting empty rows

        Returns:
            MelFilterbank; rows without any FFT bin in their support are kept and listed in empty_bands
        """
        f_max = sample_rate / 2.0 if f_max is None else float(f_max)
        if n_mels < 1:
            raise ValueError(f"n_mels must be at least 1, got {n_mels}")
        if not (0.0 <= f_min < f_max <= sample_rate / 2.0):
            raise ValueError(f"need 0 <= f_min < f_max <= {sample_rate / 2.0}, got ({f_min}, {f_max})")

        edges_mel = np.linspace(DSPService.hz_to_mel(f_min), DSPService.hz_to_mel(f_max), n_mels + 2)
        edges_hz = DSPService.mel_to_hz(edges_mel)
        bin_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft

        lower, center, upper = edges_hz[:-2, None], edges_hz[1:-1, None], edges_hz[2:, None]
        rising = (bin_freqs[None, :] - lower) / (center - lower)
        falling = (upper - bin_freqs[None, :]) / (upper - center)
        weights = np.maximum(0.0, np.minimum(rising, falling))
        weights *= (2.0 / (edges_hz[2:] - edges_hz[:-2]))[:, None]

        empty_bands = [int(i) for i in np.flatnonzero(~np.any(weights > 0, axis=1))]
        if empty_bands:
            message = (f"mel bands {empty_bands} contain no FFT bin "
                       f"(sr={sample_rate}, n_fft={n_fft}, n_mels={n_mels})")
            if strict:
                raise DegenerateBand(message)
            logger.warning(f"Empty mel filters: {message}")

        return MelFilterbank(weights=weights, n_mels=n_mels, f_min=float(f_min), f_max=f_max,
                             sample_rate=sample_rate, n_fft=n_fft, edges_hz=edges_hz, empty_bands=empty_bands)

    @staticmethod
    def power_to_db(power: np.ndarray, top_db: float = DEFAULT_TOP_DB) -> np.ndarray:
        """10 log10(max(S, eps) / max(max(S), eps)), floored at -top_db"""
        reference = max(float(np.max(power)), POWER_FLOOR)
        db = 10.0 * np.log10(np.maximum(power, POWER_FLOOR) / reference)
        return np.maximum(db, -top_db)

    @staticmethod
    def mel_spectrogram(clip: AudioClip, n_fft: int = DEFAULT_N_FFT, hop_length: int = DEFAULT_HOP,
                        n_mels: int = DEFAULT_N_MELS, f_min: float = 0.0, f_max: Optional[float] = None,
                        top_db: float = DEFAULT_TOP_DB,
                        filterbank: Optional[MelFilterbank] = None) -> MelSpectrogram:
        """dB-scaled mel spectrogram; pass a prebuilt filterbank to share it across clips"""
        spectrogram = DSPService.stft(clip, n_fft=n_fft, hop_length=hop_length)
        if filterbank is None:
            filterbank = DSPService.build_mel_filterbank(clip.sample_rate, n_fft, n_mels, f_min, f_max)
        elif filterbank.sample_rate != clip.sample_rate or filterbank.n_fft != n_fft:
            raise ValueError("filterbank was built for a different sample rate or FFT length")

        mel_power = filterbank.weights @ spectrogram.values
        return MelSpectrogram(values=DSPService.power_to_db(mel_power, top_db), sample_rate=clip.sample_rate,
                              n_fft=n_fft, hop_length=hop_length, top_db=top_db)

    @staticmethod
    def magnitude_spectrum(clip: AudioClip, one_sided: bool = True) -> Tuple[np.ndarray, np.ndarray]:
        """
        Whole-clip magnitude spectrum, zero-padded to the next power of two

        Returns:
            (frequencies in Hz, magnitudes); the double-sided form runs from -sr/2 to +sr/2
        """
        n = 1 << max(0, (clip.samples.size - 1).bit_length())
        padded = np.zeros(n)
        padded[: clip.samples.size] = clip.samples
        magnitudes = np.abs(DSPService.fft_batch(padded))
        frequencies = np.arange(n) * clip.sample_rate / n
        if one_sided:
            return frequencies[: n // 2 + 1], magnitudes[: n // 2 + 1]
        frequencies = np.where(np.arange(n) < n // 2, frequencies, frequencies - clip.sample_rate)
        order = np.argsort(frequencies, kind="stable")
        return frequencies[order], magnitudes[order]

    @staticmethod
    def mel_to_csv(mel: MelSpectrogram) -> str:
        """Bands as rows, frames as columns, 6 significant digits"""
        return "".join(",".join(f"{v:.6g}" for v in row) + "\n" for row in mel.values)
