import hashlib
import logging
from pathlib import Path, PurePosixPath
from typing import Optional, Tuple, Union

from exceptions import FserError
from models import EmotionLabel, MelFilterbank, MelSpectrogram, PipelineConfig, SampleRecord, SpectroImage
from services.audio_service import AudioService
from services.dsp_service import DSPService
from services.imaging_service import ImagingService

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class FeatureService:
    """WAV file to spectrogram image, the way featurize and predict both need it"""

    @staticmethod
    def build_filterbank(cfg: PipelineConfig) -> MelFilterbank:
        return DSPService.build_mel_filterbank(cfg.sample_rate, cfg.n_fft, cfg.n_mels, cfg.f_min, cfg.f_max,
                                               strict=cfg.strict_filterbank)

    @staticmethod
    def wav_to_mel(path: PathLike, cfg: PipelineConfig, filterbank: Optional[MelFilterbank] = None) -> MelSpectrogram:
        """Load, resample to the canonical rate, peak-normalize and take the dB mel spectrogram"""
        clip = AudioService.load_wav(path)
        clip = AudioService.resample(clip, cfg.sample_rate)
        if cfg.peak_normalize:
            clip = AudioService.peak_normalize(clip)
        return DSPService.mel_spectrogram(clip, n_fft=cfg.n_fft, hop_length=cfg.hop_length, n_mels=cfg.n_mels,
                                          f_min=cfg.f_min, f_max=cfg.f_max, top_db=cfg.top_db,
                                          filterbank=filterbank)

    @staticmethod
    def wav_to_image(path: PathLike, cfg: PipelineConfig, filterbank: Optional[MelFilterbank] = None,
                     label: Optional[EmotionLabel] = None) -> Tuple[SpectroImage, MelSpectrogram]:
        mel = FeatureService.wav_to_mel(path, cfg, filterbank)
        return ImagingService.render(mel, label=label), mel

    @staticmethod
    def featurize_file(audio_path: PathLike, image_path: PathLike, cfg: PipelineConfig,
                       filterbank: Optional[MelFilterbank] = None, label: Optional[EmotionLabel] = None,
                       dump_mel: bool = False) -> Tuple[bool, Optional[Path], Optional[str]]:
        """
        Render one WAV to a PPM on disk

        Returns:
            Tuple of (success, written image path, error message naming the file)
        """
        image_path = Path(image_path)
        try:
            image, mel = FeatureService.wav_to_image(audio_path, cfg, filterbank, label)
            image_path.parent.mkdir(parents=True, exist_ok=True)
            ImagingService.write_ppm(image, image_path)
            if dump_mel:
                image_path.with_suffix(".mel.csv").write_text(DSPService.mel_to_csv(mel), encoding="utf-8")
            return True, image_path, None
        except FserError as e:
            logger.warning(f"Featurize failed: {type(e).__name__}: {e}")
            return False, None, f"{type(e).__name__}: {e}"
        except OSError as e:
            logger.warning(f"Featurize failed for {audio_path}: {e}")
            return False, None, f"IoFailure: {audio_path}: {e.strerror}"

    @staticmethod
    def image_path_for(record: SampleRecord, images_dir: str) -> str:
        """``<images_dir>/<corpus>/<stem>_<digest>.ppm``, unique per audio path"""
        digest = hashlib.sha1(record.audio_path.encode("utf-8")).hexdigest()[:8]
        stem = PurePosixPath(record.audio_path).stem
        return str(PurePosixPath(images_dir) / record.corpus.value / f"{stem}_{digest}.ppm")
