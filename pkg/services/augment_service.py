import logging
from pathlib import PurePosixPath
from typing import List, Tuple

import numpy as np

from models import (IMAGE_SIZE, AugmentConfig, AugmentParams, DatasetManifest, SampleRecord,
                    SpectroImage, Split)
from services.imaging_service import ImagingService

logger = logging.getLogger(__name__)

MAX_SHIFT = IMAGE_SIZE // 2
_CENTER = (IMAGE_SIZE - 1) / 2.0


class AugmentService:
    """Shift / zoom / flip augmentation with keyed, order-independent randomness"""

    @staticmethod
    def shift(img: SpectroImage, dx: float, dy: float) -> SpectroImage:
        """
        Translate content by dx columns and dy rows

        Vacated pixels replicate the nearest edge. Integer offsets move pixels exactly;
        fractional offsets are bilinearly interpolated.
        """
        if abs(dx) > MAX_SHIFT or abs(dy) > MAX_SHIFT:
            raise ValueError(f"shift ({dx}, {dy}) exceeds {MAX_SHIFT} pixels")
        coords = np.arange(IMAGE_SIZE, dtype=np.float64)
        pixels = ImagingService.bilinear_sample(img.pixels, coords - dy, coords - dx)
        return SpectroImage(pixels=np.clip(pixels, 0.0, 1.0), label=img.label)

    @staticmethod
    def zoom(img: SpectroImage, sx: float, sy: float) -> SpectroImage:
        """Center-anchored rescale; a scale above 1 magnifies"""
        if not (0.5 <= sx <= 2.0 and 0.5 <= sy <= 2.0):
            raise ValueError(f"zoom ({sx}, {sy}) outside [0.5, 2.0]")
        coords = np.arange(IMAGE_SIZE, dtype=np.float64) - _CENTER
        pixels = ImagingService.bilinear_sample(img.pixels, _CENTER + coords / sy, _CENTER + coords / sx)
        return SpectroImage(pixels=np.clip(pixels, 0.0, 1.0), label=img.label)

    @staticmethod
    def hflip(img: SpectroImage) -> SpectroImage:
        return SpectroImage(pixels=img.pixels[:, ::-1], label=img.label)

    @staticmethod
    def variant_rng(seed: int, image_index: int, variant_index: int) -> np.random.Generator:
        """Counter-based generator keyed by (seed, image, variant)"""
        return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, image_index, variant_index])))

    @staticmethod
    def sample_params(cfg: AugmentConfig, image_index: int, variant_index: int) -> AugmentParams:
        rng = AugmentService.variant_rng(cfg.seed, image_index, variant_index)
        max_dx = cfg.width_shift_frac * IMAGE_SIZE
        max_dy = cfg.height_shift_frac * IMAGE_SIZE
        low, high = cfg.zoom_range
        dx = rng.uniform(-max_dx, max_dx)
        dy = rng.uniform(-max_dy, max_dy)
        scale = rng.uniform(low, high)
        flip = bool(rng.random() < 0.5)
        return AugmentParams(dx=float(dx), dy=float(dy), scale=float(scale), flip=flip and cfg.allow_hflip)

    @staticmethod
    def apply(img: SpectroImage, params: AugmentParams) -> SpectroImage:
        """Compose shift, then zoom, then flip"""
        out = AugmentService.shift(img, params.dx, params.dy)
        out = AugmentService.zoom(out, params.scale, params.scale)
        if params.flip:
            out = AugmentService.hflip(out)
        return out

    @staticmethod
    def generate(img: SpectroImage, cfg: AugmentConfig, image_index: int = 0) -> List[SpectroImage]:
        """
        Produce cfg.variants_per_image randomized variants of one image

        Args:
            img: Original image (kept separately by the caller)
            cfg: Augmentation ranges and seed
            image_index: Position of the image in the caller's dataset, part of the RNG key

        Returns:
            List of variants, deterministic for a given (seed, image_index)
        """
        return [
            AugmentService.apply(img, AugmentService.sample_params(cfg, image_index, k))
            for k in range(cfg.variants_per_image)
        ]

    @staticmethod
    def augmented_image_path(image_path: str, variant_index: int) -> str:
        """``<stem>_aug<k>.ppm`` alongside the original"""
        original = PurePosixPath(image_path)
        return str(original.with_name(f"{original.stem}_aug{variant_index}.ppm"))

    @staticmethod
    def plan_augmented_records(manifest: DatasetManifest,
                               cfg: AugmentConfig) -> List[Tuple[int, int, SampleRecord, SampleRecord]]:
        """
        Bookkeeping for augmentation of every original training record

        Returns:
            (image_index, variant_index, source record, new record) tuples in manifest order
        """
        plan = []
        train_originals = [r for r in manifest.records if r.split == Split.TRAIN and not r.is_augmented]
        for image_index, record in enumerate(train_originals):
            base = record.image_path or str(PurePosixPath(record.audio_path).with_suffix(".ppm"))
            for k in range(cfg.variants_per_image):
                augmented = record.model_copy(update={
                    "image_path": AugmentService.augmented_image_path(base, k),
                    "is_augmented": True,
                })
                plan.append((image_index, k, record, augmented))
        logger.info(f"Planned {len(plan)} augmented images for {len(train_originals)} training originals")
        return plan
