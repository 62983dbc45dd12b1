"""
Tests for image augmentation and augmented-record bookkeeping
"""

import numpy as np
import pytest

from models import AugmentConfig, AugmentParams, Corpus, DatasetManifest, EmotionLabel, SampleRecord, SpectroImage, Split
from services.augment_service import AugmentService
from services.dataset_service import DatasetService


def blank():
    return np.zeros((64, 64, 3))


def test_zero_shift_is_identity(rng):
    img = SpectroImage(pixels=rng.uniform(0, 1, (64, 64, 3)))
    np.testing.assert_array_equal(AugmentService.shift(img, 0, 0).pixels, img.pixels)


def test_constant_image_survives_any_shift():
    img = SpectroImage(pixels=np.full((64, 64, 3), 0.3))
    for dx, dy in ((5, -7), (2.5, 0.25), (-32, 32)):
        np.testing.assert_allclose(AugmentService.shift(img, dx, dy).pixels, 0.3, atol=1e-12)


def test_shift_moves_content_right():
    pixels = blank()
    pixels[10, 10] = 1.0
    shifted = AugmentService.shift(SpectroImage(pixels=pixels), dx=3, dy=0).pixels
    np.testing.assert_array_equal(shifted[10, 13], [1.0, 1.0, 1.0])
    assert shifted[10, 10].sum() == 0.0
    assert shifted.sum() == pytest.approx(3.0)


def test_shift_limit():
    with pytest.raises(ValueError):
        AugmentService.shift(SpectroImage(pixels=blank()), dx=33, dy=0)


def test_unit_zoom_is_identity(rng):
    img = SpectroImage(pixels=rng.uniform(0, 1, (64, 64, 3)))
    np.testing.assert_array_equal(AugmentService.zoom(img, 1.0, 1.0).pixels, img.pixels)


def test_constant_image_survives_zoom():
    img = SpectroImage(pixels=np.full((64, 64, 3), 0.7))
    for scale in (0.5, 0.9, 1.37, 2.0):
        np.testing.assert_allclose(AugmentService.zoom(img, scale, scale).pixels, 0.7, atol=1e-12)


def test_double_zoom_grows_center_block():
    pixels = blank()
    pixels[31:33, 31:33] = 1.0
    zoomed = AugmentService.zoom(SpectroImage(pixels=pixels), 2.0, 2.0).pixels[:, :, 0]
    bright = np.argwhere(zoomed > 0.5)
    assert bright[:, 0].min() == 30 and bright[:, 0].max() == 33
    assert bright[:, 1].min() == 30 and bright[:, 1].max() == 33
    assert len(bright) == 16
    assert zoomed[30, 31] == pytest.approx(0.75)


def test_hflip():
    pixels = blank()
    pixels[5, 0] = 1.0
    img = SpectroImage(pixels=pixels)
    flipped = AugmentService.hflip(img)
    assert flipped.pixels[5, 63].sum() == 3.0
    np.testing.assert_array_equal(AugmentService.hflip(flipped).pixels, img.pixels)

    half = np.linspace(0, 1, 32)
    symmetric = np.tile(np.concatenate([half, half[::-1]])[None, :, None], (64, 1, 3))
    np.testing.assert_array_equal(AugmentService.hflip(SpectroImage(pixels=symmetric)).pixels, symmetric)


def test_apply_with_neutral_params_is_identity(rng):
    img = SpectroImage(pixels=rng.uniform(0, 1, (64, 64, 3)))
    out = AugmentService.apply(img, AugmentParams(dx=0, dy=0, scale=1.0, flip=False))
    np.testing.assert_array_equal(out.pixels, img.pixels)


def test_sample_params_ranges_and_flip_switch():
    cfg = AugmentConfig(seed=3, allow_hflip=False)
    for k in range(50):
        params = AugmentService.sample_params(cfg, image_index=7, variant_index=k)
        assert abs(params.dx) <= 6.4 and abs(params.dy) <= 6.4
        assert 0.9 <= params.scale <= 1.1
        assert params.flip is False


def test_sample_params_depend_only_on_key():
    cfg = AugmentConfig(seed=11)
    first = AugmentService.sample_params(cfg, 4, 2)
    AugmentService.sample_params(cfg, 9, 0)
    assert AugmentService.sample_params(cfg, 4, 2) == first
    assert AugmentService.sample_params(cfg, 5, 2) != first


def test_generate_is_deterministic(rng):
    img = SpectroImage(pixels=rng.uniform(0, 1, (64, 64, 3)), label=EmotionLabel.ANGER)
    cfg = AugmentConfig(variants_per_image=3, seed=42)
    first = AugmentService.generate(img, cfg, image_index=1)
    second = AugmentService.generate(img, cfg, image_index=1)
    assert len(first) == 3
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.pixels, b.pixels)
        assert a.label == EmotionLabel.ANGER


def test_zero_variants_gives_empty_list(rng):
    img = SpectroImage(pixels=rng.uniform(0, 1, (64, 64, 3)))
    assert AugmentService.generate(img, AugmentConfig(variants_per_image=0)) == []


def test_augmented_image_path():
    assert AugmentService.augmented_image_path("images/other/clip_ab12.ppm", 3) == "images/other/clip_ab12_aug3.ppm"


def test_twenty_variants_of_1947_originals_give_40887_training_rows():
    records = [
        SampleRecord(audio_path=f"a/{i:04d}.wav", image_path=f"img/{i:04d}.ppm", corpus=Corpus.OTHER,
                     raw_label="anger", label=EmotionLabel.ANGER, split=Split.TRAIN)
        for i in range(1947)
    ]
    manifest = DatasetManifest(records=records)
    plan = AugmentService.plan_augmented_records(manifest, AugmentConfig(variants_per_image=20))
    augmented = DatasetService.attach_augmented(manifest, [entry[3] for entry in plan])
    assert len(augmented.in_split(Split.TRAIN)) == 40887
    assert all(r.is_augmented for r in augmented.records[1947:])
    assert plan[21][:2] == (1, 1)
