"""
Tests for the SGD training loop, resume semantics and epoch logs
"""

import math

import numpy as np
import pytest

from exceptions import EmptySplit, MissingStage
from models import Corpus, DatasetManifest, EmotionLabel, EpochLog, SampleRecord, SpectroImage, Split, TrainConfig
from services.checkpoint_service import CheckpointService
from services.imaging_service import ImagingService
from services.network_service import Network, NetworkService
from services.nn_layers import Conv2D, Dense, Dropout, Flatten, MaxPool2D, ReLU, one_hot, softmax_cross_entropy
from services.training_service import TrainingService


def small_network(seed=0, size=8):
    """A one-block conv net small enough for many epochs per test"""
    rng = np.random.default_rng(seed)
    conv = NetworkService.he_uniform(rng, (4, 3, 3, 3), fan_in=27)
    features = 4 * (size // 2) ** 2
    dense = NetworkService.he_uniform(rng, (features, 8), fan_in=features)
    layers = [Conv2D(conv, np.zeros(4)), ReLU(), MaxPool2D(), Dropout(0.25), Flatten(), Dense(dense, np.zeros(8))]
    return Network(layers, class_count=8, rng=rng)


def toy_data(rng, n, size=8):
    x = rng.uniform(0, 1, (n, 3, size, size))
    y = rng.integers(0, 8, n)
    return x, y


def params_equal(a, b):
    return all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))


def test_small_sgd_step_decreases_loss(rng):
    net = small_network()
    x, y = toy_data(rng, 16)
    targets = one_hot(y, 8)
    before, _ = softmax_cross_entropy(net.forward(x), targets)
    loss, _ = TrainingService.train_step(net, x, targets, learning_rate=1e-4, training=False)
    after, _ = softmax_cross_entropy(net.forward(x), targets)
    assert loss == pytest.approx(before, rel=1e-12)
    assert after < before


def test_training_is_deterministic(rng):
    x, y = toy_data(rng, 10)
    xv, yv = toy_data(rng, 4)
    cfg = TrainConfig(batch_size=4, learning_rate=0.01, epochs=3, seed=5)
    first, second = small_network(), small_network()
    logs_a = TrainingService.train_arrays(first, x, y, xv, yv, cfg)
    logs_b = TrainingService.train_arrays(second, x, y, xv, yv, cfg)
    assert logs_a == logs_b
    assert params_equal(first, second)
    assert [log.epoch for log in logs_a] == [1, 2, 3]


def test_epoch_order_is_keyed_by_seed_and_epoch():
    a = TrainingService.epoch_order(1, 3, 50)
    assert sorted(a) == list(range(50))
    np.testing.assert_array_equal(a, TrainingService.epoch_order(1, 3, 50))
    assert not np.array_equal(a, TrainingService.epoch_order(1, 4, 50))
    np.testing.assert_array_equal(TrainingService.epoch_order(1, 3, 5, shuffle=False), np.arange(5))


def test_resume_matches_uninterrupted_run(rng):
    x, y = toy_data(rng, 9)
    xv, yv = toy_data(rng, 3)
    cfg = TrainConfig(batch_size=4, learning_rate=0.02, epochs=4, seed=2)

    straight = small_network()
    straight_logs = TrainingService.train_arrays(straight, x, y, xv, yv, cfg)

    interrupted = small_network()
    half = cfg.model_copy(update={"epochs": 2})
    first_logs = TrainingService.train_arrays(interrupted, x, y, xv, yv, half)
    raw = CheckpointService.encode(CheckpointService.from_network(interrupted, epoch=2))

    restored_ckpt = CheckpointService.decode(raw)
    resumed = CheckpointService.to_network(restored_ckpt)
    rest_logs = TrainingService.train_arrays(resumed, x, y, xv, yv, cfg, start_epoch=restored_ckpt.epoch)

    assert first_logs + rest_logs == straight_logs
    assert params_equal(resumed, straight)


def test_nothing_left_to_train(rng):
    x, y = toy_data(rng, 4)
    cfg = TrainConfig(epochs=2)
    assert TrainingService.train_arrays(small_network(), x, y, x, y, cfg, start_epoch=2) == []


def test_empty_train_split(rng):
    x, y = toy_data(rng, 0)
    with pytest.raises(EmptySplit):
        TrainingService.train_arrays(small_network(), x, y, x, y, TrainConfig(epochs=1))


def test_empty_validation_records_nan(rng):
    x, y = toy_data(rng, 5)
    xv, yv = toy_data(rng, 0)
    logs = TrainingService.train_arrays(small_network(), x, y, xv, yv, TrainConfig(batch_size=2, epochs=1))
    assert math.isnan(logs[0].val_loss) and math.isnan(logs[0].val_acc)
    assert 0.0 <= logs[0].train_acc <= 1.0
    assert logs[0].train_loss > 0


def test_on_epoch_callback(rng):
    x, y = toy_data(rng, 6)
    seen = []
    TrainingService.train_arrays(small_network(), x, y, x, y, TrainConfig(batch_size=3, epochs=2),
                                 on_epoch=seen.append)
    assert [log.epoch for log in seen] == [1, 2]


def test_byte_batches_match_float_pixels(rng):
    raw = rng.integers(0, 256, (2, 3, 4, 4)).astype(np.uint8)
    np.testing.assert_array_equal(TrainingService.as_input(raw), raw / 255)
    floats = rng.uniform(0, 1, (2, 3))
    assert TrainingService.as_input(floats) is floats


def test_evaluate_loss_on_empty_set():
    loss, acc = TrainingService.evaluate_loss(small_network(), np.zeros((0, 3, 8, 8)), np.zeros(0, dtype=int))
    assert math.isnan(loss) and math.isnan(acc)


def write_split_manifest(tmp_path, rng):
    records = []
    for i, split in enumerate([Split.TRAIN, Split.TRAIN, Split.VAL]):
        image_path = f"images/{i}.ppm"
        (tmp_path / "images").mkdir(exist_ok=True)
        ImagingService.write_ppm(SpectroImage(pixels=rng.uniform(0, 1, (64, 64, 3))), tmp_path / image_path)
        records.append(SampleRecord(audio_path=f"{i}.wav", image_path=image_path, corpus=Corpus.OTHER,
                                    raw_label="calm", label=EmotionLabel.CALM, split=split))
    return DatasetManifest(records=records)


def test_load_split_reads_bytes_in_manifest_order(tmp_path, rng):
    manifest = write_split_manifest(tmp_path, rng)
    x, y, records = TrainingService.load_split(manifest, Split.TRAIN, tmp_path)
    assert x.shape == (2, 3, 64, 64) and x.dtype == np.uint8
    assert list(y) == [2, 2]
    expected = ImagingService.read_ppm(tmp_path / "images/1.ppm").pixels.transpose(2, 0, 1)
    np.testing.assert_array_equal(TrainingService.as_input(x[1]), expected)
    assert records[0].audio_path == "0.wav"


def test_load_split_needs_images(tmp_path):
    manifest = DatasetManifest(records=[SampleRecord(audio_path="a.wav", corpus=Corpus.OTHER, raw_label="calm",
                                                     label=EmotionLabel.CALM, split=Split.TRAIN)])
    with pytest.raises(MissingStage):
        TrainingService.load_split(manifest, Split.TRAIN, tmp_path)


def test_train_needs_split(tmp_path):
    manifest = DatasetManifest(records=[SampleRecord(audio_path="a.wav", corpus=Corpus.OTHER, raw_label="calm",
                                                     label=EmotionLabel.CALM)])
    with pytest.raises(MissingStage):
        TrainingService.train(NetworkService.build_fser_network(), manifest, TrainConfig(epochs=1), tmp_path)


def test_epoch_log_csv(tmp_path):
    path = tmp_path / "out" / "epochs.csv"
    logs = [EpochLog(epoch=1, train_loss=2.0, train_acc=0.125, val_loss=1.5, val_acc=0.25)]
    TrainingService.write_epoch_log(logs, path)
    TrainingService.write_epoch_log([logs[0].model_copy(update={"epoch": 2})], path, append=True)
    assert path.read_text().splitlines() == [
        "epoch,train_loss,train_acc,val_loss,val_acc",
        "1,2.000000,0.125000,1.500000,0.250000",
        "2,2.000000,0.125000,1.500000,0.250000",
    ]


def test_epoch_log_nan_values():
    line = TrainingService.epoch_log_line(EpochLog(epoch=3, train_loss=1.0, train_acc=0.5,
                                                   val_loss=math.nan, val_acc=math.nan))
    assert line == "3,1.000000,0.500000,nan,nan"


def class_colored_images(rng, per_class=8, noise=0.02):
    """Each class a constant RGB color from the bits of its index, plus small noise, as bytes"""
    labels = np.repeat(np.arange(8), per_class)
    colors = np.array([[(c >> bit) & 1 for bit in range(3)] for c in range(8)]) * 0.8 + 0.1
    pixels = colors[labels][:, :, None, None] + rng.normal(0.0, noise, (len(labels), 3, 64, 64))
    return np.round(np.clip(pixels, 0.0, 1.0) * 255).astype(np.uint8), labels


@pytest.mark.slow
def test_fser_network_learns_class_colors(rng):
    net = NetworkService.build_fser_network(seed=0)
    x, y = class_colored_images(rng)
    before, _ = TrainingService.evaluate_loss(net, x, y)
    cfg = TrainConfig(batch_size=64, learning_rate=0.001, epochs=40, seed=0)
    logs = TrainingService.train_arrays(net, x, y, x[:0], y[:0], cfg)
    after, _ = TrainingService.evaluate_loss(net, x, y)
    assert len(logs) == 40
    assert after < before
