import numpy as np
import pytest

import oracles
from densemoments.errors import SizeError
from densemoments.forensics.copymove import (
    CopyMoveConfig,
    copymove_detect,
    disk_footprint,
    offset_consistency,
    score_mask,
)
from densemoments.synthetic import copy_move_forgery

SMALL = CopyMoveConfig(upsample_long_edge=None, scales=(6, 9, 12), min_offset=30.0)


def test_flat_image_gives_empty_mask():
    fm = copymove_detect(np.full((128, 128), 0.5), SMALL)
    assert fm.mask.shape == (128, 128) and not fm.mask.any()


def test_small_forgery_found():
    fg = copy_move_forgery(shape=(192, 192), patch=48, source=(20, 60), shift=(100, 0))
    cfg = CopyMoveConfig(upsample_long_edge=384, scales=(6, 9, 12), min_offset=30.0)
    fm = copymove_detect(fg.image, cfg)
    p, r, f = score_mask(fm, fg.truth, 4)
    assert f >= 0.8
    assert fm.config_hash == cfg.digest() and fm.analysed_shape == (384, 384)


def test_upsampled_mask_returns_to_input_size():
    fg = copy_move_forgery(shape=(128, 128), patch=32, source=(10, 40), shift=(70, 0))
    cfg = CopyMoveConfig(upsample_long_edge=256, scales=(6, 9, 12), min_offset=30.0)
    fm = copymove_detect(fg.image, cfg)
    assert fm.mask.shape == (128, 128) and fm.analysed_shape == (256, 256)


def test_too_small_image():
    with pytest.raises(SizeError):
        copymove_detect(np.zeros((20, 20)), SMALL)


def test_score_mask_examples():
    truth = np.zeros((20, 20), bool)
    truth[5:15, 5:15] = True
    assert score_mask(truth, truth) == (1.0, 1.0, 1.0)
    assert score_mask(np.zeros_like(truth), truth) == (0.0, 0.0, 0.0)
    half = truth.copy()
    half[5:10] = False
    p, r, f = score_mask(half, truth)
    assert (p, r) == (1.0, 0.5) and f == pytest.approx(2 / 3)
    with pytest.raises(SizeError):
        score_mask(truth, truth[:10])


def test_score_mask_matches_counting():
    rng = np.random.default_rng(0)
    pred, truth = rng.random((30, 30)) < 0.3, rng.random((30, 30)) < 0.4
    tp = int(np.sum(pred & truth))
    assert score_mask(pred, truth) == pytest.approx(oracles.prf(tp, int(pred.sum()), int(truth.sum())))


def test_border_band_ignored():
    truth = np.zeros((40, 40), bool)
    truth[10:30, 10:30] = True
    grown = np.zeros_like(truth)
    grown[8:32, 8:32] = True
    assert score_mask(grown, truth, 3) == (1.0, 1.0, 1.0)
    assert score_mask(grown, truth, 0)[0] < 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        CopyMoveConfig(scales=(8, 8))
    with pytest.raises(ValueError):
        CopyMoveConfig(scales=(8, 60))
    with pytest.raises(ValueError):
        CopyMoveConfig(pooling="median")
    with pytest.raises(ValueError):
        CopyMoveConfig(consistency_fraction=0)
    assert CopyMoveConfig().digest() == CopyMoveConfig().digest()
    assert CopyMoveConfig().digest() != SMALL.digest()
    assert len(CopyMoveConfig().scales) == 10


def test_offset_consistency_translation_and_affine():
    rows, cols = 40, 40
    off = np.zeros((rows, cols, 2), np.int64)
    off[..., 0] = 25
    rng = np.random.default_rng(1)
    noise = rng.random((rows, cols)) < 0.1
    off[noise] = rng.integers(-30, 30, (int(noise.sum()), 2))
    valid = np.ones((rows, cols), bool)
    keep = offset_consistency(off, valid, 4, 0.5, 1.0, "translation")
    assert keep[~noise].mean() > 0.95 and keep[noise].mean() < 0.05
    # a rotating offset field: only the affine model accepts it
    yy, xx = np.mgrid[0:rows, 0:cols]
    rot = np.stack([np.rint(-0.5 * (yy - 20)), np.rint(0.5 * (xx - 20))], -1).astype(np.int64) + [60, 0]
    assert offset_consistency(rot, valid, 6, 0.5, 1.5, "affine")[10:30, 10:30].mean() > 0.9
    assert offset_consistency(rot, valid, 6, 0.5, 1.5, "translation")[10:30, 10:30].mean() < 0.5
    with pytest.raises(ValueError):
        offset_consistency(off, valid, model="rigid")


def test_disk_footprint():
    fp = disk_footprint(2)
    assert fp.shape == (5, 5) and fp.sum() == 13
