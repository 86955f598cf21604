import numpy as np
import pytest

from densemoments.synthetic import (
    copy_move_forgery,
    disk_patch,
    downscale_mean,
    glyph,
    hash_corpus,
    jpeg_roundtrip,
    letter_scene,
    rotate_bilinear,
    texture,
)


def test_texture_range_and_seed():
    a = texture((40, 50), 3)
    assert a.shape == (40, 50) and a.min() == 0 and a.max() == 1
    np.testing.assert_array_equal(a, texture((40, 50), 3))
    assert not np.array_equal(a, texture((40, 50), 4))


def test_rotate_bilinear_quarter_turn():
    img = texture((32, 32), 1)
    np.testing.assert_allclose(rotate_bilinear(img, 90), np.rot90(img, 1), atol=1e-12)
    np.testing.assert_allclose(rotate_bilinear(img, 0), img, atol=1e-12)


def test_downscale_mean():
    img = np.arange(16.0).reshape(4, 4)
    np.testing.assert_array_equal(downscale_mean(img), [[2.5, 4.5], [10.5, 12.5]])


def test_jpeg_roundtrip_close():
    img = texture((64, 64), 2)
    out = jpeg_roundtrip(img, 90)
    assert out.shape == img.shape and np.abs(out - img).mean() < 0.02


def test_letter_scene_layout():
    scene = letter_scene()
    assert scene.image.shape == (256, 256) and len(scene.truth) == 5 and len(scene.distractors) == 9
    assert glyph("F").shape == (48, 48)
    with pytest.raises(ValueError):
        letter_scene(grid=(2, 2))


def test_forgery_truth():
    fg = copy_move_forgery()
    assert fg.truth.sum() == 2 * 64 * 64
    x0, y0, w, h = fg.source
    tx, ty, _, _ = fg.target
    np.testing.assert_array_equal(fg.image[ty:ty + h, tx:tx + w], fg.image[y0:y0 + h, x0:x0 + w])
    rot = copy_move_forgery(transform="rot90")
    np.testing.assert_array_equal(rot.image[ty:ty + h, tx:tx + w], np.rot90(rot.image[y0:y0 + h, x0:x0 + w]))
    assert copy_move_forgery(scale=0.8).target[2] == 51
    with pytest.raises(ValueError):
        copy_move_forgery(shift=(500, 0))
    with pytest.raises(ValueError):
        copy_move_forgery(transform="shear")


def test_hash_corpus_and_disk_patch():
    corpus = hash_corpus(3, (64, 64))
    assert len(corpus) == 3 and all(c.min() >= 0 and c.max() <= 1 for c in corpus)
    patch = disk_patch(np.ones((20, 20)), 10, 10, 4)
    assert patch[10, 10] == 1 and patch[0, 0] == 0 and patch.sum() < np.pi * 16 + 8
