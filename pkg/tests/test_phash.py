import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from densemoments.errors import ConfigMismatchError, DegenerateInputError, FormatError, SizeError
from densemoments.formats import load_digest, save_digest
from densemoments.forensics.phash import HashConfig, HashDigest, otsu_threshold, phash_compare, phash_generate, quantize
from densemoments.synthetic import texture


@pytest.fixture(scope="module")
def img():
    return texture((256, 256), 0)


def test_digest_size(img):
    d = phash_generate(img)
    assert d.grid == (32, 32) and d.dim == 16
    assert d.payload_bytes == 32 * 32 * 16
    assert len(d.to_bytes()) == d.nbytes == d.payload_bytes + d.header_bytes


def test_digest_deterministic(img):
    assert phash_generate(img).to_bytes() == phash_generate(img.copy()).to_bytes()


def test_digest_bytes_roundtrip(img, tmp_path):
    d = phash_generate(img)
    back = HashDigest.from_bytes(d.to_bytes())
    np.testing.assert_array_equal(back.codes, d.codes)
    np.testing.assert_array_equal(back.ranges, d.ranges)
    assert back.config_hash == d.config_hash
    path = tmp_path / "a.dirh"
    save_digest(path, d)
    assert load_digest(path).to_bytes() == d.to_bytes()


def test_digest_corrupt(img):
    data = phash_generate(img).to_bytes()
    with pytest.raises(FormatError):
        HashDigest.from_bytes(data[:-1])
    with pytest.raises(FormatError):
        HashDigest.from_bytes(b"NOPE" + data[4:])
    with pytest.raises(FormatError):
        HashDigest.from_bytes(data[:10])


def test_identical_pair_is_clean(img):
    d = phash_generate(img)
    res = phash_compare(d, d)
    assert not np.any(res.distance) and not res.mask.any()
    dist, mask, thr = res
    assert thr == np.inf


def test_config_mismatch(img):
    a = phash_generate(img)
    b = phash_generate(img, HashConfig(scales=(8, 10)))
    with pytest.raises(ConfigMismatchError):
        phash_compare(a, b)
    c = phash_generate(img[:128])
    with pytest.raises(ConfigMismatchError):
        phash_compare(a, c)


def test_config_validation_and_size():
    with pytest.raises(ValueError):
        HashConfig(stride=0)
    with pytest.raises(ValueError):
        HashConfig(pooling="median")
    with pytest.raises(SizeError):
        phash_generate(np.zeros((20, 20)))
    assert HashConfig().digest() != HashConfig(stride=4).digest()


def test_tamper_localised():
    img = texture((256, 256), 1)
    tam = img.copy()
    tam[96:160, 96:160] = texture((64, 64), 50)
    res = phash_compare(phash_generate(img), phash_generate(tam))
    centers = np.arange(32) * 8 + 4
    inside = ((centers >= 96) & (centers < 160))[:, None] & ((centers >= 96) & (centers < 160))[None, :]
    assert res.mask.any()
    assert res.mask[inside].mean() > 0.5 and res.mask[~inside].mean() < 0.05


def test_quantize_range():
    feats = np.random.default_rng(0).random((4, 5, 3)) * [1, 10, 100]
    d = quantize(feats, "x" * 16)
    assert d.codes.dtype == np.uint8 and d.codes.min() == 0 and d.codes.max() == 255
    np.testing.assert_allclose(d.dequantize(), feats, atol=100 / 255)
    with pytest.raises(ValueError):
        quantize(np.full((2, 2, 1), np.nan), "x" * 16)


def test_otsu_examples():
    t = otsu_threshold([0.0] * 100 + [10.0] * 100)
    assert 0 < t < 10
    t = otsu_threshold([1.0, 2.0])
    assert 1 < t <= 2
    rng = np.random.default_rng(0)
    mix = np.concatenate([rng.normal(0.1, 0.02, 1000), rng.normal(0.9, 0.02, 1000)])
    assert 0.3 <= otsu_threshold(mix) <= 0.7
    with pytest.raises(DegenerateInputError):
        otsu_threshold([3.0, 3.0])


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=60).filter(lambda v: max(v) > min(v) + 1e-6))
def test_otsu_matches_exhaustive_scan(values):
    assert otsu_threshold(values) == pytest.approx(oracles.otsu(values), rel=1e-12, abs=1e-12)
