import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from densemoments.basis import (
    BasisKind,
    LocalFrame,
    angular_eval,
    basis_eval,
    order_set,
    radial_eval,
    radial_orthogonality,
)
from densemoments.errors import InvalidOrderError

KINDS = [k.value for k in BasisKind]


def test_angular_values():
    assert angular_eval(0, 1.234) == pytest.approx(1 + 0j)
    assert angular_eval(1, math.pi / 2) == pytest.approx(1j, abs=1e-15)
    assert angular_eval(-3, 0.7) == pytest.approx(np.conj(angular_eval(3, 0.7)))


def test_radial_values():
    assert radial_eval("PCT", 0, 0.5) == pytest.approx(1 / math.sqrt(math.pi))
    assert radial_eval("PCT", 2, 0.0) == pytest.approx(math.sqrt(2 / math.pi))
    assert radial_eval("ZM", 2, 1.0, 0) == pytest.approx(math.sqrt(3 / math.pi))


@pytest.mark.parametrize("kind", KINDS)
def test_radial_matches_oracle(kind):
    r = np.linspace(0.01, 1.0, 57)
    low = 1 if kind == "PST" else 0
    for n in range(low, low + 6):
        ms = [m for m in range(0, n + 1) if (n - m) % 2 == 0] if kind == "ZM" else [0]
        for m in ms:
            got = np.asarray(radial_eval(kind, n, r, m))
            np.testing.assert_allclose(got, oracles.radial(kind, n, r, m), rtol=1e-10, atol=1e-12)


def test_basis_eval_frames():
    r05 = radial_eval("PCT", 0, 0.5)
    assert basis_eval("PCT", 0, 0, LocalFrame(0, 0, 1), 0.3, 0.4) == pytest.approx(r05)
    a = basis_eval("PCT", 0, 1, LocalFrame(0, 0, 1), 0.0, 0.5)
    assert a == pytest.approx(r05 * 1j)
    assert basis_eval("PCT", 0, 1, LocalFrame(2, 2, 2), 2.0, 3.0) == pytest.approx(a)


def test_order_set_sizes():
    assert len(order_set("PCT", math.inf, 3)) == 16
    assert len(order_set("PCT", 1, 3)) == 10
    assert len(order_set("PCT", math.inf, 5)) == 36
    pairs = order_set("PCT", 1, 3).pairs
    assert all(n + m <= 3 for n, m in pairs)
    assert list(pairs) == sorted(pairs)


def test_order_set_zernike_parity():
    for n, m in order_set("ZM", math.inf, 6):
        assert m <= n and (n - m) % 2 == 0


def test_invalid_orders():
    with pytest.raises(InvalidOrderError):
        radial_eval("PST", 0, 0.5)
    with pytest.raises(InvalidOrderError):
        radial_eval("ZM", 3, 0.5, 0)
    with pytest.raises(ValueError):
        order_set("PCT", 2, 3)


def test_orthogonality_values():
    assert abs(radial_orthogonality("PCT", 1, 2, 4096)) <= 1e-6
    assert radial_orthogonality("PCT", 3, 3, 4096) == pytest.approx(1 / (2 * math.pi), abs=1e-6)
    assert abs(radial_orthogonality("ZM", 2, 0, 4096, m=0)) <= 1e-6


@pytest.mark.parametrize("kind,top", [("PCT", 10), ("PST", 10), ("PCET", 10), ("ZM", 10), ("OFMM", 8)])
def test_orthogonality_table(kind, top):
    low = 1 if kind == "PST" else 0
    worst = 0.0
    for n in range(low, top + 1):
        for n2 in range(low, top + 1):
            m = n % 2 if kind == "ZM" else 0
            if kind == "ZM" and (n2 - m) % 2:
                continue
            want = 1 / (2 * math.pi) if n == n2 else 0.0
            worst = max(worst, abs(radial_orthogonality(kind, n, n2, 4096, m=m) - want))
    assert worst <= 1e-6


@pytest.mark.parametrize("kind", ["RHFM", "EFM"])
def test_orthogonality_singular_kinds(kind):
    # the 1/sqrt(r) weight makes Gauss-Legendre converge slowly near r = 0
    worst = 0.0
    for n in range(0, 6):
        for n2 in range(0, 6):
            want = 1 / (2 * math.pi) if n == n2 else 0.0
            worst = max(worst, abs(radial_orthogonality(kind, n, n2, 4096) - want))
    assert worst <= 1e-3


@given(st.sampled_from(["PCT", "PCET", "ZM", "EFM", "OFMM"]), st.integers(1, 4), st.floats(0.05, 1.0))
def test_angular_period(kind, m, r):
    n = m if kind == "ZM" else 1
    frame = LocalFrame(0, 0, 1)
    for theta in (0.3, 1.7):
        x, y = r * math.cos(theta), r * math.sin(theta)
        rot = theta + 2 * math.pi / m
        x2, y2 = r * math.cos(rot), r * math.sin(rot)
        assert basis_eval(kind, n, m, frame, x, y) == pytest.approx(basis_eval(kind, n, m, frame, x2, y2), abs=1e-9)


@given(st.sampled_from(KINDS), st.floats(0.0, 1.0))
def test_radial_finite(kind, r):
    n = 1 if kind == "PST" else 2
    assert np.isfinite(radial_eval(kind, n, r, 0))
