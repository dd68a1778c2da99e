"""TrigPoly: the exact-algebra oracle must itself be verified numerically."""

import numpy as np
import pytest

from rsflow.trig import TrigPoly


RNG = np.random.default_rng(7)
PTS = RNG.uniform(0, 2 * np.pi, size=(200, 3))


def test_harmonic_matches_cos():
    f = TrigPoly.harmonic(3, (2, -1, 0), amplitude=0.7, phase=0.3)
    expect = 0.7 * np.cos(2 * PTS[:, 0] - PTS[:, 1] + 0.3)
    np.testing.assert_allclose(f.eval(PTS), expect, atol=1e-14)


def test_sin_cos_shortcuts():
    np.testing.assert_allclose(TrigPoly.sin(3, (1, 0, 0)).eval(PTS),
                               np.sin(PTS[:, 0]), atol=1e-14)
    np.testing.assert_allclose(TrigPoly.cos(3, (0, 1, 0)).eval(PTS),
                               np.cos(PTS[:, 1]), atol=1e-14)


def test_product_is_exact_convolution():
    f = TrigPoly.sin(3, (1, 0, 0))
    g = TrigPoly.cos(3, (0, 1, 0))
    prod = f * g
    np.testing.assert_allclose(prod.eval(PTS), f.eval(PTS) * g.eval(PTS),
                               atol=1e-14)


def test_addition_and_scalars():
    f = TrigPoly.sin(2, (1, 0))
    g = 2.0 * f + 1.0 - f
    pts = RNG.uniform(0, 2 * np.pi, size=(50, 2))
    np.testing.assert_allclose(g.eval(pts), np.sin(pts[:, 0]) + 1.0, atol=1e-14)


def test_diff_matches_analytic():
    f = TrigPoly.cos(3, (3, 0, -2))
    df = f.diff(0)
    expect = -3.0 * np.sin(3 * PTS[:, 0] - 2 * PTS[:, 2])
    np.testing.assert_allclose(df.eval(PTS), expect, atol=1e-13)


def test_diff_of_constant_is_zero():
    assert TrigPoly.constant(4, 3.0).diff(2).is_zero()


def test_shifted_matches_translated_eval():
    rng = np.random.default_rng(5)
    f = TrigPoly.random(3, 2, rng)
    off = np.array([0.4, -1.1, 2.3])
    np.testing.assert_allclose(f.shifted(off).eval(PTS), f.eval(PTS - off),
                               atol=1e-12)


def test_parseval_l2_matches_grid_rms():
    rng = np.random.default_rng(9)
    f = TrigPoly.random(2, 2, rng)
    x = np.arange(64) * (2 * np.pi / 64)
    vals = f.sample([x, x])
    assert f.l2() == pytest.approx(np.sqrt(np.mean(vals ** 2)), rel=1e-12)


def test_sample_matches_pointwise_eval():
    rng = np.random.default_rng(3)
    f = TrigPoly.random(2, 2, rng)
    x = np.arange(16) * (2 * np.pi / 16)
    grid_pts = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
    np.testing.assert_allclose(f.sample([x, x]), f.eval(grid_pts), atol=1e-13)


def test_band_limited_normalization_and_bound():
    rng = np.random.default_rng(1)
    f = TrigPoly.band_limited(3, 2, rng, amplitude=0.5)
    assert f.max_abs() == pytest.approx(0.5, rel=1e-12)
    assert np.max(np.abs(f.eval(PTS))) <= 0.5 + 1e-12


def test_band_limited_is_real():
    rng = np.random.default_rng(2)
    f = TrigPoly.band_limited(2, 3, rng)
    # Hermitian coefficients: conj(c_{-k}) == c_k for every mode
    for k, c in f.terms.items():
        assert f.terms[tuple(-a for a in k)] == c.conjugate()


def test_zero_and_is_zero():
    z = TrigPoly.zero(3)
    assert z.is_zero()
    assert (z + TrigPoly.sin(3, (1, 0, 0)) - TrigPoly.sin(3, (1, 0, 0))).is_zero(1e-16)


def test_wavevector_length_mismatch_rejected():
    with pytest.raises(ValueError):
        TrigPoly.harmonic(3, (1, 0))


def test_diff_axis_out_of_range():
    with pytest.raises(ValueError):
        TrigPoly.sin(2, (1, 0)).diff(2)
