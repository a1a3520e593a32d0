import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weibull_hawkes.basis import (
    BasisConfig,
    basis_integral,
    basis_value,
    impact_integral,
    impact_value,
)
from oracles import gaussian_direct, trapezoid

HALF_GAUSS = 1.5 * np.sqrt(np.pi / 2)


@pytest.fixture
def wide():
    # one kernel at 0 with bandwidth 1.5 and a support much wider than it
    return BasisConfig(1, [0.0], 1.5, 30.0)


def test_peak_is_one():
    cfg = BasisConfig.evenly_spaced(7, 5.0)
    for m, c in enumerate(cfg.centers):
        assert basis_value(m, c, cfg) == 1.0


def test_one_bandwidth_offset(wide):
    assert basis_value(0, 1.5, wide) == pytest.approx(np.exp(-0.5), rel=1e-12)
    assert basis_value(0, 1.5, wide) == pytest.approx(0.60653, abs=1e-5)


def test_zero_beyond_support():
    cfg = BasisConfig.evenly_spaced(7, 5.0)
    assert all(basis_value(m, 6.0, cfg) == 0.0 for m in range(7))


def test_index_error():
    cfg = BasisConfig.evenly_spaced(3, 5.0)
    with pytest.raises(IndexError):
        basis_value(3, 1.0, cfg)
    with pytest.raises(IndexError):
        basis_integral(-1, 1.0, cfg)


def test_default_centers_and_bandwidths():
    real = BasisConfig.real_data_default()
    assert real.m_count == 31 and real.bandwidth == 1.5 and real.support == 90.0
    assert np.allclose(np.diff(real.centers), 3.0)
    syn = BasisConfig.synthetic_default()
    assert syn.m_count == 7 and syn.support == 5.0
    assert syn.bandwidth == pytest.approx(5.0 / 12)
    assert BasisConfig.evenly_spaced(1, 4.0).centers.tolist() == [0.0]


@pytest.mark.parametrize("bad", [
    dict(m_count=0, centers=[], bandwidth=1.0, support=1.0),
    dict(m_count=2, centers=[0.0, 0.0], bandwidth=1.0, support=1.0),
    dict(m_count=1, centers=[2.0], bandwidth=1.0, support=1.0),
    dict(m_count=1, centers=[0.0], bandwidth=0.0, support=1.0),
])
def test_invalid_config(bad):
    with pytest.raises(ValueError):
        BasisConfig(**bad)


def test_integral_at_zero(wide):
    assert basis_integral(0, 0.0, wide) == 0.0


def test_half_gaussian_mass(wide):
    # quadrature oracle at step 1e-4
    t = np.arange(0, 30.0 + 1e-9, 1e-4)
    quad = trapezoid(gaussian_direct(t, 0.0, 1.5, 30.0), t)
    assert quad == pytest.approx(1.87997, abs=1e-5)
    assert basis_integral(0, 30.0, wide) == pytest.approx(quad, rel=1e-8)
    assert basis_integral(0, 1e6, wide) == pytest.approx(HALF_GAUSS, rel=1e-12)


def test_integral_matches_quadrature_everywhere():
    cfg = BasisConfig.evenly_spaced(5, 4.0, 0.7)
    step = cfg.support / 1e5
    t = np.arange(0, cfg.support + step / 2, step)
    for m in range(cfg.m_count):
        g = gaussian_direct(t, cfg.centers[m], cfg.bandwidth, cfg.support)
        cum = np.concatenate([[0], np.cumsum(0.5 * (g[1:] + g[:-1]) * step)])
        for k in (10_000, 50_000, 100_000):
            assert basis_integral(m, t[k], cfg) == pytest.approx(cum[k], rel=1e-6)


configs = st.builds(
    lambda m, support, frac: BasisConfig.evenly_spaced(m, support, frac * support),
    st.integers(1, 12), st.floats(0.5, 100.0), st.floats(0.01, 1.0),
)


@given(configs, st.floats(0.0, 200.0), st.floats(0.0, 200.0))
def test_value_bounds_and_monotone_integral(cfg, t1, t2):
    lo, hi = sorted((t1, t2))
    v = cfg.values(lo)
    assert np.all((v >= 0) & (v <= 1))
    g_lo, g_hi = cfg.integrals(lo), cfg.integrals(hi)
    assert np.all(g_hi >= g_lo - 1e-12)
    assert np.all(g_hi <= cfg.bandwidth * np.sqrt(2 * np.pi) + 1e-12)


def test_monotone_example(rng):
    for _ in range(20):
        cfg = BasisConfig.evenly_spaced(int(rng.integers(1, 8)), float(rng.uniform(1, 10)))
        assert np.all(cfg.integrals(2.0) >= cfg.integrals(1.0))


def test_impact_value_cases(rng):
    cfg = BasisConfig.evenly_spaced(4, 6.0)
    coef = np.zeros((2, 2, 4))
    assert np.all(impact_value(coef, 0, 1, np.linspace(0, 10, 50), cfg) == 0)
    coef[1, 0, 2] = 2.0
    assert impact_value(coef, 1, 0, cfg.centers[2], cfg) == pytest.approx(2.0)

    coef = rng.uniform(0, 1, (2, 2, 4))
    ts = rng.uniform(0, 8, 100)
    direct = [sum(coef[0, 1, m] * gaussian_direct(t, cfg.centers[m], cfg.bandwidth, cfg.support)
                  for m in range(4)) for t in ts]
    assert np.allclose(impact_value(coef, 0, 1, ts, cfg), direct, rtol=1e-12, atol=0)


def test_impact_integral_cases(rng):
    cfg = BasisConfig(1, [0.0], 1.5, 30.0)
    coef = np.zeros((1, 1, 1))
    assert impact_integral(coef, 0, 0, 30.0, cfg) == 0.0
    coef[0, 0, 0] = 1.0
    assert impact_integral(coef, 0, 0, 30.0, cfg) == pytest.approx(1.87997, abs=1e-5)

    cfg = BasisConfig.evenly_spaced(5, 4.0)
    r1, r2 = rng.uniform(0, 1, (2, 1, 1, 5))
    total = impact_integral(r1 + r2, 0, 0, 4.0, cfg)
    assert total == pytest.approx(impact_integral(r1, 0, 0, 4.0, cfg) + impact_integral(r2, 0, 0, 4.0, cfg))


@settings(max_examples=50)
@given(st.lists(st.floats(0.0, 5.0), min_size=3, max_size=3))
def test_impact_zero_iff_row_zero(row):
    cfg = BasisConfig.evenly_spaced(3, 4.0)
    coef = np.array(row).reshape(1, 1, 3)
    vals = impact_value(coef, 0, 0, np.linspace(0, 4, 401), cfg)
    assert np.all(vals >= 0)
    assert (np.max(vals) == 0) == (not any(row))
