import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plslab.channel import (FadingConfig, RssModel, Rng, measure_rss, probe_pair, rss_at,
                            sample_rayleigh)
from plslab.errors import DomainError, GeometryError


def test_same_seed_same_stream():
    a, b = Rng(7, 3), Rng(7, 3)
    assert np.array_equal(a.uniform(50), b.uniform(50))
    assert np.array_equal(a.complex_normal(2.0, 20), b.complex_normal(2.0, 20))


def test_streams_are_distinct():
    assert not np.array_equal(Rng(7, 0).uniform(20), Rng(7, 1).uniform(20))


def test_complex_normal_moments():
    z = Rng(1).complex_normal(2.5, 200_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(2.5, rel=0.02)
    assert abs(np.mean(z)) < 0.02
    # circular symmetry: E[z^2] = 0
    assert abs(np.mean(z * z)) < 0.03


def test_standard_normal_odd_size_and_scalar():
    r = Rng(3)
    assert r.standard_normal(5).shape == (5,)
    assert np.isscalar(r.standard_normal()) or np.ndim(r.standard_normal()) == 0
    assert r.standard_normal((3, 4)).shape == (3, 4)


def test_bad_seed_rejected():
    with pytest.raises(DomainError):
        Rng(-1)


def test_fading_variance_must_be_positive():
    with pytest.raises(DomainError):
        FadingConfig(0.0)


def test_rayleigh_power():
    h = sample_rayleigh(Rng(2), FadingConfig(3.0), 100_000)
    assert np.mean(np.abs(h) ** 2) == pytest.approx(3.0, rel=0.02)


def test_noiseless_probes_are_reciprocal():
    d = probe_pair(Rng(4), FadingConfig(), noise_var=0.0, count=10)
    assert np.array_equal(d.z_a, d.z_b)


def test_probe_uses_other_partys_pilot():
    d = probe_pair(Rng(4), FadingConfig(), noise_var=0.0, probe_a=2.0, probe_b=1j)
    assert d.z_a == pytest.approx(1j * d.h)
    assert d.z_b == pytest.approx(2.0 * d.h)


def test_rss_model_bounds():
    with pytest.raises(DomainError):
        RssModel(1.0)
    with pytest.raises(DomainError):
        RssModel(2.0, -1.0)


def test_rss_noiseless_log_distance():
    m = RssModel(3.0, 0.0)
    assert rss_at(Rng(0), (0, 0), (10, 0), 0.0, m) == pytest.approx(-30.0)


def test_rss_coincident_nodes():
    with pytest.raises(GeometryError):
        rss_at(Rng(0), (1, 1), (1, 1), 0.0, RssModel())


def test_measure_rss_records_model():
    s = measure_rss(Rng(0), (0, 0), [(1, 0), (0, 2)], 0.0, RssModel(2.0, 1.0))
    assert len(s) == 2 and s[1].position == (0.0, 2.0) and s[0].shadowing_std_db == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 1000))
def test_rng_reproducible(seed, stream):
    assert np.array_equal(Rng(seed, stream).bits(32), Rng(seed, stream).bits(32))
