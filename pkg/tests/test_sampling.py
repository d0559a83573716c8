import math

import numpy as np
import pytest

from eqe import core, sampling
from eqe.errors import DomainError

SHAPES = [
    (1, -3.0, 0.5),
    (2, 8.0, 4.0),
    (3, 4.0, 1.5),
    (5, 0.5, 2.0),
    (4, -1.0, 0.25),
]


def test_seeded_generator_is_deterministic():
    a = sampling.SeededGenerator(7).rng.uniform(size=5)
    b = sampling.SeededGenerator(7).rng.uniform(size=5)
    c = sampling.SeededGenerator(8).rng.uniform(size=5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_shape_and_determinism():
    p = core.RadialParams(3, 4.0, 1.5)
    x = sampling.sample(p, 100, sampling.SeededGenerator(5))
    assert x.shape == (100, 3)
    assert x.dtype == np.float64
    y = sampling.sample(p, 100, sampling.SeededGenerator(5))
    np.testing.assert_array_equal(x, y)


def test_sample_accepts_bare_int_seed():
    p = core.RadialParams(2, 1.0, 1.0)
    x = sampling.sample(p, 50, 123)
    y = sampling.sample(p, 50, sampling.SeededGenerator(123))
    np.testing.assert_array_equal(x, y)


def test_sample_accepts_numpy_generator():
    p = core.RadialParams(2, 1.0, 1.0)
    x = sampling.sample(p, 50, np.random.default_rng(9))
    assert x.shape == (50, 2)


def test_sample_input_validation():
    p = core.RadialParams(2, 1.0, 1.0)
    with pytest.raises(DomainError):
        sampling.sample(p, 0, 1)
    with pytest.raises(DomainError):
        sampling.sample(p, -5, 1)
    with pytest.raises(DomainError):
        sampling.sample(p, 2.5, 1)
    with pytest.raises(DomainError):
        sampling.sample(p, 10, "not a generator")


@pytest.mark.parametrize("dim,l1,l2", SHAPES)
def test_table_cdf_properties(dim, l1, l2):
    table = sampling.build_radial_table(core.RadialParams(dim, l1, l2))
    assert table.cdf(0.0) == 0.0
    np.testing.assert_allclose(table.cdf(table.r_max), 1.0, rtol=1e-12)
    assert np.all(np.diff(table.cdf_values) >= 0.0)
    assert np.all(table.pdf_values >= 0.0)


@pytest.mark.parametrize("dim,l1,l2", SHAPES)
def test_table_inverse_round_trip(dim, l1, l2):
    table = sampling.build_radial_table(core.RadialParams(dim, l1, l2))
    u = np.linspace(1e-9, 1.0 - 1e-9, 2001)
    r = table.inverse_cdf(u)
    assert np.all(np.diff(r) > 0.0)
    np.testing.assert_allclose(table.cdf(r), u, rtol=0, atol=1e-8)


def test_table_covers_the_mode():
    p = core.RadialParams(2, 8.0, 4.0)
    table = sampling.build_radial_table(p)
    assert table.r_max > core.mode_radius(p)
    # half the mass sits inside the mode shell radius for a symmetric ring
    u_mode = table.cdf(core.mode_radius(p))
    assert 0.2 < u_mode < 0.8


@pytest.mark.parametrize("seed,shape", [(27, (2, 8.0, 4.0)),
                                        (22, (3, -2.0, 1.0)),
                                        (23, (5, 1.0, 0.3))])
def test_radial_law_kolmogorov_smirnov(seed, shape):
    """PIT of sampled radii through the table cdf must look uniform."""
    n = 20000
    p = core.RadialParams(*shape)
    table = sampling.build_radial_table(p)
    x = sampling.sample(p, n, sampling.SeededGenerator(seed))
    u = np.sort(table.cdf(np.linalg.norm(x, axis=1)))
    k = np.arange(n)
    d_ks = float(np.max(np.maximum(u - k / n, (k + 1) / n - u)))
    # 5 percent critical value of the one-sample statistic
    assert d_ks * math.sqrt(n) < 1.358


@pytest.mark.parametrize("dim,l1,l2", SHAPES)
def test_sample_second_moment(dim, l1, l2):
    p = core.RadialParams(dim, l1, l2)
    x = sampling.sample(p, 20000, sampling.SeededGenerator(40 + dim))
    m2 = float(np.mean(np.sum(x * x, axis=1)))
    np.testing.assert_allclose(m2, core.radial_moment(p, 2), rtol=0.02)


def test_directions_have_zero_mean():
    p = core.RadialParams(3, 6.0, 2.0)
    x = sampling.sample(p, 50000, sampling.SeededGenerator(55))
    u = x / np.linalg.norm(x, axis=1, keepdims=True)
    # component means are 0 with sd 1/sqrt(n D)
    bound = 5.0 / math.sqrt(50000 * 3)
    assert np.all(np.abs(u.mean(axis=0)) < bound)


def test_elliptical_sample_location_and_shape():
    rad = core.RadialParams(2, 8.0, 4.0)
    mu = np.array([1.0, -2.0])
    sigma = np.array([[1.5, 0.4], [0.4, 0.8]])
    p = core.EllipticalParams(mu, sigma, rad)
    x = sampling.sample(p, 100000, sampling.SeededGenerator(31))
    np.testing.assert_allclose(x.mean(axis=0), mu, rtol=0, atol=0.01)
    # E[(x - mu)(x - mu)'] = (E[q] / D) Sigma
    cov = np.cov(x.T, bias=True)
    expected = core.radial_moment(rad, 2) / 2.0 * sigma
    np.testing.assert_allclose(cov, expected, rtol=0.03)


def test_stream_is_stable_across_batch_sizes():
    # one call for 2n draws starts with the same uniforms as a call for n,
    # so the radii agree on the shared prefix only if the stream layout is
    # documented; here we only pin full-call determinism
    p = core.RadialParams(2, 3.0, 1.0)
    x1 = sampling.sample(p, 64, sampling.SeededGenerator(77))
    x2 = sampling.sample(p, 64, sampling.SeededGenerator(77))
    np.testing.assert_array_equal(x1, x2)


def test_annular_samples_avoid_the_origin():
    # alpha = 18 gives a hard ring; the region near r = 0 carries on the
    # order of 1e-4 of the mass, so almost every draw hugs the shell
    p = core.ring_to_radial(core.RingParams(2, 18.0, 1.0))
    x = sampling.sample(p, 5000, sampling.SeededGenerator(60))
    r = np.linalg.norm(x, axis=1)
    assert np.sum(r < 0.3) <= 3
    assert abs(np.median(r) - 1.0) < 0.05
