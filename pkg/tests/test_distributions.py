"""Test spotflow.distributions."""

import math

import pytest
import numpy as np
from hypothesis import given, strategies as st
from scipy import stats as sps

from spotflow import distributions as dist
from spotflow.errors import DomainError
from spotflow.test import brute_force_hypergeom_tail


def test_hypergeom_tail_example():
	assert dist.hypergeom_tail(5, 10, 5, 5) == pytest.approx(1 / 252, rel=1e-12)
	assert dist.hypergeom_tail(0, 10, 5, 5) == 1.0
	assert dist.hypergeom_tail(6, 10, 5, 5) == 0.0


@given(st.data())
def test_hypergeom_tail_exact(data):
	"""Tail agrees with direct summation of binomial coefficients."""
	N = data.draw(st.integers(1, 40))
	K = data.draw(st.integers(0, N))
	n = data.draw(st.integers(0, N))
	k = data.draw(st.integers(0, n + 1))

	expected = float(brute_force_hypergeom_tail(k, N, K, n))
	assert dist.hypergeom_tail(k, N, K, n) == pytest.approx(expected, rel=1e-7, abs=1e-300)


def test_hypergeom_log_tail_small():
	"""Log tail stays finite where the tail itself is tiny."""
	expected = -math.log(math.comb(200, 100))
	assert dist.hypergeom_log_tail(100, 200, 100, 100) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize('args', [(1, 10, 11, 5), (1, 10, 5, 11), (1, -1, 0, 0)])
def test_hypergeom_domain(args):
	with pytest.raises(DomainError):
		dist.hypergeom_tail(*args)


def test_t_distribution():
	for t, df in [(0.0, 3), (2.5, 7.3), (-1.2, 1), (40.0, 2)]:
		assert dist.t_cdf(t, df) == pytest.approx(sps.t.cdf(t, df), rel=1e-10)
		assert dist.t_two_sided(t, df) == pytest.approx(2 * sps.t.sf(abs(t), df), rel=1e-10)

	assert dist.t_two_sided(0, 5) == 1.0

	with pytest.raises(DomainError):
		dist.t_cdf(1.0, 0)


def test_chi2_and_f():
	assert dist.chi2_cdf(3.0, 2) + dist.chi2_sf(3.0, 2) == pytest.approx(1.0)
	assert dist.chi2_sf(3.0, 2) == pytest.approx(math.exp(-1.5))
	assert dist.chi2_sf(-1.0, 2) == 1.0
	assert dist.f_sf(2.0, 3, 10) == pytest.approx(sps.f.sf(2.0, 3, 10), rel=1e-10)

	with pytest.raises(DomainError):
		dist.chi2_sf(1.0, 0)
	with pytest.raises(DomainError):
		dist.f_sf(1.0, 1, -2)


def test_normal():
	assert dist.norm_cdf(1.96) == pytest.approx(0.975, abs=1e-4)
	assert dist.norm_sf(10) == pytest.approx(sps.norm.sf(10), rel=1e-10)
	np.testing.assert_allclose(dist.norm_cdf(np.array([-1.0, 0.0])), [sps.norm.cdf(-1), 0.5])


def test_gamma_functions():
	assert dist.log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)))
	assert dist.digamma(2) == pytest.approx(1 - np.euler_gamma)

	with pytest.raises(DomainError):
		dist.log_gamma(0)
	with pytest.raises(DomainError):
		dist.digamma(-1.0)
