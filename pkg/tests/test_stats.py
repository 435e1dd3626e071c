"""Test two-sample tests, correlations and p-value adjustment."""

import math

import pytest
import numpy as np
from scipy import stats as sps
from hypothesis import given, strategies as st

from spotflow.stats import (
	welch_t, wilcoxon_rank_sum, bootstrap_t, pearson, robust_cor,
	fisher_z_compare, kraskov_mi, adjust_pvalues, welch_statistic,
)
from spotflow.errors import DataError, DomainError, ZeroVarianceError
from spotflow.test import brute_force_permutation_p


def test_welch_t():
	res = welch_t([1, 2, 3, 4], [2, 4, 6, 8])
	assert res.statistic == pytest.approx(-math.sqrt(3))

	expected = sps.ttest_ind([1, 2, 3, 4], [2, 4, 6, 8], equal_var=False)
	assert res.p_value == pytest.approx(expected.pvalue, rel=1e-10)
	assert res.method == 'welch-t'


def test_pooled_t():
	x, y = [1.0, 3.0, 2.5, 4.0], [5.0, 4.5, 7.0]
	res = welch_t(x, y, pooled=True)
	expected = sps.ttest_ind(x, y, equal_var=True)

	assert res.statistic == pytest.approx(expected.statistic)
	assert res.p_value == pytest.approx(expected.pvalue)
	assert res.df == 5


def test_welch_t_degenerate():
	with pytest.raises(ZeroVarianceError):
		welch_t([1, 1, 1], [2, 2])

	# One constant sample is fine
	assert np.isfinite(welch_t([1, 1, 1], [2, 3]).statistic)

	with pytest.raises(DataError):
		welch_t([1], [2, 3])
	with pytest.raises(DataError):
		welch_t([1, np.nan], [2, 3])


def test_welch_statistic_rows():
	"""Vectorized statistic matches the scalar test row by row."""
	rng = np.random.default_rng(1)
	x = rng.normal(size=(5, 4))
	y = rng.normal(size=(5, 6))
	t, _ = welch_statistic(x, y)

	for i in range(5):
		assert t[i] == pytest.approx(welch_t(x[i], y[i]).statistic)


def test_wilcoxon_exact():
	res = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
	assert res.statistic == 6
	assert res.p_value == pytest.approx(0.1)
	assert res.method == 'wilcoxon-exact'


def test_wilcoxon_matches_enumeration():
	x = np.array([1.1, 2.5, 3.7])
	y = np.array([0.2, 4.8, 5.9, 6.3])

	def centered_rank_sum(a, b):
		ranks = sps.rankdata(np.concatenate([a, b]))
		return ranks[:len(a)].sum() - len(a) * (len(a) + len(b) + 1) / 2

	res = wilcoxon_rank_sum(x, y)
	assert res.statistic == 9
	assert res.p_value == pytest.approx(brute_force_permutation_p(x, y, centered_rank_sum))


def test_wilcoxon_ties_use_normal():
	res = wilcoxon_rank_sum([1, 2, 2, 3], [2, 4, 5, 6])
	assert res.method == 'wilcoxon-normal'
	assert 0 < res.p_value <= 1

	assert wilcoxon_rank_sum(np.arange(15), np.arange(15, 30)).method == 'wilcoxon-normal'


def test_wilcoxon_small_samples_always_exact():
	"""Small tie-free samples are enumerated even when exact=False."""
	res = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6], exact=False)
	assert res.method == 'wilcoxon-exact'
	assert res.p_value == pytest.approx(0.1)

	big = wilcoxon_rank_sum(np.arange(15), np.arange(15, 30), exact=True)
	assert big.method == 'wilcoxon-exact'


def test_wilcoxon_all_tied():
	"""All-equal samples give the null mean statistic and p = 1."""
	res = wilcoxon_rank_sum([1, 1, 1], [1, 1, 1])
	assert res.statistic == 3 * 7 / 2
	assert res.p_value == 1
	assert res.method == 'wilcoxon-normal'


def test_bootstrap_matches_enumeration():
	"""Permutation p-value approximates the exact one."""
	x = np.array([1.2, 2.3, 0.7, 1.9, 2.8])
	y = np.array([2.9, 3.5, 4.1, 2.2, 3.8])

	def t_stat(a, b):
		return float(welch_statistic(a, b)[0])

	exact = brute_force_permutation_p(x, y, t_stat)
	res = bootstrap_t(x, y, B=4000, seed=3)

	assert res.statistic == pytest.approx(welch_t(x, y).statistic)
	assert res.p_value == pytest.approx(exact, abs=0.03)


def test_bootstrap_deterministic():
	x, y = [1.0, 2.0, 3.0], [2.0, 5.0, 6.0, 7.0]

	a = bootstrap_t(x, y, B=200, seed=5, mode='bootstrap')
	b = bootstrap_t(x, y, B=200, seed=5, mode='bootstrap')
	assert a == b
	assert a.p_value >= 1 / 201


def test_bootstrap_invalid():
	with pytest.raises(DomainError):
		bootstrap_t([1, 2], [3, 4], B=10)
	with pytest.raises(DomainError):
		bootstrap_t([1, 2], [3, 4], mode='jackknife')
	with pytest.raises(ZeroVarianceError):
		bootstrap_t([1, 1], [1, 1])


def test_pearson():
	x = [1.0, 2.0, 4.0, 3.0, 6.0]
	y = [2.0, 1.0, 5.0, 3.0, 5.5]
	est = pearson(x, y)
	expected = sps.pearsonr(x, y)

	assert est.r == pytest.approx(expected[0])
	assert est.p_zero == pytest.approx(expected[1])
	assert est.n == 5 and est.removed_index is None

	with pytest.raises(ZeroVarianceError):
		pearson([1, 2, 3], [4, 4, 4])
	with pytest.raises(DataError):
		pearson([1, 2, 3], [1, 2, 3, 4])


def test_robust_cor():
	est = robust_cor([1, 2, 3, 4, 10], [1, 2, 3, 4, -10])
	assert est.removed_index == 4
	assert est.r == 1.0
	assert est.n == 4
	assert est.p_zero == 0.0


def test_fisher_z():
	res = fisher_z_compare(0.9, 23, 0.0, 23)
	assert res.statistic == pytest.approx(4.656, abs=1e-3)
	assert res.p_value == pytest.approx(3.2e-6, rel=0.05)

	assert fisher_z_compare(0.3, 10, 0.3, 50).statistic == 0

	with pytest.raises(DomainError):
		fisher_z_compare(1.0, 10, 0.0, 10)
	with pytest.raises(DomainError):
		fisher_z_compare(0.5, 3, 0.0, 10)


@pytest.mark.parametrize('rho', [0.0, 0.5, 0.9])
def test_kraskov_bivariate_normal(rho):
	"""Estimate is within 0.05 nats of -log(1 - rho^2) / 2 at n = 5000."""
	rng = np.random.default_rng(0)
	x = rng.normal(size=5000)
	noise = rng.normal(size=5000)
	y = rho * x + math.sqrt(1 - rho ** 2) * noise

	assert kraskov_mi(x, y) == pytest.approx(-0.5 * math.log(1 - rho ** 2), abs=0.05)


def test_kraskov_rank_invariance():
	rng = np.random.default_rng(2)
	x = rng.normal(size=50)
	y = x + rng.normal(size=50)

	assert kraskov_mi(x, y, ranks=True) == kraskov_mi(np.exp(x), y ** 3, ranks=True)


def test_kraskov_invalid():
	with pytest.raises(DomainError):
		kraskov_mi([1, 2, 3], [3, 1, 2], k=3)
	with pytest.raises(ZeroVarianceError):
		kraskov_mi([1, 1, 1, 1], [1, 2, 3, 4], k=1)


def test_adjust_pvalues():
	np.testing.assert_allclose(adjust_pvalues([0.01, 0.02, 0.03], 'BH'), [0.03, 0.03, 0.03])
	np.testing.assert_allclose(adjust_pvalues([0.01, 0.04, 0.03], 'holm'), [0.03, 0.06, 0.06])
	np.testing.assert_allclose(adjust_pvalues([0.01, 0.5], 'bonferroni'), [0.02, 1.0])
	np.testing.assert_allclose(adjust_pvalues([0.2, 0.1], 'none'), [0.2, 0.1])

	out = adjust_pvalues([0.01, np.nan, 0.02], 'BH')
	assert np.isnan(out[1])
	np.testing.assert_allclose(out[[0, 2]], [0.02, 0.02])

	with pytest.raises(DomainError):
		adjust_pvalues([0.1], 'fdr')
	with pytest.raises(DomainError):
		adjust_pvalues([1.5], 'BH')


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.sampled_from(['bonferroni', 'holm', 'BH', 'BY']))
def test_adjust_pvalues_bounds(p, method):
	"""Adjusted values are in [p, 1] and keep the order of the input."""
	p = np.array(p)
	adj = adjust_pvalues(p, method)

	assert np.all(adj >= p - 1e-12)
	assert np.all(adj <= 1)

	order = np.argsort(p, kind='stable')
	assert np.all(np.diff(adj[order]) >= -1e-12)
