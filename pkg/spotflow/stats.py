"""Two-sample tests, correlation estimates, mutual information and p-value adjustment.

All functions are pure. Those that draw random numbers take an explicit seed
and build their own :func:`numpy.random.default_rng`.
"""

import logging
import math

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import mannwhitneyu, rankdata
from statsmodels.stats.multitest import multipletests

from . import distributions as dist
from .dataclass import dataclass, field
from .errors import DataError, DomainError, ZeroVarianceError


__all__ = [
	'TestResult', 'CorrelationEstimate', 'welch_t', 'wilcoxon_rank_sum',
	'bootstrap_t', 'pearson', 'robust_cor', 'fisher_z_compare', 'kraskov_mi',
	'adjust_pvalues', 'welch_statistic', 'safe_ratio', 'ADJUST_METHODS',
]


logger = logging.getLogger(__name__)


# Adjustment method -> statsmodels multipletests name
ADJUST_METHODS = {
	'none': None,
	'bonferroni': 'bonferroni',
	'holm': 'holm',
	'BH': 'fdr_bh',
	'BY': 'fdr_by',
}

# Exact Wilcoxon enumeration limit on the total sample size
EXACT_WILCOXON_MAX = 20

# |t*| within this relative distance of |t_obs| counts as "at least as extreme"
_TIE_RTOL = 1e-9


@dataclass
class TestResult:
	"""Outcome of a hypothesis test.

	:param float statistic: Test statistic.
	:param df: Degrees of freedom, a number, a pair of numbers or None.
	:param float p_value: p-value in [0, 1].
	:param str method: Name of the test.
	"""

	__test__ = False

	statistic = field(float)
	df = field(default=None)
	p_value = field(float, default=1.0)
	method = field(str, default='')

	def __attrs_post_init__(self):
		if not 0 <= self.p_value <= 1:
			raise ValueError('p_value must be in [0, 1], got {}'.format(self.p_value))


@dataclass
class CorrelationEstimate:
	"""Correlation coefficient with its zero-correlation test.

	:param float r: Coefficient in [-1, 1].
	:param int n: Number of observations it was computed from.
	:param int removed_index: 0-based index of the observation left out by
		:func:`.robust_cor`, else None.
	:param float p_zero: Two-sided p-value of ``r = 0``, None if ``n < 3``.
	"""

	r = field(float)
	n = field(int)
	removed_index = field(int, optional=True)
	p_zero = field(float, optional=True)


def _sample(x, name, min_size):
	x = np.asarray(x, dtype=float).ravel()
	if x.size < min_size:
		raise DataError('{} needs at least {} values, got {}'.format(name, min_size, x.size))
	if not np.all(np.isfinite(x)):
		raise DataError('{} contains missing or infinite values'.format(name))
	return x


def safe_ratio(num, den):
	"""``num / den`` with ``x / 0`` as signed infinity and ``0 / 0`` as 0."""
	num = np.asarray(num, dtype=float)
	den = np.asarray(den, dtype=float)
	with np.errstate(divide='ignore', invalid='ignore'):
		out = num / den
	zero = den == 0
	return np.where(zero, np.where(num == 0, 0.0, np.sign(num) * np.inf), out)


def welch_statistic(x, y, pooled=False):
	"""Two-sample t statistics along the last axis.

	:param x: Array ``(..., n1)``.
	:param y: Array ``(..., n2)``.
	:param bool pooled: Use the pooled-variance statistic instead of Welch's.
	:returns: ``(t, df)`` arrays. A zero standard error gives an infinite
		``t`` (or 0 when the means are equal too).
	"""
	x = np.asarray(x, dtype=float)
	y = np.asarray(y, dtype=float)
	n1 = x.shape[-1]
	n2 = y.shape[-1]

	diff = x.mean(axis=-1) - y.mean(axis=-1)
	v1 = x.var(axis=-1, ddof=1)
	v2 = y.var(axis=-1, ddof=1)

	if pooled:
		df = np.full(np.shape(diff), n1 + n2 - 2, dtype=float)
		sp2 = ((n1 - 1) * v1 + (n2 - 1) * v2) / df
		se2 = sp2 * (1 / n1 + 1 / n2)
	else:
		a = v1 / n1
		b = v2 / n2
		se2 = a + b
		df = safe_ratio(se2 ** 2, a ** 2 / (n1 - 1) + b ** 2 / (n2 - 1))

	return safe_ratio(diff, np.sqrt(se2)), df


def welch_t(x, y, pooled=False):
	"""Welch's unequal-variance t test, two-sided.

	:param x: First sample, at least 2 values.
	:param y: Second sample, at least 2 values.
	:param bool pooled: Use the classic equal-variance test instead.
	:rtype: .TestResult

	:raises spotflow.errors.ZeroVarianceError: If both samples have zero
		variance.

	>>> r = welch_t([1, 2, 3, 4], [2, 4, 6, 8])
	>>> round(r.statistic, 4)
	-1.7321
	>>> welch_t([1, 2, 3], [1, 2, 3]).p_value
	1.0
	"""
	x = _sample(x, 'x', 2)
	y = _sample(y, 'y', 2)

	if np.var(x) == 0 and np.var(y) == 0:
		raise ZeroVarianceError('both samples have zero variance')

	t, df = welch_statistic(x, y, pooled=pooled)
	t = float(t)
	df = float(df)

	return TestResult(
		statistic=t,
		df=df,
		p_value=dist.t_two_sided(t, df),
		method='pooled-t' if pooled else 'welch-t',
	)


def wilcoxon_rank_sum(x, y, exact=None):
	"""Wilcoxon rank-sum test, two-sided.

	The statistic is the sum of the (mid)ranks of ``x`` in the pooled sample.
	Samples without ties and at most :data:`EXACT_WILCOXON_MAX` values in
	total always use the exact permutation distribution. Larger tie-free
	samples use it only when ``exact`` is True. Everything else uses the
	normal approximation with tie-corrected variance and continuity
	correction. If every value is tied the statistic is its null mean and
	the p-value is 1.

	:param x: First sample.
	:param y: Second sample.
	:param bool exact: Request exact enumeration beyond the size limit, None
		or False for the normal approximation there.
	:rtype: .TestResult

	>>> r = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
	>>> r.statistic, round(r.p_value, 10)
	(6.0, 0.1)
	>>> wilcoxon_rank_sum([1, 1, 1], [1, 1, 1]).p_value
	1.0
	"""
	x = _sample(x, 'x', 1)
	y = _sample(y, 'y', 1)
	n1 = x.size
	n = x.size + y.size

	pooled = np.concatenate([x, y])
	if np.ptp(pooled) == 0:
		return TestResult(
			statistic=n1 * (n + 1) / 2,
			df=None,
			p_value=1.0,
			method='wilcoxon-normal',
		)

	ties = np.unique(pooled).size < pooled.size

	if ties:
		if exact:
			logger.debug('Ties present, using the normal approximation for the rank-sum test')
		exact = False
	elif n <= EXACT_WILCOXON_MAX:
		exact = True
	else:
		exact = bool(exact)

	res = mannwhitneyu(
		x, y,
		alternative='two-sided',
		use_continuity=True,
		method='exact' if exact else 'asymptotic',
	)

	return TestResult(
		statistic=float(res.statistic) + n1 * (n1 + 1) / 2,
		df=None,
		p_value=float(np.clip(res.pvalue, 0, 1)),
		method='wilcoxon-exact' if exact else 'wilcoxon-normal',
	)


def _count_extreme(t_null, t_obs):
	t_obs = abs(t_obs)
	return int(np.count_nonzero(np.abs(t_null) >= t_obs - _TIE_RTOL * max(1.0, t_obs)))


def bootstrap_t(x, y, B=1000, seed=0, mode='permutation', pooled=False):
	"""Resampling test of the two-sample t statistic.

	The null distribution of the statistic is estimated from ``B`` resamples.
	In ``'permutation'`` mode the pooled sample is relabeled at random with
	group sizes preserved. In ``'bootstrap'`` mode both groups are shifted to
	the pooled mean and resampled with replacement. The p-value is
	``(#{|t*| >= |t_obs|} + 1) / (B + 1)``.

	:param x: First sample, at least 2 values.
	:param y: Second sample, at least 2 values.
	:param int B: Number of resamples, at least 100.
	:param int seed: Seed of the random generator.
	:param str mode: ``'permutation'`` or ``'bootstrap'``.
	:param bool pooled: Resample the pooled-variance statistic.
	:rtype: .TestResult

	:raises spotflow.errors.ZeroVarianceError: If all values are equal.
	"""
	x = _sample(x, 'x', 2)
	y = _sample(y, 'y', 2)

	if B < 100:
		raise DomainError('B must be at least 100, got {}'.format(B))
	if mode not in ('permutation', 'bootstrap'):
		raise DomainError('unknown resampling mode {!r}'.format(mode))

	z = np.concatenate([x, y])
	if np.var(z) == 0:
		raise ZeroVarianceError('pooled sample has zero variance')

	n1 = x.size
	t_obs, _ = welch_statistic(x, y, pooled=pooled)
	t_obs = float(t_obs)

	rng = np.random.default_rng(seed)

	if mode == 'permutation':
		perms = rng.permuted(np.tile(z, (B, 1)), axis=1)
		xs, ys = perms[:, :n1], perms[:, n1:]
	else:
		center = z.mean()
		xc = x - x.mean() + center
		yc = y - y.mean() + center
		xs = xc[rng.integers(0, n1, size=(B, n1))]
		ys = yc[rng.integers(0, y.size, size=(B, y.size))]

	t_null, _ = welch_statistic(xs, ys, pooled=pooled)
	count = _count_extreme(t_null, t_obs)

	return TestResult(
		statistic=t_obs,
		df=None,
		p_value=(count + 1) / (B + 1),
		method='{}-t'.format(mode),
	)


def _pearson_r(x, y):
	xc = x - x.mean()
	yc = y - y.mean()
	sxx = np.dot(xc, xc)
	syy = np.dot(yc, yc)

	if sxx == 0 or syy == 0:
		raise ZeroVarianceError('correlation undefined for a constant variable')

	r = float(np.dot(xc, yc) / (np.sqrt(sxx) * np.sqrt(syy)))

	# Snap rounding error at perfect correlation
	if 1 - abs(r) < 1e-14:
		r = math.copysign(1.0, r)

	return r


def _p_zero(r, n):
	if n < 3:
		return None
	if abs(r) >= 1:
		return 0.0
	t = r * math.sqrt(n - 2) / math.sqrt(1 - r * r)
	return dist.t_two_sided(t, n - 2)


def pearson(x, y):
	"""Pearson correlation with the t test of zero correlation.

	:param x: First variable, at least 3 values.
	:param y: Second variable, same length.
	:rtype: .CorrelationEstimate

	:raises spotflow.errors.ZeroVarianceError: If either variable is constant.

	>>> est = pearson([1, 2, 3], [6, 4, 2])
	>>> est.r, est.p_zero
	(-1.0, 0.0)
	"""
	x = _sample(x, 'x', 3)
	y = _sample(y, 'y', 3)

	if x.size != y.size:
		raise DataError('x and y must have the same length')

	r = _pearson_r(x, y)
	return CorrelationEstimate(r=r, n=x.size, p_zero=_p_zero(r, x.size))


def robust_cor(x, y):
	"""Pearson correlation with its most influential observation left out.

	Each observation is left out in turn. The one whose removal changes the
	coefficient the most is dropped, the lowest index on ties.

	:param x: First variable, at least 4 values.
	:param y: Second variable, same length.
	:rtype: .CorrelationEstimate

	>>> est = robust_cor([1, 2, 3, 4, 10], [1, 2, 3, 4, -10])
	>>> est.removed_index, est.r, est.n
	(4, 1.0, 4)
	"""
	x = _sample(x, 'x', 4)
	y = _sample(y, 'y', 4)

	if x.size != y.size:
		raise DataError('x and y must have the same length')

	n = x.size
	r_full = _pearson_r(x, y)
	keep = ~np.eye(n, dtype=bool)
	r_loo = np.array([_pearson_r(x[keep[i]], y[keep[i]]) for i in range(n)])

	i = int(np.argmax(np.abs(r_loo - r_full)))
	r = float(r_loo[i])

	return CorrelationEstimate(r=r, n=n - 1, removed_index=i, p_zero=_p_zero(r, n - 1))


def fisher_z_compare(r_a, n_a, r_b, n_b):
	"""Compare two independent correlation coefficients with Fisher's Z transform.

	:param float r_a: Coefficient in condition A, ``|r_a| < 1``.
	:param int n_a: Observations in condition A, at least 4.
	:param float r_b: Coefficient in condition B.
	:param int n_b: Observations in condition B.
	:rtype: .TestResult

	>>> res = fisher_z_compare(0.9, 23, 0.0, 23)
	>>> round(res.statistic, 3)
	4.656
	"""
	if n_a <= 3 or n_b <= 3:
		raise DomainError('Fisher Z comparison needs more than 3 observations per condition')
	if abs(r_a) >= 1 or abs(r_b) >= 1:
		raise DomainError('Fisher Z comparison needs |r| < 1')

	z = (math.atanh(r_a) - math.atanh(r_b)) / math.sqrt(1 / (n_a - 3) + 1 / (n_b - 3))
	p = min(1.0, 2 * dist.norm_sf(abs(z)))

	return TestResult(statistic=z, df=None, p_value=p, method='fisher-z')


def _strict_counts(values, radius):
	"""Count other points strictly within ``radius`` of each point in 1-d."""
	ordered = np.sort(values)
	lo = np.searchsorted(ordered, values - radius, side='right')
	hi = np.searchsorted(ordered, values + radius, side='left')
	return hi - lo - 1


def kraskov_mi(x, y, k=3, seed=0, ranks=False):
	"""Mutual information estimate, in nats, from k-nearest-neighbor distances.

	First Kraskov-Stögbauer-Grassberger estimator: the distance to each
	point's ``k``-th neighbor in the joint space (max-norm) fixes a window in
	which the strictly closer marginal neighbors are counted. Ties are broken
	with seeded jitter of ``1e-10`` times each variable's range. The estimate
	is not clamped at zero.

	:param x: First variable.
	:param y: Second variable, same length.
	:param int k: Neighbor count, ``1 <= k < n``.
	:param int seed: Seed of the jitter.
	:param bool ranks: Replace values by their ranks first, which makes the
		estimate invariant under strictly monotone maps of either variable.
	:rtype: float
	"""
	x = _sample(x, 'x', 2)
	y = _sample(y, 'y', 2)
	n = x.size

	if y.size != n:
		raise DataError('x and y must have the same length')
	if not 1 <= k < n:
		raise DomainError('k must satisfy 1 <= k < n, got k={} n={}'.format(k, n))

	if ranks:
		x = rankdata(x)
		y = rankdata(y)

	rng = np.random.default_rng(seed)
	jittered = []
	for v in (x, y):
		span = np.ptp(v)
		if span == 0:
			raise ZeroVarianceError('mutual information undefined for a constant variable')
		jittered.append(v + rng.uniform(-1, 1, n) * 1e-10 * span)
	x, y = jittered

	points = np.column_stack([x, y])
	dists, _ = cKDTree(points).query(points, k=k + 1, p=np.inf)
	eps = dists[:, k]

	nx = _strict_counts(x, eps)
	ny = _strict_counts(y, eps)

	return float(
		dist.digamma(k) + dist.digamma(n)
		- np.mean(dist.digamma(nx + 1) + dist.digamma(ny + 1))
	)


def adjust_pvalues(p, method='BH'):
	"""Adjust p-values for multiple testing.

	Missing (NaN) entries are left out of the family and stay missing. The
	adjusted values keep the input's shape and order.

	:param p: Array of p-values in [0, 1].
	:param str method: One of ``none``, ``bonferroni``, ``holm``, ``BH``, ``BY``.
	:rtype: numpy.ndarray

	>>> np.round(adjust_pvalues([0.01, 0.02, 0.03], 'BH'), 12).tolist()
	[0.03, 0.03, 0.03]
	>>> adjust_pvalues([0.6, 0.9], 'bonferroni').tolist()
	[1.0, 1.0]
	"""
	if method not in ADJUST_METHODS:
		raise DomainError('unknown adjustment method {!r}; expected one of {}'.format(method, ', '.join(ADJUST_METHODS)))

	p = np.array(p, dtype=float)
	finite = ~np.isnan(p)

	if np.any((p[finite] < 0) | (p[finite] > 1)):
		raise DomainError('p-values must be in [0, 1]')

	out = p.copy()
	name = ADJUST_METHODS[method]

	if name is not None and finite.any():
		_, adjusted, _, _ = multipletests(p[finite], method=name)
		out[finite] = np.clip(adjusted, 0, 1)

	return out
