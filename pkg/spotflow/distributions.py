"""Special functions and distribution tails used by the statistical tests.

Thin wrappers around :mod:`scipy.special` and :mod:`scipy.stats` which check
their arguments' domains and raise :exc:`spotflow.errors.DomainError` instead
of returning NaN. All functions accept scalars or numpy arrays.
"""

import numpy as np
from scipy import special
from scipy.stats import hypergeom

from .errors import DomainError


__all__ = [
	'log_gamma', 'digamma', 'norm_cdf', 'norm_sf', 't_cdf', 't_two_sided',
	'chi2_cdf', 'chi2_sf', 'f_sf', 'hypergeom_tail', 'hypergeom_log_tail',
]


def _scalar(value):
	"""Return a Python float for 0-d results, the array otherwise."""
	value = np.asarray(value, dtype=float)
	return float(value) if value.ndim == 0 else value


def _require(cond, msg):
	if not np.all(cond):
		raise DomainError(msg)


def log_gamma(x):
	"""Natural log of the gamma function, for ``x > 0``.

	>>> round(log_gamma(5), 12) == round(np.log(24), 12)
	True
	"""
	x = np.asarray(x, dtype=float)
	_require(x > 0, 'log_gamma requires x > 0')
	return _scalar(special.gammaln(x))


def digamma(x):
	"""Digamma function, for ``x > 0``.

	>>> round(digamma(1), 10)
	-0.5772156649
	"""
	x = np.asarray(x, dtype=float)
	_require(x > 0, 'digamma requires x > 0')
	return _scalar(special.psi(x))


def norm_cdf(z):
	"""Standard normal CDF.

	>>> norm_cdf(0)
	0.5
	"""
	return _scalar(special.ndtr(z))


def norm_sf(z):
	"""Standard normal upper tail, ``1 - norm_cdf(z)`` without cancellation."""
	return _scalar(special.ndtr(-np.asarray(z, dtype=float)))


def t_cdf(t, df):
	"""Student t CDF with ``df > 0`` degrees of freedom (non-integer allowed)."""
	df = np.asarray(df, dtype=float)
	_require(df > 0, 't_cdf requires df > 0')
	return _scalar(special.stdtr(df, t))


def t_two_sided(t, df):
	"""Two-sided p-value of a t statistic, ``2 P(T > |t|)``, clipped to [0, 1]."""
	t = np.abs(np.asarray(t, dtype=float))
	p = 2 * np.asarray(t_cdf(-t, df))
	return _scalar(np.clip(p, 0, 1))


def chi2_cdf(x, k):
	"""Chi-squared CDF with ``k > 0`` degrees of freedom."""
	k = np.asarray(k, dtype=float)
	_require(k > 0, 'chi2_cdf requires k > 0')
	x = np.maximum(np.asarray(x, dtype=float), 0)
	return _scalar(special.chdtr(k, x))


def chi2_sf(x, k):
	"""Chi-squared upper tail ``P(X >= x)``."""
	k = np.asarray(k, dtype=float)
	_require(k > 0, 'chi2_sf requires k > 0')
	x = np.maximum(np.asarray(x, dtype=float), 0)
	return _scalar(special.chdtrc(k, x))


def f_sf(f, dfn, dfd):
	"""F distribution upper tail ``P(F >= f)``."""
	dfn = np.asarray(dfn, dtype=float)
	dfd = np.asarray(dfd, dtype=float)
	_require((dfn > 0) & (dfd > 0), 'f_sf requires positive degrees of freedom')
	f = np.maximum(np.asarray(f, dtype=float), 0)
	return _scalar(special.fdtrc(dfn, dfd, f))


def _check_hypergeom(k, N, K, n):
	N, K, n = (np.asarray(v) for v in (N, K, n))
	_require(N >= 0, 'hypergeometric population size must be nonnegative')
	_require((K >= 0) & (K <= N), 'hypergeometric requires 0 <= K <= N')
	_require((n >= 0) & (n <= N), 'hypergeometric requires 0 <= n <= N')
	return np.asarray(k), N, K, n


def hypergeom_log_tail(k, N, K, n):
	"""Natural log of :func:`hypergeom_tail`."""
	k, N, K, n = _check_hypergeom(k, N, K, n)
	logp = hypergeom.logsf(k - 1, N, K, n)
	return _scalar(np.where(k <= 0, 0.0, logp))


def hypergeom_tail(k, N, K, n):
	"""Upper tail ``P(X >= k)`` of the hypergeometric distribution.

	``X`` counts marked items in ``n`` draws without replacement from ``N``
	items of which ``K`` are marked. Computed in log space.

	:param k: Observed count.
	:param int N: Population size.
	:param int K: Marked items in the population.
	:param int n: Draws.

	>>> round(hypergeom_tail(5, 10, 5, 5), 10) == round(1 / 252, 10)
	True
	>>> hypergeom_tail(0, 10, 5, 5)
	1.0
	"""
	return _scalar(np.exp(hypergeom_log_tail(k, N, K, n)))
