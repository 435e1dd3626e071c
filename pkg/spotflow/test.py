"""Helpers and brute-force reference implementations for testing spotflow."""

import itertools
from fractions import Fraction
from math import comb

import numpy as np

from .dataclass import dataclass_arrays
from .ingest import GeneMap, SampleSheet, RawDataset
from .layout import ChipLayout
from .normalize import NormalizedDataset


def assert_records_equal(a, b):
	"""Assert two records are equal, array fields included (NaN equal to NaN)."""
	assert type(a) is type(b)
	assert a == b

	arrays_a, arrays_b = dataclass_arrays(a), dataclass_arrays(b)
	assert arrays_a.keys() == arrays_b.keys()

	for name in arrays_a:
		assert arrays_a[name].dtype == arrays_b[name].dtype, name
		np.testing.assert_array_equal(arrays_a[name], arrays_b[name], err_msg=name)


def make_sample_sheet(labels, swapped=None):
	"""Sample sheet of chips ``chip1, chip2, ...``.

	:param dict labels: Label name to per-chip values.
	:param swapped: Indices of dye-swapped chips.
	"""
	n = len(next(iter(labels.values())))
	swapped = set(swapped or ())
	return SampleSheet(
		file_names=['chip{}'.format(j + 1) for j in range(n)],
		interest_channel=['ch2' if j in swapped else 'ch1' for j in range(n)],
		label_names=list(labels),
		labels=labels,
	)


def make_gene_map(names, **extra):
	"""Gene map with label ``GeneName`` and optional further labels."""
	labels = {'GeneName': list(names)}
	labels.update({k: list(v) for k, v in extra.items()})
	return GeneMap(label_names=list(labels), labels=labels)


def make_normalized(w, sample_labels, gene_names=None, a=None, layout=None, **kwargs):
	"""Normalized dataset from a ``genes x samples`` W matrix.

	:param w: Log-ratios.
	:param dict sample_labels: Sample label name to per-sample values.
	:param gene_names: Values of gene label ``GeneName``, ``g1, g2, ...``
		if None.
	:param a: Mean log-intensities, 10 everywhere if None.
	"""
	w = np.asarray(w, dtype=float)
	n_genes, n_samples = w.shape

	if gene_names is None:
		gene_names = ['g{}'.format(i + 1) for i in range(n_genes)]
	if a is None:
		a = np.full(w.shape, 10.0)

	return NormalizedDataset(
		w=w,
		a=a,
		use_spot=np.ones(w.shape, dtype=bool),
		bad_spot=np.zeros(n_genes, dtype=bool),
		gene_map=make_gene_map(gene_names),
		sample_sheet=make_sample_sheet(sample_labels),
		layout=layout,
		**kwargs
	)


def make_raw(interest, reference, layout=None, swapped=None, sample_labels=None, gene_names=None, bg=0.0):
	"""Raw dataset from ``spots x chips`` interest and reference intensities.

	Channels are assigned according to ``swapped``; backgrounds are constant.
	"""
	interest = np.asarray(interest, dtype=float)
	reference = np.asarray(reference, dtype=float)
	n_spots, n_chips = interest.shape

	if layout is None:
		layout = ChipLayout(1, 1, 1, n_spots)
	if sample_labels is None:
		sample_labels = {'Sample': ['s{}'.format(j + 1) for j in range(n_chips)]}
	if gene_names is None:
		gene_names = ['g{}'.format(i + 1) for i in range(n_spots)]

	sheet = make_sample_sheet(sample_labels, swapped)
	swap = sheet.swapped[None, :]

	return RawDataset(
		ch1_fg=np.where(swap, reference, interest) + bg,
		ch1_bg=np.full(interest.shape, bg),
		ch2_fg=np.where(swap, interest, reference) + bg,
		ch2_bg=np.full(interest.shape, bg),
		flags=np.zeros(interest.shape, dtype=np.int64),
		use_spot=np.ones(interest.shape, dtype=bool),
		bad_spot=np.zeros(n_spots, dtype=bool),
		gene_map=make_gene_map(gene_names),
		sample_sheet=sheet,
		layout=layout,
	)


def make_null(n_genes, n_samples, seed, label='Type'):
	"""Normalized dataset with no signal and randomly permuted group labels.

	Genes get their own mean and spread and every sample is independent
	noise. The two levels ``a`` and ``b`` of ``label`` are split evenly;
	label ``Batch`` puts every sample in level ``x``.
	"""
	rng = np.random.default_rng(seed)
	center = rng.normal(0.0, 1.0, size=(n_genes, 1))
	scale = rng.uniform(0.2, 1.0, size=(n_genes, 1))
	w = center + scale * rng.normal(size=(n_genes, n_samples))

	levels = np.array(['a', 'b'] * (n_samples // 2) + ['a'] * (n_samples % 2))
	return make_normalized(w, {
		label: [str(v) for v in rng.permutation(levels)],
		'Batch': ['x'] * n_samples,
	})


def brute_force_hypergeom_tail(k, N, K, n):
	"""Exact ``P(X >= k)`` for ``X ~ Hypergeometric(N, K, n)``, as a Fraction.

	>>> brute_force_hypergeom_tail(5, 10, 5, 5)
	Fraction(1, 252)
	"""
	total = comb(N, n)
	hits = sum(comb(K, i) * comb(N - K, n - i) for i in range(k, min(K, n) + 1))
	return Fraction(hits, total)


def brute_force_permutation_p(x, y, statistic):
	"""Two-sided permutation p-value over every split of the pooled sample.

	:param statistic: Function of ``(x, y)``.
	"""
	pooled = np.concatenate([x, y])
	n = len(pooled)
	observed = abs(statistic(x, y))
	count = total = 0

	for chosen in itertools.combinations(range(n), len(x)):
		mask = np.zeros(n, dtype=bool)
		mask[list(chosen)] = True
		total += 1
		if abs(statistic(pooled[mask], pooled[~mask])) >= observed * (1 - 1e-9):
			count += 1

	return count / total


def exact_rank_sum_level(n1, n2, alpha):
	"""Probability under the null that the exact two-sided rank-sum p is at most ``alpha``.

	Counts the arrangements giving each Mann-Whitney U by the usual recursion
	on the largest value.

	>>> round(exact_rank_sum_level(10, 10, 0.05), 5)
	0.04326
	"""
	# counts[m][n][u] for m values of x and n of y
	counts = [[None] * (n2 + 1) for _ in range(n1 + 1)]
	for m in range(n1 + 1):
		for n in range(n2 + 1):
			if m == 0 or n == 0:
				row = [0] * (m * n + 1)
				row[0] = 1
			else:
				row = [0] * (m * n + 1)
				for u, c in enumerate(counts[m - 1][n]):
					row[u + n] += c
				for u, c in enumerate(counts[m][n - 1]):
					row[u] += c
			counts[m][n] = row

	dist = np.array(counts[n1][n2], dtype=float)
	dist /= dist.sum()
	lower = np.cumsum(dist)
	upper = np.cumsum(dist[::-1])[::-1]
	p = np.minimum(1.0, 2 * np.minimum(lower, upper))
	return float(dist[p <= alpha].sum())


def brute_force_local_linear(x, y, span, x0):
	"""Tricube-weighted local linear fit at one point, without robustness passes."""
	x = np.asarray(x, dtype=float)
	y = np.asarray(y, dtype=float)
	n_local = max(int(np.ceil(span * len(x))), 2)

	dist = np.abs(x - x0)
	radius = np.sort(dist)[n_local - 1]
	if radius == 0:
		return float(np.mean(y[dist == 0]))

	u = np.clip(dist / radius, 0, 1)
	weights = (1 - u ** 3) ** 3
	X = np.column_stack([np.ones_like(x), x - x0])
	coef = np.linalg.lstsq(X * np.sqrt(weights)[:, None], y * np.sqrt(weights), rcond=None)[0]
	return float(coef[0])


def brute_force_subsets(n_rows, n_genes, score):
	"""Score every subset of ``n_genes`` rows, best first.

	:param score: Function of a tuple of rows returning the accuracy.
	:returns: List of ``(accuracy, rows)`` sorted by decreasing accuracy,
		then by increasing row sum, then rows.
	"""
	scored = [(score(rows), rows) for rows in itertools.combinations(range(n_rows), n_genes)]
	scored.sort(key=lambda item: (-item[0], sum(item[1]), item[1]))
	return scored
