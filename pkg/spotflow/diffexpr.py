"""Gene-wise differential expression.

Two-group tests run the chosen test from :mod:`spotflow.stats` on every gene.
ANOVA fits every gene by ordinary least squares on a treatment-coded design
and reports either the F test of all non-intercept coefficients or t tests
of contrasts. Results are :class:`.DEResult` records holding one column per
"family" of statistics (the test, each contrast or the F test) so p-values
are adjusted per family.
"""

import itertools
import logging
import warnings

import numpy as np
import pandas as pd

from . import distributions as dist
from .dataclass import dataclass, field, array_field, nested_tuple
from .errors import DataError, LabelError, ZeroVarianceError
from .ingest import GeneMap, SampleSheet
from .parallel import ordered_map
from .stats import welch_t, wilcoxon_rank_sum, bootstrap_t, adjust_pvalues, safe_ratio
from .tables import render_table


__all__ = [
	'DE_TESTS', 'DEResult', 'AnovaDesign', 'de_genes_two_groups', 'design_anova',
	'fit_anova', 'de_frame', 'de_table', 'volcano_data',
]


logger = logging.getLogger(__name__)


DE_TESTS = ('t', 'wilcox', 'bootT')

MIN_PER_GROUP = 2


def _skips_converter(value):
	return tuple((int(row), str(gene), str(reason)) for row, gene, reason in value)


@dataclass(stored=True)
class DEResult:
	"""Per-gene differential expression statistics.

	Row ``i`` of every matrix belongs to gene ``gene_ids[i]``, dataset row
	``rows[i]``. Column ``k`` of ``statistic``, ``raw_p``, ``adj_p`` and
	``fold_change`` belongs to family ``families[k]``.

	:param tuple gene_ids: Gene identifiers (values of ``gene_label``).
	:param tuple rows: Row of each gene in the source dataset.
	:param tuple families: Names of the statistic families.
	:param tuple levels: Condition names of the ``group_means`` columns.
	:param numpy.ndarray statistic: ``genes x families``.
	:param numpy.ndarray raw_p: ``genes x families``.
	:param numpy.ndarray adj_p: ``genes x families``.
	:param numpy.ndarray fold_change: ``genes x families`` mean W differences.
	:param numpy.ndarray group_means: ``genes x levels`` mean W.
	:param numpy.ndarray w: ``genes x samples`` W of the tested genes.
	:param gene_map: Gene labels of the tested genes.
	:param sample_sheet: Sample sheet of the ``w`` columns.
	:param str test_method: Name of the test.
	:param str sample_label: Sample label defining the conditions.
	:param str adjust: p-value adjustment method.
	:param tuple skipped: ``(row, gene id, reason)`` of genes not tested.
	"""

	gene_ids = field(tuple)
	rows = field(tuple)
	families = field(tuple)
	levels = field(tuple)
	statistic = array_field(float, 2)
	raw_p = array_field(float, 2)
	adj_p = array_field(float, 2)
	fold_change = array_field(float, 2)
	group_means = array_field(float, 2)
	w = array_field(float, 2)
	gene_map = field(GeneMap)
	sample_sheet = field(SampleSheet)
	gene_label = field(str)
	test_method = field(str)
	sample_label = field(str)
	adjust = field(str)
	skipped = field(tuple, default=(), converter=_skips_converter)

	def __attrs_post_init__(self):
		n = len(self.gene_ids)
		shape = (n, len(self.families))

		if len(self.rows) != n:
			raise ValueError('rows must have one entry per gene')
		for name in ('statistic', 'raw_p', 'adj_p', 'fold_change'):
			if getattr(self, name).shape != shape:
				raise ValueError('{} must have shape {}'.format(name, shape))
		if self.group_means.shape != (n, len(self.levels)):
			raise ValueError('group_means must have one column per level')
		if self.w.shape != (n, self.sample_sheet.n_chips):
			raise ValueError('w must be genes x samples')
		if self.gene_map.n_rows != n:
			raise ValueError('gene_map must have one row per gene')

	@property
	def n_genes(self):
		return len(self.gene_ids)

	def family_index(self, family=None):
		"""Column of a family, the first one if None."""
		if family is None:
			return 0
		try:
			return self.families.index(family)
		except ValueError:
			raise LabelError('unknown statistic family {!r}; available: {}'.format(family, ', '.join(self.families))) from None

	def ranking(self, family=None, adj_p=None):
		"""Gene positions ordered by adjusted p, raw p, then gene id.

		:param adj_p: Adjusted p-values to rank by instead of the stored ones.
		"""
		k = self.family_index(family)
		frame = pd.DataFrame({
			'adj': self.adj_p[:, k] if adj_p is None else adj_p,
			'raw': self.raw_p[:, k],
			'gene': list(self.gene_ids),
		})
		return frame.sort_values(['adj', 'raw', 'gene'], kind='mergesort', na_position='last').index.to_numpy()


@dataclass
class AnovaDesign:
	"""Design and contrast matrices of a gene-wise ANOVA.

	:param numpy.ndarray design: ``samples x coefficients``, treatment coded
		with the first level of each factor as baseline.
	:param numpy.ndarray contrasts: ``coefficients x contrasts``.
	:param tuple columns: Dataset columns (samples) the design rows belong to.
	:param tuple factor_labels: Sample labels used as factors.
	:param tuple level_names: Sorted levels of each factor.
	:param tuple coefficient_names: Name of each design column.
	:param tuple contrast_names: Name of each contrast, ``"B-A"`` for level B
		minus level A.
	"""

	design = array_field(float, 2)
	contrasts = array_field(float, 2)
	columns = field(tuple)
	factor_labels = field(tuple)
	level_names = field(tuple, converter=nested_tuple)
	coefficient_names = field(tuple)
	contrast_names = field(tuple)

	def __attrs_post_init__(self):
		n, p = self.design.shape

		if self.contrasts.shape[0] != p:
			raise ValueError('contrasts must have one row per coefficient')
		if np.linalg.matrix_rank(self.design) < p:
			raise DataError('design matrix is rank deficient; factors are confounded')
		if np.any(np.all(self.contrasts == 0, axis=0)):
			raise ValueError('contrast columns must be nonzero')

	@property
	def residual_df(self):
		return self.design.shape[0] - self.design.shape[1]


def _default_gene_label(gene_map, gene_label):
	if gene_label is None:
		return gene_map.label_names[0]
	gene_map.check_label(gene_label)
	return gene_label


def _levels(sheet, label):
	"""Sorted non-empty levels of a sample label and the columns of each."""
	values = sheet.values(label)
	levels = tuple(sorted({v for v in values if v != ''}))
	columns = [[j for j, v in enumerate(values) if v == level] for level in levels]
	return levels, columns


def _means(w, columns):
	with warnings.catch_warnings():
		warnings.simplefilter('ignore', RuntimeWarning)
		return np.column_stack([np.nanmean(w[:, cols], axis=1) for cols in columns])


def _report_skips(skipped, n_genes):
	if skipped:
		logger.warning(
			'Skipped %d of %d genes, e.g. %s: %s',
			len(skipped), n_genes, skipped[0][1], skipped[0][2],
		)


def de_genes_two_groups(ds, sample_label, test='t', adjust='BH', boot_b=1000, seed=0,
                        gene_label=None, pooled=False, threads=1):
	"""Test every gene for a difference between the two levels of a sample label.

	Levels are sorted and compared as second minus first, so positive
	statistics and fold changes mean higher W in the second level. Genes with
	fewer than 2 finite values in either group are skipped and listed in
	:attr:`.DEResult.skipped`, as are genes without variance under the t
	and bootstrap tests. The rank-sum test reports those with p = 1.

	:param ds: Normalized dataset.
	:type ds: spotflow.normalize.NormalizedDataset
	:param str sample_label: Sample label with exactly 2 non-empty levels.
	:param str test: ``t`` (Welch), ``wilcox`` or ``bootT``.
	:param str adjust: Adjustment method, see :func:`spotflow.stats.adjust_pvalues`.
	:param int boot_b: Resamples for ``bootT``.
	:param int seed: Master seed for ``bootT``; gene ``i`` uses ``[seed, i]``.
	:param str gene_label: Gene label used as gene identifier, the first if None.
	:param bool pooled: Equal-variance t statistics.
	:param int threads: Worker threads.
	:rtype: .DEResult
	"""
	if test not in DE_TESTS:
		raise DataError('unknown test {!r}; expected one of {}'.format(test, ', '.join(DE_TESTS)))

	gene_label = _default_gene_label(ds.gene_map, gene_label)
	levels, columns = _levels(ds.sample_sheet, sample_label)

	if len(levels) != 2:
		raise LabelError('sample label {!r} has {} levels, need exactly 2'.format(sample_label, len(levels)))

	genes = ds.gene_map.values(gene_label)
	cols1, cols2 = columns

	def run(i):
		y = ds.w[i, cols1]
		x = ds.w[i, cols2]
		x = x[np.isfinite(x)]
		y = y[np.isfinite(y)]

		if x.size < MIN_PER_GROUP or y.size < MIN_PER_GROUP:
			return 'fewer than {} finite values in a group'.format(MIN_PER_GROUP)

		try:
			if test == 't':
				return welch_t(x, y, pooled=pooled)
			if test == 'wilcox':
				return wilcoxon_rank_sum(x, y)
			return bootstrap_t(x, y, B=boot_b, seed=[seed, i], pooled=pooled)
		except ZeroVarianceError as exc:
			return str(exc)

	outcomes = ordered_map(run, range(ds.n_spots), threads=threads)

	rows = [i for i, o in enumerate(outcomes) if not isinstance(o, str)]
	skipped = [(i, genes[i], o) for i, o in enumerate(outcomes) if isinstance(o, str)]
	_report_skips(skipped, ds.n_spots)

	statistic = np.array([[outcomes[i].statistic] for i in rows], dtype=float).reshape(-1, 1)
	raw_p = np.array([[outcomes[i].p_value] for i in rows], dtype=float).reshape(-1, 1)
	method = outcomes[rows[0]].method if rows else test

	w = ds.w[rows]
	means = _means(w, columns)

	return DEResult(
		gene_ids=[genes[i] for i in rows],
		rows=rows,
		families=[test],
		levels=levels,
		statistic=statistic,
		raw_p=raw_p,
		adj_p=adjust_pvalues(raw_p, adjust),
		fold_change=(means[:, 1] - means[:, 0]).reshape(-1, 1),
		group_means=means,
		w=w,
		gene_map=ds.gene_map.subset(rows),
		sample_sheet=ds.sample_sheet,
		gene_label=gene_label,
		test_method=method,
		sample_label=sample_label,
		adjust=adjust,
		skipped=skipped,
	)


def design_anova(ds, factor_labels, contrasts='pairwise'):
	"""Build a treatment-coded design for one or more sample label factors.

	The design has an intercept and one indicator column per non-baseline
	level of each factor, levels sorted lexicographically. Samples with an
	empty value for any factor are left out.

	:param ds: Normalized dataset.
	:param factor_labels: Sample label name or list of names.
	:param str contrasts: ``pairwise`` for all pairwise level differences
		within each factor, ``baseline`` for each level against the first.
	:rtype: .AnovaDesign

	:raises spotflow.errors.LabelError: If a factor has fewer than 2 levels.
	:raises spotflow.errors.DataError: If the design is rank deficient.
	"""
	if isinstance(factor_labels, str):
		factor_labels = [factor_labels]

	sheet = ds.sample_sheet
	factor_values = [sheet.values(label) for label in factor_labels]
	columns = [j for j in range(sheet.n_chips) if all(values[j] != '' for values in factor_values)]

	blocks = [np.ones((len(columns), 1))]
	coefficient_names = ['(Intercept)']
	level_names = []
	contrast_vectors = []
	contrast_names = []
	offset = 1

	for label, values in zip(factor_labels, factor_values):
		levels = sorted({values[j] for j in columns})
		if len(levels) < 2:
			raise LabelError('factor {!r} needs at least 2 levels, has {}'.format(label, len(levels)))

		level_names.append(levels)
		indicators = np.array([[values[j] == level for level in levels[1:]] for j in columns], dtype=float)
		blocks.append(indicators)

		prefix = '{}:'.format(label) if len(factor_labels) > 1 else ''
		coefficient_names.extend(prefix + level for level in levels[1:])

		if contrasts == 'pairwise':
			pairs = itertools.combinations(range(len(levels)), 2)
		elif contrasts == 'baseline':
			pairs = ((0, k) for k in range(1, len(levels)))
		else:
			raise DataError('unknown contrast set {!r}'.format(contrasts))

		for a, b in pairs:
			contrast_vectors.append((offset, a, b))
			contrast_names.append('{}{}-{}'.format(prefix, levels[b], levels[a]))

		offset += len(levels) - 1

	design = np.hstack(blocks)
	cmat = np.zeros((design.shape[1], len(contrast_vectors)))

	# Level k > 0 of a factor is coefficient offset + k - 1, level 0 is the baseline
	for c, (off, a, b) in enumerate(contrast_vectors):
		cmat[off + b - 1, c] += 1
		if a > 0:
			cmat[off + a - 1, c] -= 1

	return AnovaDesign(
		design=design,
		contrasts=cmat,
		columns=columns,
		factor_labels=factor_labels,
		level_names=[tuple(l) for l in level_names],
		coefficient_names=coefficient_names,
		contrast_names=contrast_names,
	)


def _ols(X, y):
	"""Coefficients, residual sum of squares and ``(X'X)^-1`` of one fit."""
	xtx_inv = np.linalg.inv(X.T @ X)
	beta = xtx_inv @ (X.T @ y)
	resid = y - X @ beta
	return beta, float(resid @ resid), xtx_inv


def fit_anova(ds, design, return_f=False, adjust='BH', gene_label=None):
	"""Fit the ANOVA model to every gene.

	Genes with missing values are fit on their finite samples when the
	reduced design still has full rank and a residual degree of freedom,
	otherwise they are skipped.

	With ``return_f`` the single family ``F`` tests that all non-intercept
	coefficients are zero; ``0 / 0`` (no variation at all) gives ``F = 0``,
	``p = 1``. Otherwise there is one t test family per contrast, with the
	contrast estimate as fold change.

	:param ds: Normalized dataset.
	:param design: Design from :func:`.design_anova`.
	:type design: .AnovaDesign
	:param bool return_f: Report the F test instead of contrasts.
	:param str adjust: Adjustment method, applied per family.
	:param str gene_label: Gene label used as gene identifier.
	:rtype: .DEResult

	:raises spotflow.errors.DataError: If the design leaves no residual
		degree of freedom.
	"""
	if design.residual_df < 1:
		raise DataError('design leaves no residual degrees of freedom')

	gene_label = _default_gene_label(ds.gene_map, gene_label)
	genes = ds.gene_map.values(gene_label)
	cols = list(design.columns)
	X = design.design
	C = design.contrasts
	p = X.shape[1]

	full_fit = np.linalg.inv(X.T @ X)
	rows, skipped = [], []
	stats, pvals, folds = [], [], []

	for i in range(ds.n_spots):
		y = ds.w[i, cols]
		finite = np.isfinite(y)

		if finite.all():
			Xi, yi, xtx_inv = X, y, full_fit
			beta = xtx_inv @ (X.T @ y)
			resid = y - X @ beta
			rss = float(resid @ resid)
		else:
			Xi, yi = X[finite], y[finite]
			if Xi.shape[0] - p < 1 or np.linalg.matrix_rank(Xi) < p:
				skipped.append((i, genes[i], 'too many missing values for the design'))
				continue
			beta, rss, xtx_inv = _ols(Xi, yi)

		df = Xi.shape[0] - p
		sigma2 = rss / df

		if return_f:
			centered = yi - yi.mean()
			rss0 = float(centered @ centered)
			f = float(safe_ratio((rss0 - rss) / (p - 1), sigma2)) if p > 1 else 0.0
			f = max(f, 0.0)
			stats.append([f])
			pvals.append([dist.f_sf(f, p - 1, df) if np.isfinite(f) else 0.0])
		else:
			est = C.T @ beta
			se = np.sqrt(sigma2 * np.einsum('ij,ik,kj->j', C, xtx_inv, C))
			t = safe_ratio(est, se)
			stats.append(t)
			pvals.append(np.asarray(dist.t_two_sided(t, df)).reshape(-1))
			folds.append(est)

		rows.append(i)

	_report_skips(skipped, ds.n_spots)

	n_fam = 1 if return_f else C.shape[1]
	statistic = np.array(stats, dtype=float).reshape(-1, n_fam)
	raw_p = np.array(pvals, dtype=float).reshape(-1, n_fam)

	w = ds.w[rows]
	first_levels = design.level_names[0]
	factor = ds.sample_sheet.values(design.factor_labels[0])
	columns = [[j for j in cols if factor[j] == level] for level in first_levels]
	means = _means(w, columns)

	if return_f:
		fold_change = (np.max(means, axis=1) - np.min(means, axis=1)).reshape(-1, 1) if rows else np.zeros((0, 1))
		families = ['F']
	else:
		fold_change = np.array(folds, dtype=float).reshape(-1, n_fam)
		families = list(design.contrast_names)

	adj_p = np.column_stack([adjust_pvalues(raw_p[:, k], adjust) for k in range(n_fam)]) if rows else raw_p

	return DEResult(
		gene_ids=[genes[i] for i in rows],
		rows=rows,
		families=families,
		levels=first_levels,
		statistic=statistic,
		raw_p=raw_p,
		adj_p=adj_p,
		fold_change=fold_change,
		group_means=means,
		w=w,
		gene_map=ds.gene_map.subset(rows),
		sample_sheet=ds.sample_sheet,
		gene_label=gene_label,
		test_method='anova-F' if return_f else 'anova-t',
		sample_label=design.factor_labels[0],
		adjust=adjust,
		skipped=skipped,
	)


def de_frame(res, top_n=None, family=None):
	"""DE result as a sorted :class:`pandas.DataFrame`.

	Rows are sorted by adjusted p, then raw p, then gene id, using the given
	family (the first if None). With several families all are listed, with
	the family name appended to the statistic column names.
	"""
	order = res.ranking(family)
	if top_n is not None:
		order = order[:top_n]

	data = {'geneId': [res.gene_ids[i] for i in order]}

	for label in res.gene_map.label_names:
		if label == 'geneId':
			continue
		values = res.gene_map.values(label)
		data[label] = [values[i] for i in order]

	for k, level in enumerate(res.levels):
		data['mean:{}'.format(level)] = res.group_means[order, k]

	single = len(res.families) == 1
	for k, fam in enumerate(res.families):
		suffix = '' if single else ':{}'.format(fam)
		data['foldChange' + suffix] = res.fold_change[order, k]
		data['statistic' + suffix] = res.statistic[order, k]
		data['rawP' + suffix] = res.raw_p[order, k]
		data['adjP' + suffix] = res.adj_p[order, k]

	return pd.DataFrame(data)


def de_table(res, fmt='csv', top_n=None, family=None):
	"""Render a DE result as a CSV or HTML document.

	:param res: DE result.
	:type res: .DEResult
	:param str fmt: ``csv`` or ``html``.
	:param int top_n: Only the first ``top_n`` rows.
	:param str family: Family to sort by.
	:rtype: str
	"""
	title = 'Differential expression by {} ({}, {} adjustment)'.format(res.sample_label, res.test_method, res.adjust)
	return render_table(de_frame(res, top_n, family), fmt, title=title)


def volcano_data(res, family=None):
	"""Volcano plot coordinates: fold change against ``-log10`` raw p.

	A raw p of zero is placed one unit above the largest finite value.

	:returns: ``(x, y)`` arrays with one point per tested gene.

	>>> import numpy as np
	>>> from types import SimpleNamespace
	>>> res = SimpleNamespace(fold_change=np.array([[0.0], [1.5]]), raw_p=np.array([[1.0], [0.01]]),
	...                       family_index=lambda f: 0)
	>>> x, y = volcano_data(res)
	>>> x.tolist(), np.round(y, 12).tolist()
	([0.0, 1.5], [0.0, 2.0])
	"""
	k = res.family_index(family)
	x = np.array(res.fold_change[:, k], dtype=float)
	p = np.array(res.raw_p[:, k], dtype=float)

	with np.errstate(divide='ignore'):
		y = 0.0 - np.log10(p)

	infinite = np.isinf(y)
	if infinite.any():
		finite = y[~infinite & np.isfinite(y)]
		y[infinite] = (finite.max() if finite.size else 0.0) + 1

	return x, y
