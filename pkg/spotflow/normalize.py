"""Background correction, log-ratios and normalization.

A :class:`.NormalizedDataset` holds ``W``, the log2 ratio of the interest
sample over the reference sample, and ``A``, the mean log2 intensity, for
every spot and chip. Missing values are NaN: cells whose corrected intensity
is not positive never get a value, and every step here leaves them missing.

Only cells with ``use_spot`` set take part in fitting curves and scale
factors, but corrections are applied to every spot.
"""

import logging
import warnings

import numpy as np
from scipy.special import ndtri
from scipy.stats import median_abs_deviation
from statsmodels.nonparametric.smoothers_lowess import lowess

from .dataclass import dataclass, field, array_field, evolve
from .errors import DataError, DomainError, LabelError, ShapeError, ZeroVarianceError
from .ingest import GeneMap, GeneGroup, GeneNetwork, SampleSheet, GeneSetsMixin
from .layout import ChipLayout
from .parallel import ordered_map


__all__ = [
	'NormalizationStep', 'NormalizedDataset', 'BKG_METHODS', 'SCALE_METHODS',
	'background_correct', 'compute_wa', 'normalize_loess', 'normalize_scale',
	'normalize_repeated_loess', 'summarize_replicates', 'loess_curve',
]


logger = logging.getLogger(__name__)


BKG_METHODS = ('none', 'subtract', 'minimumPositive')
LOESS_SCOPES = ('global', 'printTip')
SCALE_METHODS = ('printTipMAD', 'globalMAD', 'globalScale')
SUMMARY_FUNCS = ('mean', 'median', 'none')

MIN_LOESS_POINTS = 10
MIN_SCALE_POINTS = 3
MAD_CONSTANT = 1.4826


@dataclass
class NormalizationStep:
	"""One entry of a dataset's normalization log."""

	name = field(str)
	params = field(dict, factory=dict)


@dataclass(stored=True)
class NormalizedDataset(GeneSetsMixin):
	"""Log-ratios and mean log-intensities of a set of chips.

	``sw``, ``w_lo`` and ``w_hi`` are set by
	:func:`.normalize_repeated_loess` and dropped by any later step which
	changes ``w``. ``layout`` is None once spots have been summarized, as
	rows no longer correspond to physical spots.
	"""

	w = array_field(float, 2)
	a = array_field(float, 2)
	use_spot = array_field(bool, 2)
	bad_spot = array_field(bool, 1)
	gene_map = field(GeneMap)
	sample_sheet = field(SampleSheet)
	layout = field(ChipLayout, optional=True)
	sw = array_field(float, 2, optional=True)
	w_lo = array_field(float, 2, optional=True)
	w_hi = array_field(float, 2, optional=True)
	dataset_id = field(str, default='')
	gene_groups = field(tuple, default=(), item_type=GeneGroup)
	gene_networks = field(tuple, default=(), item_type=GeneNetwork)
	notes = field(str, default='')
	normalization_log = field(tuple, default=(), item_type=NormalizationStep)

	def __attrs_post_init__(self):
		shape = self.w.shape

		for name in ('a', 'use_spot', 'sw', 'w_lo', 'w_hi'):
			value = getattr(self, name)
			if value is not None and value.shape != shape:
				raise ShapeError('{} has shape {}, expected {}'.format(name, value.shape, shape))

		n_spots, n_chips = shape

		if self.bad_spot.shape != (n_spots,):
			raise ShapeError('bad_spot must have one entry per spot')
		if self.layout is not None and self.layout.n_spots != n_spots:
			raise ShapeError('layout has {} spots, matrices have {}'.format(self.layout.n_spots, n_spots))
		if self.gene_map.n_rows != n_spots:
			raise ShapeError('gene map has {} rows, matrices have {} spots'.format(self.gene_map.n_rows, n_spots))
		if self.sample_sheet.n_chips != n_chips:
			raise ShapeError('sample sheet has {} chips, matrices have {}'.format(self.sample_sheet.n_chips, n_chips))

		if self.w_lo is not None and self.w_hi is not None:
			with np.errstate(invalid='ignore'):
				bad = (self.w_lo > self.w) | (self.w > self.w_hi)
			if np.any(bad):
				raise DataError('confidence bounds do not contain W')

	@property
	def n_spots(self):
		return self.w.shape[0]

	@property
	def n_chips(self):
		return self.w.shape[1]

	def with_step(self, name, params, **changes):
		"""Copy with changed fields and a step appended to the normalization log."""
		step = NormalizationStep(name=name, params=params)
		return evolve(self, normalization_log=self.normalization_log + (step,), **changes)


def _check_choice(value, choices, what):
	if value not in choices:
		raise DomainError('unknown {} {!r}; expected one of {}'.format(what, value, ', '.join(choices)))


def _correct_channel(fg, bg, method):
	if method == 'none':
		corrected = fg.copy()
	else:
		corrected = fg - bg

	if method == 'minimumPositive':
		for j in range(corrected.shape[1]):
			column = corrected[:, j]
			positive = column[column > 0]
			if positive.size == 0:
				logger.warning('Chip column %d has no positive corrected intensity', j)
				continue
			column[column <= 0] = positive.min() / 2

	corrected[corrected <= 0] = np.nan
	return corrected


def background_correct(raw, method='none'):
	"""Background-correct both channels of a raw dataset.

	``none`` uses foreground as-is, ``subtract`` uses foreground minus
	background, ``minimumPositive`` subtracts too and then raises nonpositive
	results to half the smallest positive value of the chip. Values which
	are still not positive become NaN.

	:param raw: Raw dataset.
	:type raw: spotflow.ingest.RawDataset
	:param str method: One of :data:`BKG_METHODS`.
	:returns: ``(ch1, ch2)`` corrected intensity matrices.
	"""
	_check_choice(method, BKG_METHODS, 'background method')
	return (
		_correct_channel(np.array(raw.ch1_fg), np.array(raw.ch1_bg), method),
		_correct_channel(np.array(raw.ch2_fg), np.array(raw.ch2_bg), method),
	)


def compute_wa(raw, bkg='none'):
	"""Compute unnormalized W and A from a raw dataset.

	``W = log2 I - log2 C`` and ``A = (log2 I + log2 C) / 2`` where ``I`` is
	the interest channel of each chip and ``C`` the reference channel.

	:param raw: Raw dataset.
	:type raw: spotflow.ingest.RawDataset
	:param str bkg: Background correction method.
	:rtype: .NormalizedDataset
	"""
	ch1, ch2 = background_correct(raw, bkg)
	swapped = raw.sample_sheet.swapped[None, :]

	interest = np.where(swapped, ch2, ch1)
	reference = np.where(swapped, ch1, ch2)

	log_i = np.log2(interest)
	log_c = np.log2(reference)

	ds = NormalizedDataset(
		w=log_i - log_c,
		a=(log_i + log_c) / 2,
		use_spot=raw.use_spot,
		bad_spot=raw.bad_spot,
		gene_map=raw.gene_map,
		sample_sheet=raw.sample_sheet,
		layout=raw.layout,
		dataset_id=raw.dataset_id,
		gene_groups=raw.gene_groups,
		gene_networks=raw.gene_networks,
		notes=raw.notes,
	)

	n_missing = int(np.isnan(ds.w).sum())
	if n_missing:
		logger.info('%d of %d cells missing after background correction (%s)', n_missing, ds.w.size, bkg)

	return ds.with_step('computeWA', {'bkg': bkg})


def _units(ds, scope):
	"""Fitting units: ``(chip, spot rows, description)`` in a fixed order."""
	if scope == 'printTip' or scope == 'printTipMAD':
		if ds.layout is None:
			raise DataError('print-tip normalization needs the chip layout; spots have been summarized')
		blocks = ds.layout.block_of()
		rows_by_block = [np.flatnonzero(blocks == b) for b in range(ds.layout.n_blocks)]

		for j in range(ds.n_chips):
			for b, rows in enumerate(rows_by_block):
				yield j, rows, 'chip {} block {}'.format(j, b)
	else:
		rows = np.arange(ds.n_spots)
		for j in range(ds.n_chips):
			yield j, rows, 'chip {}'.format(j)


def _interpolate(xs, ys, x):
	"""Piecewise-linear through a fitted curve, extended linearly at both ends."""
	if xs.size == 1:
		return np.full(x.shape, ys[0])

	y = np.interp(x, xs, ys)

	lo = x < xs[0]
	slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
	y[lo] = ys[0] + slope * (x[lo] - xs[0])

	hi = x > xs[-1]
	slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
	y[hi] = ys[-1] + slope * (x[hi] - xs[-1])

	return y


def _fit_curve(w, a, span, iterations):
	"""Lowess fit of w on a as a sorted curve ``(xs, ys)`` with distinct xs."""
	fitted = lowess(w, a, frac=span, it=iterations, delta=0.0, return_sorted=True)
	xs, idx = np.unique(fitted[:, 0], return_index=True)
	return xs, fitted[idx, 1]


def _loess_fits(ds, span, scope, iterations, rng=None, fraction=None):
	"""Fitted bias of every finite cell, NaN elsewhere."""
	fit = np.full(ds.w.shape, np.nan)
	finite = np.isfinite(ds.w) & np.isfinite(ds.a)

	for j, rows, where in _units(ds, scope):
		usable = rows[ds.use_spot[rows, j] & finite[rows, j] & ~ds.bad_spot[rows]]

		if rng is not None:
			size = int(round(fraction * usable.size))
			usable = np.sort(rng.choice(usable, size=size, replace=False)) if size < usable.size else usable

		if usable.size < MIN_LOESS_POINTS:
			raise DataError('too few points for loess in {}: {} usable spots, need {}'.format(where, usable.size, MIN_LOESS_POINTS))

		xs, ys = _fit_curve(ds.w[usable, j], ds.a[usable, j], span, iterations)

		target = rows[finite[rows, j]]
		fit[target, j] = _interpolate(xs, ys, ds.a[target, j])

	return fit


def loess_curve(ds, chip, span=0.4, iterations=2):
	"""Global lowess curve of W on A for one chip, over the cells in use.

	:returns: ``(a, w)`` of the fitted curve, sorted by A.
	:rtype: tuple
	"""
	_check_loess_args(span, 'global', iterations)
	finite = np.isfinite(ds.w[:, chip]) & np.isfinite(ds.a[:, chip])
	usable = np.flatnonzero(ds.use_spot[:, chip] & finite & ~ds.bad_spot)

	if usable.size < MIN_LOESS_POINTS:
		raise DataError('too few points for loess on chip {}: {} usable spots'.format(chip, usable.size))

	return _fit_curve(ds.w[usable, chip], ds.a[usable, chip], span, iterations)


def _check_loess_args(span, scope, iterations):
	if not 0 < span <= 1:
		raise DomainError('span must be in (0, 1], got {}'.format(span))
	_check_choice(scope, LOESS_SCOPES, 'loess scope')
	if iterations < 0:
		raise DomainError('iterations must be nonnegative')


def normalize_loess(ds, span=0.4, scope='global', iterations=2):
	"""Remove intensity-dependent bias with a robust local linear regression of W on A.

	A degree-1 lowess curve with tricube weights and ``iterations`` bisquare
	robustness passes is fit per chip (and per print-tip block for scope
	``printTip``) over the cells in use, and subtracted from all spots of
	that unit.

	:param ds: Dataset to normalize.
	:type ds: .NormalizedDataset
	:param float span: Fraction of points in each local fit, in (0, 1].
	:param str scope: ``global`` or ``printTip``.
	:param int iterations: Robustness iterations.
	:rtype: .NormalizedDataset

	:raises spotflow.errors.DataError: If a unit has fewer than 10 usable spots.
	"""
	_check_loess_args(span, scope, iterations)
	fit = _loess_fits(ds, span, scope, iterations)

	return ds.with_step(
		'loess',
		dict(span=span, scope=scope, iterations=iterations),
		w=ds.w - fit, sw=None, w_lo=None, w_hi=None,
	)


def _spread(values, method):
	if method == 'globalScale':
		return float(np.median(np.abs(values)))
	return float(median_abs_deviation(values, scale=1 / MAD_CONSTANT))


def normalize_scale(ds, scope='globalMAD'):
	"""Equalize the spread of W between chips or print-tip blocks.

	``globalMAD`` divides each chip's W by its MAD over the geometric mean of
	all chips' MADs. ``printTipMAD`` does the same for the blocks of each chip,
	anchored at the geometric mean of that chip's block MADs. ``globalScale``
	is like ``globalMAD`` with the median absolute W as spread.

	:param ds: Dataset to scale.
	:type ds: .NormalizedDataset
	:param str scope: One of :data:`SCALE_METHODS`.
	:rtype: .NormalizedDataset

	:raises spotflow.errors.ZeroVarianceError: If a unit has zero spread.
	"""
	_check_choice(scope, SCALE_METHODS, 'scale method')

	w = np.array(ds.w)
	finite = np.isfinite(w)
	units = list(_units(ds, scope))
	spreads = np.empty(len(units))

	for u, (j, rows, where) in enumerate(units):
		values = w[rows[ds.use_spot[rows, j] & finite[rows, j]], j]

		if values.size < MIN_SCALE_POINTS:
			raise DataError('too few points to scale {}: {} usable values, need {}'.format(where, values.size, MIN_SCALE_POINTS))

		spreads[u] = _spread(values, scope)
		if spreads[u] == 0:
			raise ZeroVarianceError('zero spread in {}'.format(where))

	chips = np.array([j for j, _, _ in units])

	for j in np.unique(chips):
		in_anchor = chips == j if scope == 'printTipMAD' else np.ones(len(units), dtype=bool)
		anchor = np.exp(np.mean(np.log(spreads[in_anchor])))

		for u in np.flatnonzero(chips == j):
			rows = units[u][1]
			w[rows, j] = w[rows, j] / (spreads[u] / anchor)

	return ds.with_step('scale', {'scope': scope}, w=w, sw=None, w_lo=None, w_hi=None)


def normalize_repeated_loess(ds, span=0.4, scope='global', iterations=2,
                             repeats=30, fraction=0.7, alpha=0.05, seed=0, threads=1):
	"""Loess normalization repeated on random subsets, with per-spot uncertainty.

	Each repeat refits the curves of :func:`.normalize_loess` on a uniformly
	random ``fraction`` of the usable spots of each unit and normalizes every
	spot with it. W becomes the mean of the repeats, ``sw`` their standard
	deviation and ``w_lo``, ``w_hi`` the normal confidence interval
	``W -/+ z(1 - alpha/2) * sw``.

	Repeat ``r`` draws from ``default_rng([seed, r])``, so the result does not
	depend on ``threads``.

	:param ds: Dataset to normalize.
	:type ds: .NormalizedDataset
	:param int repeats: Number of refits, at least 2.
	:param float fraction: Share of usable spots per refit, in (0, 1).
	:param float alpha: One minus the confidence level.
	:param int seed: Master seed.
	:param int threads: Worker threads.
	:rtype: .NormalizedDataset
	"""
	_check_loess_args(span, scope, iterations)

	if repeats < 2:
		raise DomainError('repeats must be at least 2')
	if not 0 < fraction < 1:
		raise DomainError('fraction must be in (0, 1)')
	if not 0 < alpha < 1:
		raise DomainError('alpha must be in (0, 1)')

	def replicate(r):
		rng = np.random.default_rng([seed, r])
		return ds.w - _loess_fits(ds, span, scope, iterations, rng=rng, fraction=fraction)

	runs = np.stack(ordered_map(replicate, range(repeats), threads=threads))

	w = runs.mean(axis=0)
	sw = runs.std(axis=0, ddof=1)
	half = ndtri(1 - alpha / 2) * sw

	params = dict(span=span, scope=scope, iterations=iterations, repeats=repeats,
	              fraction=fraction, alpha=alpha, seed=seed)
	return ds.with_step('repeatedLoess', params, w=w, sw=sw, w_lo=w - half, w_hi=w + half)


def _groups(values):
	"""Group positions by value, groups in order of first occurrence."""
	groups = dict()
	for i, value in enumerate(values):
		groups.setdefault(value, []).append(i)
	return list(groups.values())


def _collapse(matrix, groups, func, axis):
	reduce = np.nanmean if func == 'mean' else np.nanmedian
	parts = []

	with warnings.catch_warnings():
		warnings.simplefilter('ignore', RuntimeWarning)
		for members in groups:
			part = np.take(matrix, members, axis=axis)
			parts.append(reduce(part, axis=axis))

	return np.stack(parts, axis=axis)


def _merge_labels(values, groups):
	merged = []
	for members in groups:
		distinct = list(dict.fromkeys(values[i] for i in members))
		merged.append(';'.join(distinct))
	return merged


def summarize_replicates(ds, gene_label=None, sample_label=None, func_spots='mean',
                         func_samples='mean', keep_empty=False, rm_bad=False):
	"""Collapse replicate spots and replicate chips.

	Spots sharing a value of ``gene_label`` become one row, reduced with
	``func_spots``. Chips sharing a value of ``sample_label`` become one
	column, reduced with ``func_samples``. Missing values are skipped. Groups
	keep the order of their first member. Labels that differ within a group
	are joined with ``;``.

	Dye-swapped chips are already oriented interest over reference, so
	summarized chips carry interest channel ``ch1``. ``sw`` and the confidence
	bounds are dropped.

	:param ds: Normalized dataset.
	:type ds: .NormalizedDataset
	:param str gene_label: Gene label identifying replicate spots.
	:param str sample_label: Sample label identifying replicate chips.
	:param str func_spots: ``mean``, ``median`` or ``none``.
	:param str func_samples: ``mean``, ``median`` or ``none``.
	:param bool keep_empty: Keep spots whose gene label is empty.
	:param bool rm_bad: Drop bad spots first.
	:rtype: .NormalizedDataset

	:raises spotflow.errors.DataError: If both functions are ``none`` while
		the given labels have duplicates.
	"""
	_check_choice(func_spots, SUMMARY_FUNCS, 'spot summary function')
	_check_choice(func_samples, SUMMARY_FUNCS, 'sample summary function')

	if func_spots != 'none' and gene_label is None:
		raise LabelError('summarizing spots needs a gene label')
	if func_samples != 'none' and sample_label is None:
		raise LabelError('summarizing samples needs a sample label')

	genes = ds.gene_map.values(gene_label) if gene_label is not None else None
	samples = ds.sample_sheet.values(sample_label) if sample_label is not None else None

	if func_spots == 'none' and func_samples == 'none':
		dup_genes = genes is not None and len(set(genes)) < len(genes)
		dup_samples = samples is not None and len(set(samples)) < len(samples)
		if dup_genes or dup_samples:
			raise DataError('duplicated labels but no summary function; choose mean or median')

	keep = np.ones(ds.n_spots, dtype=bool)
	if rm_bad:
		keep &= ~ds.bad_spot
	if genes is not None and not keep_empty:
		keep &= np.array([g.strip() != '' for g in genes], dtype=bool)

	rows = np.flatnonzero(keep)
	w = ds.w[rows]
	a = ds.a[rows]
	use = ds.use_spot[rows]
	bad = ds.bad_spot[rows]
	gene_map = ds.gene_map.subset(rows)

	if func_spots != 'none':
		groups = _groups([genes[i] for i in rows])
		w = _collapse(w, groups, func_spots, 0)
		a = _collapse(a, groups, func_spots, 0)
		use = np.array([use[g].any(axis=0) for g in groups])
		bad = np.array([bad[g].all() for g in groups], dtype=bool)
		gene_map = GeneMap(
			label_names=gene_map.label_names,
			labels={k: _merge_labels(v, groups) for k, v in gene_map.labels.items()},
		)

	sheet = ds.sample_sheet
	if func_samples != 'none':
		groups = _groups(samples)
		w = _collapse(w, groups, func_samples, 1)
		a = _collapse(a, groups, func_samples, 1)
		use = np.stack([use[:, g].any(axis=1) for g in groups], axis=1)
		sheet = SampleSheet(
			file_names=['+'.join(sheet.file_names[j] for j in g) for g in groups],
			interest_channel=['ch1'] * len(groups),
			label_names=sheet.label_names,
			labels={k: _merge_labels(v, groups) for k, v in sheet.labels.items()},
		)

	layout = ds.layout if w.shape[0] == ds.n_spots and rows.size == ds.n_spots else None

	logger.info('Summarized %d x %d to %d x %d', ds.n_spots, ds.n_chips, w.shape[0], w.shape[1])

	params = dict(gene_label=gene_label, sample_label=sample_label, func_spots=func_spots,
	              func_samples=func_samples, keep_empty=keep_empty, rm_bad=rm_bad)
	return ds.with_step(
		'summarize', params,
		w=w, a=a, use_spot=use, bad_spot=bad, gene_map=gene_map, sample_sheet=sheet,
		layout=layout, sw=None, w_lo=None, w_hi=None,
	)
