"""Search for small gene subsets which separate two sample classes.

Subsets are scored by leave-one-out cross-validated accuracy of a Fisher
linear discriminant or a k-nearest-neighbor classifier.
"""

import itertools
import logging
from math import comb

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist
from sklearn.model_selection import LeaveOneOut

from .dataclass import dataclass, field, array_field, nested_tuple
from .errors import DataError, LabelError
from .parallel import ordered_map
from .stats import welch_statistic
from .tables import render_table


__all__ = [
	'CLASSIFY_METHODS', 'SUBSET_SIZES', 'PRERANK_METHODS', 'CVScore',
	'ClassifierResult', 'lda_loocv', 'knn_loocv', 'exhaustive_search',
	'search_and_choose', 'class_frame', 'class_table',
]


logger = logging.getLogger(__name__)


CLASSIFY_METHODS = ('lda', 'knn')
SUBSET_SIZES = (2, 3, 4)
PRERANK_METHODS = ('cv', 'de')

RIDGE_SCALE = 1e-6


@dataclass
class CVScore:
	"""Leave-one-out result of one classifier.

	:param float accuracy: Fraction of held-out samples predicted correctly.
	:param tuple predictions: Predicted class of each sample.
	"""

	accuracy = field(float)
	predictions = field(tuple, converter=nested_tuple)


def _two_classes(labels):
	labels = [str(v) for v in labels]
	classes = sorted(set(labels))

	if len(classes) != 2:
		raise LabelError('need exactly 2 classes, got {}'.format(len(classes)))

	for c in classes:
		if labels.count(c) < 2:
			raise DataError('class {!r} has fewer than 2 samples'.format(c))

	return labels, classes


def _as_matrix(X, n):
	X = np.asarray(X, dtype=float)
	if X.ndim == 1:
		X = X[:, None]
	if X.shape[0] != n:
		raise DataError('need one label per sample')
	return X


def _score(labels, predictions):
	correct = sum(p == t for p, t in zip(predictions, labels))
	return CVScore(accuracy=correct / len(labels), predictions=predictions)


def _fisher_direction(X, y, classes):
	"""Discriminant direction and threshold fit on a training fold."""
	first = X[y == classes[0]]
	second = X[y == classes[1]]

	if len(first) == 0 or len(second) == 0:
		raise DataError('training fold has an empty class')

	mu1 = first.mean(axis=0)
	mu2 = second.mean(axis=0)
	scatter = (first - mu1).T @ (first - mu1) + (second - mu2).T @ (second - mu2)
	dof = max(len(X) - 2, 1)
	S = scatter / dof

	d = S.shape[0]
	trace = np.trace(S)
	ridge = RIDGE_SCALE * trace / d if trace > 0 else RIDGE_SCALE

	w = np.linalg.solve(S + ridge * np.eye(d), mu1 - mu2)
	threshold = w @ (mu1 + mu2) / 2
	return w, threshold


def lda_loocv(X, labels):
	"""Leave-one-out accuracy of a two-class Fisher linear discriminant.

	Each fold pools the within-class covariance of the remaining samples,
	adds a ridge of ``1e-6 * trace / dimension``, projects onto
	``inv(S) (mu1 - mu2)`` and thresholds at the midpoint of the projected
	class means. Projections at or above the threshold go to the first
	class in sorted order.

	:param X: ``samples x genes`` matrix.
	:param labels: Class of each sample, 2 distinct values.
	:rtype: .CVScore

	>>> lda_loocv([[0.0], [0.1], [0.2], [5.0], [5.1], [5.2]], 'aaabbb').accuracy
	1.0
	"""
	labels, classes = _two_classes(labels)
	X = _as_matrix(X, len(labels))
	y = np.array(labels, dtype=object)

	predictions = []
	for train, test in LeaveOneOut().split(X):
		w, threshold = _fisher_direction(X[train], y[train], classes)
		projected = X[test[0]] @ w
		predictions.append(classes[0] if projected >= threshold else classes[1])

	return _score(labels, predictions)


def _vote(neighbor_labels, neighbor_dist):
	"""Majority class, ties to the smaller summed distance, then smaller label."""
	tally = dict()
	for label, dist in zip(neighbor_labels, neighbor_dist):
		count, total = tally.get(label, (0, 0.0))
		tally[label] = (count + 1, total + dist)
	return min(tally, key=lambda c: (-tally[c][0], tally[c][1], c))


def knn_loocv(X, labels, k=3):
	"""Leave-one-out accuracy of a Euclidean k-nearest-neighbor classifier.

	Neighbors at equal distance are taken in sample order.

	:param X: ``samples x genes`` matrix.
	:param labels: Class of each sample.
	:param int k: Number of neighbors, less than the number of samples.
	:rtype: .CVScore

	>>> knn_loocv([[0, 0], [1, 1], [0, 1], [1, 0]], 'aabb', k=1).accuracy
	0.0
	"""
	labels = [str(v) for v in labels]
	X = _as_matrix(X, len(labels))
	n = len(labels)

	if k < 1:
		raise DataError('k must be at least 1')
	if k >= n:
		raise DataError('k = {} must be less than the number of samples ({})'.format(k, n))

	D = cdist(X, X)
	predictions = []

	for train, test in LeaveOneOut().split(X):
		dist = D[test[0], train]
		nearest = np.argsort(dist, kind='stable')[:k]
		predictions.append(_vote([labels[train[j]] for j in nearest], dist[nearest]))

	return _score(labels, predictions)


def _loocv(method, X, labels, k):
	if method == 'lda':
		return lda_loocv(X, labels)
	return knn_loocv(X, labels, k)


@dataclass(stored=True)
class ClassifierResult:
	"""Ranked gene subsets with their leave-one-out accuracy.

	Subsets are sorted by decreasing accuracy, then increasing sum of their
	dataset rows, then the rows themselves.

	:param numpy.ndarray rows: ``subsets x genes`` dataset rows.
	:param tuple gene_ids: Gene identifiers of each subset.
	:param numpy.ndarray accuracy: Accuracy of each subset.
	:param tuple predictions: Held-out prediction of each sample, per subset.
	:param str method: ``lda`` or ``knn``.
	:param int k: Neighbors for ``knn``.
	:param int n_genes: Subset size.
	:param int search_space_size: Number of subsets evaluated.
	:param str mode: ``exhaustive`` or ``searchAndChoose``.
	:param tuple pool: Dataset rows the subsets were drawn from.
	:param str prerank: Single-gene ranking of ``searchAndChoose``.
	:param tuple samples: File names of the classified chips.
	:param tuple classes: Class of each classified chip.
	"""

	rows = array_field(np.int64, 2)
	gene_ids = field(tuple, converter=nested_tuple)
	accuracy = array_field(float, 1)
	predictions = field(tuple, converter=nested_tuple)
	method = field(str)
	n_genes = field(int)
	search_space_size = field(int)
	mode = field(str)
	pool = field(tuple)
	sample_label = field(str)
	gene_label = field(str)
	samples = field(tuple)
	classes = field(tuple)
	k = field(int, optional=True)
	prerank = field(str, optional=True)
	skipped = field(int, default=0)

	@property
	def n_subsets(self):
		return self.rows.shape[0]


def _classification_data(ds, sample_label):
	"""Columns with a class, their classes and the sample file names."""
	values = ds.sample_sheet.values(sample_label)
	columns = [j for j, v in enumerate(values) if v != '']
	classes = [values[j] for j in columns]
	_two_classes(classes)
	return columns, classes, [ds.sample_sheet.file_names[j] for j in columns]


def _evaluate(ds, subsets, columns, classes, method, k, threads):
	"""Score subsets, leaving out samples with missing values per subset."""
	W = ds.w[:, columns]

	def run(subset):
		X = W[list(subset)].T
		complete = np.isfinite(X).all(axis=1)
		try:
			return _loocv(method, X[complete], [c for c, ok in zip(classes, complete) if ok], k)
		except DataError as exc:
			logger.debug('Subset %r not scored: %s', subset, exc)
			return None

	return ordered_map(run, subsets, threads=threads)


def _check_search(method, n_genes, pool_rows):
	if method not in CLASSIFY_METHODS:
		raise DataError('unknown classifier {!r}; expected one of {}'.format(method, ', '.join(CLASSIFY_METHODS)))
	if n_genes not in SUBSET_SIZES:
		raise DataError('subset size must be one of {}, got {}'.format(SUBSET_SIZES, n_genes))
	if len(pool_rows) < n_genes:
		raise DataError('pool has {} genes, fewer than the subset size {}'.format(len(pool_rows), n_genes))


def _search(ds, sample_label, method, n_genes, pool_rows, top_k, k, gene_label, threads,
            mode, prerank=None):
	columns, classes, samples = _classification_data(ds, sample_label)
	if gene_label is None:
		gene_label = ds.gene_map.label_names[0]
	names = ds.gene_map.values(gene_label)

	subsets = list(itertools.combinations(pool_rows, n_genes))
	scores = _evaluate(ds, subsets, columns, classes, method, k, threads)

	scored = [(s, c) for s, c in zip(subsets, scores) if c is not None]
	skipped = len(subsets) - len(scored)
	if skipped:
		logger.warning('%d of %d subsets could not be scored', skipped, len(subsets))

	scored.sort(key=lambda item: (-item[1].accuracy, sum(item[0]), item[0]))
	if top_k is not None:
		scored = scored[:top_k]

	logger.info('Evaluated %d subsets of %d genes by %s LOOCV', len(subsets), n_genes, method)

	return ClassifierResult(
		rows=np.array([s for s, _ in scored], dtype=np.int64).reshape(-1, n_genes),
		gene_ids=[tuple(names[i] for i in s) for s, _ in scored],
		accuracy=[c.accuracy for _, c in scored],
		predictions=[c.predictions for _, c in scored],
		method=method,
		k=k if method == 'knn' else None,
		n_genes=n_genes,
		search_space_size=len(subsets),
		mode=mode,
		pool=pool_rows,
		prerank=prerank,
		sample_label=sample_label,
		gene_label=gene_label,
		samples=samples,
		classes=classes,
		skipped=skipped,
	)


def exhaustive_search(ds, sample_label, method='lda', n_genes=3, pool=None, top_k=50, k=3,
                      gene_label=None, threads=1):
	"""Score every subset of ``n_genes`` genes from a pool.

	:param ds: Normalized dataset.
	:type ds: spotflow.normalize.NormalizedDataset
	:param str sample_label: Sample label with exactly 2 non-empty levels.
	:param str method: ``lda`` or ``knn``.
	:param int n_genes: Subset size, 2 to 4.
	:param str pool: Gene group or network name, all good spots if None.
	:param int top_k: Number of subsets kept, all if None.
	:param int k: Neighbors for ``knn``.
	:param str gene_label: Gene label used as identifier, the first if None.
	:param int threads: Worker threads.
	:rtype: .ClassifierResult
	"""
	rows = ds.pool_rows(pool)
	_check_search(method, n_genes, rows)
	return _search(ds, sample_label, method, n_genes, rows, top_k, k, gene_label, threads, 'exhaustive')


def _single_gene_order(ds, rows, sample_label, method, k, prerank, threads):
	columns, classes, _ = _classification_data(ds, sample_label)
	W = ds.w[np.ix_(rows, columns)]
	levels = sorted(set(classes))
	first = np.array([c == levels[0] for c in classes])

	with np.errstate(invalid='ignore', divide='ignore'):
		t, _ = welch_statistic(W[:, ~first], W[:, first])
	t = np.abs(np.nan_to_num(t, nan=0.0, posinf=np.inf))

	if prerank == 'de':
		keys = [(-t[i], rows[i]) for i in range(len(rows))]
	else:
		scores = _evaluate(ds, [(r,) for r in rows], columns, classes, method, k, threads)
		keys = [(-(s.accuracy if s is not None else -1.0), -t[i], rows[i]) for i, s in enumerate(scores)]

	return [rows[i] for i in sorted(range(len(rows)), key=keys.__getitem__)]


def search_and_choose(ds, sample_label, method='lda', n_genes=3, pool_size=30, pool=None,
                      top_k=50, k=3, prerank='cv', gene_label=None, threads=1):
	"""Exhaustive search within the best single genes of a pool.

	Single genes are ranked by their own LOOCV accuracy (``prerank='cv'``,
	ties by absolute t statistic, then row) or by absolute t statistic alone
	(``prerank='de'``, ties by row). The top ``pool_size`` are searched
	exhaustively.

	:param int pool_size: Size of the reduced pool, at least ``n_genes``.
	:param str prerank: ``cv`` or ``de``.
	:returns: Result with mode ``searchAndChoose``; its ``pool`` holds the
		reduced pool.
	:rtype: .ClassifierResult

	Other parameters as in :func:`.exhaustive_search`.
	"""
	if prerank not in PRERANK_METHODS:
		raise DataError('unknown pre-ranking {!r}; expected cv or de'.format(prerank))

	rows = ds.pool_rows(pool)
	_check_search(method, n_genes, rows)
	if pool_size < n_genes:
		raise DataError('pool size {} is smaller than the subset size {}'.format(pool_size, n_genes))

	ranked = _single_gene_order(ds, rows, sample_label, method, k, prerank, threads)
	reduced = sorted(ranked[:pool_size])

	logger.info('Reduced pool from %d to %d genes (%d of %d subsets)',
	            len(rows), len(reduced), comb(len(reduced), n_genes), comb(len(rows), n_genes))

	return _search(ds, sample_label, method, n_genes, reduced, top_k, k, gene_label, threads,
	               'searchAndChoose', prerank=prerank)


def class_frame(res, top_n=None):
	"""Ranked subsets as a data frame, one column per subset gene.

	:rtype: pandas.DataFrame
	"""
	n = res.n_subsets if top_n is None else min(top_n, res.n_subsets)
	data = {'rank': list(range(1, n + 1))}

	for g in range(res.n_genes):
		data['gene{}'.format(g + 1)] = [ids[g] for ids in res.gene_ids[:n]]

	data['cvAccuracy'] = res.accuracy[:n]
	data['method'] = [res.method] * n
	return pd.DataFrame(data)


def class_table(res, fmt='csv', top_n=None):
	"""Render ranked subsets as CSV or HTML.

	:rtype: str
	"""
	title = '{} subsets of {} genes ({})'.format(res.mode, res.n_genes, res.method)
	return render_table(class_frame(res, top_n), fmt, title=title)
