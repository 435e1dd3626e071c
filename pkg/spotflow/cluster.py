"""Distances and clustering of genes or samples.

Hierarchical clustering agglomerates with Lance-Williams updates and always
merges the closest pair with the lowest indices, so equal distances never make
the result depend on anything but item order. Merges are stored in the
linkage-matrix layout of :mod:`scipy.cluster.hierarchy`: leaves are ``0..n-1``
and the cluster made by merge ``m`` is ``n + m``.

k-means and the self-organizing map impute missing values by the feature mean;
distances for hierarchical clustering use pairwise-complete features instead.
"""

import logging

import numpy as np
import pandas as pd
from scipy.cluster.hierarchy import leaves_list, fcluster
from scipy.spatial.distance import cdist, pdist, squareform
from sklearn.cluster import kmeans_plusplus

from .dataclass import dataclass, field, array_field
from .errors import DataError, DomainError, ZeroVarianceError
from .normalize import NormalizedDataset, compute_wa
from .parallel import ordered_map
from .stats import adjust_pvalues
from .tables import render_table


__all__ = [
	'DISTANCE_KINDS', 'LINKAGES', 'ALGORITHMS', 'Dendrogram', 'Partition',
	'ClusterResult', 'distance_matrix', 'hier_cluster', 'k_means', 'som',
	'cluster_de', 'cluster_dataset', 'cluster_frame', 'cluster_table',
]


logger = logging.getLogger(__name__)


DISTANCE_KINDS = ('euclidean', 'oneMinusCor', 'oneMinusAbsCor')
LINKAGES = ('single', 'complete', 'average')
ALGORITHMS = ('hier', 'kmeans', 'som')
TOPOLOGIES = ('rect', 'hex')

MIN_SHARED = 3
MAX_LLOYD_ITER = 300


@dataclass
class Dendrogram:
	"""Result of hierarchical clustering.

	:param numpy.ndarray merges: ``(n - 1) x 4`` array of
		``(cluster a, cluster b, height, size)`` rows in merge order.
	:param tuple leaf_labels: Label of each item.
	:param str linkage: Linkage method.
	:param str distance_kind: Distance the heights are measured in.
	"""

	merges = array_field(float, 2)
	leaf_labels = field(tuple)
	linkage = field(str)
	distance_kind = field(str, default='')

	def __attrs_post_init__(self):
		if self.merges.shape != (max(len(self.leaf_labels) - 1, 0), 4):
			raise ValueError('need exactly n - 1 merges for n leaves')

	@property
	def heights(self):
		return self.merges[:, 2]

	@property
	def order(self):
		"""Leaf order for drawing, left to right."""
		if len(self.leaf_labels) < 2:
			return np.arange(len(self.leaf_labels))
		return leaves_list(self.merges)

	def cut(self, k):
		"""Assign leaves to ``k`` clusters, numbered from 0."""
		return fcluster(self.merges, k, criterion='maxclust') - 1


@dataclass
class Partition:
	"""Flat clustering of items.

	:param numpy.ndarray assignment: Cluster (or map unit) of each item.
	:param numpy.ndarray centers: ``clusters x features`` centers or SOM
		codebook.
	:param float error: k-means inertia (sum of squared distances to centers)
		or SOM quantization error (mean distance to the best-matching unit).
	:param str method: ``kmeans`` or ``som``.
	:param numpy.ndarray grid: SOM unit coordinates, ``units x 2``.
	:param str topology: SOM topology.
	:param tuple history: k-means inertia after each Lloyd iteration.
	:param tuple item_labels: Label of each item.
	"""

	assignment = array_field(np.int64, 1)
	centers = array_field(float, 2)
	error = field(float)
	method = field(str)
	grid = array_field(float, 2, optional=True)
	topology = field(str, optional=True)
	history = field(tuple, default=())
	item_labels = field(tuple, default=())

	@property
	def n_clusters(self):
		return self.centers.shape[0]

	def members(self, cluster):
		return np.flatnonzero(self.assignment == cluster)


@dataclass(stored=True)
class ClusterResult:
	"""Clustering of genes or samples, with the matrix it was computed from.

	:param str algorithm: ``hier``, ``kmeans`` or ``som``.
	:param str on: ``genes`` or ``samples``.
	:param numpy.ndarray matrix: ``items x features`` matrix clustered.
	:param tuple items: Item labels.
	:param tuple features: Feature labels.
	:param dendrogram: Set for ``hier``.
	:param partition: Set for ``kmeans`` and ``som``.
	"""

	algorithm = field(str)
	on = field(str)
	matrix = array_field(float, 2)
	items = field(tuple)
	features = field(tuple)
	dendrogram = field(Dendrogram, optional=True)
	partition = field(Partition, optional=True)
	params = field(dict, factory=dict)


def _pairwise(M, pair_value, threads=1):
	"""Fill a symmetric matrix from ``pair_value(i, j)`` over the upper triangle."""
	n = M.shape[0]

	def row(i):
		return [pair_value(i, j) for j in range(i + 1, n)]

	out = np.zeros((n, n))
	for i, values in enumerate(ordered_map(row, range(n), threads=threads)):
		out[i, i + 1:] = values
		out[i + 1:, i] = values
	return out


def _correlations(M, threads=1):
	"""Correlation matrix of rows, pairwise-complete where values are missing."""
	finite = np.isfinite(M)

	if finite.all():
		centered = M - M.mean(axis=1, keepdims=True)
		norms = np.sqrt(np.einsum('ij,ij->i', centered, centered))
		if np.any(norms == 0):
			raise ZeroVarianceError('correlation distance undefined for constant item {}'.format(int(np.argmin(norms))))
		unit = centered / norms[:, None]
		R = unit @ unit.T
		R = (R + R.T) / 2

	else:
		def pair(i, j):
			shared = finite[i] & finite[j]
			if shared.sum() < MIN_SHARED:
				raise DataError('items {} and {} share fewer than {} finite features'.format(i, j, MIN_SHARED))
			x = M[i, shared] - M[i, shared].mean()
			y = M[j, shared] - M[j, shared].mean()
			den = np.sqrt(x @ x) * np.sqrt(y @ y)
			if den == 0:
				raise ZeroVarianceError('items {} and {} have a constant shared profile'.format(i, j))
			return (x @ y) / den

		R = _pairwise(M, pair, threads)

	np.fill_diagonal(R, 1)
	R = np.clip(R, -1, 1)
	# Snap rounding error at perfect correlation
	near = np.abs(1 - np.abs(R)) < 1e-14
	R[near] = np.sign(R[near])
	return R


def _euclidean(M, threads=1):
	finite = np.isfinite(M)
	if finite.all():
		return squareform(pdist(M, 'euclidean'))

	def pair(i, j):
		shared = finite[i] & finite[j]
		if not shared.any():
			raise DataError('items {} and {} share no finite features'.format(i, j))
		diff = M[i, shared] - M[j, shared]
		return np.sqrt(diff @ diff)

	return _pairwise(M, pair, threads)


def distance_matrix(M, kind='oneMinusCor', threads=1):
	"""Pairwise distances between the rows of a matrix.

	Missing values are handled pairwise-complete. Correlation distances need
	at least 3 shared finite features per pair.

	:param M: ``items x features`` matrix.
	:param str kind: ``euclidean``, ``oneMinusCor`` (``1 - r``) or
		``oneMinusAbsCor`` (``1 - |r|``).
	:param int threads: Worker threads for pairwise-complete rows.
	:returns: Symmetric ``items x items`` matrix with zero diagonal.
	:rtype: numpy.ndarray

	>>> D = distance_matrix([[1, 2, 3], [3, 2, 1]], 'oneMinusCor')
	>>> D.tolist()
	[[0.0, 2.0], [2.0, 0.0]]
	"""
	if kind not in DISTANCE_KINDS:
		raise DomainError('unknown distance {!r}; expected one of {}'.format(kind, ', '.join(DISTANCE_KINDS)))

	M = np.asarray(M, dtype=float)
	if M.ndim != 2 or M.shape[0] < 2:
		raise DataError('need at least 2 items to compute distances')

	if kind == 'euclidean':
		D = _euclidean(M, threads)
	else:
		R = _correlations(M, threads)
		D = 1 - (R if kind == 'oneMinusCor' else np.abs(R))

	D = np.maximum(D, 0)
	np.fill_diagonal(D, 0)
	return D


def _lance_williams(linkage, d_ik, d_jk, n_i, n_j):
	if linkage == 'single':
		return np.minimum(d_ik, d_jk)
	if linkage == 'complete':
		return np.maximum(d_ik, d_jk)
	return (n_i * d_ik + n_j * d_jk) / (n_i + n_j)


def hier_cluster(D, linkage='average', labels=None, distance_kind=''):
	"""Agglomerative hierarchical clustering of a distance matrix.

	Each step merges the closest pair of clusters, the one with the lowest
	``(i, j)`` (clusters indexed by their lowest item) on ties.

	:param D: Symmetric distance matrix.
	:param str linkage: ``single``, ``complete`` or ``average``.
	:param labels: Item labels, item numbers if None.
	:param str distance_kind: Recorded in the result.
	:rtype: .Dendrogram

	>>> D = distance_matrix([[1], [2], [10]], 'euclidean')
	>>> hier_cluster(D, 'single').heights.tolist()
	[1.0, 8.0]
	"""
	if linkage not in LINKAGES:
		raise DomainError('unknown linkage {!r}; expected one of {}'.format(linkage, ', '.join(LINKAGES)))

	D = np.array(D, dtype=float)
	n = D.shape[0]

	if D.shape != (n, n):
		raise DataError('distance matrix must be square')
	if labels is None:
		labels = [str(i) for i in range(n)]
	if len(labels) != n:
		raise DataError('need one label per item')

	active = np.ones(n, dtype=bool)
	sizes = np.ones(n)
	ids = np.arange(n)
	merges = np.zeros((max(n - 1, 0), 4))
	work = D.copy()
	np.fill_diagonal(work, np.inf)

	for m in range(n - 1):
		masked = np.where(active[:, None] & active[None, :], work, np.inf)
		masked[np.tril_indices(n)] = np.inf
		flat = int(np.argmin(masked))
		i, j = divmod(flat, n)
		height = masked[i, j]

		a, b = sorted((ids[i], ids[j]))
		merges[m] = (a, b, height, sizes[i] + sizes[j])

		updated = _lance_williams(linkage, work[i], work[j], sizes[i], sizes[j])
		work[i, :] = updated
		work[:, i] = updated
		work[i, i] = np.inf

		active[j] = False
		sizes[i] += sizes[j]
		ids[i] = n + m

	return Dendrogram(merges=merges, leaf_labels=labels, linkage=linkage, distance_kind=distance_kind)


def _impute(M):
	"""Replace missing values by their feature mean (0 for empty features)."""
	M = np.array(M, dtype=float)
	missing = ~np.isfinite(M)

	if missing.any():
		with np.errstate(invalid='ignore'):
			counts = (~missing).sum(axis=0)
			means = np.where(counts > 0, np.where(missing, 0, M).sum(axis=0) / np.maximum(counts, 1), 0)
		M[missing] = np.broadcast_to(means, M.shape)[missing]
		logger.warning('Imputed %d missing values by feature means', int(missing.sum()))

	return M


def _sub_seed(rng):
	return int(rng.integers(2 ** 31 - 1))


def _lloyd(X, centers, max_iter):
	def assign(c):
		return np.argmin(cdist(X, c, 'sqeuclidean'), axis=1)

	labels = assign(centers)
	history = []

	for _ in range(max_iter):
		for c in range(centers.shape[0]):
			members = labels == c
			# Empty clusters keep their center
			if members.any():
				centers[c] = X[members].mean(axis=0)

		inertia = float(((X - centers[labels]) ** 2).sum())
		history.append(inertia)

		new = assign(centers)
		if np.array_equal(new, labels):
			break
		labels = new

	return labels, centers, history


def k_means(M, k, restarts=10, seed=0, max_iter=MAX_LLOYD_ITER, labels=None, threads=1):
	"""k-means clustering of the rows of a matrix.

	Each restart seeds centers with k-means++ from ``default_rng([seed, r])``
	and runs Lloyd iterations until the assignment stops changing. The
	restart with the lowest inertia wins, the earliest on ties.

	:param M: ``items x features`` matrix.
	:param int k: Number of clusters, at most the number of items.
	:param int restarts: Number of restarts.
	:param int seed: Master seed.
	:param int max_iter: Iteration limit per restart.
	:param labels: Item labels.
	:param int threads: Worker threads for restarts.
	:rtype: .Partition
	"""
	X = _impute(M)
	n = X.shape[0]

	if k < 1:
		raise DomainError('k must be at least 1')
	if k > n:
		raise DataError('k = {} exceeds the number of items ({})'.format(k, n))
	if restarts < 1:
		raise DomainError('restarts must be at least 1')

	def run(r):
		rng = np.random.default_rng([seed, r])
		centers, _ = kmeans_plusplus(X, k, random_state=_sub_seed(rng))
		return _lloyd(X, np.array(centers, dtype=float), max_iter)

	runs = ordered_map(run, range(restarts), threads=threads)
	best = min(range(restarts), key=lambda r: runs[r][2][-1])
	assignment, centers, history = runs[best]

	return Partition(
		assignment=assignment,
		centers=centers,
		error=history[-1],
		method='kmeans',
		history=history,
		item_labels=labels if labels is not None else [str(i) for i in range(n)],
	)


def _grid(xdim, ydim, topology):
	coords = []
	for y in range(ydim):
		for x in range(xdim):
			if topology == 'hex':
				coords.append((x + 0.5 * (y % 2), y * np.sqrt(3) / 2))
			else:
				coords.append((x, y))
	return np.array(coords, dtype=float)


def som(M, xdim=2, ydim=1, topology='rect', epochs=None, alpha0=0.05, radius0=None, seed=0, labels=None):
	"""Online self-organizing map of the rows of a matrix.

	The codebook starts at k-means++ picks among the items. Each epoch
	presents one item, drawn from successive random permutations, and moves
	every unit within the current radius of its best-matching unit on the
	grid (a bubble neighborhood) toward it. The learning rate falls linearly
	from ``alpha0`` to 0.01 and the radius from ``radius0`` to 0.

	:param M: ``items x features`` matrix.
	:param int xdim: Grid columns.
	:param int ydim: Grid rows.
	:param str topology: ``rect`` or ``hex``.
	:param int epochs: Item presentations, ``100 * items`` if None.
	:param float alpha0: Initial learning rate.
	:param float radius0: Initial radius, ``max(xdim, ydim) / 2`` if None.
	:param int seed: Seed of the random generator.
	:param labels: Item labels.
	:rtype: .Partition
	"""
	if topology not in TOPOLOGIES:
		raise DomainError('unknown topology {!r}'.format(topology))
	if xdim < 1 or ydim < 1:
		raise DomainError('SOM grid dimensions must be positive')

	X = _impute(M)
	n = X.shape[0]
	units = xdim * ydim

	if epochs is None:
		epochs = 100 * n
	if radius0 is None:
		radius0 = max(xdim, ydim) / 2

	grid = _grid(xdim, ydim, topology)
	grid_dist = cdist(grid, grid)
	rng = np.random.default_rng(seed)

	if units <= n:
		codebook, _ = kmeans_plusplus(X, units, random_state=_sub_seed(rng))
		codebook = np.array(codebook, dtype=float)
	else:
		codebook = X[rng.integers(0, n, size=units)].copy()

	order = np.concatenate([rng.permutation(n) for _ in range(-(-epochs // n))]) if epochs else []

	for t in range(epochs):
		x = X[order[t]]
		frac = t / epochs
		alpha = alpha0 + (0.01 - alpha0) * frac
		radius = radius0 * (1 - frac)

		bmu = int(np.argmin(((codebook - x) ** 2).sum(axis=1)))
		near = grid_dist[bmu] <= radius
		codebook[near] += alpha * (x - codebook[near])

	dist = cdist(X, codebook)
	assignment = np.argmin(dist, axis=1)

	return Partition(
		assignment=assignment,
		centers=codebook,
		error=float(dist[np.arange(n), assignment].mean()),
		method='som',
		grid=grid,
		topology=topology,
		item_labels=labels if labels is not None else [str(i) for i in range(n)],
	)


def _cluster_matrix(M, items, features, algorithm, on, selection, distance=None,
                    linkage='average', k=2, restarts=10, xdim=2, ydim=1, topology='rect', epochs=None,
                    alpha0=0.05, radius0=None, seed=0, threads=1):
	if algorithm not in ALGORITHMS:
		raise DomainError('unknown clustering algorithm {!r}'.format(algorithm))

	params = dict(selection, algorithm=algorithm, on=on)
	dendrogram = partition = None

	if algorithm == 'hier':
		if distance is None:
			distance = 'oneMinusCor' if on == 'genes' else 'euclidean'
		D = distance_matrix(M, distance, threads=threads)
		dendrogram = hier_cluster(D, linkage, labels=items, distance_kind=distance)
		params.update(distance=distance, linkage=linkage)

	elif algorithm == 'kmeans':
		partition = k_means(M, k, restarts=restarts, seed=seed, labels=items, threads=threads)
		params.update(k=k, restarts=restarts, seed=seed)

	else:
		partition = som(M, xdim, ydim, topology, epochs=epochs, alpha0=alpha0, radius0=radius0,
		                seed=seed, labels=items)
		params.update(xdim=xdim, ydim=ydim, topology=topology, epochs=epochs, alpha0=alpha0,
		              radius0=radius0, seed=seed)

	return ClusterResult(
		algorithm=algorithm,
		on=on,
		matrix=M,
		items=items,
		features=features,
		dendrogram=dendrogram,
		partition=partition,
		params=params,
	)


def _orient(M, rows, cols, on):
	if on == 'genes':
		return M, rows, cols
	if on == 'samples':
		return M.T, cols, rows
	raise DomainError("on must be 'genes' or 'samples', got {!r}".format(on))


def cluster_de(res, algorithm='hier', n_de=None, p_cut=None, on='genes', adjust=None,
               family=None, **params):
	"""Cluster the most differentially expressed genes of a DE result.

	Genes are the ``n_de`` with the smallest adjusted p-values, or all with
	adjusted p at most ``p_cut``, or all tested genes if neither is given.
	``n_de`` larger than the number of genes is clamped with a warning.

	:param res: DE result.
	:type res: spotflow.diffexpr.DEResult
	:param str algorithm: ``hier``, ``kmeans`` or ``som``.
	:param int n_de: Number of top genes.
	:param float p_cut: Adjusted p-value cutoff.
	:param str on: Cluster ``genes`` or ``samples``.
	:param str adjust: Re-adjust raw p-values with this method first.
	:param str family: Statistic family to select by.
	:param \\**params: Algorithm parameters, see :func:`.cluster_dataset`.
	:rtype: .ClusterResult

	:raises spotflow.errors.DataError: If fewer than 2 genes are selected.
	"""
	k = res.family_index(family)
	adj = res.adj_p[:, k]
	if adjust is not None and adjust != res.adjust:
		adj = adjust_pvalues(res.raw_p[:, k], adjust)

	order = res.ranking(family, adj_p=adj)

	if n_de is not None:
		if n_de > res.n_genes:
			logger.warning('n_de = %d exceeds the %d tested genes; using all', n_de, res.n_genes)
			n_de = res.n_genes
		selected = order[:n_de]
	elif p_cut is not None:
		selected = [i for i in order if adj[i] <= p_cut]
	else:
		selected = order

	selected = np.asarray(selected, dtype=np.int64)
	if selected.size < 2:
		raise DataError('DE selection yields {} genes, need at least 2'.format(selected.size))

	genes = [res.gene_ids[i] for i in selected]
	samples = list(res.sample_sheet.file_names)
	M, items, features = _orient(res.w[selected], genes, samples, on)

	selection = dict(n_de=n_de, p_cut=p_cut, adjust=adjust, family=res.families[k])
	return _cluster_matrix(M, items, features, algorithm, on, selection, **params)


def cluster_dataset(ds, algorithm='hier', on='genes', group=None, remove_names=(),
                    label_id=None, bkg='none', **params):
	"""Cluster the genes or samples of a dataset without DE selection.

	:param ds: Normalized dataset, or raw dataset whose W is computed with
		background method ``bkg``.
	:param str algorithm: ``hier``, ``kmeans`` or ``som``.
	:param str on: Cluster ``genes`` or ``samples``.
	:param str group: Restrict to the resolved members of this gene group.
	:param remove_names: Gene label values to leave out.
	:param str label_id: Gene label used for ``remove_names`` and item
		labels, the first gene label if None.
	:param str bkg: Background method for raw datasets.
	:param \\**params: ``distance``, ``linkage``, ``k``, ``restarts``,
		``xdim``, ``ydim``, ``topology``, ``epochs``, ``alpha0``, ``radius0``,
		``seed``, ``threads``.
	:rtype: .ClusterResult
	"""
	if not isinstance(ds, NormalizedDataset):
		ds = compute_wa(ds, bkg)

	if label_id is None:
		label_id = ds.gene_map.label_names[0]
	names = ds.gene_map.values(label_id)

	rows = np.arange(ds.n_spots) if group is None else np.asarray(ds.group_rows(group), dtype=np.int64)
	remove = set(remove_names)
	keep = [i for i in rows if names[i] not in remove and not ds.bad_spot[i]]

	empty = [i for i in keep if not np.isfinite(ds.w[i]).any()]
	if empty:
		logger.warning('Leaving out %d spots without finite values', len(empty))
		keep = [i for i in keep if np.isfinite(ds.w[i]).any()]

	if len(keep) < 2:
		raise DataError('fewer than 2 spots left to cluster')

	M, items, features = _orient(
		ds.w[keep],
		[names[i] for i in keep],
		list(ds.sample_sheet.file_names),
		on,
	)

	selection = dict(group=group, remove_names=list(remove_names), label_id=label_id, bkg=bkg)
	return _cluster_matrix(M, items, features, algorithm, on, selection, **params)


def cluster_frame(result, k=None):
	"""Items in drawing order with their cluster.

	:param result: Clustering result.
	:type result: .ClusterResult
	:param int k: Cut a dendrogram into this many clusters. Without it
		hierarchical results have no cluster column.
	:rtype: pandas.DataFrame
	"""
	if result.dendrogram is not None:
		order = result.dendrogram.order
		clusters = result.dendrogram.cut(k) if k is not None else None
	else:
		assignment = result.partition.assignment
		order = np.lexsort((np.arange(len(assignment)), assignment))
		clusters = assignment

	data = {
		'position': list(range(1, len(order) + 1)),
		'item': [result.items[i] for i in order],
	}
	if clusters is not None:
		data['cluster'] = [int(clusters[i]) for i in order]

	return pd.DataFrame(data)


def cluster_table(result, fmt='csv', k=None):
	"""Render :func:`.cluster_frame` as CSV or HTML.

	:rtype: str
	"""
	title = '{} clustering of {} {}'.format(result.algorithm, len(result.items), result.on)
	return render_table(cluster_frame(result, k), fmt, title=title)
