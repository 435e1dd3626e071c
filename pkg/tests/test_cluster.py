"""Test distances and clustering."""

import pytest
import numpy as np
from scipy.cluster.hierarchy import linkage as scipy_linkage
from scipy.spatial.distance import pdist, squareform

from spotflow.cluster import (
	distance_matrix, hier_cluster, k_means, som, cluster_de, cluster_dataset,
	cluster_frame, cluster_table,
)
from spotflow.diffexpr import de_genes_two_groups
from spotflow.errors import DataError, DomainError, ZeroVarianceError
from spotflow.test import make_normalized, make_raw


@pytest.fixture()
def blobs():
	"""Three well separated groups of four items in 5 dimensions."""
	rng = np.random.default_rng(0)
	centers = np.array([[0.0] * 5, [10.0] * 5, [0.0, 10.0, 0.0, 10.0, 0.0]])
	M = np.repeat(centers, 4, axis=0) + rng.normal(0, 0.5, size=(12, 5))
	truth = np.repeat(np.arange(3), 4)
	return M, truth


def same_partition(a, b):
	"""Assignments equal up to renaming of clusters."""
	pairs = set(zip(a.tolist(), b.tolist()))
	return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


def test_distance_matrix():
	rng = np.random.default_rng(1)
	M = rng.normal(size=(6, 8))

	np.testing.assert_allclose(distance_matrix(M, 'euclidean'), squareform(pdist(M)), atol=1e-12)
	np.testing.assert_allclose(distance_matrix(M, 'oneMinusCor'), squareform(pdist(M, 'correlation')), atol=1e-12)

	R = np.corrcoef(M)
	expected = 1 - np.abs(R)
	np.fill_diagonal(expected, 0)
	np.testing.assert_allclose(distance_matrix(M, 'oneMinusAbsCor'), expected, atol=1e-12)

	D = distance_matrix([[1, 2, 3], [2, 4, 6], [3, 2, 1]], 'oneMinusAbsCor')
	np.testing.assert_array_equal(D, np.zeros((3, 3)))


def test_distance_pairwise_complete():
	M = np.array([
		[1.0, 2.0, np.nan, 4.0, 5.0],
		[2.0, 1.0, 3.0, 5.0, np.nan],
		[0.0, 1.0, 2.0, 3.0, 4.0],
	])
	D = distance_matrix(M, 'oneMinusCor')

	shared = [0, 1, 3]
	r = np.corrcoef(M[0, shared], M[1, shared])[0, 1]
	assert D[0, 1] == pytest.approx(1 - r)
	assert D[0, 2] == pytest.approx(0.0, abs=1e-12)

	E = distance_matrix(M, 'euclidean')
	assert E[0, 1] == pytest.approx(np.sqrt(1 + 1 + 1))


def test_distance_errors():
	with pytest.raises(ZeroVarianceError):
		distance_matrix([[1, 1, 1], [1, 2, 3]], 'oneMinusCor')
	with pytest.raises(DataError):
		distance_matrix([[1, np.nan, 3, 4], [1, 2, np.nan, 5]], 'oneMinusCor')
	with pytest.raises(DataError):
		distance_matrix([[1, 2]], 'euclidean')
	with pytest.raises(DomainError):
		distance_matrix([[1, 2], [3, 4]], 'manhattan')


@pytest.mark.parametrize('method', ['single', 'complete', 'average'])
def test_hier_matches_scipy(method):
	rng = np.random.default_rng(2)
	M = rng.normal(size=(10, 4))
	D = distance_matrix(M, 'euclidean')

	dendrogram = hier_cluster(D, method)
	expected = scipy_linkage(pdist(M), method)

	np.testing.assert_allclose(dendrogram.merges, expected, atol=1e-12)
	assert dendrogram.linkage == method
	assert sorted(dendrogram.order.tolist()) == list(range(10))


def test_hier_ties():
	"""Equal distances merge the lowest-numbered clusters first."""
	D = np.ones((4, 4)) - np.eye(4)
	dendrogram = hier_cluster(D, 'average', labels=list('abcd'))

	np.testing.assert_array_equal(dendrogram.merges, [
		[0, 1, 1, 2],
		[2, 4, 1, 3],
		[3, 5, 1, 4],
	])
	assert dendrogram.leaf_labels == ('a', 'b', 'c', 'd')


def test_hier_cut(blobs):
	M, truth = blobs
	dendrogram = hier_cluster(distance_matrix(M, 'euclidean'), 'average')
	assert same_partition(dendrogram.cut(3), truth)

	with pytest.raises(DomainError):
		hier_cluster(np.zeros((2, 2)), 'ward')
	with pytest.raises(DataError):
		hier_cluster(np.zeros((2, 2)), labels=['a'])


def test_k_means(blobs):
	M, truth = blobs
	part = k_means(M, 3, restarts=5, seed=1)

	assert same_partition(part.assignment, truth)
	assert part.centers.shape == (3, 5)
	assert part.error == part.history[-1]
	assert all(b <= a + 1e-9 for a, b in zip(part.history, part.history[1:]))

	expected = sum(((M[part.assignment == c] - part.centers[c]) ** 2).sum() for c in range(3))
	assert part.error == pytest.approx(expected)

	again = k_means(M, 3, restarts=5, seed=1, threads=3)
	np.testing.assert_array_equal(again.assignment, part.assignment)
	np.testing.assert_array_equal(again.centers, part.centers)


def test_k_means_missing(blobs):
	M, truth = blobs
	M = M.copy()
	M[0, 0] = np.nan

	part = k_means(M, 3, seed=0)
	assert same_partition(part.assignment, truth)


def test_k_means_errors(blobs):
	M, _ = blobs
	with pytest.raises(DataError):
		k_means(M, 13)
	with pytest.raises(DomainError):
		k_means(M, 0)
	with pytest.raises(DomainError):
		k_means(M, 2, restarts=0)


def test_som(blobs):
	M, truth = blobs
	part = som(M, xdim=3, ydim=1, radius0=0.5, seed=4)

	assert part.method == 'som'
	assert part.grid.tolist() == [[0, 0], [1, 0], [2, 0]]
	assert part.centers.shape == (3, 5)
	assert same_partition(part.assignment, truth)

	again = som(M, xdim=3, ydim=1, radius0=0.5, seed=4)
	np.testing.assert_array_equal(again.centers, part.centers)

	hexagonal = som(M, xdim=2, ydim=2, topology='hex', epochs=50)
	assert hexagonal.grid[2].tolist() == pytest.approx([0.5, np.sqrt(3) / 2])
	assert set(hexagonal.assignment.tolist()) <= set(range(4))

	with pytest.raises(DomainError):
		som(M, topology='torus')
	with pytest.raises(DomainError):
		som(M, xdim=0)


@pytest.fixture()
def de_result():
	rng = np.random.default_rng(3)
	w = rng.normal(size=(8, 6))
	w[:3, 3:] += 4
	ds = make_normalized(w, {'Type': ['n'] * 3 + ['t'] * 3})
	return de_genes_two_groups(ds, 'Type')


def test_cluster_de(de_result):
	res = cluster_de(de_result, 'hier', n_de=3)
	assert sorted(res.items) == ['g1', 'g2', 'g3']
	assert res.matrix.shape == (3, 6)
	assert res.params['distance'] == 'oneMinusCor'
	assert res.params['family'] == 't'

	clamped = cluster_de(de_result, 'kmeans', n_de=50, k=2)
	assert len(clamped.items) == 8

	on_samples = cluster_de(de_result, 'hier', n_de=3, on='samples')
	assert on_samples.matrix.shape == (6, 3)
	assert on_samples.params['distance'] == 'euclidean'
	assert on_samples.items == ('chip1', 'chip2', 'chip3', 'chip4', 'chip5', 'chip6')

	adj = de_result.adj_p[:, 0]
	cutoff = np.sort(adj)[2]
	cut = cluster_de(de_result, 'hier', p_cut=cutoff)
	assert set(cut.items) == {g for g, p in zip(de_result.gene_ids, adj) if p <= cutoff}

	with pytest.raises(DataError):
		cluster_de(de_result, 'hier', n_de=1)
	with pytest.raises(DomainError):
		cluster_de(de_result, 'dbscan')
	with pytest.raises(DomainError):
		cluster_de(de_result, on='chips')


def test_cluster_dataset():
	rng = np.random.default_rng(4)
	ds = make_normalized(rng.normal(size=(6, 5)), {'Sample': list('abcde')},
	                     gene_names=['g1', 'g2', 'g3', 'g4', 'g5', 'CTRL'])

	res = cluster_dataset(ds, 'hier', remove_names=['CTRL'], distance='euclidean', linkage='single')
	assert res.items == ('g1', 'g2', 'g3', 'g4', 'g5')
	assert res.params['remove_names'] == ['CTRL']
	assert res.dendrogram.linkage == 'single'

	raw = make_raw(rng.uniform(100, 1000, size=(5, 4)), rng.uniform(100, 1000, size=(5, 4)))
	res = cluster_dataset(raw, 'kmeans', on='samples', k=2, bkg='none')
	assert res.partition.assignment.shape == (4,)


def test_cluster_frame(blobs):
	M, truth = blobs
	labels = ['i{}'.format(i) for i in range(12)]
	ds = make_normalized(M, {'Sample': list('abcde')}, gene_names=labels)

	res = cluster_dataset(ds, 'kmeans', k=3, seed=2)
	frame = cluster_frame(res)
	assert list(frame.columns) == ['position', 'item', 'cluster']
	assert frame['cluster'].is_monotonic_increasing
	assert frame['position'].tolist() == list(range(1, 13))

	res = cluster_dataset(ds, 'hier', distance='euclidean')
	assert 'cluster' not in cluster_frame(res).columns
	frame = cluster_frame(res, k=3)
	assert frame['item'].tolist() == [labels[i] for i in res.dendrogram.order]
	assert frame['cluster'].nunique() == 3

	assert cluster_table(res, 'csv', k=3).startswith('position,item,cluster\n')
