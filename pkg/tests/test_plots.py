"""Test SVG figures."""

import xml.etree.ElementTree as ET

import pytest
import numpy as np

from spotflow.cluster import cluster_dataset
from spotflow.diffexpr import de_genes_two_groups
from spotflow.errors import DomainError, ShapeError
from spotflow.layout import ChipLayout
from spotflow.netmod import rel_network_b
from spotflow.plots import PLOT_KINDS, emit_plot, render_svg, spatial_matrix, wa_plot
from spotflow.test import make_normalized


SVG = '{http://www.w3.org/2000/svg}'


def element(svg, gid):
	"""Element of an SVG document by id."""
	root = ET.fromstring(svg)
	for el in root.iter():
		if el.get('id') == gid:
			return el
	raise AssertionError('no element with id {!r}'.format(gid))


def count(svg, gid, tag):
	return sum(1 for _ in element(svg, gid).iter(SVG + tag))


@pytest.fixture(scope='module')
def chip():
	"""Full-size chip with a few missing spots."""
	rng = np.random.default_rng(1)
	layout = ChipLayout(12, 4, 10, 10)
	a = rng.uniform(6, 14, size=(layout.n_spots, 2))
	w = 0.1 * (a - 10) + rng.normal(0, 0.3, size=a.shape)
	w[:5, 0] = np.nan
	return make_normalized(w, {'Type': ['a', 'b']}, a=a, layout=layout)


def test_wa_plot(chip):
	svg = render_svg(wa_plot(chip, 0))

	assert svg.lstrip().startswith('<?xml')
	assert count(svg, 'points', 'use') == 4800 - 5
	element(svg, 'curve')

	no_curve = render_svg(wa_plot(chip, 1, curve=False))
	assert count(no_curve, 'points', 'use') == 4800
	with pytest.raises(AssertionError):
		element(no_curve, 'curve')


def test_deterministic(chip):
	assert emit_plot('wa', chip) == emit_plot('wa', chip)
	assert '<dc:date>' not in emit_plot('spatial', chip, 1)


def test_spatial(chip):
	lattice = spatial_matrix(chip, 0)
	assert lattice.shape == (120, 40)
	assert np.isnan(lattice[0, :5]).all()
	assert lattice[0, 5] == chip.w[5, 0]

	element(emit_plot('spatial', chip, 0), 'lattice')

	summarized = make_normalized(chip.w[:10], {'Type': ['a', 'b']})
	with pytest.raises(ShapeError):
		spatial_matrix(summarized)


@pytest.fixture(scope='module')
def expression():
	rng = np.random.default_rng(2)
	w = rng.normal(size=(12, 8))
	w[:3, 4:] += 3
	w[5] = w[4] + rng.normal(0, 0.01, size=8)
	return make_normalized(w, {'Type': ['n'] * 4 + ['t'] * 4})


def test_volcano(expression):
	res = de_genes_two_groups(expression, 'Type')
	svg = emit_plot('volcano', res)
	assert count(svg, 'points', 'use') == 12


def test_network(expression):
	net = rel_network_b(expression, 'Type', 'n', cut_pval=0.01)
	assert net.n_edges >= 1
	svg = emit_plot('network', net)

	assert count(svg, 'nodes', 'use') == 12
	assert count(svg, 'edges', 'path') == net.n_edges


def test_other_kinds(expression):
	hier = cluster_dataset(expression, 'hier', on='samples')
	assert '<svg' in emit_plot('cluster', hier)

	km = cluster_dataset(expression, 'kmeans', k=2, seed=1)
	assert '<svg' in emit_plot('cluster', km)

	assert '<svg' in emit_plot('boxplot', expression, 'g1', 'Type')
	assert '<svg' in emit_plot('heatmap', expression.w, title='W')

	net = rel_network_b(expression, 'Type', 'n')
	assert '<svg' in emit_plot('genePair', net, 'g5', 'g6')


def test_unknown_kind(expression):
	assert 'moduleMap' in PLOT_KINDS
	with pytest.raises(DomainError):
		emit_plot('pie', expression)
	with pytest.raises(ShapeError):
		emit_plot('heatmap', [1.0, 2.0])
