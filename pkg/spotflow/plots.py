"""Deterministic SVG figures.

Figures are drawn with the object API of matplotlib (no pyplot state) and
written by its SVG backend with a fixed hash salt, no creation date and text
kept as text, so the same input always gives the same bytes.

Artists that tests and downstream tools look for carry an SVG id: the WA
plot's spots are in group ``points``, the spatial image's cells in
``lattice``, the network's nodes in ``nodes`` and edges in ``edges``.
"""

import io
import logging
import math

import numpy as np
from matplotlib import rc_context
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure
from scipy.cluster.hierarchy import dendrogram as scipy_dendrogram

from .diffexpr import volcano_data
from .errors import DataError, DomainError, ShapeError
from .netmod import STATES, gene_pair_data
from .normalize import loess_curve


__all__ = [
	'PLOT_KINDS', 'render_svg', 'wa_plot', 'spatial_plot', 'spatial_matrix',
	'boxplot', 'dendrogram_plot', 'heatmap_plot', 'cluster_plot', 'volcano_plot',
	'network_plot', 'gene_pair_plot', 'module_map', 'emit_plot',
]


logger = logging.getLogger(__name__)


SVG_RC = {
	'svg.hashsalt': 'spotflow',
	'svg.fonttype': 'none',
	'path.simplify': False,
	'font.family': 'DejaVu Sans',
}

SVG_METADATA = {'Date': None, 'Creator': 'spotflow'}

DIVERGING = 'RdBu_r'


def render_svg(fig):
	"""Write a figure as standalone SVG text.

	:type fig: matplotlib.figure.Figure
	:rtype: str
	"""
	buf = io.StringIO()
	with rc_context(SVG_RC):
		FigureCanvasSVG(fig)
		fig.savefig(buf, format='svg', metadata=SVG_METADATA)
	return buf.getvalue()


def _figure(width=6.0, height=4.5):
	with rc_context(SVG_RC):
		return Figure(figsize=(width, height))


def _symmetric_limit(values):
	finite = np.abs(np.asarray(values, dtype=float))
	finite = finite[np.isfinite(finite)]
	limit = float(finite.max()) if finite.size else 1.0
	return limit if limit > 0 else 1.0


def wa_plot(ds, chip=0, curve=True, span=0.4):
	"""Scatter of W against A for one chip.

	Only spots with finite W and A are drawn, one marker each. The global
	lowess curve is overlaid when ``curve`` is set and the chip has enough
	usable spots.

	:param ds: Normalized dataset.
	:param int chip: Chip index.
	:param bool curve: Overlay the lowess curve.
	:param float span: Span of the curve.
	:rtype: matplotlib.figure.Figure
	"""
	a = ds.a[:, chip]
	w = ds.w[:, chip]
	finite = np.isfinite(a) & np.isfinite(w)

	fig = _figure()
	ax = fig.add_subplot()
	ax.plot(a[finite], w[finite], linestyle='none', marker='.', markersize=3, color='0.3', gid='points')
	ax.axhline(0.0, color='0.6', linewidth=0.8)

	if curve:
		try:
			xs, ys = loess_curve(ds, chip, span=span)
		except DataError as exc:
			logger.info('No lowess overlay for chip %d: %s', chip, exc)
		else:
			ax.plot(xs, ys, color='tab:red', linewidth=1.5, gid='curve')

	ax.set_xlabel('A')
	ax.set_ylabel('W')
	ax.set_title('WA plot, {}'.format(ds.sample_sheet.file_names[chip]))
	return fig


def spatial_matrix(ds, chip=0, values=None):
	"""W of one chip (or other per-spot values) on the physical spot lattice.

	:returns: Array of shape ``(gridR * printTipR, gridC * printTipC)``.
	:rtype: numpy.ndarray

	:raises spotflow.errors.ShapeError: If the dataset has no chip layout.
	"""
	if ds.layout is None:
		raise ShapeError('spatial plot needs the chip layout; spots have been summarized')
	if values is None:
		values = ds.w[:, chip]
	return ds.layout.to_lattice(values)


def spatial_plot(ds, chip=0, values=None):
	"""Image of W on the chip lattice, one cell per spot.

	:rtype: matplotlib.figure.Figure
	"""
	lattice = spatial_matrix(ds, chip, values)
	limit = _symmetric_limit(lattice)
	rows, cols = lattice.shape

	fig = _figure(4.0, 4.0 * rows / max(cols, 1) + 0.8)
	ax = fig.add_subplot()
	mesh = ax.pcolormesh(
		np.ma.masked_invalid(lattice), cmap=DIVERGING, vmin=-limit, vmax=limit, gid='lattice',
	)
	ax.set_xlim(0, cols)
	ax.set_ylim(rows, 0)
	ax.set_aspect('equal')
	ax.set_xticks([])
	ax.set_yticks([])
	fig.colorbar(mesh, ax=ax, label='W')
	ax.set_title('Image of {}'.format(ds.sample_sheet.file_names[chip]))
	return fig


def boxplot(ds, gene, sample_label, gene_label=None):
	"""Boxplot of one gene's W per level of a sample label.

	All spots carrying the gene contribute.

	:rtype: matplotlib.figure.Figure
	"""
	if gene_label is None:
		gene_label = ds.gene_map.label_names[0]

	rows, _ = ds.gene_map.resolve(gene_label, [gene])
	if not rows:
		raise DataError('gene {!r} not found under label {!r}'.format(gene, gene_label))

	values = ds.sample_sheet.values(sample_label)
	levels = sorted({v for v in values if v != ''})
	data = []
	for level in levels:
		block = ds.w[np.ix_(rows, [j for j, v in enumerate(values) if v == level])].ravel()
		data.append(block[np.isfinite(block)])

	fig = _figure()
	ax = fig.add_subplot()
	ax.boxplot(data)
	ax.set_xticks(range(1, len(levels) + 1), levels)
	ax.set_xlabel(sample_label)
	ax.set_ylabel('W')
	ax.set_title('Boxplot for {}'.format(gene))
	return fig


def dendrogram_plot(dend, title=None):
	"""Draw a dendrogram.

	:type dend: spotflow.cluster.Dendrogram
	:rtype: matplotlib.figure.Figure
	"""
	n = len(dend.leaf_labels)
	if n < 2:
		raise DataError('a dendrogram needs at least 2 leaves')

	fig = _figure(max(6.0, 0.18 * n), 4.5)
	ax = fig.add_subplot()
	scipy_dendrogram(
		dend.merges, labels=list(dend.leaf_labels), ax=ax, color_threshold=0,
		above_threshold_color='0.2', leaf_rotation=90,
	)
	ax.set_ylabel('{} ({} linkage)'.format(dend.distance_kind or 'distance', dend.linkage))
	if title:
		ax.set_title(title)
	return fig


def heatmap_plot(matrix, row_labels=(), col_labels=(), title=None, limit=None):
	"""Heatmap on a diverging scale symmetric around 0.

	:param matrix: 2-d values; NaN cells are left blank.
	:param float limit: Color scale limit, the largest absolute value if None.
	:rtype: matplotlib.figure.Figure
	"""
	matrix = np.asarray(matrix, dtype=float)
	if matrix.ndim != 2:
		raise ShapeError('heatmap needs a 2-d matrix')
	if limit is None:
		limit = _symmetric_limit(matrix)

	rows, cols = matrix.shape
	fig = _figure(max(4.0, 0.25 * cols + 2), max(3.0, 0.2 * rows + 1.5))
	ax = fig.add_subplot()
	mesh = ax.pcolormesh(np.ma.masked_invalid(matrix), cmap=DIVERGING, vmin=-limit, vmax=limit, gid='cells')
	ax.set_xlim(0, cols)
	ax.set_ylim(rows, 0)

	if len(col_labels):
		ax.set_xticks(np.arange(cols) + 0.5, list(col_labels), rotation=90, fontsize=6)
	if len(row_labels):
		ax.set_yticks(np.arange(rows) + 0.5, list(row_labels), fontsize=6)

	fig.colorbar(mesh, ax=ax)
	if title:
		ax.set_title(title)
	return fig


def cluster_plot(result):
	"""Dendrogram of a hierarchical result, else cluster profiles.

	Profiles show each item's row of the clustered matrix in its cluster's
	panel, with the cluster center in red.

	:type result: spotflow.cluster.ClusterResult
	:rtype: matplotlib.figure.Figure
	"""
	if result.dendrogram is not None:
		return dendrogram_plot(result.dendrogram, title='Hierarchical clustering of {}'.format(result.on))

	part = result.partition
	k = part.n_clusters
	ncols = min(k, 4)
	nrows = math.ceil(k / ncols)

	fig = _figure(3.0 * ncols, 2.4 * nrows)
	x = np.arange(result.matrix.shape[1])

	for c in range(k):
		ax = fig.add_subplot(nrows, ncols, c + 1)
		members = part.members(c)
		for i in members:
			ax.plot(x, result.matrix[i], color='0.6', linewidth=0.6)
		ax.plot(x, part.centers[c], color='tab:red', linewidth=1.5)
		ax.set_title('cluster {} ({} items)'.format(c, len(members)), fontsize=8)
		ax.tick_params(labelsize=6)

	return fig


def volcano_plot(res, family=None, p_cut=None):
	"""Fold change against -log10 raw p.

	:type res: spotflow.diffexpr.DEResult
	:rtype: matplotlib.figure.Figure
	"""
	x, y = volcano_data(res, family)
	finite = np.isfinite(x) & np.isfinite(y)

	fig = _figure()
	ax = fig.add_subplot()
	ax.plot(x[finite], y[finite], linestyle='none', marker='.', markersize=4, color='0.3', gid='points')
	if p_cut is not None:
		ax.axhline(-math.log10(p_cut), color='tab:red', linewidth=0.8, linestyle='--')
	ax.set_xlabel('fold change (W)')
	ax.set_ylabel('-log10 p')
	ax.set_title('Volcano plot')
	return fig


def _circle(n):
	angles = 2 * np.pi * np.arange(n) / max(n, 1)
	return np.column_stack([np.cos(angles), np.sin(angles)])


def network_plot(net):
	"""Relevance network on a circle, nodes in pool order.

	Single-condition edges are colored by the sign of the coefficient,
	difference-network edges by the sign of the Fisher Z difference.

	:type net: spotflow.netmod.RelNet
	:rtype: matplotlib.figure.Figure
	"""
	pos = _circle(net.n_genes)
	fig = _figure(6.0, 6.0)
	ax = fig.add_subplot()

	if net.n_edges:
		i, j = net.edges[:, 0], net.edges[:, 1]
		sign = net.delta_z[i, j] if net.is_difference else net.association[i, j]
		colors = ['tab:red' if s >= 0 else 'tab:blue' for s in sign]
		segments = np.stack([pos[i], pos[j]], axis=1)
		ax.add_collection(LineCollection(segments, colors=colors, linewidths=1.0, gid='edges'))

	ax.plot(pos[:, 0], pos[:, 1], linestyle='none', marker='o', markersize=6, color='0.2', gid='nodes')
	for (x, y), name in zip(pos, net.gene_ids):
		ax.annotate(name, (x, y), xytext=(1.12 * x, 1.12 * y), ha='center', va='center', fontsize=7)

	ax.set_xlim(-1.4, 1.4)
	ax.set_ylim(-1.4, 1.4)
	ax.set_aspect('equal')
	ax.set_axis_off()
	ax.set_title('Relevance network, {}'.format(' vs '.join(net.conditions)))
	return fig


def gene_pair_plot(net, gene_x, gene_y):
	"""Scatter of two genes per condition with least-squares lines.

	:rtype: matplotlib.figure.Figure
	"""
	fits = gene_pair_data(net, gene_x, gene_y)
	colors = ['tab:blue', 'tab:orange']

	fig = _figure()
	ax = fig.add_subplot()
	for fit, color in zip(fits, colors):
		ax.plot(fit.x, fit.y, linestyle='none', marker='o', markersize=4, color=color, label=fit.condition)
		if np.isfinite(fit.slope) and fit.x.size:
			xs = np.array([fit.x.min(), fit.x.max()])
			ax.plot(xs, fit.intercept + fit.slope * xs, color=color, linewidth=1.2)

	ax.set_xlabel(gene_x)
	ax.set_ylabel(gene_y)
	ax.legend(fontsize=8)
	ax.set_title('Regression of {} on {}'.format(gene_y, gene_x))
	return fig


def module_map(res, unit=None):
	"""Signed concordance scores of groups per condition (or sample).

	With ``unit`` set, a bar chart of that unit's scores.

	:type res: spotflow.netmod.ModuleResult
	:rtype: matplotlib.figure.Figure
	"""
	if unit is None:
		fig = heatmap_plot(res.score, res.groups, res.units, title='Activation modules')
		return fig

	u = res.unit_index(unit)
	scores = res.score[:, u]
	colors = ['tab:red' if s > 0 else 'tab:blue' if s < 0 else '0.7' for s in scores]

	fig = _figure()
	ax = fig.add_subplot()
	ax.barh(np.arange(len(res.groups)), np.where(np.isfinite(scores), scores, 0.0), color=colors)
	ax.set_yticks(np.arange(len(res.groups)), list(res.groups), fontsize=7)
	ax.axvline(0.0, color='0.3', linewidth=0.8)
	ax.set_xlabel('signed -log10 p')
	states = [STATES[int(s)] for s in res.state[:, u]]
	ax.set_title('Modules in {} ({} active)'.format(unit, sum(s != 'inactive' for s in states)))
	return fig


PLOT_KINDS = {
	'wa': wa_plot,
	'spatial': spatial_plot,
	'boxplot': boxplot,
	'dendrogram': dendrogram_plot,
	'heatmap': heatmap_plot,
	'cluster': cluster_plot,
	'volcano': volcano_plot,
	'network': network_plot,
	'genePair': gene_pair_plot,
	'moduleMap': module_map,
}


def emit_plot(kind, *args, **options):
	"""Draw a plot of the given kind and return its SVG text.

	:param str kind: Key of :data:`.PLOT_KINDS`.
	:param \\*args: Data passed to the plot function.
	:param \\**options: Options passed to the plot function.
	:rtype: str
	"""
	try:
		func = PLOT_KINDS[kind]
	except KeyError:
		raise DomainError('unknown plot kind {!r}'.format(kind)) from None

	return render_svg(func(*args, **options))
