"""Relevance networks, activation modules of gene groups and network scores.

A relevance network links gene pairs whose association over the samples of
one condition is significant. The two-condition variant links pairs whose
correlation differs between conditions, compared on Fisher's Z scale.

Activation modules test, per condition (or per sample), whether a gene group
overlaps the induced or repressed genes more than expected by chance.

Network scores combine the zero-correlation p-values of all edges of a gene
network with Fisher's method, ``S = sum(-2 ln p)`` referred to a chi-squared
distribution with twice the edge count as degrees of freedom. This treats
edges as independent, which genes sharing nodes are not, so the p-value is a
screening score rather than an exact test.
"""

import logging
import math
import warnings

import numpy as np
import pandas as pd

from . import distributions as dist
from .dataclass import dataclass, field, array_field
from .errors import DataError, DomainError, LabelError, ZeroVarianceError
from .parallel import ordered_map
from .stats import pearson, robust_cor, kraskov_mi, fisher_z_compare, adjust_pvalues
from .tables import render_table


__all__ = [
	'COR_KINDS', 'MODULE_MODES', 'STATES', 'RelNet', 'PairFit', 'ModuleResult',
	'NetScore', 'rel_network_b', 'rel_network_m', 'active_mod', 'active_net',
	'gene_pair_data', 'edge_frame', 'module_frame', 'module_score_table',
	'edge_p_values', 'fisher_statistic', 'net_score_frame', 'net_score_table',
]


logger = logging.getLogger(__name__)


COR_KINDS = ('pearson', 'robust', 'mi')
MODULE_MODES = ('byCondition', 'bySample')

#: State codes of :class:`.ModuleResult`.
STATES = {1: 'induced', -1: 'repressed', 0: 'inactive'}

MIN_CONDITION_SAMPLES = 4
MI_PERMUTATIONS = 999
R_CLIP = 1 - 1e-12


@dataclass(stored=True)
class RelNet:
	"""Relevance network over a pool of genes.

	:param tuple gene_ids: Gene identifier of each node.
	:param tuple rows: Dataset row of each node.
	:param tuple conditions: One condition, or conditions A and B.
	:param str cor_kind: Association measure, ``pearson``, ``robust`` or
		``mi``.
	:param numpy.ndarray association: ``genes x genes`` coefficients (MI in
		nats for ``mi``), condition A for two conditions.
	:param numpy.ndarray p_value: Zero-association p-values, or Fisher Z
		comparison p-values for two conditions.
	:param numpy.ndarray edges: ``edges x 2`` node pairs ``i < j`` with
		``p <= cut_pval``.
	:param numpy.ndarray association_b: Coefficients in condition B.
	:param numpy.ndarray delta_z: ``atanh(r_A) - atanh(r_B)``.
	:param numpy.ndarray w: ``genes x samples`` W of the samples used.
	:param tuple sample_conditions: Condition of each ``w`` column.
	"""

	gene_ids = field(tuple)
	rows = field(tuple)
	sample_label = field(str)
	conditions = field(tuple)
	cor_kind = field(str)
	cut_pval = field(float)
	association = array_field(float, 2)
	p_value = array_field(float, 2)
	edges = array_field(np.int64, 2)
	w = array_field(float, 2)
	sample_conditions = field(tuple)
	association_b = array_field(float, 2, optional=True)
	delta_z = array_field(float, 2, optional=True)
	samples = field(tuple, default=())

	@property
	def n_genes(self):
		return len(self.gene_ids)

	@property
	def n_edges(self):
		return self.edges.shape[0]

	@property
	def is_difference(self):
		return len(self.conditions) == 2

	def gene_index(self, gene):
		try:
			return self.gene_ids.index(gene)
		except ValueError:
			raise LabelError('gene {!r} is not in the network pool'.format(gene)) from None


def _condition_columns(ds, sample_label, condition):
	values = ds.sample_sheet.values(sample_label)
	columns = [j for j, v in enumerate(values) if v == condition]

	if len(columns) < MIN_CONDITION_SAMPLES:
		raise DataError('condition {!r} of {!r} has {} samples, need at least {}'.format(
			condition, sample_label, len(columns), MIN_CONDITION_SAMPLES))

	return columns


def _pool(ds, pool, gene_label):
	rows = ds.pool_rows(pool)
	if len(rows) < 2:
		raise DataError('gene pool {!r} resolves to {} genes, need at least 2'.format(pool, len(rows)))

	if gene_label is None:
		gene_label = ds.gene_map.label_names[0]
	names = ds.gene_map.values(gene_label)
	return rows, [names[i] for i in rows]


def _check_constant(W, genes):
	with warnings.catch_warnings():
		warnings.simplefilter('ignore', RuntimeWarning)
		spread = np.nanmax(W, axis=1) - np.nanmin(W, axis=1)
	for gene, s in zip(genes, spread):
		if s == 0:
			raise ZeroVarianceError('gene {!r} is constant over the condition'.format(gene))


def _upper_pairs(n):
	return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _symmetric(n, pairs, values, diagonal):
	"""Matrix from upper-triangle values, mirrored bit for bit."""
	out = np.full((n, n), np.nan)
	for (i, j), v in zip(pairs, values):
		out[i, j] = out[j, i] = v
	np.fill_diagonal(out, diagonal)
	return out


def _complete(x, y):
	ok = np.isfinite(x) & np.isfinite(y)
	return x[ok], y[ok]


def _association(x, y, kind, seed, permutations):
	"""Coefficient and zero-association p-value of one gene pair."""
	x, y = _complete(x, y)

	try:
		if kind == 'pearson':
			est = pearson(x, y)
		elif kind == 'robust':
			est = robust_cor(x, y)
		else:
			return _mi_permutation(x, y, seed, permutations)
	except DataError:
		return np.nan, np.nan

	return est.r, est.p_zero


def _mi_permutation(x, y, seed, permutations):
	if x.size < MIN_CONDITION_SAMPLES:
		return np.nan, np.nan

	observed = kraskov_mi(x, y, seed=seed[0])
	rng = np.random.default_rng(seed)
	count = 0
	for _ in range(permutations):
		if kraskov_mi(x, rng.permutation(y), seed=seed[0]) >= observed:
			count += 1

	return observed, (count + 1) / (permutations + 1)


def _edges(p, pairs, cut):
	kept = [(i, j) for i, j in pairs if p[i, j] <= cut]
	return np.array(kept, dtype=np.int64).reshape(-1, 2)


def rel_network_b(ds, sample_label, condition, pool=None, cor_kind='pearson', cut_pval=0.05,
                  gene_label=None, permutations=MI_PERMUTATIONS, seed=0, threads=1):
	"""Single-condition relevance network.

	Every pair of pool genes is associated over the condition's samples,
	using the samples where both have values. Pearson and robust
	correlations are tested for zero correlation; mutual information by
	``permutations`` seeded permutations (pair ``(i, j)`` uses
	``default_rng([seed, i, j])``). Pairs with too few complete samples get
	no coefficient and no edge.

	:param ds: Normalized dataset.
	:param str sample_label: Sample label holding the condition.
	:param str condition: Level of ``sample_label``.
	:param str pool: Gene group or network name, all good spots if None.
	:param str cor_kind: ``pearson``, ``robust`` or ``mi``.
	:param float cut_pval: Edges are pairs with p at most this.
	:param str gene_label: Gene label used as identifier, the first if None.
	:param int permutations: Permutations of the MI test.
	:param int seed: Master seed of the MI test.
	:param int threads: Worker threads.
	:rtype: .RelNet

	:raises spotflow.errors.ZeroVarianceError: If a gene is constant over the
		condition.
	"""
	if cor_kind not in COR_KINDS:
		raise DomainError('unknown association {!r}; expected one of {}'.format(cor_kind, ', '.join(COR_KINDS)))

	columns = _condition_columns(ds, sample_label, condition)
	rows, genes = _pool(ds, pool, gene_label)
	W = ds.w[np.ix_(rows, columns)]
	_check_constant(W, genes)

	n = len(rows)
	pairs = _upper_pairs(n)

	def run(pair):
		i, j = pair
		return _association(W[i], W[j], cor_kind, [seed, i, j], permutations)

	results = ordered_map(run, pairs, threads=threads)
	diagonal = np.nan if cor_kind == 'mi' else 1.0
	association = _symmetric(n, pairs, [r for r, _ in results], diagonal)
	p = _symmetric(n, pairs, [q for _, q in results], 0.0)

	missing = sum(1 for r, _ in results if np.isnan(r))
	if missing:
		logger.warning('%d of %d gene pairs have too few complete samples', missing, len(pairs))

	edges = _edges(p, pairs, cut_pval)
	logger.info('Relevance network on %r: %d genes, %d edges', condition, n, len(edges))

	return RelNet(
		gene_ids=genes,
		rows=rows,
		sample_label=sample_label,
		conditions=[condition],
		cor_kind=cor_kind,
		cut_pval=cut_pval,
		association=association,
		p_value=p,
		edges=edges,
		w=W,
		sample_conditions=[condition] * len(columns),
		samples=[ds.sample_sheet.file_names[j] for j in columns],
	)


def _pearson_pair(x, y):
	x, y = _complete(x, y)
	if x.size < MIN_CONDITION_SAMPLES:
		return np.nan, x.size
	return pearson(x, y).r, x.size


def rel_network_m(ds, sample_label, condition_a, condition_b, pool=None, cut_pval=0.05,
                  gene_label=None, threads=1):
	"""Two-condition relevance network of correlation differences.

	Pearson correlations in both conditions are compared per pair with
	Fisher's Z transform, coefficients clipped to ``+-(1 - 1e-12)``. Edges
	are pairs whose correlation differs with p at most ``cut_pval``.

	Parameters as in :func:`.rel_network_b`.

	:rtype: .RelNet
	"""
	columns_a = _condition_columns(ds, sample_label, condition_a)
	columns_b = _condition_columns(ds, sample_label, condition_b)
	rows, genes = _pool(ds, pool, gene_label)
	Wa = ds.w[np.ix_(rows, columns_a)]
	Wb = ds.w[np.ix_(rows, columns_b)]
	_check_constant(Wa, genes)
	_check_constant(Wb, genes)

	n = len(rows)
	pairs = _upper_pairs(n)

	def run(pair):
		i, j = pair
		r_a, n_a = _pearson_pair(Wa[i], Wa[j])
		r_b, n_b = _pearson_pair(Wb[i], Wb[j])
		if np.isnan(r_a) or np.isnan(r_b):
			return r_a, r_b, np.nan, np.nan

		r_a_clip = float(np.clip(r_a, -R_CLIP, R_CLIP))
		r_b_clip = float(np.clip(r_b, -R_CLIP, R_CLIP))
		test = fisher_z_compare(r_a_clip, n_a, r_b_clip, n_b)
		return r_a, r_b, math.atanh(r_a_clip) - math.atanh(r_b_clip), test.p_value

	results = ordered_map(run, pairs, threads=threads)
	r_a = _symmetric(n, pairs, [v[0] for v in results], 1.0)
	r_b = _symmetric(n, pairs, [v[1] for v in results], 1.0)
	delta_z = np.full((n, n), np.nan)
	for (i, j), v in zip(pairs, results):
		delta_z[i, j] = v[2]
		delta_z[j, i] = v[2]
	np.fill_diagonal(delta_z, 0.0)
	p = _symmetric(n, pairs, [v[3] for v in results], 1.0)

	edges = _edges(p, pairs, cut_pval)
	logger.info('Difference network %r vs %r: %d genes, %d edges', condition_a, condition_b, n, len(edges))

	return RelNet(
		gene_ids=genes,
		rows=rows,
		sample_label=sample_label,
		conditions=[condition_a, condition_b],
		cor_kind='pearson',
		cut_pval=cut_pval,
		association=r_a,
		association_b=r_b,
		delta_z=delta_z,
		p_value=p,
		edges=edges,
		w=np.hstack([Wa, Wb]),
		sample_conditions=[condition_a] * len(columns_a) + [condition_b] * len(columns_b),
		samples=[ds.sample_sheet.file_names[j] for j in columns_a + columns_b],
	)


def edge_frame(net):
	"""Edges of a relevance network as a data frame.

	:rtype: pandas.DataFrame
	"""
	i, j = net.edges[:, 0], net.edges[:, 1]
	data = {
		'geneA': [net.gene_ids[k] for k in i],
		'geneB': [net.gene_ids[k] for k in j],
	}

	if net.is_difference:
		data['r:' + net.conditions[0]] = net.association[i, j]
		data['r:' + net.conditions[1]] = net.association_b[i, j]
		data['deltaZ'] = net.delta_z[i, j]
	else:
		data['mi' if net.cor_kind == 'mi' else 'r'] = net.association[i, j]

	data['pValue'] = net.p_value[i, j]
	return pd.DataFrame(data)


@dataclass
class PairFit:
	"""Least-squares line of one gene on another within a condition.

	``degenerate`` is set when either gene is constant, in which case ``r``
	is NaN (and ``slope`` too if ``x`` is constant).
	"""

	condition = field(str)
	x = array_field(float, 1)
	y = array_field(float, 1)
	slope = field(float)
	intercept = field(float)
	r = field(float)
	degenerate = field(bool)


def _fit_line(x, y):
	x, y = _complete(x, y)
	dx = x - x.mean()
	dy = y - y.mean()
	sxx, syy, sxy = dx @ dx, dy @ dy, dx @ dy

	if sxx == 0:
		return x, y, np.nan, np.nan, np.nan, True

	slope = sxy / sxx
	intercept = y.mean() - slope * x.mean()
	if syy == 0:
		return x, y, slope, intercept, np.nan, True

	r = float(np.clip(sxy / math.sqrt(sxx * syy), -1, 1))
	return x, y, slope, intercept, r, False


def gene_pair_data(net, gene_x, gene_y):
	"""Sample points and least-squares lines of a gene pair, per condition.

	>>> import numpy as np
	>>> from types import SimpleNamespace
	>>> net = SimpleNamespace(
	... 	gene_ids=('a', 'b'), conditions=('N',), sample_conditions=('N',) * 3,
	... 	w=np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]),
	... 	gene_index=lambda g: ('a', 'b').index(g))
	>>> fit, = gene_pair_data(net, 'a', 'b')
	>>> fit.slope, fit.intercept, fit.r
	(2.0, 0.0, 1.0)

	:param net: Relevance network holding both genes.
	:type net: .RelNet
	:param str gene_x: Gene on the horizontal axis.
	:param str gene_y: Gene on the vertical axis.
	:returns: One :class:`.PairFit` per condition.
	:rtype: list
	"""
	ix = net.gene_index(gene_x)
	iy = net.gene_index(gene_y)
	fits = []

	for condition in net.conditions:
		cols = [c == condition for c in net.sample_conditions]
		x, y, slope, intercept, r, degenerate = _fit_line(net.w[ix, cols], net.w[iy, cols])
		fits.append(PairFit(
			condition=condition, x=x, y=y, slope=slope, intercept=intercept, r=r,
			degenerate=degenerate,
		))

	return fits


@dataclass(stored=True)
class ModuleResult:
	"""Activation state of gene groups per condition or per sample.

	Arrays are ``groups x units``. ``state`` holds the codes of
	:data:`.STATES`; ``p_value`` is the p-value of the reported direction
	(the smaller of the two, induced on ties) and ``score`` is ``-log10 p``
	signed by the state, 0 when inactive.
	"""

	groups = field(tuple)
	units = field(tuple)
	mode = field(str)
	sample_label = field(str)
	cut_exp = field(float)
	cut_phiper = field(float)
	adjust = field(str)
	state = array_field(np.int64, 2)
	p_value = array_field(float, 2)
	p_induced = array_field(float, 2)
	p_repressed = array_field(float, 2)
	score = array_field(float, 2)
	n_induced = array_field(np.int64, 2)
	n_repressed = array_field(np.int64, 2)
	group_size = array_field(np.int64, 2)
	universe_size = array_field(np.int64, 1)

	def state_name(self, group, unit):
		g = self.groups.index(group)
		u = self.units.index(unit)
		return STATES[int(self.state[g, u])]

	def unit_index(self, unit):
		try:
			return self.units.index(unit)
		except ValueError:
			raise LabelError('unknown {} {!r}'.format(
				'condition' if self.mode == 'byCondition' else 'sample', unit)) from None


def _module_units(ds, sample_label, mode):
	if mode == 'byCondition':
		values = ds.sample_sheet.values(sample_label)
		levels = sorted({v for v in values if v != ''})
		if not levels:
			raise LabelError('sample label {!r} has no values'.format(sample_label))
		return levels, [[j for j, v in enumerate(values) if v == level] for level in levels]

	if mode == 'bySample':
		return list(ds.sample_sheet.file_names), [[j] for j in range(ds.n_chips)]

	raise DomainError('unknown module mode {!r}; expected byCondition or bySample'.format(mode))


def active_mod(ds, sample_label=None, cut_exp=1.0, cut_phiper=0.05, mode='byCondition',
               adjust='none', groups=None):
	"""Classify gene groups as induced, repressed or inactive.

	Per unit (condition mean W, or a single sample's W) the universe is the
	good spots with a value, genes at or above ``cut_exp`` are induced and
	at or below ``-cut_exp`` repressed. Each group's overlap with either set
	gets a hypergeometric upper-tail p-value; with ``adjust='BH'`` these are
	adjusted together across groups, units and directions.

	:param ds: Normalized dataset.
	:param str sample_label: Sample label defining conditions; unused for
		``bySample``.
	:param float cut_exp: Expression cutoff, positive.
	:param float cut_phiper: p-value cutoff for a non-inactive state.
	:param str mode: ``byCondition`` or ``bySample``.
	:param str adjust: ``none`` or ``BH``.
	:param groups: Group names, all groups if None.
	:rtype: .ModuleResult

	:raises spotflow.errors.DataError: If a group has no gene with data in
		some unit.
	"""
	if not cut_exp > 0:
		raise DomainError('cut_exp must be positive')
	if adjust not in ('none', 'BH'):
		raise DomainError("adjust must be 'none' or 'BH'")

	if groups is None:
		groups = [g.name for g in ds.gene_groups]
	if not groups:
		raise DataError('dataset has no gene groups')

	units, columns = _module_units(ds, sample_label, mode)
	good = ~np.asarray(ds.bad_spot)
	members = [np.isin(np.arange(ds.n_spots), ds.group_rows(name)) & good for name in groups]

	shape = (len(groups), len(units))
	p_ind = np.ones(shape)
	p_rep = np.ones(shape)
	n_ind = np.zeros(shape, dtype=np.int64)
	n_rep = np.zeros(shape, dtype=np.int64)
	size = np.zeros(shape, dtype=np.int64)
	universe_size = np.zeros(len(units), dtype=np.int64)

	for u, cols in enumerate(columns):
		with warnings.catch_warnings():
			warnings.simplefilter('ignore', RuntimeWarning)
			values = np.nanmean(ds.w[:, cols], axis=1)

		universe = good & np.isfinite(values)
		induced = universe & (values >= cut_exp)
		repressed = universe & (values <= -cut_exp)
		N = int(universe.sum())
		universe_size[u] = N

		for g, member in enumerate(members):
			in_group = member & universe
			K = int(in_group.sum())
			if K == 0:
				raise DataError('gene group {!r} has no genes with data in {!r}'.format(groups[g], units[u]))

			size[g, u] = K
			n_ind[g, u] = int((in_group & induced).sum())
			n_rep[g, u] = int((in_group & repressed).sum())
			p_ind[g, u] = dist.hypergeom_tail(n_ind[g, u], N, int(induced.sum()), K)
			p_rep[g, u] = dist.hypergeom_tail(n_rep[g, u], N, int(repressed.sum()), K)

	if adjust == 'BH':
		both = adjust_pvalues(np.concatenate([p_ind.ravel(), p_rep.ravel()]), 'BH')
		p_ind = both[:p_ind.size].reshape(shape)
		p_rep = both[p_ind.size:].reshape(shape)

	up = p_ind <= p_rep
	p = np.where(up, p_ind, p_rep)
	active = p <= cut_phiper
	state = np.where(active, np.where(up, 1, -1), 0)
	with np.errstate(divide='ignore'):
		score = np.where(active, state * -np.log10(p), 0.0)

	logger.info('Activation modules: %d groups x %d %s, %d active',
	            len(groups), len(units), 'conditions' if mode == 'byCondition' else 'samples',
	            int(active.sum()))

	return ModuleResult(
		groups=groups,
		units=units,
		mode=mode,
		sample_label=sample_label or '',
		cut_exp=cut_exp,
		cut_phiper=cut_phiper,
		adjust=adjust,
		state=state,
		p_value=p,
		p_induced=p_ind,
		p_repressed=p_rep,
		score=score,
		n_induced=n_ind,
		n_repressed=n_rep,
		group_size=size,
		universe_size=universe_size,
	)


def module_frame(res, unit=None):
	"""Module states as a data frame, one row per group.

	:param str unit: Single condition (or sample) to report, all if None.
	:rtype: pandas.DataFrame
	"""
	units = res.units if unit is None else [unit]
	data = {'group': list(res.groups)}

	for name in units:
		u = res.unit_index(name)
		suffix = '' if unit is not None else ':' + name
		data['state' + suffix] = [STATES[int(s)] for s in res.state[:, u]]
		data['score' + suffix] = res.score[:, u]
		data['pValue' + suffix] = res.p_value[:, u]
		if unit is not None:
			data['groupSize'] = res.group_size[:, u]
			data['nInduced'] = res.n_induced[:, u]
			data['nRepressed'] = res.n_repressed[:, u]

	return pd.DataFrame(data)


def module_score_table(res, condition=None, fmt='csv'):
	"""Render module concordance scores and p-values as CSV or HTML.

	:rtype: str
	"""
	title = 'Activation modules' + ('' if condition is None else ' in {}'.format(condition))
	return render_table(module_frame(res, condition), fmt, title=title)


@dataclass(stored=True)
class NetScore:
	"""Fisher-combined edge scores of gene networks per condition.

	Arrays are ``networks x conditions``.

	:param dict excluded: Network name to edges left out for unresolved genes.
	"""

	networks = field(tuple)
	conditions = field(tuple)
	sample_label = field(str)
	statistic = array_field(float, 2)
	edge_count = array_field(np.int64, 2)
	p_value = array_field(float, 2)
	excluded = field(dict, factory=dict)


def _edge_rows(ds, network):
	"""First row of each endpoint; edges with an unresolved endpoint separately."""
	index = ds.gene_map.index(network.label_id)
	good = [i for i in range(ds.n_spots) if not ds.bad_spot[i]]
	good_set = set(good)

	resolved, excluded = [], []
	for a, b in network.edges:
		ra = [i for i in index.get(a, ()) if i in good_set]
		rb = [i for i in index.get(b, ()) if i in good_set]
		if ra and rb:
			resolved.append((ra[0], rb[0]))
		else:
			excluded.append((a, b))
	return resolved, excluded


def edge_p_values(ds, network, columns):
	"""Zero-correlation p-value of each resolved edge over the given columns."""
	resolved, excluded = _edge_rows(ds, network)
	p = []

	for a, b in resolved:
		x, y = _complete(ds.w[a, columns], ds.w[b, columns])
		try:
			p.append(pearson(x, y).p_zero)
		except DataError as exc:
			logger.warning('Edge %r of network %r left out: %s', (a, b), network.name, exc)

	return p, excluded


def fisher_statistic(p_values):
	"""``sum(-2 ln p)`` over p-values.

	>>> round(fisher_statistic([math.exp(-5)]), 12)
	10.0
	"""
	with np.errstate(divide='ignore'):
		return float(np.sum(-2 * np.log(np.asarray(p_values, dtype=float))))


def active_net(ds, sample_label, networks=None):
	"""Score every gene network in every condition.

	:param ds: Normalized dataset.
	:param str sample_label: Sample label defining conditions.
	:param networks: Network names, all networks if None.
	:rtype: .NetScore

	:raises spotflow.errors.DataError: If a network has no scorable edge in
		a condition.
	"""
	if networks is None:
		networks = [n.name for n in ds.gene_networks]
	if not networks:
		raise DataError('dataset has no gene networks')

	values = ds.sample_sheet.values(sample_label)
	conditions = sorted({v for v in values if v != ''})
	columns = [_condition_columns(ds, sample_label, c) for c in conditions]

	shape = (len(networks), len(conditions))
	statistic = np.zeros(shape)
	count = np.zeros(shape, dtype=np.int64)
	p = np.ones(shape)
	excluded = dict()

	for g, name in enumerate(networks):
		network = ds.gene_network(name)

		for c, cols in enumerate(columns):
			edge_p, skipped = edge_p_values(ds, network, cols)
			if skipped:
				excluded[name] = skipped
			if not edge_p:
				raise DataError('network {!r} has no scorable edges in {!r}'.format(name, conditions[c]))

			m = len(edge_p)
			statistic[g, c] = fisher_statistic(edge_p)
			count[g, c] = m
			p[g, c] = dist.chi2_sf(statistic[g, c], 2 * m)

	for name, edges in excluded.items():
		logger.warning('Network %r: %d edges with unresolved genes excluded', name, len(edges))

	return NetScore(
		networks=networks,
		conditions=conditions,
		sample_label=sample_label,
		statistic=statistic,
		edge_count=count,
		p_value=p,
		excluded={k: [list(e) for e in v] for k, v in excluded.items()},
	)


def net_score_frame(res):
	"""Network scores as a long data frame, one row per network and condition.

	:rtype: pandas.DataFrame
	"""
	rows = [
		(net, cond, res.edge_count[g, c], res.statistic[g, c], res.p_value[g, c])
		for g, net in enumerate(res.networks)
		for c, cond in enumerate(res.conditions)
	]
	return pd.DataFrame(rows, columns=['network', 'condition', 'edges', 'statistic', 'pValue'])


def net_score_table(res, fmt='csv'):
	"""Render network scores as CSV or HTML.

	:rtype: str
	"""
	return render_table(net_score_frame(res), fmt, title='Network scores')
