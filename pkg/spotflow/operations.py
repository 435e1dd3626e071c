"""Registry of the pipeline operations that are recorded in provenance graphs.

Each :class:`.Operation` knows its parameters (:class:`.Option`), which
stored types it takes as input and how to compute its output. The command
line interface builds its subcommands from this registry and :func:`.replay`
re-runs recorded graphs with it, so both always agree on what an operation
and its parameters mean.

Parameters are recorded with every declared option filled in, defaults
included. Worker thread counts are never recorded; results do not depend on
them.
"""

import logging
import shlex
from pathlib import Path

from .classify import CLASSIFY_METHODS, PRERANK_METHODS, exhaustive_search, search_and_choose
from .cluster import ALGORITHMS, DISTANCE_KINDS, LINKAGES, TOPOLOGIES, cluster_de, cluster_dataset
from .config import read_config
from .container import object_hash, save_container
from .dataclass import dataclass, field
from .diffexpr import DE_TESTS, DEResult, de_genes_two_groups, design_anova, fit_anova
from .errors import DataError, ProvenanceError, SpotflowError
from .ingest import (
	RawDataset, load_dataset, read_gene_group_file, read_network_file, add_gene_groups,
	add_network, mark_bad_spots, select_spots,
)
from .netmod import COR_KINDS, MI_PERMUTATIONS, MODULE_MODES, rel_network_b, rel_network_m, active_mod, active_net
from .normalize import (
	BKG_METHODS, LOESS_SCOPES, SCALE_METHODS, SUMMARY_FUNCS, NormalizedDataset, compute_wa,
	normalize_loess, normalize_repeated_loess, normalize_scale, summarize_replicates,
)
from .provenance import ProvenanceGraph, add_file, file_hash, graph_hash, record
from .stats import ADJUST_METHODS


__all__ = [
	'Option', 'Operation', 'OPERATIONS', 'register_operation', 'get_operation',
	'run_operation', 'load_files', 'run_load', 'NodeCheck', 'ReplayReport', 'replay',
	'replay_script',
]


logger = logging.getLogger(__name__)


@dataclass(json=False)
class Option:
	"""A parameter of an operation.

	:param str name: Parameter name, as recorded in provenance.
	:param value_type: ``int``, ``float``, ``str`` or ``bool`` (a flag).
	:param default: Default value.
	:param tuple choices: Allowed values.
	:param bool multiple: Parameter is a list of values.
	:param bool required: Parameter must be given.
	:param str help: Help text.
	"""

	name = field(str)
	value_type = field(type, default=str)
	default = field(default=None, validate_type=False, convert_type=False)
	choices = field(tuple, optional=True)
	multiple = field(bool, default=False)
	required = field(bool, default=False)
	help = field(str, default='')

	@property
	def flag(self):
		"""Command line flag, ``--gene-label`` for ``gene_label``."""
		return '--' + self.name.replace('_', '-')

	def cli_args(self, value):
		"""Command line arguments which set the parameter to a value.

		>>> Option('span', float, 0.4).cli_args(0.25)
		['--span', '0.25']
		>>> Option('pooled', bool, False).cli_args(False)
		[]
		"""
		if value is None:
			return []
		if self.value_type is bool:
			return [self.flag] if value else []
		if self.multiple:
			return [self.flag] + [str(v) for v in value] if value else []
		return [self.flag, str(value)]


@dataclass(json=False)
class Operation:
	"""A recordable pipeline operation.

	:param str name: Operation (and subcommand) name.
	:param func: Called as ``func(obj, params, threads)`` with the input
		object, or with the list of input paths for operations reading files.
	:param tuple options: :class:`.Option` of each parameter.
	:param tuple input_types: Accepted input record types, empty for
		operations reading files.
	:param str help: One line description.
	"""

	name = field(str)
	func = field(validate_type=False, convert_type=False)
	options = field(tuple, default=())
	input_types = field(tuple, default=())
	help = field(str, default='')

	@property
	def reads_files(self):
		return not self.input_types

	def option(self, name):
		for opt in self.options:
			if opt.name == name:
				return opt
		raise KeyError(name)

	def complete_params(self, params):
		"""Fill in defaults and check the parameter names.

		:raises spotflow.errors.ProvenanceError: On unknown parameters.
		"""
		names = {opt.name for opt in self.options}
		unknown = sorted(set(params) - names)
		if unknown:
			raise ProvenanceError('unknown parameters for {}: {}'.format(self.name, ', '.join(unknown)))

		out = dict()
		for opt in self.options:
			value = params.get(opt.name, opt.default)
			if opt.multiple and value is not None:
				value = list(value)
			if opt.required and value is None:
				raise DataError('{} needs {}'.format(self.name, opt.flag))
			out[opt.name] = value
		return out

	def check_input(self, obj):
		if not isinstance(obj, self.input_types):
			raise DataError('{} takes {}, got {}'.format(
				self.name, ' or '.join(t.__name__ for t in self.input_types), type(obj).__name__))


OPERATIONS = dict()


def register_operation(name, *options, input_types=(), help=''):
	"""Decorator which registers a function as an operation."""
	def decorator(func):
		if name in OPERATIONS:
			raise ValueError('operation {!r} already registered'.format(name))
		OPERATIONS[name] = Operation(name=name, func=func, options=options, input_types=input_types, help=help)
		return func
	return decorator


def get_operation(name):
	"""Get a registered operation.

	:raises spotflow.errors.ProvenanceError: If there is none by that name.
	"""
	try:
		return OPERATIONS[name]
	except KeyError:
		raise ProvenanceError('unknown operation {!r}; this version knows {}'.format(name, ', '.join(OPERATIONS))) from None


_SEED = Option('seed', int, 0, help='master random seed')
_ADJUST = Option('adjust', str, 'BH', choices=tuple(ADJUST_METHODS), help='p-value adjustment')
_GENE_LABEL = Option('gene_label', str, help='gene label used as gene identifier')
_LABEL = Option('label', str, required=True, help='sample label defining the conditions')


# Load

@register_operation(
	'load',
	Option('groups', str, (), multiple=True, help='gene group names, one file each'),
	Option('networks', str, (), multiple=True, help='gene network names, one file each'),
	Option('group_label', str, help='gene label group and network files refer to, the first if not given'),
	help='load a dataset described by a configuration file',
)
def _load(paths, params, threads):
	n_groups, n_networks = len(params['groups']), len(params['networks'])
	if len(paths) < 1 + n_groups + n_networks:
		raise ProvenanceError('load needs a configuration file and one file per group and network')

	ds = load_dataset(read_config(paths[0]), threads=threads)
	label_id = params['group_label'] or ds.gene_map.label_names[0]

	group_paths = paths[1:1 + n_groups]
	for name, path in zip(params['groups'], group_paths):
		ds = add_gene_groups(ds, name, read_gene_group_file(path), label_id)

	network_paths = paths[1 + n_groups:1 + n_groups + n_networks]
	for name, path in zip(params['networks'], network_paths):
		ds = add_network(ds, name, read_network_file(path), label_id)

	return ds


def load_files(config_path, ds):
	"""Data files a loaded dataset was read from: sample sheet, gene map, tables."""
	cfg = read_config(config_path)
	return [cfg.sample_path, cfg.gene_map_path] + [cfg.quant_path(f) for f in ds.sample_sheet.file_names]


def run_load(config, groups=(), networks=(), group_label=None, graph=None, threads=1):
	"""Load a dataset and record the load in a provenance graph.

	:param config: Configuration file path.
	:param groups: ``(name, path)`` pairs of gene group files.
	:param networks: ``(name, path)`` pairs of gene network files.
	:param str group_label: Gene label group and network members refer to.
	:returns: ``(dataset, graph, output id)``.
	"""
	graph = ProvenanceGraph() if graph is None else graph
	groups, networks = list(groups), list(networks)
	params = dict(groups=[n for n, _ in groups], networks=[n for n, _ in networks], group_label=group_label)
	paths = [str(config)] + [str(p) for _, p in groups] + [str(p) for _, p in networks]

	op = get_operation('load')
	params = op.complete_params(params)
	ds = op.func(paths, params, threads)

	input_ids = []
	for path in paths + [str(p) for p in load_files(config, ds)]:
		graph, node_id = add_file(graph, path)
		input_ids.append(node_id)

	graph, out_id = record(graph, 'load', params, input_ids, type(ds).__name__, object_hash(ds))
	return ds, graph, out_id


@register_operation(
	'select',
	Option('sig_noise', float, 0.0, help='minimum foreground to background ratio'),
	Option('rm_flags', int, (), multiple=True, help='flag values to exclude'),
	Option('remove_names', str, (), multiple=True, help='gene label values to exclude'),
	Option('label_id', str, help='gene label --remove-names refers to'),
	Option('bad_spots', int, (), multiple=True, help='0-based spots to mark bad on every chip'),
	input_types=(RawDataset,),
	help='choose the spots used for normalization',
)
def _select(ds, params, threads):
	ds = mark_bad_spots(ds, params['bad_spots'])
	return select_spots(ds, params['sig_noise'], params['rm_flags'], params['remove_names'], params['label_id'])


# Normalization

@register_operation(
	'normalize',
	Option('bkg', str, 'none', choices=BKG_METHODS, help='background correction of raw datasets'),
	Option('loess', str, 'loess', choices=('none', 'loess', 'repeatedLoess'), help='intensity-dependent correction'),
	Option('span', float, 0.4, help='loess span'),
	Option('scope', str, 'global', choices=LOESS_SCOPES, help='loess per chip or per print-tip block'),
	Option('iterations', int, 2, help='loess robustness iterations'),
	Option('repeats', int, 30, help='repeated loess refits'),
	Option('fraction', float, 0.7, help='share of spots per repeated loess refit'),
	Option('alpha', float, 0.05, help='repeated loess confidence level is 1 - alpha'),
	Option('scale', str, 'none', choices=('none',) + SCALE_METHODS, help='scale normalization'),
	_SEED,
	input_types=(RawDataset, NormalizedDataset),
	help='compute and normalize log-ratios',
)
def _normalize(ds, params, threads):
	if isinstance(ds, RawDataset):
		ds = compute_wa(ds, params['bkg'])

	loess_args = dict(span=params['span'], scope=params['scope'], iterations=params['iterations'])
	if params['loess'] == 'loess':
		ds = normalize_loess(ds, **loess_args)
	elif params['loess'] == 'repeatedLoess':
		ds = normalize_repeated_loess(
			ds, repeats=params['repeats'], fraction=params['fraction'], alpha=params['alpha'],
			seed=params['seed'], threads=threads, **loess_args
		)

	if params['scale'] != 'none':
		ds = normalize_scale(ds, params['scale'])

	return ds


@register_operation(
	'summarize',
	Option('gene_label', str, help='gene label identifying replicate spots'),
	Option('sample_label', str, help='sample label identifying replicate chips'),
	Option('spots', str, 'mean', choices=SUMMARY_FUNCS, help='summary of replicate spots'),
	Option('samples', str, 'mean', choices=SUMMARY_FUNCS, help='summary of replicate chips'),
	Option('keep_empty', bool, False, help='keep spots with an empty gene label'),
	Option('rm_bad', bool, False, help='drop bad spots first'),
	input_types=(NormalizedDataset,),
	help='collapse replicate spots and chips',
)
def _summarize(ds, params, threads):
	return summarize_replicates(
		ds, gene_label=params['gene_label'], sample_label=params['sample_label'],
		func_spots=params['spots'], func_samples=params['samples'],
		keep_empty=params['keep_empty'], rm_bad=params['rm_bad'],
	)


# Analyses

@register_operation(
	'de',
	_LABEL,
	Option('test', str, 't', choices=DE_TESTS, help='test statistic'),
	_ADJUST,
	Option('boot_b', int, 1000, help='resamples of the bootstrap t test'),
	Option('pooled', bool, False, help='equal-variance t statistics'),
	_GENE_LABEL,
	_SEED,
	input_types=(NormalizedDataset,),
	help='differential expression between two conditions',
)
def _de(ds, params, threads):
	return de_genes_two_groups(
		ds, params['label'], test=params['test'], adjust=params['adjust'], boot_b=params['boot_b'],
		seed=params['seed'], gene_label=params['gene_label'], pooled=params['pooled'], threads=threads,
	)


@register_operation(
	'anova',
	Option('factors', str, multiple=True, required=True, help='sample labels used as factors'),
	Option('contrasts', str, 'pairwise', choices=('pairwise', 'baseline'), help='contrasts reported'),
	Option('f_test', bool, False, help='report the overall F test instead of contrasts'),
	_ADJUST,
	_GENE_LABEL,
	input_types=(NormalizedDataset,),
	help='gene-wise ANOVA over one or more factors',
)
def _anova(ds, params, threads):
	design = design_anova(ds, params['factors'], params['contrasts'])
	return fit_anova(ds, design, return_f=params['f_test'], adjust=params['adjust'], gene_label=params['gene_label'])


_DE_ONLY = ('n_de', 'p_cut', 'adjust', 'family')
_DATASET_ONLY = ('group', 'remove_names', 'label_id')


@register_operation(
	'cluster',
	Option('alg', str, 'hier', choices=ALGORITHMS, help='clustering algorithm'),
	Option('on', str, 'genes', choices=('genes', 'samples'), help='what to cluster'),
	Option('n_de', int, help='cluster this many top DE genes'),
	Option('p_cut', float, help='cluster DE genes with adjusted p at most this'),
	Option('adjust', str, choices=tuple(ADJUST_METHODS), help='re-adjust DE p-values first'),
	Option('family', str, help='DE statistic family to select by'),
	Option('group', str, help='cluster the members of this gene group'),
	Option('remove_names', str, (), multiple=True, help='gene label values to leave out'),
	Option('label_id', str, help='gene label for item names and --remove-names'),
	Option('bkg', str, 'none', choices=BKG_METHODS, help='background correction of raw datasets'),
	Option('distance', str, choices=DISTANCE_KINDS, help='distance of hierarchical clustering'),
	Option('linkage', str, 'average', choices=LINKAGES, help='linkage of hierarchical clustering'),
	Option('k', int, 2, help='number of k-means clusters'),
	Option('restarts', int, 10, help='k-means restarts'),
	Option('xdim', int, 2, help='SOM grid columns'),
	Option('ydim', int, 1, help='SOM grid rows'),
	Option('topology', str, 'rect', choices=TOPOLOGIES, help='SOM grid topology'),
	Option('epochs', int, help='SOM training epochs'),
	Option('alpha0', float, 0.05, help='initial SOM learning rate'),
	Option('radius0', float, help='initial SOM neighborhood radius'),
	_SEED,
	input_types=(DEResult, NormalizedDataset, RawDataset),
	help='cluster genes or samples of a DE result or dataset',
)
def _cluster(obj, params, threads):
	alg_params = {
		name: params[name]
		for name in ('distance', 'linkage', 'k', 'restarts', 'xdim', 'ydim', 'topology', 'epochs',
		             'alpha0', 'radius0', 'seed')
	}
	alg_params['threads'] = threads

	if isinstance(obj, DEResult):
		given = [n for n in _DATASET_ONLY if params[n]]
		if given:
			raise DataError('{} only apply to datasets'.format(', '.join(given)))
		return cluster_de(
			obj, params['alg'], n_de=params['n_de'], p_cut=params['p_cut'], on=params['on'],
			adjust=params['adjust'], family=params['family'], **alg_params
		)

	given = [n for n in _DE_ONLY if params[n] is not None]
	if given:
		raise DataError('{} only apply to DE results'.format(', '.join(given)))
	return cluster_dataset(
		obj, params['alg'], on=params['on'], group=params['group'], remove_names=params['remove_names'],
		label_id=params['label_id'], bkg=params['bkg'], **alg_params
	)


@register_operation(
	'classify',
	_LABEL,
	Option('method', str, 'lda', choices=CLASSIFY_METHODS, help='classifier'),
	Option('n_genes', int, 3, choices=(2, 3, 4), help='genes per classifier'),
	Option('search', str, 'exhaustive', choices=('exhaustive', 'snc'), help='exhaustive or search-and-choose'),
	Option('group', str, help='gene group or network to search, all good spots if not given'),
	Option('pool_size', int, 30, help='search-and-choose pool size'),
	Option('prerank', str, 'cv', choices=PRERANK_METHODS, help='search-and-choose single gene ranking'),
	Option('top', int, 50, help='best subsets kept'),
	Option('k', int, 3, help='neighbors of the knn classifier'),
	_GENE_LABEL,
	input_types=(NormalizedDataset,),
	help='search gene subsets for the best cross-validated classifiers',
)
def _classify(ds, params, threads):
	common = dict(
		method=params['method'], n_genes=params['n_genes'], pool=params['group'], top_k=params['top'],
		k=params['k'], gene_label=params['gene_label'], threads=threads,
	)
	if params['search'] == 'exhaustive':
		return exhaustive_search(ds, params['label'], **common)
	return search_and_choose(ds, params['label'], pool_size=params['pool_size'], prerank=params['prerank'], **common)


@register_operation(
	'relnet',
	_LABEL,
	Option('condition', str, required=True, help='condition whose samples are used'),
	Option('group', str, help='gene group or network giving the genes'),
	Option('cor', str, 'pearson', choices=COR_KINDS, help='association measure'),
	Option('cut', float, 0.05, help='p-value cutoff for edges'),
	Option('permutations', int, MI_PERMUTATIONS, help='permutations of the mutual information test'),
	_GENE_LABEL,
	_SEED,
	input_types=(NormalizedDataset,),
	help='relevance network of one condition',
)
def _relnet(ds, params, threads):
	return rel_network_b(
		ds, params['label'], params['condition'], pool=params['group'], cor_kind=params['cor'],
		cut_pval=params['cut'], gene_label=params['gene_label'], permutations=params['permutations'],
		seed=params['seed'], threads=threads,
	)


@register_operation(
	'relnet-diff',
	_LABEL,
	Option('a', str, required=True, help='first condition'),
	Option('b', str, required=True, help='second condition'),
	Option('group', str, help='gene group or network giving the genes'),
	Option('cut', float, 0.05, help='p-value cutoff for edges'),
	_GENE_LABEL,
	input_types=(NormalizedDataset,),
	help='network of correlations differing between two conditions',
)
def _relnet_diff(ds, params, threads):
	return rel_network_m(
		ds, params['label'], params['a'], params['b'], pool=params['group'], cut_pval=params['cut'],
		gene_label=params['gene_label'], threads=threads,
	)


@register_operation(
	'modules',
	Option('label', str, help='sample label defining the conditions'),
	Option('cut_exp', float, 1.0, help='|W| at least this counts as expressed'),
	Option('cut_p', float, 0.05, help='hypergeometric p-value cutoff'),
	Option('mode', str, 'byCondition', choices=MODULE_MODES, help='score conditions or single samples'),
	Option('adjust', str, 'none', choices=('none', 'BH'), help='p-value adjustment'),
	Option('groups', str, multiple=True, help='gene groups to score, all if not given'),
	input_types=(NormalizedDataset,),
	help='induced and repressed gene groups',
)
def _modules(ds, params, threads):
	return active_mod(
		ds, params['label'], cut_exp=params['cut_exp'], cut_phiper=params['cut_p'], mode=params['mode'],
		adjust=params['adjust'], groups=params['groups'],
	)


@register_operation(
	'netscore',
	_LABEL,
	Option('networks', str, multiple=True, help='gene networks to score, all if not given'),
	input_types=(NormalizedDataset,),
	help='combined edge significance of gene networks per condition',
)
def _netscore(ds, params, threads):
	return active_net(ds, params['label'], networks=params['networks'])


def run_operation(name, obj, params, graph, input_id, threads=1):
	"""Run a registered operation on a stored object and record it.

	:param str name: Operation name.
	:param obj: Input record.
	:param dict params: Parameters, missing ones take their defaults.
	:param graph: Provenance graph of ``obj``.
	:type graph: spotflow.provenance.ProvenanceGraph
	:param str input_id: Node of ``obj`` in ``graph``.
	:param int threads: Worker threads.
	:returns: ``(output, graph, output id)``.
	"""
	op = get_operation(name)
	if op.reads_files:
		raise ProvenanceError('{} reads files, not objects'.format(name))

	op.check_input(obj)
	params = op.complete_params(params)
	out = op.func(obj, params, threads)

	graph, out_id = record(graph, name, params, [input_id], type(out).__name__, object_hash(out))
	logger.info('%s -> %s (%s)', name, out_id, type(out).__name__)
	return out, graph, out_id


# Replay

@dataclass(json=False)
class NodeCheck:
	"""Outcome of re-running one recorded operation.

	:param str op_id: Operation node.
	:param str op_name: Operation name.
	:param str output_id: Output object node.
	:param str recorded_hash: Output hash in the graph.
	:param str replayed_hash: Hash of the recomputed output, None if it failed.
	:param tuple changed_inputs: Input files whose content changed.
	:param bool downstream: Follows a divergent node.
	:param str message: Error message of a failed operation.
	"""

	op_id = field(str)
	op_name = field(str)
	output_id = field(str)
	recorded_hash = field(str)
	replayed_hash = field(str, optional=True)
	changed_inputs = field(tuple, default=())
	downstream = field(bool, default=False)
	message = field(str, default='')

	@property
	def match(self):
		return self.replayed_hash == self.recorded_hash

	@property
	def status(self):
		if self.replayed_hash is None:
			return 'failed'
		return 'match' if self.match else 'mismatch'


@dataclass(json=False)
class ReplayReport:
	"""Result of :func:`.replay`.

	:param tuple checks: :class:`.NodeCheck` per operation in execution order.
	:param str script: Equivalent command line script.
	:param str first_divergence: First operation whose output differs.
	:param str graph_hash: Hash of the replayed graph, see
		:func:`spotflow.provenance.graph_hash`.
	"""

	checks = field(tuple, default=())
	script = field(str, default='')
	first_divergence = field(str, optional=True)
	graph_hash = field(str, default='')

	@property
	def ok(self):
		return all(c.match for c in self.checks)

	def lines(self):
		"""Human readable summary, one line per operation."""
		out = []
		for c in self.checks:
			line = '{} {} -> {}: {}'.format(c.op_id, c.op_name, c.output_id, c.status)
			if c.downstream:
				line += ' (downstream of {})'.format(self.first_divergence)
			if c.changed_inputs:
				line += ' (changed inputs: {})'.format(', '.join(c.changed_inputs))
			if c.message:
				line += ' ({})'.format(c.message)
			out.append(line)
		return out


def _check_known(graph):
	for node in graph.operations:
		op = get_operation(node.name)
		op.complete_params(node.param_dict)


def replay(graph, base_dir='.', strict=False, keep_intermediates=None, threads=1):
	"""Re-run a provenance graph and compare every output hash.

	Operations run in topological order with their recorded parameters, on
	the recomputed outputs of their predecessors. The first operation whose
	output hash differs is the divergence; every operation depending on it
	is flagged as downstream.

	:param graph: Graph to replay.
	:type graph: spotflow.provenance.ProvenanceGraph
	:param base_dir: Directory relative file paths are resolved against.
	:param bool strict: Raise on the first mismatch instead of reporting it.
	:param keep_intermediates: Directory to write every recomputed object to,
		as ``<node id>.mges``.
	:param int threads: Worker threads.
	:rtype: .ReplayReport

	:raises spotflow.errors.ProvenanceError: If the graph holds an unknown
		operation or parameter, or with ``strict`` on a mismatch.
	"""
	_check_known(graph)
	order = graph.topological_order()

	objects = dict()
	checks = []
	first = None
	flagged = set()
	replayed = ProvenanceGraph()

	if keep_intermediates is not None:
		Path(keep_intermediates).mkdir(parents=True, exist_ok=True)

	for node_id in order:
		node = graph.node(node_id)

		if node.kind == 'file':
			path = Path(base_dir, node.name)
			replayed, _ = add_file(replayed, node.name, hash=file_hash(path) if path.is_file() else node.hash)
			continue
		if node.kind != 'operation':
			continue

		op = get_operation(node.name)
		params = op.complete_params(node.param_dict)
		changed = []
		for input_id, recorded in zip(node.inputs, node.input_hashes):
			source = graph.node(input_id)
			if source.kind == 'file':
				path = Path(base_dir, source.name)
				if not path.is_file() or file_hash(path) != recorded:
					changed.append(source.name)

		replayed_hash = None
		message = ''
		out = None
		try:
			if op.reads_files:
				paths = [str(Path(base_dir, graph.node(i).name)) for i in node.inputs]
				out = op.func(paths, params, threads)
			elif node.inputs[0] not in objects:
				message = 'input {} was not replayed'.format(node.inputs[0])
			else:
				obj = objects[node.inputs[0]]
				op.check_input(obj)
				out = op.func(obj, params, threads)
		except (SpotflowError, ValueError, OSError) as exc:
			message = str(exc)

		if out is not None:
			objects[node.output] = out
			replayed_hash = object_hash(out)
			replayed, _ = record(replayed, node.name, params, node.inputs, type(out).__name__, replayed_hash,
			                     output_id=node.output)
			if keep_intermediates is not None:
				save_container(Path(keep_intermediates, node.output + '.mges'), out, replayed)

		check = NodeCheck(
			op_id=node.id,
			op_name=node.name,
			output_id=node.output,
			recorded_hash=graph.node(node.output).hash,
			replayed_hash=replayed_hash,
			changed_inputs=changed,
			downstream=node.id in flagged,
			message=message,
		)
		checks.append(check)

		if not check.match:
			logger.warning('Replay of %s (%s) diverges: %s', node.id, node.name, check.status)
			if strict:
				raise ProvenanceError('replay of {} ({}) diverges from the recorded output'.format(node.id, node.name))
			if first is None:
				first = node.id
				flagged = {d for d in graph.descendants(node.id) if graph.node(d).kind == 'operation'}

	return ReplayReport(
		checks=checks,
		script=replay_script(graph),
		first_divergence=first,
		graph_hash=graph_hash(replayed),
	)


def _container_name(node_id):
	return node_id + '.mges'


def replay_script(graph):
	"""Command line script which re-runs a provenance graph.

	Every object is written to ``<node id>.mges``; the last command writes the
	final object.

	:rtype: str
	"""
	lines = ['#!/bin/sh', 'set -e']

	for node_id in graph.topological_order():
		node = graph.node(node_id)
		if node.kind != 'operation':
			continue

		op = get_operation(node.name)
		params = op.complete_params(node.param_dict)
		args = ['spotflow', node.name]

		if op.reads_files:
			names = [graph.node(i).name for i in node.inputs]
			args += ['--config', names[0]]
			n_groups = len(params['groups'])
			for name, path in zip(params['groups'], names[1:1 + n_groups]):
				args += ['--group', '{}={}'.format(name, path)]
			for name, path in zip(params['networks'], names[1 + n_groups:]):
				args += ['--network', '{}={}'.format(name, path)]
			args += op.option('group_label').cli_args(params['group_label'])
		else:
			args += ['--in', _container_name(node.inputs[0])]
			for opt in op.options:
				args += opt.cli_args(params[opt.name])

		args += ['--out', _container_name(node.output)]
		lines.append(' '.join(shlex.quote(a) for a in args))

	return '\n'.join(lines) + '\n'
