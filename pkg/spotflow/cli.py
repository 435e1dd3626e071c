"""Command line interface.

Every subcommand which computes a new object reads its input container
(``--in``), appends the operation to the input's provenance graph and writes
the result with the extended graph to ``--out``. Tables (``--csv``,
``--html``) and figures (``--svg`` and friends) are side products and are
not recorded.

Exit status is 0 on success, 1 for usage errors and 2 for any other error.
"""

import argparse
import logging
import sys
from pathlib import Path

from .cluster import cluster_dataset, cluster_table
from .classify import class_table
from .container import MAGIC, load_container, object_hash, save_container
from .diffexpr import de_table
from .errors import DataError, SpotflowError, UsageError
from .json import canonical_dumps, canonical_loads
from .netmod import edge_frame, module_score_table, net_score_table
from .normalize import BKG_METHODS, NormalizedDataset, compute_wa
from .operations import OPERATIONS, replay, run_load, run_operation
from .plots import emit_plot, wa_plot, spatial_plot, boxplot, dendrogram_plot, render_svg
from .provenance import ProvenanceGraph, add_file
from .synthetic import write_synthetic
from .tables import render_table
from .version import __version__


__all__ = ['ArgumentParser', 'build_parser', 'main']


logger = logging.getLogger(__name__)


LOG_FORMAT = '%(levelname)s %(name)s: %(message)s'


class ArgumentParser(argparse.ArgumentParser):
	"""Argument parser which raises :exc:`spotflow.errors.UsageError` instead of exiting."""

	def error(self, message):
		raise UsageError('{}\n{}'.format(message, self.format_usage().rstrip()))


def _name_file(text):
	name, sep, path = text.partition('=')
	if not sep or not name or not path:
		raise argparse.ArgumentTypeError('expected NAME=FILE, got {!r}'.format(text))
	return name, path


def _common_parser():
	common = ArgumentParser(add_help=False)
	common.add_argument('--threads', type=int, default=1, help='worker threads (results do not depend on it)')
	common.add_argument('-v', '--verbose', action='count', default=0, help='-v for progress, -vv for debugging')
	return common


def _add_option(parser, opt):
	kwargs = dict(dest=opt.name, default=None, help=opt.help)

	if opt.value_type is bool:
		parser.add_argument(opt.flag, action='store_true', **kwargs)
		return

	kwargs.update(type=opt.value_type, metavar=opt.name.upper())
	if opt.choices is not None:
		kwargs.update(choices=opt.choices, metavar=None)
	if opt.multiple:
		kwargs['nargs'] = '+'

	parser.add_argument(opt.flag, **kwargs)


def _add_tables(parser):
	parser.add_argument('--csv', metavar='PATH', help='write the result table as CSV')
	parser.add_argument('--html', metavar='PATH', help='write the result table as HTML')


# Artifact options per operation, on top of the tables
_ARTIFACTS = {
	'normalize': ['svg', 'chip'],
	'de': ['tables', 'svg', 'rows'],
	'anova': ['tables', 'svg', 'rows'],
	'cluster': ['tables', 'svg', 'cut'],
	'classify': ['tables', 'rows'],
	'relnet': ['tables', 'svg', 'heatmap', 'pair'],
	'relnet-diff': ['tables', 'svg', 'heatmap', 'pair'],
	'modules': ['tables', 'svg'],
	'netscore': ['tables'],
}


def _add_artifacts(parser, kinds):
	if 'tables' in kinds:
		_add_tables(parser)
	if 'svg' in kinds:
		parser.add_argument('--svg', metavar='PATH', help='write the figure of the result')
	if 'chip' in kinds:
		parser.add_argument('--chip', type=int, default=0, help='chip of the WA plot, 0-based')
	if 'rows' in kinds:
		parser.add_argument('--rows', type=int, metavar='N', help='table rows, all if not given')
	if 'cut' in kinds:
		parser.add_argument('--cut', type=int, metavar='K', help='cut a dendrogram into K clusters in the table')
	if 'heatmap' in kinds:
		parser.add_argument('--heatmap', metavar='PATH', help='write the association matrix image')
	if 'pair' in kinds:
		parser.add_argument('--pair', nargs=2, metavar=('GENE_X', 'GENE_Y'), help='genes of the gene pair plot')
		parser.add_argument('--pair-svg', metavar='PATH', help='write the gene pair plot')


def build_parser():
	"""Build the argument parser with one subcommand per operation.

	:rtype: .ArgumentParser
	"""
	common = _common_parser()
	parser = ArgumentParser(prog='spotflow', description='Two-channel microarray analysis with replayable provenance.')
	parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
	sub = parser.add_subparsers(dest='command', metavar='COMMAND', parser_class=ArgumentParser)
	sub.required = True

	load_op = OPERATIONS['load']
	p = sub.add_parser('load', parents=[common], help=load_op.help)
	p.add_argument('--config', required=True, help='load configuration file')
	p.add_argument('--group', action='append', type=_name_file, default=[], metavar='NAME=FILE', help='gene group file')
	p.add_argument('--network', action='append', type=_name_file, default=[], metavar='NAME=FILE', help='gene network file')
	_add_option(p, load_op.option('group_label'))
	p.add_argument('--out', required=True, help='output container')
	p.set_defaults(handler=_cmd_load)

	for name, op in OPERATIONS.items():
		if op.reads_files:
			continue
		p = sub.add_parser(name, parents=[common], help=op.help)
		p.add_argument('--in', dest='input', required=True, help='input container')
		p.add_argument('--out', required=True, help='output container')
		for opt in op.options:
			_add_option(p, opt)
		_add_artifacts(p, _ARTIFACTS.get(name, ()))
		p.set_defaults(handler=_cmd_operation, operation=name)

	p = sub.add_parser('qc', parents=[common], help='quality control figures of a dataset')
	p.add_argument('--in', dest='input', required=True, help='input container')
	p.add_argument('--svg-dir', required=True, help='directory for the figures')
	p.add_argument('--chips', type=int, nargs='+', help='0-based chips to draw, all if not given')
	p.add_argument('--bkg', choices=BKG_METHODS, default='none', help='background correction of raw datasets')
	p.add_argument('--span', type=float, default=0.4, help='span of the lowess overlay')
	p.add_argument('--hier', action='store_true', help='also cluster the chips hierarchically')
	p.add_argument('--boxplot', metavar='GENE', help='boxplot of this gene by --label')
	p.add_argument('--label', help='sample label of the boxplot')
	p.set_defaults(handler=_cmd_qc)

	p = sub.add_parser('replay', parents=[common], help='re-run a recorded pipeline and verify every hash')
	p.add_argument('source', help='container, or provenance graph as JSON')
	p.add_argument('--base-dir', default='.', help='directory relative input paths are resolved against')
	p.add_argument('--strict', action='store_true', help='fail on the first hash mismatch')
	p.add_argument('--keep-intermediates', metavar='DIR', help='write every recomputed object to DIR')
	p.add_argument('--script', metavar='PATH', help='write the equivalent command line script')
	p.add_argument('--graph-out', metavar='PATH', help='write the provenance graph as canonical JSON')
	p.set_defaults(handler=_cmd_replay)

	p = sub.add_parser('synth', parents=[common], help='write the bundled synthetic dataset')
	p.add_argument('--dir', required=True, help='output directory')
	p.add_argument('--seed', type=int, default=7, help='random seed')
	p.set_defaults(handler=_cmd_synth)

	return parser


def _write(path, text):
	Path(path).write_text(text, encoding='utf-8')
	logger.info('Wrote %s', path)


def _write_tables(args, render):
	if getattr(args, 'csv', None):
		_write(args.csv, render('csv'))
	if getattr(args, 'html', None):
		_write(args.html, render('html'))


def _input(path):
	"""Object of a container and its provenance, with the object's node id."""
	cont = load_container(path)
	graph = cont.provenance
	final = graph.final if graph is not None else None

	if final is not None and final.hash == object_hash(cont.obj):
		return cont.obj, graph, final.id

	logger.warning('%s has no provenance for its object; recording the file instead', path)
	graph, node_id = add_file(graph if graph is not None else ProvenanceGraph(), str(path))
	return cont.obj, graph, node_id


def _cmd_load(args):
	ds, graph, _ = run_load(args.config, args.group, args.network, args.group_label, threads=args.threads)
	save_container(args.out, ds, graph)
	for key, missing in ds.unresolved_report().items():
		logger.warning('%s: unresolved %s', key, ', '.join(missing))


def _cmd_operation(args):
	op = OPERATIONS[args.operation]
	obj, graph, input_id = _input(args.input)
	params = {opt.name: getattr(args, opt.name) for opt in op.options if getattr(args, opt.name) is not None}

	out, graph, _ = run_operation(op.name, obj, params, graph, input_id, threads=args.threads)
	save_container(args.out, out, graph)
	_emit_artifacts(op.name, out, args)


def _emit_artifacts(name, out, args):
	svg = getattr(args, 'svg', None)
	rows = getattr(args, 'rows', None)

	if name == 'normalize' and svg:
		_write(svg, emit_plot('wa', out, chip=args.chip))

	elif name in ('de', 'anova'):
		_write_tables(args, lambda fmt: de_table(out, fmt, top_n=rows))
		if svg:
			_write(svg, emit_plot('volcano', out))

	elif name == 'cluster':
		_write_tables(args, lambda fmt: cluster_table(out, fmt, k=args.cut))
		if svg:
			_write(svg, emit_plot('cluster', out))

	elif name == 'classify':
		_write_tables(args, lambda fmt: class_table(out, fmt, top_n=rows))

	elif name in ('relnet', 'relnet-diff'):
		title = 'Edges of {} genes'.format(out.n_genes)
		_write_tables(args, lambda fmt: render_table(edge_frame(out), fmt, title=title))
		if svg:
			_write(svg, emit_plot('network', out))
		if args.heatmap:
			_write(args.heatmap, emit_plot('heatmap', out.association, out.gene_ids, out.gene_ids,
			                                title='Association', limit=1.0))
		if args.pair_svg:
			if not args.pair:
				raise UsageError('--pair-svg needs --pair GENE_X GENE_Y')
			_write(args.pair_svg, emit_plot('genePair', out, *args.pair))

	elif name == 'modules':
		_write_tables(args, lambda fmt: module_score_table(out, fmt=fmt))
		if svg:
			_write(svg, emit_plot('moduleMap', out))

	elif name == 'netscore':
		_write_tables(args, lambda fmt: net_score_table(out, fmt))


def _cmd_qc(args):
	ds = load_container(args.input).obj
	if not isinstance(ds, NormalizedDataset):
		ds = compute_wa(ds, args.bkg)

	out_dir = Path(args.svg_dir)
	out_dir.mkdir(parents=True, exist_ok=True)
	chips = args.chips if args.chips is not None else range(ds.n_chips)

	for chip in chips:
		if not 0 <= chip < ds.n_chips:
			raise DataError('chip {} out of range for {} chips'.format(chip, ds.n_chips))
		_write(out_dir / 'wa_chip{:02d}.svg'.format(chip), render_svg(wa_plot(ds, chip, span=args.span)))
		if ds.layout is not None:
			_write(out_dir / 'spatial_chip{:02d}.svg'.format(chip), render_svg(spatial_plot(ds, chip)))

	if args.hier:
		result = cluster_dataset(ds, 'hier', on='samples', threads=args.threads)
		_write(out_dir / 'chips_dendrogram.svg', render_svg(dendrogram_plot(result.dendrogram, 'Chips')))

	if args.boxplot:
		if not args.label:
			raise UsageError('--boxplot needs --label')
		_write(out_dir / 'boxplot_{}.svg'.format(args.boxplot), render_svg(boxplot(ds, args.boxplot, args.label)))


def _read_graph(path):
	data = Path(path).read_bytes()
	if data.startswith(MAGIC):
		graph = load_container(path).provenance
		if graph is None:
			raise DataError('{} holds no provenance graph'.format(path))
		return graph
	try:
		return ProvenanceGraph.from_json(canonical_loads(data))
	except (KeyError, TypeError, ValueError) as exc:
		raise DataError('{} is neither a container nor a provenance graph: {}'.format(path, exc)) from None


def _cmd_replay(args):
	graph = _read_graph(args.source)

	if args.graph_out:
		_write(args.graph_out, canonical_dumps(graph.to_json()) + '\n')

	report = replay(graph, base_dir=args.base_dir, strict=args.strict,
	                keep_intermediates=args.keep_intermediates, threads=args.threads)

	if args.script:
		_write(args.script, report.script)

	for line in report.lines():
		print(line)

	if report.ok:
		print('all {} operations reproduced'.format(len(report.checks)))
	else:
		print('replay diverges at {}'.format(report.first_divergence))


def _cmd_synth(args):
	files = write_synthetic(args.dir, seed=args.seed)
	print(files.config)


def _configure_logging(verbosity):
	level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
	root = logging.getLogger()
	if not root.handlers:
		handler = logging.StreamHandler(sys.stderr)
		handler.setFormatter(logging.Formatter(LOG_FORMAT))
		root.addHandler(handler)
	logging.getLogger('spotflow').setLevel(level)


def main(argv=None):
	"""Run the command line interface.

	:param argv: Arguments without the program name, ``sys.argv[1:]`` if None.
	:returns: Exit status.
	:rtype: int
	"""
	parser = build_parser()

	try:
		args = parser.parse_args(argv)
	except UsageError as exc:
		print('spotflow: error: {}'.format(exc), file=sys.stderr)
		return 1
	except SystemExit as exc:
		return exc.code if isinstance(exc.code, int) else 0

	_configure_logging(args.verbose)

	try:
		args.handler(args)
	except UsageError as exc:
		print('spotflow: error: {}'.format(exc), file=sys.stderr)
		return 1
	except (SpotflowError, OSError) as exc:
		print('spotflow: error: {}'.format(exc), file=sys.stderr)
		return 2

	return 0


if __name__ == '__main__':
	sys.exit(main())
