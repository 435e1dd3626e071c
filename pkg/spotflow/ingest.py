"""Read quantification tables, sample sheets and gene maps into datasets.

Every input file is checked before any matrix is built. Failures raise
:exc:`spotflow.errors.IntegrityError` naming the file and, where it applies,
the line and column, so a load either yields a complete
:class:`.RawDataset` or nothing at all.
"""

import csv
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from .dataclass import dataclass, field, array_field, evolve
from .errors import IntegrityError, DataError, DomainError, LabelError, ShapeError
from .layout import ChipLayout
from .parallel import ordered_map


__all__ = [
	'SampleSheet', 'GeneMap', 'GeneGroup', 'GeneNetwork', 'LoadReport',
	'RawDataset', 'read_table', 'read_sample_sheet', 'read_gene_map',
	'read_quant_table', 'load_dataset', 'read_gene_group_file',
	'read_network_file', 'add_gene_groups', 'add_network', 'select_spots',
	'mark_bad_spots',
]


logger = logging.getLogger(__name__)


CHANNELS = ('ch1', 'ch2')

SAMPLE_SHEET_COLUMNS = ('fileName', 'interestChannel')

# Column keys of read_quant_table results, in the order of LoadConfig.headers
QUANT_KEYS = ('ch1_fg', 'ch1_bg', 'ch2_fg', 'ch2_bg', 'flags')


def read_table(path, sep, skip=0):
	"""Read a delimited text table with a header row.

	Fields may be quoted. Trailing blank lines are ignored, every other line
	must have exactly as many fields as the header.

	:param path: File path.
	:param str sep: Field delimiter.
	:param int skip: Number of preamble lines before the header.
	:returns: ``(header, rows, row_lines, first_line)``. ``rows`` is a list of lists
		of strings, ``row_lines`` the 1-based file line of each row and
		``first_line`` that of the first row (None if there are none).
	:rtype: tuple

	:raises spotflow.errors.IntegrityError: If the file is missing, not UTF-8
		or has a row with the wrong number of fields.
	"""
	path = Path(path)
	name = path.name

	try:
		fobj = open(path, encoding='utf-8', newline='')
	except FileNotFoundError:
		raise IntegrityError('file not found', file=str(path)) from None

	with fobj:
		try:
			for i in range(skip):
				if not fobj.readline():
					raise IntegrityError(
						'file ends within the {}-line preamble'.format(skip),
						file=name, line=i + 1,
					)

			reader = csv.reader(fobj, delimiter=sep, quotechar='"', strict=True)
			header = None
			rows = []
			row_lines = []
			blank = []

			for record in reader:
				lineno = skip + reader.line_num

				if not record or record == ['']:
					blank.append(lineno)
					continue

				if header is None:
					header = [h.strip() for h in record]
					if blank:
						blank = []
					continue

				if blank:
					raise IntegrityError('blank line within the table', file=name, line=blank[0])

				if len(record) != len(header):
					raise IntegrityError(
						'expected {} fields, got {}'.format(len(header), len(record)),
						file=name, line=lineno,
					)

				rows.append(record)
				row_lines.append(lineno)

		except UnicodeDecodeError as exc:
			raise IntegrityError('not valid UTF-8 text ({})'.format(exc.reason), file=name) from None
		except csv.Error as exc:
			raise IntegrityError(str(exc), file=name, line=skip + reader.line_num) from None

	if header is None:
		raise IntegrityError('no header row', file=name, line=skip + 1)

	first_line = row_lines[0] if row_lines else None
	return header, rows, row_lines, first_line


def _numeric_column(values, file, column, lines, integer=False):
	"""Parse a column of text cells as numbers, locating the first bad cell."""
	parsed = pd.to_numeric(pd.Series(values, dtype=object).str.strip(), errors='coerce')
	parsed = parsed.to_numpy(dtype=float)

	bad = np.flatnonzero(~np.isfinite(parsed))
	if bad.size:
		i = bad[0]
		raise IntegrityError('cannot parse {!r} as a number'.format(values[i]), file=file, line=lines[i], column=column)

	if integer:
		bad = np.flatnonzero(parsed != np.round(parsed))
		if bad.size:
			i = bad[0]
			raise IntegrityError('expected an integer, got {!r}'.format(values[i]), file=file, line=lines[i], column=column)
		return parsed.astype(np.int64)

	bad = np.flatnonzero(parsed < 0)
	if bad.size:
		i = bad[0]
		raise IntegrityError('intensities must be nonnegative, got {!r}'.format(values[i]), file=file, line=lines[i], column=column)

	return parsed


def _label_converter(value):
	return {str(k): tuple(str(x) for x in v) for k, v in dict(value).items()}


@dataclass
class SampleSheet:
	"""One row per chip: quantification file, channel of the interest sample and labels.

	:param tuple file_names: Quantification file names, in column order.
	:param tuple interest_channel: ``'ch1'`` or ``'ch2'`` per chip. The
		other channel holds the reference sample, so dye swaps are recorded
		here.
	:param tuple label_names: Sample label names in sheet order.
	:param dict labels: Label name to tuple of per-chip values.
	"""

	file_names = field(tuple)
	interest_channel = field(tuple)
	label_names = field(tuple)
	labels = field(dict, converter=_label_converter)

	def __attrs_post_init__(self):
		n = len(self.file_names)

		if len(set(self.file_names)) != n:
			raise ValueError('file names must be unique')
		if len(self.interest_channel) != n:
			raise ValueError('interest_channel must have one entry per chip')
		if any(c not in CHANNELS for c in self.interest_channel):
			raise ValueError('interest_channel values must be ch1 or ch2')
		if set(self.labels) != set(self.label_names):
			raise ValueError('labels do not match label_names')
		if any(len(v) != n for v in self.labels.values()):
			raise ValueError('every label must have one value per chip')

	@property
	def n_chips(self):
		return len(self.file_names)

	@property
	def swapped(self):
		"""Boolean array, True for chips with the interest sample in channel 2."""
		return np.array([c == 'ch2' for c in self.interest_channel], dtype=bool)

	def values(self, label):
		"""Per-chip values of a sample label.

		:raises spotflow.errors.LabelError: If the label is not declared.
		"""
		try:
			return self.labels[label]
		except KeyError:
			raise LabelError('unknown sample label {!r}; declared: {}'.format(label, ', '.join(self.label_names))) from None

	def levels(self, label):
		"""Sorted distinct values of a sample label."""
		return tuple(sorted(set(self.values(label))))

	def subset(self, columns):
		"""Sample sheet restricted to the given chip columns."""
		columns = list(columns)
		return SampleSheet(
			file_names=[self.file_names[j] for j in columns],
			interest_channel=[self.interest_channel[j] for j in columns],
			label_names=self.label_names,
			labels={k: [v[j] for j in columns] for k, v in self.labels.items()},
		)


@dataclass
class GeneMap:
	"""Gene labels of each spot, in chip scan order.

	:param tuple label_names: Gene label names in file order.
	:param dict labels: Label name to tuple of per-spot values.
	"""

	label_names = field(tuple)
	labels = field(dict, converter=_label_converter)

	def __attrs_post_init__(self):
		if set(self.labels) != set(self.label_names):
			raise ValueError('labels do not match label_names')
		if len({len(v) for v in self.labels.values()}) > 1:
			raise ValueError('every gene label must have one value per spot')

	@property
	def n_rows(self):
		if not self.label_names:
			return 0
		return len(self.labels[self.label_names[0]])

	def check_label(self, label):
		"""Raise :exc:`spotflow.errors.LabelError` if ``label`` is not declared."""
		if label not in self.labels:
			raise LabelError('unknown gene label {!r}; declared: {}'.format(label, ', '.join(self.label_names)))

	def values(self, label):
		"""Per-spot values of a gene label."""
		self.check_label(label)
		return self.labels[label]

	def index(self, label):
		"""Map each value of a gene label to the list of rows carrying it."""
		index = dict()
		for i, value in enumerate(self.values(label)):
			index.setdefault(value, []).append(i)
		return index

	def resolve(self, label, members):
		"""Resolve gene label values to rows.

		:returns: ``(rows, unresolved)``: sorted row indices of all resolved
			members and the members with no row, in input order.
		"""
		index = self.index(label)
		rows = set()
		unresolved = []

		for member in members:
			if member in index:
				rows.update(index[member])
			else:
				unresolved.append(member)

		return sorted(rows), unresolved

	def subset(self, rows):
		"""Gene map restricted to the given rows."""
		rows = list(rows)
		return GeneMap(
			label_names=self.label_names,
			labels={k: [v[i] for i in rows] for k, v in self.labels.items()},
		)


def _edges_converter(value):
	return tuple((str(a), str(b)) for a, b in value)


@dataclass
class GeneGroup:
	"""Named list of genes, identified by the values of one gene label."""

	name = field(str)
	label_id = field(str)
	members = field(tuple)
	unresolved = field(tuple, default=())


@dataclass
class GeneNetwork:
	"""Named undirected network over genes, identified by one gene label."""

	name = field(str)
	label_id = field(str)
	edges = field(tuple, converter=_edges_converter)
	unresolved = field(tuple, default=())

	@property
	def nodes(self):
		"""Distinct node labels in order of first appearance."""
		seen = dict()
		for a, b in self.edges:
			seen.setdefault(a, None)
			seen.setdefault(b, None)
		return tuple(seen)


@dataclass
class LoadReport:
	"""What :func:`.load_dataset` read.

	:param tuple files: Quantification files read, in column order.
	:param tuple rows: Data rows parsed per file.
	"""

	files = field(tuple, default=())
	rows = field(tuple, default=())


class GeneSetsMixin:
	"""Gene group and network lookups shared by raw and normalized datasets.

	Expects ``gene_map``, ``gene_groups``, ``gene_networks`` and ``bad_spot``
	attributes.
	"""

	def gene_group(self, name):
		for group in self.gene_groups:
			if group.name == name:
				return group
		raise LabelError('unknown gene group {!r}'.format(name))

	def gene_network(self, name):
		for network in self.gene_networks:
			if network.name == name:
				return network
		raise LabelError('unknown gene network {!r}'.format(name))

	def group_rows(self, name):
		"""Sorted rows of the resolved members of a gene group."""
		group = self.gene_group(name)
		rows, _ = self.gene_map.resolve(group.label_id, group.members)
		return rows

	def pool_rows(self, pool=None):
		"""Sorted rows of a gene pool.

		:param str pool: Name of a gene group, else of a gene network (its
			nodes). All spots not marked bad if None.
		:rtype: list
		"""
		if pool is None:
			rows = np.flatnonzero(~self.bad_spot)

		elif any(group.name == pool for group in self.gene_groups):
			rows = self.group_rows(pool)

		else:
			network = self.gene_network(pool)
			rows, _ = self.gene_map.resolve(network.label_id, network.nodes)

		return sorted(int(i) for i in rows)

	def unresolved_report(self):
		"""Map ``"group:NAME"`` / ``"network:NAME"`` to unresolved members."""
		report = dict()
		for group in self.gene_groups:
			if group.unresolved:
				report['group:' + group.name] = group.unresolved
		for network in self.gene_networks:
			if network.unresolved:
				report['network:' + network.name] = network.unresolved
		return report


@dataclass(stored=True)
class RawDataset(GeneSetsMixin):
	"""Two-channel intensities of a set of chips, before normalization.

	All matrices are ``spots x chips``. ``use_spot`` marks spots included in
	normalization (see :func:`.select_spots`) and ``bad_spot`` spots excluded
	on every chip (see :func:`.mark_bad_spots`).
	"""

	ch1_fg = array_field(float, 2)
	ch1_bg = array_field(float, 2)
	ch2_fg = array_field(float, 2)
	ch2_bg = array_field(float, 2)
	flags = array_field(np.int64, 2)
	use_spot = array_field(bool, 2)
	bad_spot = array_field(bool, 1)
	gene_map = field(GeneMap)
	sample_sheet = field(SampleSheet)
	layout = field(ChipLayout)
	dataset_id = field(str, default='')
	gene_groups = field(tuple, default=(), item_type=GeneGroup)
	gene_networks = field(tuple, default=(), item_type=GeneNetwork)
	notes = field(str, default='')
	report = field(LoadReport, default=LoadReport())

	def __attrs_post_init__(self):
		shape = self.ch1_fg.shape

		for name in ('ch1_bg', 'ch2_fg', 'ch2_bg', 'flags', 'use_spot'):
			if getattr(self, name).shape != shape:
				raise ShapeError('{} has shape {}, expected {}'.format(name, getattr(self, name).shape, shape))

		n_spots, n_chips = shape

		if self.bad_spot.shape != (n_spots,):
			raise ShapeError('bad_spot must have one entry per spot')
		if self.layout.n_spots != n_spots:
			raise ShapeError('layout has {} spots, matrices have {}'.format(self.layout.n_spots, n_spots))
		if self.gene_map.n_rows != n_spots:
			raise ShapeError('gene map has {} rows, matrices have {} spots'.format(self.gene_map.n_rows, n_spots))
		if self.sample_sheet.n_chips != n_chips:
			raise ShapeError('sample sheet has {} chips, matrices have {}'.format(self.sample_sheet.n_chips, n_chips))

		for name in ('ch1_fg', 'ch1_bg', 'ch2_fg', 'ch2_bg'):
			values = getattr(self, name)
			if not np.all(values >= 0):
				raise DataError('{} must be nonnegative and not NaN'.format(name))

	@property
	def n_spots(self):
		return self.ch1_fg.shape[0]

	@property
	def n_chips(self):
		return self.ch1_fg.shape[1]


def read_sample_sheet(path, sep):
	"""Read a sample sheet.

	The header row is ``fileName``, ``interestChannel`` and then the sample
	label names.

	:rtype: .SampleSheet
	"""
	header, rows, lines, _ = read_table(path, sep)
	name = Path(path).name

	if tuple(header[:2]) != SAMPLE_SHEET_COLUMNS:
		raise IntegrityError('header must start with fileName, interestChannel', file=name, line=1)
	if len(set(header)) != len(header):
		raise IntegrityError('duplicate column names in header', file=name, line=1)
	if not rows:
		raise IntegrityError('no chips listed', file=name)

	seen = dict()
	for row, line in zip(rows, lines):
		for value, column in zip(row, header):
			if not value.strip():
				raise IntegrityError('missing value', file=name, line=line, column=column)

		file_name = row[0].strip()
		if file_name in seen:
			raise IntegrityError('duplicate fileName {!r} (first on line {})'.format(file_name, seen[file_name]), file=name, line=line, column='fileName')
		seen[file_name] = line

		if row[1].strip() not in CHANNELS:
			raise IntegrityError('interestChannel must be ch1 or ch2, got {!r}'.format(row[1]), file=name, line=line, column='interestChannel')

	label_names = header[2:]
	return SampleSheet(
		file_names=[row[0].strip() for row in rows],
		interest_channel=[row[1].strip() for row in rows],
		label_names=label_names,
		labels={label: [row[2 + k].strip() for row in rows] for k, label in enumerate(label_names)},
	)


def read_gene_map(path, sep, n_spots):
	"""Read a gene map with one row per spot.

	:param int n_spots: Expected number of rows.
	:rtype: .GeneMap
	"""
	header, rows, _, _ = read_table(path, sep)
	name = Path(path).name

	if len(set(header)) != len(header):
		raise IntegrityError('duplicate column names in header', file=name, line=1)
	if len(rows) != n_spots:
		raise IntegrityError('expected {} rows (one per spot), got {}'.format(n_spots, len(rows)), file=name)

	return GeneMap(
		label_names=header,
		labels={label: [row[k].strip() for row in rows] for k, label in enumerate(header)},
	)


def read_quant_table(path, headers, sep, skip):
	"""Read the configured columns of one quantification table.

	:param path: File path.
	:param headers: The five column names, ch1 fg, ch1 bg, ch2 fg, ch2 bg and flags.
	:returns: Dict from :data:`QUANT_KEYS` to 1-d arrays.
	:rtype: dict
	"""
	header, rows, lines, first = read_table(path, sep, skip)
	name = Path(path).name

	columns = dict()
	for key, column in zip(QUANT_KEYS, headers):
		try:
			k = header.index(column)
		except ValueError:
			raise IntegrityError('missing column {!r}'.format(column), file=name, line=skip + 1) from None

		values = [row[k] for row in rows]
		columns[key] = _numeric_column(values, name, column, lines, integer=(key == 'flags'))

	return columns


def load_dataset(cfg, threads=1):
	"""Load the dataset described by a load configuration.

	Quantification files are parsed concurrently when ``threads > 1``; the
	result does not depend on it. ``use_spot`` starts all True and
	``bad_spot`` all False.

	:param cfg: Load configuration.
	:type cfg: spotflow.config.LoadConfig
	:param int threads: Worker threads for parsing files.
	:rtype: .RawDataset

	:raises spotflow.errors.IntegrityError: If any file is missing or fails a
		check. No dataset is built in that case.
	"""
	layout = cfg.layout
	sheet = read_sample_sheet(cfg.sample_path, cfg.sep)
	gene_map = read_gene_map(cfg.gene_map_path, cfg.sep, layout.n_spots)

	paths = [cfg.quant_path(f) for f in sheet.file_names]
	for file_name, path in zip(sheet.file_names, paths):
		if not path.is_file():
			raise IntegrityError(
				'sample sheet lists {!r} but {} does not exist'.format(file_name, path),
				file=Path(cfg.sample_path).name, column='fileName',
			)

	tables = ordered_map(
		lambda p: read_quant_table(p, cfg.headers, cfg.sep, cfg.skip),
		paths,
		threads=threads,
	)

	n_rows = [len(t['flags']) for t in tables]
	for path, n in zip(paths, n_rows):
		if n != n_rows[0]:
			raise IntegrityError(
				'row-count mismatch: {} data rows, {} has {}'.format(n, paths[0].name, n_rows[0]),
				file=path.name,
			)
		if n != layout.n_spots:
			raise IntegrityError(
				'expected gridR*gridC*printTipR*printTipC = {} data rows, got {}'.format(layout.n_spots, n),
				file=path.name,
			)

	matrices = {key: np.column_stack([t[key] for t in tables]) for key in QUANT_KEYS}
	shape = matrices['flags'].shape

	ds = RawDataset(
		use_spot=np.ones(shape, dtype=bool),
		bad_spot=np.zeros(shape[0], dtype=bool),
		gene_map=gene_map,
		sample_sheet=sheet,
		layout=layout,
		dataset_id=cfg.dataset_id,
		report=LoadReport(files=[p.name for p in paths], rows=n_rows),
		**matrices,
	)

	logger.info('Loaded %d chips x %d spots for %r', ds.n_chips, ds.n_spots, cfg.dataset_id)
	return ds


def _read_lines(path):
	path = Path(path)
	try:
		text = path.read_text(encoding='utf-8')
	except FileNotFoundError:
		raise IntegrityError('file not found', file=str(path)) from None
	except UnicodeDecodeError as exc:
		raise IntegrityError('not valid UTF-8 text ({})'.format(exc.reason), file=path.name) from None

	for lineno, line in enumerate(text.splitlines(), 1):
		line = line.split('#', 1)[0].strip()
		if line:
			yield lineno, line


def read_gene_group_file(path):
	"""Read a gene group file: one gene label per line, ``#`` starts a comment.

	:returns: Member labels in file order.
	:rtype: list
	"""
	return [line for _, line in _read_lines(path)]


def read_network_file(path):
	"""Read a network file: two gene labels per line, one undirected edge.

	Labels are separated by a tab if the line has one, whitespace otherwise.
	``#`` starts a comment.

	:returns: List of ``(a, b)`` tuples in file order.
	:rtype: list
	"""
	edges = []

	for lineno, line in _read_lines(path):
		parts = line.split('\t') if '\t' in line else line.split()
		parts = [p.strip() for p in parts]

		if len(parts) != 2 or not all(parts):
			raise IntegrityError('expected two gene labels, got {}'.format(len(parts)), file=Path(path).name, line=lineno)

		edges.append(tuple(parts))

	return edges


def _check_new_name(ds, name):
	taken = {g.name for g in ds.gene_groups} | {n.name for n in ds.gene_networks}
	if name in taken:
		raise DataError('a gene group or network named {!r} already exists'.format(name))


def add_gene_groups(ds, name, members, label_id):
	"""Add a named gene group to a dataset.

	Members are matched against the values of gene label ``label_id``.
	Members with no matching spot are kept in the group's ``unresolved`` list
	and left out of analyses.

	:param ds: Raw or normalized dataset.
	:param str name: Group name, unique among the dataset's groups and networks.
	:param members: Gene label values.
	:param str label_id: Gene label to match members against.
	:returns: New dataset of the same type.

	:raises spotflow.errors.DataError: If the name is taken or ``members`` is empty.
	:raises spotflow.errors.LabelError: If ``label_id`` is not a gene label.
	"""
	members = [str(m) for m in members]
	ds.gene_map.check_label(label_id)
	_check_new_name(ds, name)

	if not members:
		raise DataError('gene group {!r} has no members'.format(name))

	_, unresolved = ds.gene_map.resolve(label_id, members)
	if unresolved:
		logger.warning('Gene group %r: %d of %d members unresolved: %s', name, len(unresolved), len(members), ', '.join(unresolved))

	group = GeneGroup(name=name, label_id=label_id, members=members, unresolved=unresolved)
	return evolve(ds, gene_groups=ds.gene_groups + (group,))


def add_network(ds, name, edges, label_id):
	"""Add a named undirected gene network to a dataset.

	Duplicate edges, in either orientation, are collapsed to the first
	occurrence. Nodes with no matching spot are reported in the network's
	``unresolved`` list.

	:param ds: Raw or normalized dataset.
	:param str name: Network name, unique among the dataset's groups and networks.
	:param edges: Iterable of ``(a, b)`` gene label pairs.
	:param str label_id: Gene label to match nodes against.
	:returns: New dataset of the same type.

	:raises spotflow.errors.DataError: If the name is taken, there are no
		edges or an edge joins a node to itself.
	"""
	ds.gene_map.check_label(label_id)
	_check_new_name(ds, name)

	collapsed = dict()
	for edge in edges:
		a, b = (str(x) for x in edge)
		if a == b:
			raise DataError('network {!r}: self-edge on {!r}'.format(name, a))
		collapsed.setdefault(frozenset((a, b)), (a, b))

	if not collapsed:
		raise DataError('network {!r} has no edges'.format(name))

	network = GeneNetwork(name=name, label_id=label_id, edges=list(collapsed.values()))
	_, unresolved = ds.gene_map.resolve(label_id, network.nodes)

	if unresolved:
		logger.warning('Gene network %r: %d nodes unresolved: %s', name, len(unresolved), ', '.join(unresolved))
		network = evolve(network, unresolved=unresolved)

	return evolve(ds, gene_networks=ds.gene_networks + (network,))


def _ratio(fg, bg):
	with np.errstate(divide='ignore', invalid='ignore'):
		return np.where(bg > 0, fg / np.where(bg > 0, bg, 1), np.inf)


def select_spots(ds, sig_noise=0.0, rm_flags=(), remove_names=(), label_id=None):
	"""Decide which spots take part in normalization.

	A spot is used on a chip when both channels' foreground to background
	ratios are at least ``sig_noise`` (a zero background counts as an infinite
	ratio), its flag is not in ``rm_flags``, its gene label is not in
	``remove_names`` and it is not a bad spot. The selection is computed from
	scratch, so calling this twice with the same arguments is idempotent.

	:param ds: Raw dataset.
	:type ds: .RawDataset
	:param float sig_noise: Minimum signal to noise ratio, inclusive.
	:param rm_flags: Flag values to exclude.
	:param remove_names: Gene label values to exclude.
	:param str label_id: Gene label ``remove_names`` refers to.
	:rtype: .RawDataset

	:raises spotflow.errors.DomainError: If ``sig_noise`` is negative.
	:raises spotflow.errors.LabelError: If ``remove_names`` is given without
		``label_id`` or ``label_id`` is unknown.
	"""
	if sig_noise < 0:
		raise DomainError('sig_noise must be nonnegative, got {}'.format(sig_noise))

	remove_names = list(remove_names)
	if remove_names and label_id is None:
		raise LabelError('remove_names requires label_id')

	use = (_ratio(ds.ch1_fg, ds.ch1_bg) >= sig_noise) & (_ratio(ds.ch2_fg, ds.ch2_bg) >= sig_noise)

	rm_flags = list(rm_flags)
	if rm_flags:
		use &= ~np.isin(ds.flags, rm_flags)

	if label_id is not None:
		names = np.asarray(ds.gene_map.values(label_id), dtype=object)
		if remove_names:
			use &= ~np.isin(names, remove_names)[:, None]

	use &= ~ds.bad_spot[:, None]

	logger.info('Selected %d of %d spot measurements', int(use.sum()), use.size)
	return evolve(ds, use_spot=use)


def mark_bad_spots(ds, spots):
	"""Mark spots as bad on every chip.

	:param ds: Raw dataset.
	:param spots: 0-based spot indices.
	:rtype: .RawDataset

	:raises spotflow.errors.ShapeError: If an index is out of range.
	"""
	spots = np.asarray(list(spots), dtype=np.int64)

	if spots.size == 0:
		return ds

	if np.any((spots < 0) | (spots >= ds.n_spots)):
		raise ShapeError('spot index out of range for {} spots'.format(ds.n_spots))

	bad = ds.bad_spot.copy()
	bad[spots] = True
	return evolve(ds, bad_spot=bad)
