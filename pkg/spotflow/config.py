"""Load configuration files.

A load configuration is a text file of ``key = value`` lines::

	dataDir = "data"
	ext = NULL
	sampleFile = "samples.txt"
	datasetId = "Test Dataset"
	geneMap = "genemap.txt"
	headers = c('Ch1 Mean', 'Ch1 B Mean', 'Ch2 Mean', 'Ch2 B Mean', 'Flags')
	skip = 62
	sep = ","
	gridR = 12
	gridC = 4
	printTipR = 10
	printTipC = 10

Values are quoted strings, integers, ``NULL`` or ``c(...)`` vectors of quoted
strings. Blank lines and ``#`` comments are ignored. ``dridC`` is accepted as
an alias of ``gridC``.
"""

import os
import re
from pathlib import Path

from .dataclass import dataclass, field
from .errors import ConfigError
from .layout import ChipLayout


__all__ = ['LoadConfig', 'parse_config', 'read_config']


# Config file key -> LoadConfig attribute
CONFIG_KEYS = {
	'dataDir': 'data_dir',
	'ext': 'ext',
	'sampleFile': 'sample_file',
	'datasetId': 'dataset_id',
	'geneMap': 'gene_map',
	'headers': 'headers',
	'skip': 'skip',
	'sep': 'sep',
	'gridR': 'grid_r',
	'gridC': 'grid_c',
	'printTipR': 'print_tip_r',
	'printTipC': 'print_tip_c',
}

KEY_ALIASES = {'dridC': 'gridC'}

OPTIONAL_KEYS = {'ext'}

STRING_KEYS = {'dataDir', 'sampleFile', 'datasetId', 'geneMap', 'sep'}
INTEGER_KEYS = {'skip', 'gridR', 'gridC', 'printTipR', 'printTipC'}

N_HEADERS = 5

_LINE_RE = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_.]*)\s*=\s*(.*)$')
_INT_RE = re.compile(r'[+-]?\d+')
_VECTOR_RE = re.compile(r'c\s*\(')


def _validate_headers(instance, attribute, value):
	if len(value) != N_HEADERS:
		raise ValueError('headers must name exactly {} columns, got {}'.format(N_HEADERS, len(value)))
	if len(set(value)) != N_HEADERS:
		raise ValueError('headers must be distinct')


def _validate_sep(instance, attribute, value):
	if len(value) != 1:
		raise ValueError('sep must be a single character, got {!r}'.format(value))


def _validate_skip(instance, attribute, value):
	if value < 0:
		raise ValueError('skip must be nonnegative')


@dataclass
class LoadConfig:
	"""Parsed load configuration.

	Relative paths are relative to ``base_dir``, the directory of the
	configuration file.
	"""

	data_dir = field(str)
	sample_file = field(str)
	dataset_id = field(str)
	gene_map = field(str)
	headers = field(tuple, validator=_validate_headers)
	skip = field(int, validator=_validate_skip)
	sep = field(str, validator=_validate_sep)
	grid_r = field(int)
	grid_c = field(int)
	print_tip_r = field(int)
	print_tip_c = field(int)
	ext = field(str, optional=True)
	base_dir = field(str, default='.', json=False)

	@property
	def layout(self):
		""":class:`spotflow.layout.ChipLayout` described by the grid keys."""
		return ChipLayout(self.grid_r, self.grid_c, self.print_tip_r, self.print_tip_c)

	@property
	def n_spots(self):
		return self.layout.n_spots

	def resolve(self, path):
		"""Resolve a path relative to the configuration file's directory."""
		return Path(self.base_dir, path)

	@property
	def sample_path(self):
		return self.resolve(self.sample_file)

	@property
	def gene_map_path(self):
		return self.resolve(self.gene_map)

	def quant_path(self, file_name):
		"""Path of the quantification table of a chip listed in the sample sheet."""
		if self.ext:
			file_name = file_name + self.ext
		return self.resolve(os.path.join(self.data_dir, file_name))


def _parse_string(text, lineno):
	quote = text[0]
	end = text.find(quote, 1)

	if end < 0:
		raise ConfigError('unterminated string', line=lineno)

	return text[1:end], text[end + 1:]


def _parse_vector(text, lineno):
	match = _VECTOR_RE.match(text)
	rest = text[match.end():]
	items = []

	while True:
		rest = rest.lstrip()

		if rest.startswith(')') and not items:
			return items, rest[1:]

		if not rest.startswith(('"', "'")):
			raise ConfigError('malformed c(...) vector, expected a quoted string', line=lineno)

		item, rest = _parse_string(rest, lineno)
		items.append(item)
		rest = rest.lstrip()

		if rest.startswith(')'):
			return items, rest[1:]

		if not rest.startswith(','):
			raise ConfigError("malformed c(...) vector, expected ',' or ')'", line=lineno)

		rest = rest[1:]

		if rest.lstrip().startswith(')'):
			raise ConfigError('malformed c(...) vector, trailing comma', line=lineno)


def parse_value(text, lineno=None):
	"""Parse the value part of a configuration line.

	:param str text: Text after the ``=``.
	:param int lineno: Line number for error messages.
	:returns: ``str``, ``int``, ``None`` or ``list`` of ``str``.

	>>> parse_value('"data"')
	'data'
	>>> parse_value('62  # lines of preamble')
	62
	>>> parse_value('NULL') is None
	True
	>>> parse_value("c('Ch1 Mean', \\"Flags\\")")
	['Ch1 Mean', 'Flags']
	"""
	text = text.strip()

	if not text:
		raise ConfigError('missing value', line=lineno)

	if text[0] in '"\'':
		value, rest = _parse_string(text, lineno)

	elif _VECTOR_RE.match(text):
		value, rest = _parse_vector(text, lineno)

	else:
		token = re.split(r'[\s#]', text, maxsplit=1)[0]
		rest = text[len(token):]

		if token == 'NULL':
			value = None
		elif _INT_RE.fullmatch(token):
			value = int(token)
		else:
			raise ConfigError('cannot parse value {!r}'.format(token), line=lineno)

	rest = rest.strip()
	if rest and not rest.startswith('#'):
		raise ConfigError('unexpected text after value: {!r}'.format(rest), line=lineno)

	return value


def _check_type(key, value, lineno):
	if key in INTEGER_KEYS:
		if not isinstance(value, int):
			raise ConfigError('{} must be an integer'.format(key), line=lineno, key=key)

	elif key in STRING_KEYS:
		if not isinstance(value, str):
			raise ConfigError('{} must be a quoted string'.format(key), line=lineno, key=key)

	elif key == 'ext':
		if value is not None and not isinstance(value, str):
			raise ConfigError('ext must be a quoted string or NULL', line=lineno, key=key)

	elif key == 'headers':
		if not isinstance(value, list):
			raise ConfigError('headers must be a c(...) vector', line=lineno, key=key)


def parse_config(text, base_dir='.'):
	"""Parse the text of a load configuration file.

	:param str text: File contents.
	:param str base_dir: Directory relative paths are resolved against.
	:rtype: .LoadConfig

	:raises spotflow.errors.ConfigError: For unknown, duplicate or missing keys
		and malformed or mistyped values.
	"""
	values = dict()
	lines = dict()

	for lineno, line in enumerate(text.splitlines(), 1):
		stripped = line.strip()

		if not stripped or stripped.startswith('#'):
			continue

		match = _LINE_RE.match(line)
		if match is None:
			raise ConfigError('expected "key = value"', line=lineno)

		key, rest = match.groups()
		key = KEY_ALIASES.get(key, key)

		if key not in CONFIG_KEYS:
			raise ConfigError('unknown key {!r}'.format(key), line=lineno, key=key)

		if key in values:
			raise ConfigError(
				'duplicate key {!r} (first set on line {})'.format(key, lines[key]),
				line=lineno,
				key=key,
			)

		value = parse_value(rest, lineno)
		_check_type(key, value, lineno)

		values[key] = value
		lines[key] = lineno

	for key in CONFIG_KEYS:
		if key not in values and key not in OPTIONAL_KEYS:
			raise ConfigError('missing mandatory key {!r}'.format(key), key=key)

	kwargs = {CONFIG_KEYS[key]: value for key, value in values.items()}

	try:
		config = LoadConfig(base_dir=str(base_dir), **kwargs)
		config.layout
	except (ValueError, TypeError) as exc:
		raise ConfigError(str(exc)) from exc

	return config


def read_config(path):
	"""Read a load configuration file.

	Relative paths in the file are resolved against the file's directory.

	:param path: Path to the configuration file.
	:rtype: .LoadConfig
	"""
	path = Path(path)
	text = path.read_text(encoding='utf-8')
	return parse_config(text, base_dir=str(path.parent))
