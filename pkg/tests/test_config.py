"""Test load configuration parsing."""

from pathlib import Path

import pytest

from spotflow.config import parse_config, read_config
from spotflow.errors import ConfigError


CONFIG = '''\
# Test configuration
dataDir = "data"
ext = NULL
sampleFile = "samples.txt"
datasetId = "Test Dataset"
geneMap = "genemap.txt"
headers = c('Ch1 Mean', 'Ch1 B Mean', 'Ch2 Mean', 'Ch2 B Mean', 'Flags')
skip = 62
sep = ","
gridR = 12
dridC = 4   # misspelled alias
printTipR = 10
printTipC = 10
'''


def _replace(text, key, line):
	"""Replace the line setting ``key``."""
	lines = [line if l.startswith(key + ' ') else l for l in text.splitlines()]
	return '\n'.join(lines) + '\n'


def test_parse():
	cfg = parse_config(CONFIG, base_dir='/base')

	assert cfg.data_dir == 'data'
	assert cfg.ext is None
	assert cfg.dataset_id == 'Test Dataset'
	assert cfg.headers == ('Ch1 Mean', 'Ch1 B Mean', 'Ch2 Mean', 'Ch2 B Mean', 'Flags')
	assert cfg.skip == 62
	assert cfg.grid_c == 4
	assert cfg.n_spots == 4800

	assert cfg.quant_path('chip1.csv') == Path('/base/data/chip1.csv')
	assert cfg.sample_path == Path('/base/samples.txt')


def test_ext():
	cfg = parse_config(_replace(CONFIG, 'ext', 'ext = ".csv"'))
	assert cfg.quant_path('chip1').name == 'chip1.csv'

	cfg = parse_config(_replace(CONFIG, 'ext', ''))
	assert cfg.ext is None


@pytest.mark.parametrize('key,line,lineno', [
	('skip', 'skip = "62"', 8),
	('sep', 'sep = ";;"', None),
	('headers', "headers = c('a', 'b')", None),
	('gridR', 'gridR = 1.5', 10),
	('datasetId', 'datasetId = "unterminated', 5),
	('printTipC', 'colour = "red"', 13),
])
def test_invalid(key, line, lineno):
	with pytest.raises(ConfigError) as excinfo:
		parse_config(_replace(CONFIG, key, line))

	assert excinfo.value.line == lineno


def test_missing_key():
	with pytest.raises(ConfigError) as excinfo:
		parse_config(_replace(CONFIG, 'geneMap', ''))

	assert excinfo.value.key == 'geneMap'


def test_duplicate_key():
	with pytest.raises(ConfigError) as excinfo:
		parse_config(CONFIG + 'gridC = 4\n')

	assert excinfo.value.key == 'gridC'
	assert excinfo.value.line == 14
	assert 'first set on line 11' in str(excinfo.value)


def test_read_config(tmp_path):
	path = tmp_path / 'config.txt'
	path.write_text(CONFIG, encoding='utf-8')

	cfg = read_config(path)
	assert cfg.gene_map_path == tmp_path / 'genemap.txt'
