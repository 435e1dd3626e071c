"""Test reading input files into datasets."""

import pytest
import numpy as np

from spotflow.config import read_config
from spotflow.errors import IntegrityError, DataError, DomainError, LabelError, ShapeError
from spotflow.ingest import (
	load_dataset, read_gene_group_file, read_network_file, add_gene_groups,
	add_network, select_spots, mark_bad_spots,
)
from spotflow.test import make_raw


HEADER = 'Spot,Ch1 Mean,Ch1 B Mean,Ch2 Mean,Ch2 B Mean,Flags'


def write_dataset(directory, n_rows=(4, 4), sheet=None):
	"""Write a 2-chip dataset on a 1x1x2x2 chip, with one preamble line."""
	(directory / 'data').mkdir()

	(directory / 'config.txt').write_text('\n'.join([
		'dataDir = "data"',
		'ext = ".csv"',
		'sampleFile = "samples.csv"',
		'datasetId = "tiny"',
		'geneMap = "genemap.csv"',
		"headers = c('Ch1 Mean', 'Ch1 B Mean', 'Ch2 Mean', 'Ch2 B Mean', 'Flags')",
		'skip = 1',
		'sep = ","',
		'gridR = 1',
		'gridC = 1',
		'printTipR = 2',
		'printTipC = 2',
	]) + '\n', encoding='utf-8')

	if sheet is None:
		sheet = ['fileName,interestChannel,Type', 'a,ch1,normal', 'b,ch2,tumor']
	(directory / 'samples.csv').write_text('\n'.join(sheet) + '\n', encoding='utf-8')

	(directory / 'genemap.csv').write_text('GeneName,Id\ng1,1\ng2,2\ng1,3\nEMPTY,4\n', encoding='utf-8')

	for name, n in zip('ab', n_rows):
		lines = ['scanner preamble', HEADER]
		for i in range(n):
			lines.append('{},{},10,{},20,{}'.format(i + 1, 100 * (i + 1), 50 * (i + 1), -50 if i == 3 else 0))
		(directory / 'data' / (name + '.csv')).write_text('\n'.join(lines) + '\n', encoding='utf-8')

	return directory / 'config.txt'


def test_load(tmp_path):
	ds = load_dataset(read_config(write_dataset(tmp_path)))

	assert (ds.n_spots, ds.n_chips) == (4, 2)
	assert ds.dataset_id == 'tiny'
	assert ds.sample_sheet.values('Type') == ('normal', 'tumor')
	assert ds.sample_sheet.swapped.tolist() == [False, True]
	assert ds.gene_map.index('GeneName') == {'g1': [0, 2], 'g2': [1], 'EMPTY': [3]}

	np.testing.assert_array_equal(ds.ch1_fg[:, 0], [100, 200, 300, 400])
	np.testing.assert_array_equal(ds.ch2_bg[:, 1], [20] * 4)
	assert ds.flags[3, 0] == -50
	assert ds.use_spot.all() and not ds.bad_spot.any()
	assert ds.report.files == ('a.csv', 'b.csv')


def test_threads_do_not_change_result(tmp_path):
	cfg = read_config(write_dataset(tmp_path))
	a = load_dataset(cfg)
	b = load_dataset(cfg, threads=4)
	np.testing.assert_array_equal(a.ch1_fg, b.ch1_fg)
	assert a == b


def test_row_count_mismatch(tmp_path):
	"""A table one row short of the chip is rejected, naming the file."""
	cfg = read_config(write_dataset(tmp_path, n_rows=(4, 3)))

	with pytest.raises(IntegrityError) as excinfo:
		load_dataset(cfg)

	assert excinfo.value.file == 'b.csv'


def test_short_on_every_chip(tmp_path):
	cfg = read_config(write_dataset(tmp_path, n_rows=(3, 3)))

	with pytest.raises(IntegrityError) as excinfo:
		load_dataset(cfg)

	assert excinfo.value.file == 'a.csv'
	assert 'expected gridR*gridC*printTipR*printTipC = 4' in str(excinfo.value)


def test_bad_cell(tmp_path):
	cfg = write_dataset(tmp_path)
	path = tmp_path / 'data' / 'a.csv'
	path.write_text(path.read_text().replace('300,10', 'abc,10'))

	with pytest.raises(IntegrityError) as excinfo:
		load_dataset(read_config(cfg))

	assert excinfo.value.file == 'a.csv'
	assert excinfo.value.line == 5
	assert excinfo.value.column == 'Ch1 Mean'


def test_wrong_field_count(tmp_path):
	cfg = write_dataset(tmp_path)
	path = tmp_path / 'data' / 'b.csv'
	path.write_text(path.read_text().replace('2,200', '2,200,7'))

	with pytest.raises(IntegrityError) as excinfo:
		load_dataset(read_config(cfg))

	assert (excinfo.value.file, excinfo.value.line) == ('b.csv', 4)


@pytest.mark.parametrize('sheet', [
	['fileName,interestChannel,Type', 'a,ch1,normal', 'a,ch2,tumor'],
	['fileName,interestChannel,Type', 'a,ch3,normal', 'b,ch2,tumor'],
	['fileName,interestChannel,Type', 'a,ch1,normal', 'c,ch2,tumor'],
	['file,channel,Type', 'a,ch1,normal', 'b,ch2,tumor'],
])
def test_bad_sample_sheet(tmp_path, sheet):
	cfg = read_config(write_dataset(tmp_path, sheet=sheet))

	with pytest.raises(IntegrityError):
		load_dataset(cfg)


def test_missing_file(tmp_path):
	cfg = write_dataset(tmp_path)
	(tmp_path / 'genemap.csv').unlink()

	with pytest.raises(IntegrityError):
		load_dataset(read_config(cfg))


def test_gene_groups_and_networks(tmp_path):
	ds = load_dataset(read_config(write_dataset(tmp_path)))

	path = tmp_path / 'group.txt'
	path.write_text('# group\ng1\nmissing  # not spotted\n\n')
	members = read_gene_group_file(path)
	assert members == ['g1', 'missing']

	ds = add_gene_groups(ds, 'grp', members, 'GeneName')
	assert ds.gene_group('grp').unresolved == ('missing',)
	assert ds.group_rows('grp') == [0, 2]
	assert ds.unresolved_report() == {'group:grp': ('missing',)}

	path = tmp_path / 'net.txt'
	path.write_text('g1\tg2\ng2 g1\ng2\tnope\n')
	ds = add_network(ds, 'net', read_network_file(path), 'GeneName')
	network = ds.gene_network('net')
	assert network.edges == (('g1', 'g2'), ('g2', 'nope'))
	assert network.unresolved == ('nope',)

	# Groups are looked up before networks
	assert ds.pool_rows('grp') == [0, 2]
	assert ds.pool_rows('net') == [0, 1, 2]
	assert ds.pool_rows() == [0, 1, 2, 3]

	with pytest.raises(DataError):
		add_gene_groups(ds, 'net', ['g1'], 'GeneName')
	with pytest.raises(LabelError):
		add_gene_groups(ds, 'other', ['g1'], 'NoSuchLabel')
	with pytest.raises(DataError):
		add_network(ds, 'loop', [('g1', 'g1')], 'GeneName')
	with pytest.raises(LabelError):
		ds.gene_group('nope')


def test_bad_network_file(tmp_path):
	path = tmp_path / 'net.txt'
	path.write_text('a\tb\na b c\n')

	with pytest.raises(IntegrityError) as excinfo:
		read_network_file(path)

	assert excinfo.value.line == 2


def test_select_spots():
	interest = np.array([[100.0, 5.0], [100.0, 100.0], [100.0, 100.0]])
	reference = np.full((3, 2), 100.0)
	raw = make_raw(interest, reference, bg=10.0)

	# fg/bg = 110/10 and 15/10
	selected = select_spots(raw, sig_noise=2.0)
	assert selected.use_spot.tolist() == [[True, False], [True, True], [True, True]]

	# Idempotent and computed from scratch
	assert select_spots(selected, sig_noise=2.0).use_spot.tolist() == selected.use_spot.tolist()
	assert select_spots(selected).use_spot.all()

	removed = select_spots(raw, remove_names=['g2'], label_id='GeneName')
	assert removed.use_spot.tolist() == [[True, True], [False, False], [True, True]]

	bad = select_spots(mark_bad_spots(raw, [2]))
	assert bad.use_spot[:, :].tolist() == [[True, True], [True, True], [False, False]]

	with pytest.raises(DomainError):
		select_spots(raw, sig_noise=-1)
	with pytest.raises(LabelError):
		select_spots(raw, remove_names=['g1'])
	with pytest.raises(ShapeError):
		mark_bad_spots(raw, [3])


def test_select_spots_flags(tmp_path):
	ds = load_dataset(read_config(write_dataset(tmp_path)))
	selected = select_spots(ds, rm_flags=[-50])
	assert selected.use_spot.tolist() == [[True, True]] * 3 + [[False, False]]


def test_synthetic_load(synthetic_raw):
	assert (synthetic_raw.n_spots, synthetic_raw.n_chips) == (400, 24)
	assert synthetic_raw.unresolved_report() == {'group:background': ('NOT_A_GENE',)}
	assert synthetic_raw.sample_sheet.swapped.sum() == 12
