"""Test the operation registry and replay of recorded pipelines."""

import pytest

from spotflow.dataclass import evolve
from spotflow.diffexpr import DEResult
from spotflow.errors import DataError, ProvenanceError
from spotflow.operations import OPERATIONS, Option, get_operation, run_load, run_operation, replay
from spotflow.provenance import ProvenanceGraph, canonical_params, graph_hash
from spotflow.synthetic import write_synthetic
from spotflow.test import make_normalized


def run_pipeline(files, steps):
	ds, graph, node = run_load(
		files.config,
		groups=sorted(files.groups.items()),
		networks=sorted(files.networks.items()),
	)
	obj = ds
	for name, params in steps:
		obj, graph, node = run_operation(name, obj, params, graph, node)
	return obj, graph


STEPS = [
	('normalize', {'span': 0.4}),
	('summarize', {'gene_label': 'GeneName', 'sample_label': 'Sample'}),
	('de', {'label': 'Type'}),
]


@pytest.fixture(scope='module')
def pipeline(synthetic_files):
	return run_pipeline(synthetic_files, STEPS)


def with_params(graph, op_name, **changes):
	"""Copy of a graph with some recorded parameters of an operation changed."""
	nodes = []
	for node in graph.nodes:
		if node.kind == 'operation' and node.name == op_name:
			node = evolve(node, params=canonical_params(dict(node.param_dict, **changes)))
		nodes.append(node)
	return ProvenanceGraph(nodes=nodes)


def test_registry():
	assert set(OPERATIONS) >= {
		'load', 'select', 'normalize', 'summarize', 'de', 'anova', 'cluster', 'classify',
		'relnet', 'relnet-diff', 'modules', 'netscore',
	}
	assert get_operation('load').reads_files
	assert not get_operation('de').reads_files

	with pytest.raises(ProvenanceError):
		get_operation('frobnicate')


def test_complete_params():
	op = get_operation('de')
	params = op.complete_params({'label': 'Type'})

	assert params == {
		'label': 'Type', 'test': 't', 'adjust': 'BH', 'boot_b': 1000, 'pooled': False,
		'gene_label': None, 'seed': 0,
	}
	with pytest.raises(ProvenanceError):
		op.complete_params({'label': 'Type', 'threads': 4})
	with pytest.raises(DataError):
		op.complete_params({})


def test_cli_args():
	assert Option('groups', str, (), multiple=True).cli_args(['a', 'b']) == ['--groups', 'a', 'b']
	assert Option('groups', str, (), multiple=True).cli_args([]) == []
	assert Option('rm_bad', bool, False).cli_args(True) == ['--rm-bad']


def test_run_operation_input_type():
	ds = make_normalized([[1.0, 2.0]], {'Type': ['a', 'b']})
	with pytest.raises(DataError):
		run_operation('select', ds, {}, ProvenanceGraph(), 'obj-1')
	with pytest.raises(ProvenanceError):
		run_operation('load', ds, {}, ProvenanceGraph(), 'obj-1')


def test_pipeline_recorded(pipeline):
	out, graph = pipeline

	assert isinstance(out, DEResult)
	assert [n.name for n in graph.operations] == ['load', 'normalize', 'summarize', 'de']
	assert graph.final.name == 'DEResult'

	load = graph.operations[0]
	assert load.param_dict == {'groups': ['background', 'planted'], 'networks': ['chain'], 'group_label': None}
	# Config, group and network files, then sample sheet, gene map and 24 quantification tables
	assert len(load.inputs) == 4 + 2 + 24

	normalize = graph.producer('obj-2')
	assert normalize.param_dict['span'] == 0.4
	assert normalize.param_dict['seed'] == 0
	assert 'threads' not in normalize.param_dict


def test_replay_matches(pipeline, tmp_path):
	_, graph = pipeline
	report = replay(graph, keep_intermediates=tmp_path / 'objects', threads=2)

	assert report.ok
	assert report.first_divergence is None
	assert [c.status for c in report.checks] == ['match'] * 4
	assert report.graph_hash == graph_hash(graph)
	assert sorted(p.name for p in (tmp_path / 'objects').iterdir()) == [
		'obj-1.mges', 'obj-2.mges', 'obj-3.mges', 'obj-4.mges',
	]

	lines = report.script.splitlines()
	assert lines[:2] == ['#!/bin/sh', 'set -e']
	assert lines[2].startswith('spotflow load --config ')
	assert '--group background=' in lines[2]
	assert lines[3].startswith('spotflow normalize --in obj-1.mges ')
	assert lines[3].endswith('--out obj-2.mges')
	assert '--span 0.4' in lines[3]


def test_replay_edited_params(pipeline):
	"""An edited parameter diverges at its operation and flags everything after it."""
	_, graph = pipeline
	edited = with_params(graph, 'normalize', span=0.3)
	report = replay(edited)

	assert not report.ok
	assert report.first_divergence == 'op-2'
	assert [c.status for c in report.checks] == ['match', 'mismatch', 'mismatch', 'mismatch']
	assert [c.downstream for c in report.checks] == [False, False, True, True]
	assert 'downstream of op-2' in report.lines()[3]

	with pytest.raises(ProvenanceError):
		replay(edited, strict=True)


def test_replay_unknown(pipeline):
	_, graph = pipeline

	with pytest.raises(ProvenanceError):
		replay(with_params(graph, 'de', colour='red'))

	nodes = [evolve(n, name='frobnicate') if n.kind == 'operation' and n.name == 'de' else n for n in graph.nodes]
	with pytest.raises(ProvenanceError):
		replay(ProvenanceGraph(nodes=nodes))


def test_replay_changed_input(tmp_path):
	files = write_synthetic(tmp_path, seed=3)
	_, graph = run_pipeline(files, STEPS[:1])

	with open(files.groups['background'], 'a', encoding='utf-8') as fh:
		fh.write('ANOTHER_MISSING_GENE\n')

	report = replay(graph)
	load, normalize = report.checks

	assert load.status == 'mismatch'
	assert load.changed_inputs == (str(files.groups['background']),)
	assert normalize.downstream
	assert 'changed inputs' in report.lines()[0]
