"""Test the binary container format."""

import struct

import pytest
import numpy as np

from spotflow.container import MAGIC, FORMAT_VERSION, encode, decode, save_container, load_container, object_hash
from spotflow.errors import ContainerError
from spotflow.provenance import ProvenanceGraph, add_file
from spotflow.test import make_normalized


@pytest.fixture()
def dataset():
	w = np.array([[0.5, np.nan, -1.0], [2.0, 0.0, 1e-300]])
	return make_normalized(w, {'Type': ['a', 'b', 'b']}, notes='ünïcode')


def test_round_trip(dataset, tmp_path):
	path = tmp_path / 'ds.mges'
	prov = ProvenanceGraph()

	h = save_container(path, dataset, prov)
	loaded = load_container(path)

	assert h == object_hash(dataset)
	assert loaded.obj == dataset
	assert loaded.provenance == prov
	np.testing.assert_array_equal(loaded.obj.w, dataset.w)
	assert loaded.obj.use_spot.dtype == bool
	assert loaded.obj.notes == 'ünïcode'
	assert path.read_bytes().startswith(MAGIC + struct.pack('<I', FORMAT_VERSION))


def test_deterministic(dataset):
	assert encode(dataset) == encode(dataset)
	assert decode(encode(dataset)).provenance is None


def test_hash_ignores_provenance(dataset, tmp_path):
	path = tmp_path / 'in.txt'
	path.write_text('x')
	prov, _ = add_file(ProvenanceGraph(), path)

	assert encode(dataset, prov) != encode(dataset)
	assert object_hash(dataset) == object_hash(decode(encode(dataset, prov)).obj)


def test_bad_files(dataset, tmp_path):
	data = encode(dataset)

	with pytest.raises(ContainerError, match='magic'):
		decode(b'XXXXX' + data[5:])
	with pytest.raises(ContainerError, match='version'):
		decode(MAGIC + struct.pack('<I', 99) + data[9:])
	with pytest.raises(ContainerError, match='truncated'):
		decode(data[:-1])
	with pytest.raises(ContainerError, match='trailing'):
		decode(data + b'\0')
	with pytest.raises(ContainerError):
		load_container(tmp_path / 'missing.mges')


def test_not_stored():
	with pytest.raises(ContainerError):
		encode(ProvenanceGraph())
