"""Shared fixtures: the bundled synthetic dataset and its normalized form."""

import pytest

from spotflow.config import read_config
from spotflow.ingest import load_dataset, add_gene_groups, add_network, read_gene_group_file, read_network_file
from spotflow.normalize import compute_wa, normalize_loess, summarize_replicates
from spotflow.synthetic import write_synthetic


@pytest.fixture(scope='session')
def synthetic_files(tmp_path_factory):
	"""Paths of the synthetic dataset, written once per session."""
	return write_synthetic(tmp_path_factory.mktemp('synthetic'), seed=7)


@pytest.fixture(scope='session')
def synthetic_raw(synthetic_files):
	"""Raw synthetic dataset with its gene groups and network attached."""
	ds = load_dataset(read_config(synthetic_files.config))

	for name, path in synthetic_files.groups.items():
		ds = add_gene_groups(ds, name, read_gene_group_file(path), 'GeneName')
	for name, path in synthetic_files.networks.items():
		ds = add_network(ds, name, read_network_file(path), 'GeneName')

	return ds


@pytest.fixture(scope='session')
def synthetic_normalized(synthetic_raw):
	"""Synthetic dataset after loess normalization, one column per chip."""
	return normalize_loess(compute_wa(synthetic_raw))


@pytest.fixture(scope='session')
def synthetic_genes(synthetic_normalized):
	"""Synthetic dataset with replicate spots and dye-swap chips averaged.

	One row per gene and one column per sample.
	"""
	return summarize_replicates(synthetic_normalized, gene_label='GeneName', sample_label='Sample')
