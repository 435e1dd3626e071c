"""Bundled synthetic dataset with planted signal.

:func:`.write_synthetic` writes a complete input set: load configuration,
sample sheet, gene map, one quantification table per chip, gene group files
and a gene network file. Everything is drawn from a single seed, so the same
seed always gives byte-identical files.

Each of 12 samples is hybridized twice against a common reference, the
second time with swapped dyes. Every gene is spotted twice. The planted
signal is

- a shift of :data:`DE_SHIFT` in tumor samples for the genes of group
  ``planted``,
- two genes whose correlation flips sign between normal and tumor samples,
- a chain of genes driven by one shared factor, listed in network ``chain``,

on top of an intensity-dependent dye bias and print-tip offsets for the
normalization to remove.
"""

import logging
from pathlib import Path

import numpy as np

from .dataclass import dataclass, field
from .layout import ChipLayout


__all__ = [
	'SYNTH_LAYOUT', 'N_SAMPLES', 'DE_SHIFT', 'PLANTED_GENES', 'FLIP_PAIR', 'CHAIN_GENES',
	'SyntheticFiles', 'gene_names', 'write_synthetic',
]


logger = logging.getLogger(__name__)


SYNTH_LAYOUT = ChipLayout(2, 2, 10, 10)
N_SAMPLES = 12
DE_SHIFT = 2.0
TISSUES = ('colon', 'liver', 'lung')
HEADERS = ('Ch1 Mean', 'Ch1 B Mean', 'Ch2 Mean', 'Ch2 B Mean', 'Flags')
PREAMBLE = 3


def gene_names(n=SYNTH_LAYOUT.n_spots // 2):
	"""Names of the synthetic genes.

	>>> gene_names(3)
	['G001', 'G002', 'G003']
	"""
	return ['G{:03d}'.format(i + 1) for i in range(n)]


PLANTED_GENES = tuple(gene_names(10))
FLIP_PAIR = ('G011', 'G012')
CHAIN_GENES = tuple(gene_names(20)[12:20])


@dataclass(json=False)
class SyntheticFiles:
	"""Paths written by :func:`.write_synthetic`.

	:param config: Load configuration file.
	:param dict groups: Gene group name to file.
	:param dict networks: Gene network name to file.
	"""

	config = field(validate_type=False, convert_type=False)
	groups = field(dict, factory=dict)
	networks = field(dict, factory=dict)


def _samples():
	"""``(sample, type, tissue)`` of each sample."""
	out = []
	for s in range(N_SAMPLES):
		kind = 'normal' if s < N_SAMPLES // 2 else 'tumor'
		out.append(('S{:02d}'.format(s + 1), kind, TISSUES[s % len(TISSUES)]))
	return out


def _true_w(rng, genes, samples):
	"""``genes x samples`` log-ratios before bias and spot noise."""
	n_genes = len(genes)
	tumor = np.array([kind == 'tumor' for _, kind, _ in samples])
	index = {g: i for i, g in enumerate(genes)}

	w = rng.normal(0.0, 0.3, size=(n_genes, 1)) + rng.normal(0.0, 0.25, size=(n_genes, len(samples)))

	for g in PLANTED_GENES:
		w[index[g], tumor] += DE_SHIFT

	latent = rng.normal(0.0, 1.0, size=len(samples))
	a, b = (index[g] for g in FLIP_PAIR)
	w[a] = latent + rng.normal(0.0, 0.15, size=len(samples))
	w[b] = np.where(tumor, -latent, latent) + rng.normal(0.0, 0.15, size=len(samples))

	factor = rng.normal(0.0, 1.0, size=len(samples))
	for g in CHAIN_GENES:
		w[index[g]] = factor + rng.normal(0.0, 0.2, size=len(samples))

	return w


def _format(value):
	return '{:.3f}'.format(value)


def _write_quant(path, rng, spot_w, spot_a, layout, swapped):
	n = layout.n_spots
	block = layout.block_of()
	tip_offset = rng.normal(0.0, 0.15, size=layout.n_blocks)[block]

	# Dye bias in log2 space, removed by loess
	bias = 0.4 * np.sin(spot_a / 2.0) + 0.1 * (spot_a - 10.0) + tip_offset
	a = spot_a + rng.normal(0.0, 0.1, size=n)
	w = spot_w + bias + rng.normal(0.0, 0.1, size=n)

	interest = 2.0 ** (a + w / 2.0)
	reference = 2.0 ** (a - w / 2.0)
	bg1 = 2.0 ** rng.normal(5.0, 0.1, size=n)
	bg2 = 2.0 ** rng.normal(5.0, 0.1, size=n)

	ch1, ch2 = (reference, interest) if swapped else (interest, reference)
	flags = np.where(rng.random(n) < 0.01, -50, 0)

	lines = ['# synthetic scan', '# spotflow', '']
	lines.append(','.join(('Spot',) + HEADERS))
	for i in range(n):
		lines.append(','.join([
			str(i + 1),
			_format(ch1[i] + bg1[i]), _format(bg1[i]),
			_format(ch2[i] + bg2[i]), _format(bg2[i]),
			str(int(flags[i])),
		]))

	Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')


def _config_text(layout):
	return '\n'.join([
		'# synthetic dataset written by spotflow synth',
		'dataDir = "data"',
		'ext = ".csv"',
		'sampleFile = "samples.csv"',
		'datasetId = "synthetic"',
		'geneMap = "genemap.csv"',
		'headers = c({})'.format(', '.join("'{}'".format(h) for h in HEADERS)),
		'skip = {}'.format(PREAMBLE),
		'sep = ","',
		'gridR = {}'.format(layout.grid_r),
		'gridC = {}'.format(layout.grid_c),
		'printTipR = {}'.format(layout.print_tip_r),
		'printTipC = {}'.format(layout.print_tip_c),
	]) + '\n'


def write_synthetic(directory, seed=7):
	"""Write the synthetic dataset to a directory.

	:param directory: Output directory, created if missing.
	:param int seed: Seed of every random draw.
	:rtype: .SyntheticFiles
	"""
	directory = Path(directory)
	(directory / 'data').mkdir(parents=True, exist_ok=True)

	layout = SYNTH_LAYOUT
	rng = np.random.default_rng(seed)
	genes = gene_names()
	samples = _samples()

	# Replicate spots of a gene sit in different blocks
	spot_gene = np.tile(np.arange(len(genes)), 2)
	gene_a = rng.uniform(7.0, 13.0, size=len(genes))
	w = _true_w(rng, genes, samples)

	with open(directory / 'genemap.csv', 'w', encoding='utf-8') as fh:
		fh.write('GeneName,SpotId\n')
		for i, g in enumerate(spot_gene):
			fh.write('{},spot{:04d}\n'.format(genes[g], i + 1))

	sheet = ['fileName,interestChannel,Sample,Type,Tissue']
	chip = 0
	for s, (sample, kind, tissue) in enumerate(samples):
		for swapped in (False, True):
			chip += 1
			name = 'chip{:02d}'.format(chip)
			sheet.append(','.join([name, 'ch2' if swapped else 'ch1', sample, kind, tissue]))
			_write_quant(directory / 'data' / (name + '.csv'), rng, w[spot_gene, s], gene_a[spot_gene], layout, swapped)

	(directory / 'samples.csv').write_text('\n'.join(sheet) + '\n', encoding='utf-8')
	(directory / 'config.txt').write_text(_config_text(layout), encoding='utf-8')

	groups = {
		'planted': directory / 'planted.txt',
		'background': directory / 'background.txt',
	}
	groups['planted'].write_text('\n'.join(PLANTED_GENES) + '\n', encoding='utf-8')
	groups['background'].write_text('\n'.join(genes[100:120]) + '\nNOT_A_GENE\n', encoding='utf-8')

	networks = {'chain': directory / 'chain.txt'}
	edges = ['{}\t{}'.format(a, b) for a, b in zip(CHAIN_GENES, CHAIN_GENES[1:])]
	networks['chain'].write_text('# gene chain\n' + '\n'.join(edges) + '\n', encoding='utf-8')

	logger.info('Wrote synthetic dataset of %d chips to %s', chip, directory)
	return SyntheticFiles(config=directory / 'config.txt', groups=groups, networks=networks)
