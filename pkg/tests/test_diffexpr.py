"""Test gene-wise differential expression."""

import pytest
import numpy as np
from scipy import stats as sps

from spotflow.diffexpr import de_genes_two_groups, design_anova, fit_anova, de_frame, de_table, volcano_data
from spotflow.errors import DataError, LabelError
from spotflow.stats import welch_t, adjust_pvalues
from spotflow.synthetic import PLANTED_GENES
from spotflow.test import make_normalized, make_null, exact_rank_sum_level


@pytest.fixture()
def two_groups():
	"""Six samples, three normal then three tumor, and five genes."""
	w = np.array([
		[0.1, -0.2, 0.0, 2.1, 1.9, 2.3],    # up in tumor
		[0.0, 0.3, -0.1, 0.2, -0.2, 0.1],   # no change
		[1.0, 1.2, 0.8, -1.1, -0.9, -1.0],  # down in tumor
		[0.5, np.nan, np.nan, 0.1, 0.2, 0.3],  # too few normal values
		[1.0, 1.0, 1.0, 1.0, 1.0, 1.0],     # constant
	])
	return make_normalized(w, {'Type': ['normal'] * 3 + ['tumor'] * 3, 'Site': ['a', 'b', 'c'] * 2})


def test_two_groups_t(two_groups):
	res = de_genes_two_groups(two_groups, 'Type')

	assert res.families == ('t',)
	assert res.levels == ('normal', 'tumor')
	assert res.gene_ids == ('g1', 'g2', 'g3')
	assert res.rows == (0, 1, 2)
	assert [s[0] for s in res.skipped] == [3, 4]

	# Second level minus first
	expected = welch_t(two_groups.w[0, 3:], two_groups.w[0, :3])
	assert res.statistic[0, 0] == pytest.approx(expected.statistic)
	assert res.raw_p[0, 0] == pytest.approx(expected.p_value)
	assert res.fold_change[0, 0] == pytest.approx(2.1 - (-0.1 / 3))
	assert res.statistic[2, 0] < 0

	np.testing.assert_allclose(res.adj_p[:, 0], adjust_pvalues(res.raw_p[:, 0], 'BH'))
	order = list(res.ranking())
	assert set(order[:2]) == {0, 2} and order[2] == 1


def test_two_groups_other_tests(two_groups):
	res = de_genes_two_groups(two_groups, 'Type', test='wilcox', adjust='none')
	assert res.test_method == 'wilcoxon-exact'
	assert res.raw_p[0, 0] == pytest.approx(0.1)

	# The constant gene is kept, with nothing to detect
	assert res.rows == (0, 1, 2, 4)
	assert res.raw_p[3, 0] == 1
	assert [s[0] for s in res.skipped] == [3]
	np.testing.assert_array_equal(res.adj_p, res.raw_p)

	a = de_genes_two_groups(two_groups, 'Type', test='bootT', boot_b=200, seed=3)
	b = de_genes_two_groups(two_groups, 'Type', test='bootT', boot_b=200, seed=3, threads=3)
	np.testing.assert_array_equal(a.raw_p, b.raw_p)
	assert np.all(a.raw_p >= 1 / 201)


def test_two_groups_errors(two_groups):
	with pytest.raises(LabelError):
		de_genes_two_groups(two_groups, 'Site')
	with pytest.raises(LabelError):
		de_genes_two_groups(two_groups, 'Nope')
	with pytest.raises(DataError):
		de_genes_two_groups(two_groups, 'Type', test='limma')
	with pytest.raises(LabelError):
		de_genes_two_groups(two_groups, 'Type', gene_label='Symbol')


def test_empty_level_excluded():
	ds = make_normalized(
		[[0.0, 1.0, 0.2, 1.1, 5.0], [1.0, 0.0, 1.2, 0.1, 9.0]],
		{'Type': ['a', 'b', 'a', 'b', '']},
	)
	res = de_genes_two_groups(ds, 'Type')
	assert res.levels == ('a', 'b')
	np.testing.assert_allclose(res.group_means, [[0.1, 1.05], [1.1, 0.05]])


def test_design_anova():
	ds = make_normalized(np.zeros((1, 6)), {'Tissue': ['lung', 'colon', 'liver'] * 2})
	design = design_anova(ds, 'Tissue')

	assert design.level_names == (('colon', 'liver', 'lung'),)
	assert design.coefficient_names == ('(Intercept)', 'liver', 'lung')
	assert design.contrast_names == ('liver-colon', 'lung-colon', 'lung-liver')
	np.testing.assert_array_equal(design.contrasts, [[0, 0, 0], [1, 0, -1], [0, 1, 1]])
	np.testing.assert_array_equal(design.design[:3], [[1, 0, 1], [1, 0, 0], [1, 1, 0]])

	baseline = design_anova(ds, 'Tissue', contrasts='baseline')
	assert baseline.contrast_names == ('liver-colon', 'lung-colon')


def test_design_errors():
	ds = make_normalized(np.zeros((1, 4)), {'A': ['x', 'x', 'y', 'y'], 'B': ['p', 'p', 'q', 'q'], 'C': ['z'] * 4})

	with pytest.raises(DataError):
		design_anova(ds, ['A', 'B'])
	with pytest.raises(LabelError):
		design_anova(ds, 'C')
	with pytest.raises(DataError):
		design_anova(ds, 'A', contrasts='helmert')


def test_anova_matches_pooled_t(two_groups):
	"""With one two-level factor, the contrast t and the F test match the pooled t test."""
	ds = make_normalized(two_groups.w[:3], {'Type': ['normal'] * 3 + ['tumor'] * 3})
	design = design_anova(ds, 'Type')

	res_t = fit_anova(ds, design)
	res_f = fit_anova(ds, design, return_f=True)
	pooled = de_genes_two_groups(ds, 'Type', pooled=True)

	np.testing.assert_allclose(res_t.statistic, pooled.statistic)
	np.testing.assert_allclose(res_t.raw_p, pooled.raw_p)
	np.testing.assert_allclose(res_t.fold_change, pooled.fold_change)
	np.testing.assert_allclose(res_f.statistic, pooled.statistic ** 2)
	np.testing.assert_allclose(res_f.raw_p, pooled.raw_p)
	assert res_t.families == ('tumor-normal',)


def test_anova_f_matches_oneway():
	rng = np.random.default_rng(0)
	w = rng.normal(size=(4, 9))
	w[0, 6:] += 3
	ds = make_normalized(w, {'Tissue': ['a', 'b', 'c'] * 3})

	res = fit_anova(ds, design_anova(ds, 'Tissue'), return_f=True)
	groups = [[0, 3, 6], [1, 4, 7], [2, 5, 8]]

	for i in range(4):
		expected = sps.f_oneway(*(w[i, g] for g in groups))
		assert res.statistic[i, 0] == pytest.approx(expected.statistic)
		assert res.raw_p[i, 0] == pytest.approx(expected.pvalue)

	means = np.column_stack([w[:, g].mean(axis=1) for g in groups])
	np.testing.assert_allclose(res.fold_change[:, 0], means.max(axis=1) - means.min(axis=1))


def test_anova_missing_and_constant():
	w = np.array([
		[0.1, 0.2, 1.1, 1.3, np.nan, 0.0],
		[0.0, np.nan, np.nan, 1.0, 2.0, 3.0],
		[1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
	])
	ds = make_normalized(w, {'Type': ['a', 'a', 'b', 'b', 'a', 'b']})
	design = design_anova(ds, 'Type')
	res = fit_anova(ds, design, return_f=True)

	# Genes with missing values are fit on their finite samples; the constant gene gives F = 0
	assert res.rows == (0, 1, 2)
	assert res.statistic[2, 0] == 0
	assert res.raw_p[2, 0] == 1

	finite = make_normalized(w[:1, [0, 1, 2, 3, 5]], {'Type': ['a', 'a', 'b', 'b', 'b']})
	expected = fit_anova(finite, design_anova(finite, 'Type'), return_f=True)
	assert res.statistic[0, 0] == pytest.approx(expected.statistic[0, 0])

	sparse = make_normalized([[0.0, np.nan, np.nan, 1.0]], {'Type': ['a', 'a', 'b', 'b']})
	res = fit_anova(sparse, design_anova(sparse, 'Type'))
	assert res.n_genes == 0
	assert len(res.skipped) == 1


def test_no_residual_df():
	ds = make_normalized(np.zeros((1, 2)), {'Type': ['a', 'b']})
	with pytest.raises(DataError):
		fit_anova(ds, design_anova(ds, 'Type'))


def test_de_table(two_groups):
	res = de_genes_two_groups(two_groups, 'Type')
	frame = de_frame(res)

	assert list(frame.columns) == ['geneId', 'GeneName', 'mean:normal', 'mean:tumor', 'foldChange', 'statistic', 'rawP', 'adjP']
	assert frame['adjP'].is_monotonic_increasing
	assert set(frame['geneId'][:2]) == {'g1', 'g3'}

	csv = de_table(res, top_n=1)
	assert csv.count('\n') == 2
	assert de_table(res, 'html').startswith('<!DOCTYPE html>')


def test_de_table_families():
	ds = make_normalized(np.random.default_rng(1).normal(size=(3, 6)), {'Tissue': ['a', 'b', 'c'] * 2})
	res = fit_anova(ds, design_anova(ds, 'Tissue'))
	frame = de_frame(res, family='c-b')

	assert 'adjP:c-b' in frame.columns and 'adjP:b-a' in frame.columns
	assert frame['adjP:c-b'].is_monotonic_increasing

	with pytest.raises(LabelError):
		de_frame(res, family='d-a')


def test_volcano(two_groups):
	res = de_genes_two_groups(two_groups, 'Type')
	x, y = volcano_data(res)

	np.testing.assert_allclose(x, res.fold_change[:, 0])
	np.testing.assert_allclose(y, -np.log10(res.raw_p[:, 0]))


def test_synthetic_planted(synthetic_genes):
	"""The planted genes are the top hits."""
	res = de_genes_two_groups(synthetic_genes, 'Type', gene_label='GeneName')
	top = [res.gene_ids[i] for i in res.ranking()[:len(PLANTED_GENES)]]

	assert set(top) == set(PLANTED_GENES)
	assert np.all(res.adj_p[[res.gene_ids.index(g) for g in PLANTED_GENES], 0] < 0.01)


@pytest.mark.slow
@pytest.mark.parametrize('test,kwargs,level', [
	('t', {}, 0.05),
	# Exact rank sum of 10 against 10 cannot reach 0.05 itself
	('wilcox', {}, exact_rank_sum_level(10, 10, 0.05)),
	# p = (1 + count) / 1000
	('bootT', {'boot_b': 999}, 0.05),
])
def test_null_calibration(test, kwargs, level):
	"""Without signal the share of raw p-values at most 0.05 is the test's level."""
	n_genes, seeds = 500, range(4)

	hits = 0
	for seed in seeds:
		ds = make_null(n_genes, 20, seed)
		res = de_genes_two_groups(ds, 'Type', test=test, adjust='none', seed=seed, **kwargs)
		assert len(res.rows) == n_genes
		hits += int(np.count_nonzero(res.raw_p[:, 0] <= 0.05))

	n = n_genes * len(seeds)
	sd = np.sqrt(level * (1 - level) / n)
	assert abs(hits / n - level) <= 3 * sd
