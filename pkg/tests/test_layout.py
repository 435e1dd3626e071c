"""Test spotflow.layout."""

import pytest
import numpy as np
from hypothesis import given, strategies as st

from spotflow.layout import ChipLayout
from spotflow.errors import ShapeError


def test_standard_chip():
	layout = ChipLayout(12, 4, 10, 10)

	assert layout.n_spots == 4800
	assert layout.n_blocks == 48
	assert layout.lattice_shape == (120, 40)

	# First spot of the second block
	assert [int(c) for c in layout.coordinates(100)] == [0, 1, 0, 0]
	assert int(layout.block_of(4799)) == 47


def test_invalid_dimensions():
	with pytest.raises(ValueError):
		ChipLayout(0, 4, 10, 10)

	layout = ChipLayout(1, 1, 2, 2)
	with pytest.raises(ShapeError):
		layout.coordinates(4)
	with pytest.raises(ShapeError):
		layout.spot_index(0, 0, 2, 0)
	with pytest.raises(ShapeError):
		layout.to_lattice([1.0, 2.0])


layouts = st.builds(
	ChipLayout,
	st.integers(1, 5), st.integers(1, 5), st.integers(1, 6), st.integers(1, 6),
)


@given(layouts)
def test_coordinates_bijection(layout):
	"""Every spot has distinct coordinates and lattice positions."""
	coords = layout.coordinates()
	np.testing.assert_array_equal(layout.spot_index(*coords), np.arange(layout.n_spots))

	rows, cols = layout.lattice_position()
	assert len(set(zip(rows.tolist(), cols.tolist()))) == layout.n_spots

	lattice = layout.to_lattice(np.arange(layout.n_spots, dtype=float))
	assert lattice.shape == layout.lattice_shape
	assert not np.isnan(lattice).any()
