"""Spotted chip geometry.

Spots are printed in a meta-grid of ``grid_r x grid_c`` print-tip blocks, each
block holding ``print_tip_r x print_tip_c`` spots. Quantification tables list
spots block by block (blocks row-major over the meta-grid) and row-major
within a block, which fixes the bijection between a spot's position in the
table and its ``(grid_row, grid_col, tip_row, tip_col)`` coordinates.
"""

import numpy as np

from .dataclass import dataclass, field
from .errors import ShapeError


__all__ = ['ChipLayout']


def _positive(instance, attribute, value):
	if value < 1:
		raise ValueError('{} must be a positive integer, got {}'.format(attribute.name, value))


@dataclass
class ChipLayout:
	"""Geometry of a spotted chip.

	:param int grid_r: Rows of print-tip blocks.
	:param int grid_c: Columns of print-tip blocks.
	:param int print_tip_r: Spot rows within a block.
	:param int print_tip_c: Spot columns within a block.

	>>> layout = ChipLayout(12, 4, 10, 10)
	>>> layout.n_spots
	4800
	>>> layout.lattice_shape
	(120, 40)
	>>> [int(c) for c in layout.coordinates(123)]
	[0, 1, 2, 3]
	>>> int(layout.spot_index(0, 1, 2, 3))
	123
	"""

	grid_r = field(int, validator=_positive)
	grid_c = field(int, validator=_positive)
	print_tip_r = field(int, validator=_positive)
	print_tip_c = field(int, validator=_positive)

	@property
	def spots_per_block(self):
		return self.print_tip_r * self.print_tip_c

	@property
	def n_blocks(self):
		return self.grid_r * self.grid_c

	@property
	def n_spots(self):
		return self.n_blocks * self.spots_per_block

	@property
	def lattice_shape(self):
		"""Shape of the spot lattice on the physical chip, (rows, columns)."""
		return (self.grid_r * self.print_tip_r, self.grid_c * self.print_tip_c)

	def _spots(self, spot):
		if spot is None:
			return np.arange(self.n_spots)

		spot = np.asarray(spot)
		if np.any((spot < 0) | (spot >= self.n_spots)):
			raise ShapeError('Spot index out of range for a {}-spot chip'.format(self.n_spots))

		return spot

	def block_of(self, spot=None):
		"""Print-tip block number of spots (all spots if None).

		Blocks are numbered row-major over the meta-grid, starting at 0.
		"""
		return self._spots(spot) // self.spots_per_block

	def coordinates(self, spot=None):
		"""Get ``(grid_row, grid_col, tip_row, tip_col)`` of spots (all spots if None)."""
		spot = self._spots(spot)
		block, within = np.divmod(spot, self.spots_per_block)
		grid_row, grid_col = np.divmod(block, self.grid_c)
		tip_row, tip_col = np.divmod(within, self.print_tip_c)
		return grid_row, grid_col, tip_row, tip_col

	def spot_index(self, grid_row, grid_col, tip_row, tip_col):
		"""Inverse of :meth:`coordinates`."""
		grid_row, grid_col, tip_row, tip_col = map(np.asarray, (grid_row, grid_col, tip_row, tip_col))

		if np.any((grid_row < 0) | (grid_row >= self.grid_r) |
		          (grid_col < 0) | (grid_col >= self.grid_c) |
		          (tip_row < 0) | (tip_row >= self.print_tip_r) |
		          (tip_col < 0) | (tip_col >= self.print_tip_c)):
			raise ShapeError('Spot coordinates out of range')

		block = grid_row * self.grid_c + grid_col
		return (block * self.print_tip_r + tip_row) * self.print_tip_c + tip_col

	def lattice_position(self, spot=None):
		"""Get ``(row, col)`` of spots on the physical chip lattice."""
		grid_row, grid_col, tip_row, tip_col = self.coordinates(spot)
		return grid_row * self.print_tip_r + tip_row, grid_col * self.print_tip_c + tip_col

	def to_lattice(self, values):
		"""Arrange a per-spot vector on the chip lattice.

		:param values: Vector with one value per spot.
		:returns: Array of shape :attr:`lattice_shape`.
		"""
		values = np.asarray(values)
		if values.shape != (self.n_spots,):
			raise ShapeError('Expected {} spot values, got shape {}'.format(self.n_spots, values.shape))

		rows, cols = self.lattice_position()
		lattice = np.full(self.lattice_shape, np.nan, dtype=float)
		lattice[rows, cols] = values
		return lattice
