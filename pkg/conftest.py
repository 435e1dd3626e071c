"""Doctest environment: print numpy scalars as plain numbers (numpy >= 2)."""

import numpy as np
import pytest
from _pytest.doctest import DoctestItem


@pytest.fixture(autouse=True)
def _numpy_legacy_repr(request):
	if not isinstance(request.node, DoctestItem):
		yield
		return
	old = np.get_printoptions()
	np.set_printoptions(legacy='1.25')
	try:
		yield
	finally:
		np.set_printoptions(**old)
