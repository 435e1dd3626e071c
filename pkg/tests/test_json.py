"""Test canonical JSON encoding in spotflow.json."""

import math

import pytest
import numpy as np
from hypothesis import given, strategies as st

from spotflow.json import to_json, canonical_dumps, canonical_loads, JsonTypeError


def test_canonical_dumps_sorted():
	"""Key order and numpy types do not change the encoding."""
	a = {'b': np.int64(2), 'a': [np.float64(0.5), True, None]}
	b = {'a': (0.5, np.bool_(True), None), 'b': 2}
	assert canonical_dumps(a) == canonical_dumps(b) == '{"a":[0.5,true,null],"b":2}'


def test_non_finite():
	text = canonical_dumps([float('nan'), float('inf'), -float('inf')])
	assert text == '["NaN","Infinity","-Infinity"]'

	values = [float(v) for v in canonical_loads(text)]
	assert math.isnan(values[0])
	assert values[1:] == [float('inf'), -float('inf')]


def test_mapping_keys():
	assert to_json({1: 'a'}) == {'1': 'a'}

	with pytest.raises(JsonTypeError):
		to_json({(1, 2): 'a'})

	with pytest.raises(JsonTypeError):
		to_json({1: 'a', '1': 'b'})


def test_bad_value():
	with pytest.raises(JsonTypeError) as excinfo:
		to_json({'a': [1, object()]})

	assert excinfo.value.path == ('a', 1)


def test_sets_sorted():
	assert to_json({3, 1, 2}) == [1, 2, 3]


def test_loads_bytes():
	assert canonical_loads(canonical_dumps({'x': 'é'}).encode('utf-8')) == {'x': 'é'}


json_values = st.recursive(
	st.none() | st.booleans() | st.integers() | st.floats(allow_nan=False, allow_infinity=False) | st.text(),
	lambda children: st.lists(children) | st.dictionaries(st.text(), children),
	max_leaves=20,
)


@given(json_values)
def test_canonical_stable(value):
	"""Encoding decoded canonical JSON gives the same text."""
	text = canonical_dumps(value)
	assert canonical_dumps(canonical_loads(text)) == text
