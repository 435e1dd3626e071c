"""Convert data to canonical JSON.

Canonical JSON is what ends up in container metadata and provenance records,
so it must encode the same value to the same bytes every time: keys are
sorted, floats use the shortest representation which round-trips and
non-finite floats are written as the strings ``"NaN"``, ``"Infinity"`` and
``"-Infinity"`` (which :class:`float` parses back).

.. data:: default_json_converter

	Default instance of :class:`.JsonConverter` to use at module level.

.. function:: to_json

	Alias for :meth:`.JsonConverter.to_json` method of
	:data:`.default_json_converter`.
"""

import json
import math
import numbers
from collections.abc import Mapping, Set

import numpy as np

from .abc import Jsonable


__all__ = ['JsonTypeError', 'to_json', 'canonical_dumps', 'canonical_loads']


NoneType = type(None)


class JsonTypeError(TypeError):
	"""Raised when a value has no JSON equivalent.

	:param str msg: Error message.
	:param value: The value which could not be converted.
	:param tuple path: Keys/indices leading to ``value`` from the root object.
	"""
	def __init__(self, msg=None, value=None, *, path=None):

		self.value = value
		self.path = path

		if msg is not None:
			TypeError.__init__(self, msg)


def float_to_json(value):
	"""Convert a float to JSON, encoding non-finite values as strings.

	>>> float_to_json(0.5)
	0.5
	>>> float_to_json(float('nan'))
	'NaN'
	>>> float_to_json(float('-inf'))
	'-Infinity'
	"""
	value = float(value)

	if math.isnan(value):
		return 'NaN'
	if math.isinf(value):
		return 'Infinity' if value > 0 else '-Infinity'

	return value


class JsonConverter:
	"""Converts objects to JSON recursively."""

	def to_json(self, value):
		"""Convert a value to a JSON-equivalent object.

		:param value: Object to be converted to JSON.
		:returns: Value which can be passed to :func:`.canonical_dumps`.

		:raises JsonTypeError: If ``value`` can't be converted to JSON.
		"""
		return self._to_json(value, path=())

	def _to_json(self, value, path):
		"""Recursive implementation of :meth:`to_json`."""

		# bool is an int subclass, numpy.bool_ is neither
		if isinstance(value, (bool, np.bool_)):
			return bool(value)

		if isinstance(value, (str, NoneType)):
			return value

		# Instance of Jsonable
		if isinstance(value, Jsonable):
			return value.to_json()

		# Generic integer (includes numpy integers)
		if isinstance(value, numbers.Integral):
			return int(value)

		# Generic real number (includes numpy floats)
		if isinstance(value, numbers.Real):
			return float_to_json(value)

		if isinstance(value, np.ndarray):
			return self._to_json(value.tolist(), path)

		# Generic mapping
		if isinstance(value, Mapping):
			return self._mapping_to_json(value, path)

		# Sets have no order of their own
		if isinstance(value, Set):
			return [self._to_json(v, path + (i,)) for i, v in enumerate(sorted(value))]

		if isinstance(value, (list, tuple)):
			return [
				self._to_json(v, path + (i,))
				for i, v in enumerate(value)
			]

		raise JsonTypeError(
			"Can't convert {!r} to JSON.".format(value),
			value=value,
			path=path,
		)

	def _mapping_to_json(self, value, path):
		"""Convert a mapping to a JSON dict.

		Checks for proper key type, converts integer keys to strings.
		"""

		converted = dict()

		for k, v in value.items():

			if isinstance(k, str):
				kc = k

			elif isinstance(k, numbers.Integral) and not isinstance(k, bool):
				kc = str(int(k))

			else:
				raise JsonTypeError(
					'Mapping keys must be str or int',
					value=k,
					path=path,
				)

			if kc in converted:
				raise JsonTypeError('Duplicate key {!r} after conversion'.format(kc), path=path)

			converted[kc] = self._to_json(v, path=path + (k,))

		return converted


def canonical_dumps(value):
	"""Encode a value as canonical JSON text.

	:param value: Value to encode, converted with :func:`.to_json` first.
	:rtype: str

	>>> canonical_dumps({'b': 1, 'a': [0.1, None, float('inf')]})
	'{"a":[0.1,null,"Infinity"],"b":1}'
	"""
	data = to_json(value)
	return json.dumps(
		data,
		sort_keys=True,
		ensure_ascii=False,
		separators=(',', ':'),
		allow_nan=False,
	)


def canonical_loads(text):
	"""Decode canonical JSON text.

	:param text: JSON text, as ``str`` or UTF-8 ``bytes``.
	"""
	if isinstance(text, bytes):
		text = text.decode('utf-8')
	return json.loads(text)


# Default JsonConverter instance
default_json_converter = JsonConverter()

# Alias for default json converter method
to_json = default_json_converter.to_json
