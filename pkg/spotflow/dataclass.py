"""
Extension to the :mod:`attr` package for the record types used throughout
the package: field type conversion, immutable numpy array fields and
conversion to and from JSON.

Array fields are not part of a record's JSON. They are collected separately
by :func:`.dataclass_arrays` under dotted names (``"dendrogram.merges"`` for
the ``merges`` array of a nested ``dendrogram`` record), which is how
:mod:`spotflow.container` stores them as binary matrices next to the JSON
metadata.
"""

import numbers

import attr
import numpy as np

from .abc import Jsonable, JsonConstructible, Stored
from .json import to_json


__all__ = ['field', 'dataclass', 'array_field', 'evolve', 'is_record', 'nested_tuple']


def is_record(obj):
	"""Check if an object (or class) is a record made with :func:`.dataclass`.

	:rtype: bool
	"""
	cls = obj if isinstance(obj, type) else type(obj)
	return attr.has(cls) and issubclass(cls, JsonConstructible)


def nested_tuple(value):
	"""Convert nested lists (as read back from JSON) to nested tuples.

	>>> nested_tuple([['a', 'b'], ['c']])
	(('a', 'b'), ('c',))
	"""
	if isinstance(value, (list, tuple)):
		return tuple(nested_tuple(v) for v in value)
	return value


def validate_field_type(instance, attribute, value):
	"""Validator function which ensures a value matches a fields's type.

	:param instance: Instance of a dataclass object.
	:param attribute: Attribute created by :func:`.field`.
	:type attribute: attr.Attribute
	:param value: Value to check.

	:raises TypeError: If ``value`` is not an instance of ``attribute.type``.
	"""
	if attribute.type is not None and not isinstance(value, attribute.type):
		raise TypeError(
			'{} must be of type {!r}, got {!r}'
			.format(attribute.name, attribute.type, type(value))
		)


def make_type_converter(type_):
	"""Make a converter function which converts is argument to the given type.

	Integral and real numbers (numpy scalars included) become ``int`` and
	``float``, strings parse as floats so that the non-finite markers written
	by :func:`spotflow.json.float_to_json` come back, and any iterable becomes
	a ``tuple``. Other types are only checked.

	:param type type_: Type to convert to.
	:returns: Function which takes single argument and returns instance of
		``type_`` or raises :exc:`TypeError`.
	:rtype: callable
	"""
	def convert(value):
		if isinstance(value, type_) and not (type_ is int and isinstance(value, bool)):
			return value

		if type_ is int:
			if isinstance(value, numbers.Integral):
				return int(value)
			if isinstance(value, numbers.Real) and float(value).is_integer():
				return int(value)

		elif type_ is float:
			if isinstance(value, numbers.Real) and not isinstance(value, bool):
				return float(value)
			if isinstance(value, str):
				return float(value)

		elif type_ is bool:
			if isinstance(value, np.bool_):
				return bool(value)

		elif type_ is tuple:
			if not isinstance(value, (str, bytes)):
				return tuple(value)

		raise TypeError('Expected instance of {!r}, got {!r}'.format(type_, value))

	return convert


def field(type=None,
          default=attr.NOTHING,
          *,
          validator=None,
          converter=None,
          metadata=None,
          optional=False,
          validate_type=True,
          convert_type=True,
          json=True,
          item_type=None,
          **kwargs
	):
	"""Slightly extended version of :func:`attr.ib`.

	:param type type: Same as in :func:`attr.ib`. Just put it as first
		positional argument because it's commonly used.
	:param default: Same as in :func:`attr.ib`.
	:param validator: Same as in :func:`attr.ib`.
	:param converter: Same as in :func:`attr.ib`.
	:param metadata: Same as in :func:`attr.ib`.
	:param bool optional: If True the field will also accept None as well as any
		other valid values. In this case if the field is initialized with a
		value of None all other validators and converters will be bypassed. The
		``default`` argument will also be set to None, if it has not been set
		already.
	:param bool validate_type: If True will add an additional validator that
		checks that the value is an instance of ``type``.
	:param bool convert_type: If True and ``converter`` is None will add a
		converter function that converts its argument to ``type`` where possible.
		This overrides ``validate_type``, as the converter will also raise a
		:exc:`TypeError` if its argument is an incompatible type.
	:param bool json: If True include in JSON output of class.
	:param type item_type: Record class of the items of a tuple-valued field,
		used to rebuild them from JSON.
	:param \\**kwargs: Remaining keyword arguments to :func:`attr.ib`.

	:returns: The intermediate type returned by :func:`attr.ib`.
	"""
	# Nested records are never converted, only checked
	if type is not None and is_record(type):
		convert_type = False

	# Add type validator
	if validate_type and not convert_type and type is not None:
		if validator is not None:
			validator = attr.validators.and_(validate_field_type, validator)
		else:
			validator = validate_field_type

	# Add type converter
	if convert_type and not converter and type is not None:
		converter = make_type_converter(type)

	# Fix validator, converter, and default for optional
	if optional:
		if validator is not None:
			validator = attr.validators.optional(validator)

		if converter is not None:
			converter = attr.converters.optional(converter)

		if default is attr.NOTHING:
			default = None

	if metadata is None:
		metadata = {}

	metadata.setdefault('array', False)
	metadata.update(
		optional=optional,
		json=json,
		item_type=item_type,
	)

	return attr.ib(
		default=default,
		validator=validator,
		type=type,
		converter=converter,
		metadata=metadata,
		**kwargs,
	)


def array_field(dtype=float, ndim=None, *, optional=False, **kwargs):
	"""Creates a field which stores a read-only Numpy array.

	The value is copied on assignment and marked non-writeable, which keeps
	records immutable. Array fields take no part in equality comparisons.

	:param dtype: Numpy dtype or value which can be converted to one.
	:param int ndim: Expected number of dimensions of array.
	:param bool optional: Whether the field may be None.
	:param \\**kwargs: Additional keyword arguments to :func:`attr.ib`.

	:returns: See return value of :func:`.field`.
	"""
	dtype = np.dtype(dtype)

	def convert_array(value):
		array = np.array(value, dtype=dtype, copy=True)

		if ndim is not None and array.ndim != ndim:
			raise ValueError(
				'Expected array of dimension {}, got shape {}'.format(ndim, array.shape)
			)

		array.flags.writeable = False
		return array

	converter = convert_array
	default = attr.NOTHING

	if optional:
		converter = attr.converters.optional(converter)
		default = kwargs.pop('default', None)

	metadata = dict(array=True, np_dtype=dtype, np_ndim=ndim, optional=optional,
	                json=False, item_type=None)

	return attr.ib(
		default=default,
		converter=converter,
		metadata=metadata,
		eq=False,
		**kwargs,
	)


def field_to_json(field, value):
	"""Convert field value to JSON equivalent.

	:param field: dataclass attribute created with :func:`.field`.
	:type field: attr.Attribute
	:param value: Value of attribute to convert.
	:returns: Converted value that can be passed to
		:func:`spotflow.json.canonical_dumps`.
	"""
	return to_json(value)


def field_from_json(field, data, arrays, prefix):
	"""Convert JSON data to field value.

	:param field: dataclass attribute created with :func:`.field`.
	:type field: attr.Attribute
	:param data: JSON data.
	:param dict arrays: Arrays split off the JSON data.
	:param str prefix: Array name prefix of the field value.
	:returns: Converted value suitable for initialization of attribute.
	"""
	if data is None and field.metadata.get('optional'):
		return None

	if field.type is not None and is_record(field.type):
		return field.type.from_json(data, arrays, prefix)

	item_type = field.metadata.get('item_type')
	if item_type is not None:
		return tuple(
			item_type.from_json(item, arrays, '{}{}.'.format(prefix, i))
			for i, item in enumerate(data)
		)

	return data


def dataclass(
		cls=None,
		*,
		json=True,
		stored=False,
		frozen=True,
		**kwargs
	):
	"""Add boilerplate for classes which exist to store data.

	Somewhat extended version of :func:`attr.s`. Use on classes with
	:func:`.field` and :func:`.array_field` attributes.

	:param type cls: Class to update with boilerplate code. If None will return
		a decorator which takes a class.
	:param bool json: If True make the class a virtual subclass of
		:class:`spotflow.abc.Jsonable` and
		:class:`spotflow.abc.JsonConstructible`, and add the corresponding
		methods.
	:param bool stored: If True also register the class with
		:class:`spotflow.abc.Stored`, so it can be a container's top-level
		object. Implies ``json``.
	:param bool frozen: Make instances immutable.
	:param \\**kwargs: Remaining keyword arguments to :func:`attr.s`.

	:returns: If ``cls`` is not None returns the same class after modification.
		Otherwise returns a decorator which takes a class as its first argument,
		modifies it, and returns the same class.
	:rtype: type or callable
	"""

	def decorator(cls):
		"""Decorator to transform class into a dataclass."""

		attrcls = attr.s(cls, frozen=frozen, order=False, **kwargs)

		if json or stored:
			if getattr(attrcls, 'to_json', None) is None:
				attrcls.to_json = dataclass_to_json

			if getattr(attrcls, 'from_json', None) is None:
				attrcls.from_json = classmethod(dataclass_from_json)

			Jsonable.register(attrcls)
			JsonConstructible.register(attrcls)

		if stored:
			Stored.register_type(attrcls)

		return attrcls

	# If passed class, call decorator now and return result.
	if cls is not None:
		return decorator(cls)

	return decorator


def dataclass_to_json(instance):
	"""Convert an instance of a dataclass to a JSON-able dict.

	Array fields are left out, see :func:`.dataclass_arrays`.

	:param instance: Instance of class modified by :func:`.dataclass`.
	:rtype: dict
	"""
	data = dict()

	for attrib in attr.fields(type(instance)):
		if attrib.metadata.get('json', True) and not attrib.metadata.get('array'):
			data[attrib.name] = field_to_json(attrib, getattr(instance, attrib.name))

	return data


def dataclass_arrays(instance, prefix=''):
	"""Collect the array fields of a record and its nested records.

	:param instance: Instance of class modified by :func:`.dataclass`.
	:param str prefix: Prefix for array names.
	:returns: Dict from dotted array names to arrays, in field order. Optional
		arrays which are None are omitted.
	:rtype: dict
	"""
	arrays = dict()

	for attrib in attr.fields(type(instance)):
		value = getattr(instance, attrib.name)
		name = prefix + attrib.name

		if attrib.metadata.get('array'):
			if value is not None:
				arrays[name] = value

		elif value is not None and is_record(value):
			arrays.update(dataclass_arrays(value, name + '.'))

		elif attrib.metadata.get('item_type') is not None:
			for i, item in enumerate(value):
				arrays.update(dataclass_arrays(item, '{}.{}.'.format(name, i)))

	return arrays


def dataclass_from_json(cls, data, arrays=None, prefix='', ignore_extra_keys=False):
	"""Convert parsed JSON data (and split-off arrays) to a dataclass instance.

	:param type cls: Class modified by :func:`.dataclass`.
	:param dict data: Parsed JSON data.
	:param dict arrays: Arrays as returned by :func:`.dataclass_arrays`.
	:param str prefix: Prefix of this instance's array names.
	:returns: Instance of ``cls``.

	:raises KeyError: If ``data`` has any additional keys or a required array
		is missing.
	"""
	if not isinstance(data, dict):
		raise TypeError('Expected data to be dict, not {!r}'.format(type(data)))

	if arrays is None:
		arrays = dict()

	data = dict(data)
	values = dict()

	for attrib in attr.fields(cls):
		if attrib.metadata.get('array'):
			name = prefix + attrib.name
			if name in arrays:
				values[attrib.name] = arrays[name]
			elif not attrib.metadata.get('optional'):
				raise KeyError('Missing array {!r}'.format(name))
			continue

		try:
			data_val = data.pop(attrib.name)
		except KeyError:
			continue

		values[attrib.name] = field_from_json(attrib, data_val, arrays, prefix + attrib.name + '.')

	if data and not ignore_extra_keys:
		key = next(iter(data))
		raise KeyError('Unknown key {!r} in data'.format(key))

	return cls(**values)


def evolve(instance, **changes):
	"""Create a copy of a record with some fields changed.

	:param instance: Instance of class modified by :func:`.dataclass`.
	:param \\**changes: New field values.
	"""
	return attr.evolve(instance, **changes)
