"""Abstract base classes."""

from abc import ABCMeta, abstractmethod


__all__ = ['Jsonable', 'JsonConstructible', 'Stored']


class Jsonable(metaclass=ABCMeta):
	"""ABC for a class whose instances can be converted to JSON."""

	@abstractmethod
	def to_json(self):
		"""Convert to a value serializable as JSON.

		:returns: Value which can be passed to :func:`spotflow.json.canonical_dumps`.
		:rtype: Union[int, float, str, list, dict, None]
		"""
		pass


class JsonConstructible(metaclass=ABCMeta):
	"""ABC for a class which can be instantiated from JSON data."""

	@classmethod
	@abstractmethod
	def from_json(cls, data, arrays=None, prefix=''):
		"""Create an instance of the class from JSON data.

		:param data: JSON data as returned by :func:`json.loads`.
		:type data: Union[int, float, str, list, dict, None]
		:param dict arrays: Named numpy arrays split off the JSON data by
			:func:`spotflow.dataclass.dataclass_arrays`, if any.
		:param str prefix: Prefix of this object's array names in ``arrays``.
		:returns: Class instance.
		"""
		pass


class Stored(Jsonable, JsonConstructible):
	"""ABC for records which can be written to a container as a top-level object.

	Concrete classes are registered under their class name by
	:func:`spotflow.dataclass.dataclass` with ``stored=True``, which is how
	:mod:`spotflow.container` finds the class to rebuild when reading a file.
	"""

	types = dict()

	@classmethod
	def register_type(cls, type_):
		"""Register a record class as a virtual subclass and remember it by name.

		:param type type_: Record class.
		:returns: ``type_``.
		"""
		name = type_.__name__

		if cls.types.get(name, type_) is not type_:
			raise ValueError('A stored type named {!r} is already registered'.format(name))

		cls.types[name] = type_
		cls.register(type_)
		return type_

	@classmethod
	def get_type(cls, name):
		"""Get a registered record class by name.

		:raises KeyError: If no class with that name was registered.
		"""
		try:
			return cls.types[name]
		except KeyError:
			raise KeyError('Unknown stored object type {!r}'.format(name)) from None
