"""Exception classes.

All errors raised on purpose by the package derive from :exc:`SpotflowError`.
Most also derive from the builtin exception that best describes them, so that
callers not aware of this module can still catch ``ValueError`` and the like.
"""


__all__ = [
	'SpotflowError', 'ConfigError', 'IntegrityError', 'DataError',
	'LabelError', 'ZeroVarianceError', 'ShapeError', 'DomainError',
	'ProvenanceError', 'ContainerError', 'UsageError',
]


class SpotflowError(Exception):
	"""Base class for errors raised by the package."""


class ConfigError(SpotflowError, ValueError):
	"""Raised for invalid load configuration files.

	:param str msg: Error message.
	:param int line: 1-based line number in the configuration file, if known.
	:param str key: Offending key, if known.
	"""

	def __init__(self, msg, line=None, key=None):
		self.line = line
		self.key = key

		if line is not None:
			msg = 'line {}: {}'.format(line, msg)

		ValueError.__init__(self, msg)


class IntegrityError(SpotflowError, ValueError):
	"""Raised when an input table fails an integrity check.

	The location attributes are None when they do not apply.

	:param str msg: Error message.
	:param str file: Name of the offending file.
	:param int line: 1-based line number within the file.
	:param str column: Column name.
	"""

	def __init__(self, msg, file=None, line=None, column=None):
		self.file = file
		self.line = line
		self.column = column

		location = []
		if file is not None:
			location.append(str(file))
		if line is not None:
			location.append('line {}'.format(line))
		if column is not None:
			location.append('column {!r}'.format(column))

		if location:
			msg = '{}: {}'.format(', '.join(location), msg)

		ValueError.__init__(self, msg)


class DataError(SpotflowError, ValueError):
	"""Raised when data does not meet the preconditions of an analysis."""


class LabelError(DataError):
	"""Raised for unknown sample/gene labels or labels with the wrong number of levels."""


class ZeroVarianceError(DataError):
	"""Raised when a statistic is undefined because some sample has no spread."""


class ShapeError(DataError):
	"""Raised when arrays or plot data have incompatible shapes."""


class DomainError(SpotflowError, ValueError):
	"""Raised when a numeric argument is outside the domain of a function."""


class ProvenanceError(SpotflowError):
	"""Raised for invalid operations on a provenance graph."""


class ContainerError(SpotflowError, IOError):
	"""Raised when a container file cannot be read."""


class UsageError(SpotflowError):
	"""Raised for invalid command line usage."""
