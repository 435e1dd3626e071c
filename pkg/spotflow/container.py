"""Single-file binary container for stored records.

Layout, all integers little-endian::

	magic          5 bytes   b"MGES1"
	format         uint32    FORMAT_VERSION
	metadata size  uint64
	metadata       UTF-8 canonical JSON
	matrix count   uint32
	per matrix:
	  name size    uint16
	  name         UTF-8
	  dtype        1 byte    b"f" float64, b"i" int64, b"b" bool (one byte per cell)
	  ndim         uint8
	  shape        ndim x uint64
	  data         row-major cells

The metadata holds the record's type name and JSON (see
:mod:`spotflow.dataclass`), the provenance graph and the tool version. The
matrices are the record's array fields; NaN marks missing values.
"""

import hashlib
import struct
from pathlib import Path

import numpy as np

from .abc import Stored
from .dataclass import dataclass, field, dataclass_arrays
from .errors import ContainerError
from .json import canonical_dumps, canonical_loads
from .provenance import ProvenanceGraph
from .version import __version__


__all__ = [
	'MAGIC', 'FORMAT_VERSION', 'Container', 'encode', 'decode', 'save_container',
	'load_container', 'object_hash',
]


MAGIC = b'MGES1'
FORMAT_VERSION = 1

_DTYPES = {
	b'f': np.dtype('<f8'),
	b'i': np.dtype('<i8'),
	b'b': np.dtype('u1'),
}


@dataclass(json=False)
class Container:
	"""Contents of a container file.

	:param obj: The stored record.
	:param provenance: Provenance graph of the record.
	:type provenance: spotflow.provenance.ProvenanceGraph
	:param str tool_version: Version of the package which wrote the file.
	"""

	obj = field(validate_type=False, convert_type=False)
	provenance = field(ProvenanceGraph, optional=True)
	tool_version = field(str, default=__version__)


def _dtype_code(array):
	if array.dtype == np.bool_:
		return b'b'
	if np.issubdtype(array.dtype, np.integer):
		return b'i'
	if np.issubdtype(array.dtype, np.floating):
		return b'f'
	raise ContainerError('cannot store array of dtype {}'.format(array.dtype))


def _encode_matrix(name, array):
	code = _dtype_code(array)
	name_bytes = name.encode('utf-8')
	data = np.ascontiguousarray(array, dtype=_DTYPES[code]).tobytes(order='C')

	return b''.join([
		struct.pack('<H', len(name_bytes)),
		name_bytes,
		code,
		struct.pack('<B', array.ndim),
		struct.pack('<{}Q'.format(array.ndim), *array.shape),
		data,
	])


def _object_payload(obj):
	"""Type, JSON and arrays of a stored record."""
	if not isinstance(obj, Stored):
		raise ContainerError('{} is not a stored record type'.format(type(obj).__name__))

	metadata = {'type': type(obj).__name__, 'object': obj.to_json()}
	return metadata, dataclass_arrays(obj)


def _encode_parts(metadata, arrays):
	meta_bytes = canonical_dumps(metadata).encode('utf-8')
	parts = [
		MAGIC,
		struct.pack('<I', FORMAT_VERSION),
		struct.pack('<Q', len(meta_bytes)),
		meta_bytes,
		struct.pack('<I', len(arrays)),
	]
	parts.extend(_encode_matrix(name, array) for name, array in arrays.items())
	return b''.join(parts)


def encode(obj, provenance=None, tool_version=__version__):
	"""Serialize a stored record and its provenance to container bytes.

	:rtype: bytes
	"""
	metadata, arrays = _object_payload(obj)
	metadata['toolVersion'] = tool_version
	metadata['provenance'] = provenance.to_json() if provenance is not None else None
	return _encode_parts(metadata, arrays)


def object_hash(obj):
	"""SHA-256 of the canonical serialization of a record alone.

	Provenance and tool version are left out, so equal records hash equal
	whatever produced them.

	:rtype: str
	"""
	metadata, arrays = _object_payload(obj)
	return hashlib.sha256(_encode_parts(metadata, arrays)).hexdigest()


class _Reader:

	def __init__(self, data):
		self.data = memoryview(data)
		self.pos = 0

	def take(self, n, what):
		if self.pos + n > len(self.data):
			raise ContainerError('truncated container while reading {}'.format(what))
		chunk = self.data[self.pos:self.pos + n]
		self.pos += n
		return chunk

	def unpack(self, fmt, what):
		size = struct.calcsize(fmt)
		return struct.unpack(fmt, self.take(size, what))


def _decode_matrix(reader):
	name_len, = reader.unpack('<H', 'matrix name size')
	name = bytes(reader.take(name_len, 'matrix name')).decode('utf-8')
	code = bytes(reader.take(1, 'matrix dtype'))

	if code not in _DTYPES:
		raise ContainerError('unknown dtype code {!r} for matrix {!r}'.format(code, name))

	ndim, = reader.unpack('<B', 'matrix rank')
	shape = reader.unpack('<{}Q'.format(ndim), 'matrix shape')
	dtype = _DTYPES[code]
	count = int(np.prod(shape, dtype=np.int64))
	raw = reader.take(count * dtype.itemsize, 'data of matrix {!r}'.format(name))
	array = np.frombuffer(raw, dtype=dtype).reshape(shape)

	if code == b'b':
		array = array.astype(bool)
	elif code == b'i':
		array = array.astype(np.int64)
	else:
		array = array.astype(np.float64)

	return name, array


def decode(data):
	"""Parse container bytes.

	:rtype: .Container

	:raises spotflow.errors.ContainerError: On a bad magic number, an
		unsupported format version or inconsistent section lengths.
	"""
	reader = _Reader(data)
	magic = bytes(reader.take(len(MAGIC), 'magic'))

	if magic != MAGIC:
		raise ContainerError('not a spotflow container: magic {!r}, expected {!r}'.format(magic, MAGIC))

	version, = reader.unpack('<I', 'format version')
	if version != FORMAT_VERSION:
		raise ContainerError('unsupported container format version {} (this is version {}, reads {})'.format(
			version, __version__, FORMAT_VERSION))

	meta_len, = reader.unpack('<Q', 'metadata size')
	try:
		metadata = canonical_loads(bytes(reader.take(meta_len, 'metadata')))
	except ValueError as exc:
		raise ContainerError('corrupt container metadata: {}'.format(exc)) from None

	count, = reader.unpack('<I', 'matrix count')
	arrays = dict(_decode_matrix(reader) for _ in range(count))

	if reader.pos != len(reader.data):
		raise ContainerError('{} trailing bytes after the last matrix'.format(len(reader.data) - reader.pos))

	try:
		cls = Stored.get_type(metadata['type'])
		obj = cls.from_json(metadata['object'], arrays)
		provenance = metadata.get('provenance')
		if provenance is not None:
			provenance = ProvenanceGraph.from_json(provenance)
	except (KeyError, TypeError, ValueError) as exc:
		raise ContainerError('cannot rebuild stored object: {}'.format(exc)) from None

	return Container(obj=obj, provenance=provenance, tool_version=metadata.get('toolVersion', ''))


def save_container(path, obj, provenance=None):
	"""Write a record and its provenance to a container file.

	:returns: Content hash of the record, see :func:`.object_hash`.
	:rtype: str
	"""
	Path(path).write_bytes(encode(obj, provenance))
	return object_hash(obj)


def load_container(path):
	"""Read a container file.

	:rtype: .Container
	"""
	try:
		data = Path(path).read_bytes()
	except OSError as exc:
		raise ContainerError('cannot read container {}: {}'.format(path, exc.strerror)) from None
	return decode(data)
