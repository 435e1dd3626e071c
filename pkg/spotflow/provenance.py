"""Provenance graphs: which operation, with which parameters, made each object.

A graph holds two kinds of nodes. Object nodes stand for input files and
for the records operations produce, identified by content hash. Operation
nodes link their input objects to the single object they output and carry
the operation's canonical parameters. Graphs are append-only and acyclic.

Timestamps and tool versions are recorded but take no part in
:func:`.graph_hash`, so the same pipeline run twice hashes the same.
"""

import datetime
import hashlib
import logging
import os

from .dataclass import dataclass, field, evolve
from .errors import ProvenanceError
from .json import canonical_dumps, canonical_loads
from .version import __version__


__all__ = [
	'NODE_KINDS', 'ProvNode', 'ProvenanceGraph', 'canonical_params', 'timestamp',
	'file_hash', 'add_file', 'record', 'graph_hash',
]


logger = logging.getLogger(__name__)


NODE_KINDS = ('file', 'object', 'operation')


def timestamp():
	"""UTC time in ISO format, fixed by ``SOURCE_DATE_EPOCH`` when set."""
	epoch = os.environ.get('SOURCE_DATE_EPOCH')
	if epoch is not None:
		when = datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc)
	else:
		when = datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0)
	return when.isoformat()


def canonical_params(params):
	"""Canonical JSON text of operation parameters.

	>>> canonical_params({'span': 0.4, 'scope': 'global'})
	'{"scope":"global","span":0.4}'
	"""
	return canonical_dumps(params)


def file_hash(path):
	"""SHA-256 of a file's bytes."""
	digest = hashlib.sha256()
	with open(path, 'rb') as fh:
		for chunk in iter(lambda: fh.read(1 << 16), b''):
			digest.update(chunk)
	return digest.hexdigest()


@dataclass
class ProvNode:
	"""Node of a provenance graph.

	:param str id: Node identifier, unique within the graph.
	:param str kind: ``file``, ``object`` or ``operation``.
	:param str name: File path, stored type name or operation name.
	:param str hash: Content hash of a file or object.
	:param str params: Canonical JSON parameters of an operation.
	:param tuple inputs: Input node ids of an operation.
	:param tuple input_hashes: Hashes of the inputs when the operation ran.
	:param str output: Output node id of an operation.
	:param str tool_version: Package version which recorded the node.
	:param str timestamp: When the node was recorded.
	"""

	id = field(str)
	kind = field(str)
	name = field(str)
	hash = field(str, optional=True)
	params = field(str, optional=True)
	inputs = field(tuple, default=())
	input_hashes = field(tuple, default=())
	output = field(str, optional=True)
	tool_version = field(str, default=__version__)
	timestamp = field(str, default='')

	@property
	def param_dict(self):
		return canonical_loads(self.params) if self.params is not None else {}


@dataclass
class ProvenanceGraph:
	"""Append-only DAG of files, objects and operations.

	:param tuple nodes: Nodes in the order they were recorded, which is a
		topological order.
	"""

	nodes = field(tuple, default=(), item_type=ProvNode)

	def __attrs_post_init__(self):
		ids = [n.id for n in self.nodes]
		if len(set(ids)) != len(ids):
			raise ProvenanceError('duplicate node ids in provenance graph')

	def __len__(self):
		return len(self.nodes)

	def __contains__(self, node_id):
		return any(n.id == node_id for n in self.nodes)

	def node(self, node_id):
		for n in self.nodes:
			if n.id == node_id:
				return n
		raise ProvenanceError('unknown provenance node {!r}'.format(node_id))

	@property
	def operations(self):
		return [n for n in self.nodes if n.kind == 'operation']

	@property
	def final(self):
		"""The most recently recorded object node."""
		for n in reversed(self.nodes):
			if n.kind == 'object':
				return n
		return None

	def producer(self, node_id):
		"""Operation node which output an object, None for files."""
		for n in self.nodes:
			if n.kind == 'operation' and n.output == node_id:
				return n
		return None

	def parents(self, node_id):
		n = self.node(node_id)
		if n.kind == 'operation':
			return list(n.inputs)
		op = self.producer(node_id)
		return [op.id] if op is not None else []

	def children(self, node_id):
		out = []
		for n in self.nodes:
			if n.kind == 'operation' and node_id in n.inputs:
				out.append(n.id)
			elif n.kind == 'object' and self.producer(n.id) is not None and self.producer(n.id).id == node_id:
				out.append(n.id)
		return out

	def descendants(self, node_id):
		found = set()
		stack = [node_id]
		while stack:
			for child in self.children(stack.pop()):
				if child not in found:
					found.add(child)
					stack.append(child)
		return found

	def topological_order(self):
		"""Node ids in topological order (Kahn's algorithm, ties in record order).

		:raises spotflow.errors.ProvenanceError: If the graph has a cycle.
		"""
		ids = [n.id for n in self.nodes]
		parents = {i: set(self.parents(i)) for i in ids}
		done, order = set(), []

		while len(order) < len(ids):
			ready = [i for i in ids if i not in done and parents[i] <= done]
			if not ready:
				raise ProvenanceError('provenance graph has a cycle')
			order.append(ready[0])
			done.add(ready[0])

		return order

	def merge(self, other):
		"""Union with another graph, nodes of ``other`` not in this one appended."""
		mine = {n.id: n for n in self.nodes}
		extra = []
		for n in other.nodes:
			if n.id in mine:
				if mine[n.id] != n:
					raise ProvenanceError('conflicting provenance nodes with id {!r}'.format(n.id))
			else:
				extra.append(n)
		return ProvenanceGraph(nodes=self.nodes + tuple(extra))


def _next_id(graph, prefix):
	count = sum(1 for n in graph.nodes if n.id.startswith(prefix + '-'))
	return '{}-{}'.format(prefix, count + 1)


def add_file(graph, path, hash=None):
	"""Add an input file node, or reuse the node of an identical file.

	:returns: ``(graph, node id)``.
	"""
	if hash is None:
		hash = file_hash(path)
	path = str(path)

	for n in graph.nodes:
		if n.kind == 'file' and n.name == path and n.hash == hash:
			return graph, n.id

	node = ProvNode(id=_next_id(graph, 'file'), kind='file', name=path, hash=hash, timestamp=timestamp())
	return ProvenanceGraph(nodes=graph.nodes + (node,)), node.id


def record(graph, op_name, params, input_ids, output_type, output_hash, output_id=None):
	"""Append an operation and the object it produced.

	:param graph: Graph to extend.
	:type graph: .ProvenanceGraph
	:param str op_name: Operation name.
	:param dict params: Operation parameters.
	:param input_ids: Ids of the input file or object nodes, at least one.
	:param str output_type: Stored type name of the output.
	:param str output_hash: Content hash of the output.
	:param str output_id: Id of the output object node, generated if None.
	:returns: ``(graph, output id)``.

	:raises spotflow.errors.ProvenanceError: If an input is unknown, there
		is no input, or the node would close a cycle.
	"""
	input_ids = tuple(input_ids)
	if not input_ids:
		raise ProvenanceError('operation {!r} needs at least one input'.format(op_name))

	inputs = [graph.node(i) for i in input_ids]
	if any(n.kind == 'operation' for n in inputs):
		raise ProvenanceError('operation inputs must be file or object nodes')

	if output_id is None:
		output_id = _next_id(graph, 'obj')
	elif output_id in graph:
		upstream = set(input_ids)
		for i in input_ids:
			upstream |= _ancestors(graph, i)
		if output_id in upstream:
			raise ProvenanceError('recording {!r} would create a cycle through {!r}'.format(op_name, output_id))
		raise ProvenanceError('object {!r} already has a producer'.format(output_id))

	now = timestamp()
	op = ProvNode(
		id=_next_id(graph, 'op'),
		kind='operation',
		name=op_name,
		params=canonical_params(params),
		inputs=input_ids,
		input_hashes=[n.hash for n in inputs],
		output=output_id,
		timestamp=now,
	)
	obj = ProvNode(id=output_id, kind='object', name=output_type, hash=output_hash, timestamp=now)

	extended = ProvenanceGraph(nodes=graph.nodes + (op, obj))
	extended.topological_order()
	logger.debug('Recorded %s -> %s', op_name, output_id)
	return extended, output_id


def _ancestors(graph, node_id):
	found = set()
	stack = [node_id]
	while stack:
		for parent in graph.parents(stack.pop()):
			if parent not in found:
				found.add(parent)
				stack.append(parent)
	return found


def graph_hash(graph):
	"""SHA-256 over the graph with timestamps and tool versions left out.

	:rtype: str
	"""
	stripped = [evolve(n, timestamp='', tool_version='').to_json() for n in graph.nodes]
	return hashlib.sha256(canonical_dumps(stripped).encode('utf-8')).hexdigest()
