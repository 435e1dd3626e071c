"""Ordered parallel map over a thread pool.

Work is split into independent items whose results are collected in input
order, so results never depend on the number of threads or on completion
order.
"""

from concurrent.futures import ThreadPoolExecutor


__all__ = ['ordered_map']


def ordered_map(func, items, threads=1):
	"""Apply a function to every item, optionally on a thread pool.

	:param callable func: Function of one argument.
	:param items: Iterable of arguments.
	:param int threads: Number of worker threads. 1 (or less) runs serially
		in the calling thread.
	:returns: List of results in the order of ``items``.
	:rtype: list

	>>> ordered_map(lambda x: x * x, range(5), threads=3)
	[0, 1, 4, 9, 16]
	"""
	items = list(items)

	if threads is None or threads <= 1 or len(items) <= 1:
		return [func(item) for item in items]

	with ThreadPoolExecutor(max_workers=min(threads, len(items))) as executor:
		return list(executor.map(func, items))
