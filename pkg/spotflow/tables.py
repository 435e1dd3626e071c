"""Render result tables as CSV or HTML text.

Tables are built as :class:`pandas.DataFrame` objects by the analysis
modules. Output is byte-identical for identical frames: floats are written
with the shortest round-trip representation and missing values as ``NA``.
"""

from io import StringIO

import pandas as pd

from .errors import DomainError


__all__ = ['TABLE_FORMATS', 'render_table', 'read_csv_table']


TABLE_FORMATS = ('csv', 'html')

NA_REP = 'NA'


def render_table(frame, fmt='csv', title=None):
	"""Render a data frame.

	:param frame: Table to render. The index is not written.
	:type frame: pandas.DataFrame
	:param str fmt: ``'csv'`` or ``'html'``.
	:param str title: Heading of the HTML document.
	:rtype: str
	"""
	if fmt == 'csv':
		return frame.to_csv(index=False, lineterminator='\n', na_rep=NA_REP)

	if fmt == 'html':
		body = frame.to_html(index=False, na_rep=NA_REP, float_format=_format_float, border=0)
		heading = '<h1>{}</h1>\n'.format(_escape(title)) if title else ''
		return (
			'<!DOCTYPE html>\n<html>\n<head><meta charset="utf-8">'
			'<title>{}</title></head>\n<body>\n{}{}\n</body>\n</html>\n'
			.format(_escape(title or ''), heading, body)
		)

	raise DomainError('unknown table format {!r}; expected csv or html'.format(fmt))


def _format_float(value):
	return repr(float(value))


def _escape(text):
	return (text.replace('&', '&amp;').replace('<', '&lt;').replace('>', '&gt;'))


def read_csv_table(text):
	"""Parse CSV text written by :func:`.render_table`.

	:rtype: pandas.DataFrame
	"""
	return pd.read_csv(StringIO(text), na_values=[NA_REP], keep_default_na=False)
