import csv
import io
import json
import logging
import math
import os
import tempfile

from spinergy.errors import RefinementError


__all__ = [
    'observed_orders',
    'convergence_rows',
    'require_levels',
    'atomic_write',
    'write_csv',
    'write_json',
    'format_json',
    'thread_count',
    'THREADS_VARIABLE',
]

logger = logging.getLogger(__name__)

THREADS_VARIABLE = 'SPINERGY_THREADS'


def observed_orders(levels, residuals):
    """Convergence orders ``log(e_k / e_{k+1}) / log(N_{k+1} / N_k)`` between
    consecutive refinement levels.

    A pair where the finer residual is zero (exact to rounding) reports
    ``inf``; a pair where both are zero reports ``nan``.
    """
    if len(levels) != len(residuals):
        raise ValueError('need one residual per level')
    orders = []
    for (n0, e0), (n1, e1) in zip(zip(levels, residuals),
                                  zip(levels[1:], residuals[1:])):
        if e1 == 0.0:
            orders.append(math.nan if e0 == 0.0 else math.inf)
        elif e0 == 0.0:
            orders.append(-math.inf)
        else:
            orders.append(math.log(e0 / e1) / math.log(n1 / n0))
    return orders


def require_levels(levels, minimum=3):
    """:raises RefinementError: if fewer than ``minimum`` distinct
        resolutions are given."""
    if len(set(levels)) < minimum:
        raise RefinementError(
            'insufficient refinement levels: need at least %d, got %s'
            % (minimum, sorted(set(levels))))
    return sorted(set(levels))


def convergence_rows(levels, residuals):
    """Rows ``(N, residual, observed order)``; the coarsest level has no
    order."""
    orders = [None] + observed_orders(levels, residuals)
    return [(n, e, order) for n, e, order in zip(levels, residuals, orders)]


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file in the same
    directory, so readers never see a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-',
                               suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug('wrote %s', path)


def _format_cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(path, header, rows):
    """Write an RFC 4180 CSV file with ``\\r\\n`` line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\r\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(value) for value in row])
    atomic_write(path, buffer.getvalue())


def format_json(data):
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=True) + '\n'


def write_json(path, data):
    atomic_write(path, format_json(data))


def thread_count(environ=None):
    """Worker count from ``SPINERGY_THREADS``; 1 when unset or invalid."""
    environ = os.environ if environ is None else environ
    value = environ.get(THREADS_VARIABLE)
    if value is None:
        return 1
    try:
        count = int(value)
    except ValueError:
        count = 0
    if count < 1:
        logger.warning('ignoring invalid %s=%r, using 1 worker',
                       THREADS_VARIABLE, value)
        return 1
    return count
