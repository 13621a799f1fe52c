"""
File: models/traces.py
Purpose: Trace CSV reading / writing with row and column diagnostics
Version: 1.0.0
Author: StreamFirst Team

Format: header `t,ax,ay,az,gx,gy,gz`; t is the integer sample index,
strictly increasing; the six channels are finite decimals (g, dps).
"""

import numpy as np
import pandas as pd

from models.errors import TraceFormatError

TRACE_COLUMNS = ('t', 'ax', 'ay', 'az', 'gx', 'gy', 'gz')
CHANNEL_COLUMNS = TRACE_COLUMNS[1:]


def make_trace(values, start_index=0):
    """DataFrame in trace layout from an (N, 6) array"""
    values = np.asarray(values, dtype=np.float64)
    frame = pd.DataFrame(values, columns=list(CHANNEL_COLUMNS))
    frame.insert(0, 't', np.arange(start_index, start_index + len(values), dtype=np.int64))
    return frame


def validate_trace(frame, source='<trace>'):
    """
    Check layout and values of a trace DataFrame

    Raises:
        TraceFormatError: details carry the 1-based file line and the column
    """
    columns = list(frame.columns)
    if columns != list(TRACE_COLUMNS):
        missing = [c for c in TRACE_COLUMNS if c not in columns]
        raise TraceFormatError(f'{source}: header must be {",".join(TRACE_COLUMNS)}, got {",".join(map(str, columns))}',
                               path=str(source), line=1, column=missing[0] if missing else None)

    checked = {}
    for column in TRACE_COLUMNS:
        numeric = pd.to_numeric(frame[column], errors='coerce')
        bad = ~np.isfinite(numeric.to_numpy(dtype=np.float64))
        if bad.any():
            row = int(np.argmax(bad))
            raise TraceFormatError(f'{source}: line {row + 2}, column {column}: not a finite number '
                                   f'({frame[column].iloc[row]!r})', path=str(source), line=row + 2, column=column)
        checked[column] = numeric

    t = checked['t'].to_numpy(dtype=np.float64)
    fractional = t != np.floor(t)
    if fractional.any():
        row = int(np.argmax(fractional))
        raise TraceFormatError(f'{source}: line {row + 2}, column t: sample index must be an integer',
                               path=str(source), line=row + 2, column='t')
    if len(t) > 1:
        steps = np.diff(t) <= 0
        if steps.any():
            row = int(np.argmax(steps)) + 1
            raise TraceFormatError(f'{source}: line {row + 2}, column t: indices must be strictly increasing',
                                   path=str(source), line=row + 2, column='t')

    clean = pd.DataFrame({column: checked[column] for column in CHANNEL_COLUMNS}, dtype=np.float64)
    clean.insert(0, 't', t.astype(np.int64))
    return clean


def read_trace(path):
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except FileNotFoundError as exc:
        raise TraceFormatError(f'{path}: no such file', path=str(path)) from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise TraceFormatError(f'{path}: unreadable CSV ({exc})', path=str(path)) from exc
    return validate_trace(frame, source=path)


def write_trace(frame, path):
    frame.to_csv(path, index=False, float_format='%.9g', lineterminator='\n')


def trace_values(frame):
    """(N, 6) float64 channel matrix"""
    return frame[list(CHANNEL_COLUMNS)].to_numpy(dtype=np.float64)
