"""Deterministic CSV emission with a parameter-echo header."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping

import numpy as np

from . import __version__

__all__ = ["format_value", "render_csv", "write_csv"]


def format_value(v) -> str:
    """12 significant digits for numbers, ``str`` otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % float(v)
    if isinstance(v, (complex, np.complexfloating)):
        raise TypeError("split complex values into real and imaginary columns")
    return str(v)


def render_csv(columns: Mapping[str, object], params: Mapping[str, object] | None = None,
               title: str | None = None) -> str:
    """Render equal-length columns as CSV text.

    The header block lists ``title``, the engine version and every entry of
    ``params`` (sorted by key) as ``# key = value`` lines.
    """
    names = list(columns)
    cols = [list(np.atleast_1d(np.asarray(columns[n], dtype=object))) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {dict(zip(names, map(len, cols)))}")
    buf = io.StringIO()
    if title:
        buf.write(f"# {title}\n")
    buf.write(f"# engine = vibcoh {__version__}\n")
    for k in sorted(params or {}):
        buf.write(f"# {k} = {format_value((params or {})[k])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns: Mapping[str, object], params: Mapping[str, object] | None = None,
              title: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(columns, params, title))
    return path
