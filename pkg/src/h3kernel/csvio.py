"""CSV with ``#`` metadata comment lines and a header row.

Floats are written with 17 significant digits so that parsing the output
reproduces the exact binary values.
"""

import io
import sys
from contextlib import contextmanager


def fmt(x) -> str:
    return format(float(x), ".17g")


@contextmanager
def _open_out(target):
    if target is None or target == "-":
        yield sys.stdout
    elif isinstance(target, io.TextIOBase) or hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="") as fh:
            yield fh


def write_csv(target, columns: dict, meta: dict = None):
    """Write equal-length columns; ``meta`` becomes ``# key=value`` lines."""
    names = list(columns)
    cols = [list(columns[k]) for k in names]
    with _open_out(target) as out:
        for key, val in (meta or {}).items():
            out.write(f"# {key}={val}\n")
        out.write(",".join(names) + "\n")
        for row in zip(*cols):
            out.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(source):
    """Parse a file written by :func:`write_csv`.

    Returns ``(meta, header, rows)`` with rows as lists of floats.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    meta, header, rows = {}, None, []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, val = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = val.strip()
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            continue
        rows.append([float(c) for c in line.split(",")])
    return meta, header, rows
