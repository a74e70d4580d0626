"""CSV interchange for count records and JSON encoding of results."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence, TextIO

import numpy as np

from neutron_ks.errors import SchemaError
from neutron_ks.measurement import CountRecord

COUNT_HEADER = ("context", "alpha_rad", "chi_rad", "rotator", "counts", "exposure")
FRINGE_HEADER = ("context", "alpha_rad", "rotator", "chi_rad", "counts", "fitted_value")
CONTEXTS = ("joint_xx_yy", "bell_discrimination")


def format_number(x) -> str:
    """Integers without a trailing .0, other floats via repr (round-trip exact)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def write_counts_csv(records: Iterable[CountRecord], fh: TextIO, comments: Sequence[str] = ()) -> None:
    """Write records; ``comments`` become leading ``#`` lines (e.g. the seed)."""
    for c in comments:
        fh.write(f"# {c}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COUNT_HEADER)
    for r in records:
        w.writerow([r.context, repr(float(r.alpha)), repr(float(r.chi)), r.rotator, format_number(r.counts), format_number(r.exposure)])


def counts_csv_text(records: Iterable[CountRecord], comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    write_counts_csv(records, buf, comments)
    return buf.getvalue()


def read_comments(fh: TextIO) -> dict[str, str]:
    """``key=value`` pairs from the leading ``#`` lines of a CSV."""
    meta = {}
    for line in fh:
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].strip().partition("=")
        if sep:
            meta[key.strip()] = value.strip()
    return meta


def read_counts_csv(fh: TextIO) -> list[CountRecord]:
    """Parse a count CSV, skipping ``#`` comment lines.

    Raises:
        SchemaError: wrong header, unknown context or malformed values.
    """
    lines = [ln for ln in fh if not ln.lstrip().startswith("#") and ln.strip()]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != COUNT_HEADER:
        raise SchemaError(f"expected header {','.join(COUNT_HEADER)}, got {header}")
    records = []
    for lineno, row in enumerate(reader, 2):
        if len(row) != len(COUNT_HEADER):
            raise SchemaError(f"row {lineno}: expected {len(COUNT_HEADER)} fields, got {len(row)}")
        context, alpha, chi, rotator, counts, exposure = (f.strip() for f in row)
        if context not in CONTEXTS:
            raise SchemaError(f"row {lineno}: unknown context {context!r}")
        try:
            rec = CountRecord(context, float(alpha), float(chi), rotator, float(counts), float(exposure))
        except ValueError as exc:
            raise SchemaError(f"row {lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in (rec.alpha, rec.chi, rec.counts, rec.exposure)):
            raise SchemaError(f"row {lineno}: non-finite value")
        records.append(rec)
    return records


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot encode {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_default) + "\n"
