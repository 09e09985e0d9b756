"""Matrix ingestion, result persistence and run manifests.

Matrices are delimiter-separated text (comma or tab).  Floats are written
with ``repr``, the shortest decimal that round-trips, so reading a written
matrix back gives identical values.
"""

import csv
import datetime as _dt
import hashlib
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import NegativeEntry, ParseError, RaggedRows, WriteFailure

MANIFEST_NAME = "manifest.json"


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def _sniff_delimiter(line):
    return "\t" if "\t" in line else ","


def read_matrix(path, delimiter=None, header=None, row_labels=None):
    """Read a non-negative dense matrix from a text file.

    Parameters
    ----------
    path : str or Path
    delimiter : {",", "\\t"}, optional
        Sniffed from the first line when omitted.
    header : bool, optional
        Whether the first line is a column header.  Auto-detected: a first
        line with any non-numeric field after the first one is a header.
    row_labels : bool, optional
        Whether each row starts with a label.  Auto-detected from the first
        field of the first data row.

    Returns
    -------
    numpy.ndarray
        ``float64`` array of shape ``(rows, cols)``.

    Raises
    ------
    ParseError, NegativeEntry, RaggedRows
        Row and column numbers in the message are 1-based positions in the
        file.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError("file contains no data")

    if delimiter is None:
        delimiter = _sniff_delimiter(lines[0])
    rows = [[t.strip() for t in rec] for rec in csv.reader(lines, delimiter=delimiter)]

    if header is None:
        first = rows[0]
        header = any(not _is_number(t) for t in first[1:]) or (
            len(first) == 1 and not _is_number(first[0]))
    start = 1 if header else 0
    if start >= len(rows):
        raise ParseError("file contains a header but no data")
    if row_labels is None:
        row_labels = not _is_number(rows[start][0]) and len(rows[start]) > 1
    skip = 1 if row_labels else 0

    data = []
    ncols = None
    for lineno, rec in enumerate(rows[start:], start=start + 1):
        if not any(rec):
            raise ParseError("empty row", row=lineno)
        fields = rec[skip:]
        if ncols is None:
            ncols = len(fields)
            if ncols == 0:
                raise ParseError("row has no numeric columns", row=lineno)
        elif len(fields) != ncols:
            raise RaggedRows(lineno, ncols + skip, len(rec))
        values = []
        for col, tok in enumerate(fields, start=skip + 1):
            try:
                x = float(tok)
            except ValueError:
                raise ParseError("not a number", row=lineno, column=col, token=tok) from None
            if not math.isfinite(x):
                raise ParseError("non-finite entry", row=lineno, column=col, token=tok)
            if x < 0:
                raise NegativeEntry(lineno, col, tok)
            values.append(x)
        data.append(values)
    return np.array(data, dtype=float)


def _atomic_write_text(path, text):
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise WriteFailure(f"cannot write {path}: {exc}") from exc


def format_float(x):
    return repr(float(x))


def matrix_to_text(M, delimiter=","):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return "".join(delimiter.join(format_float(x) for x in row) + "\n" for row in M)


def write_matrix(path, M, delimiter=","):
    _atomic_write_text(path, matrix_to_text(M, delimiter))


def write_text(path, text):
    _atomic_write_text(path, text)


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def timestamp():
    """UTC ISO-8601 time; honours ``SOURCE_DATE_EPOCH`` for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        when = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        when = _dt.datetime.now(tz=_dt.timezone.utc)
    return when.isoformat(timespec="seconds")


@dataclass
class RunManifest:
    input_path: str
    input_sha256: str
    config: dict
    version: str
    started_at: str
    finished_at: str
    restarts: list = field(default_factory=list)
    winner_index: int | None = None
    r_squared: float | None = None
    final_objective: float | None = None
    iterations_used: int | None = None
    converged: bool | None = None

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    @classmethod
    def read(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    @classmethod
    def for_result(cls, input_path, config, result, started_at, version):
        r2 = result.r_squared
        return cls(
            input_path=str(input_path),
            input_sha256=file_digest(input_path),
            config=config.as_dict(),
            version=version,
            started_at=started_at,
            finished_at=timestamp(),
            restarts=[asdict(s) for s in result.restarts],
            winner_index=result.restart_index,
            r_squared=None if math.isnan(r2) else float(r2),
            final_objective=float(result.final_objective),
            iterations_used=int(result.iterations_used),
            converged=bool(result.converged),
        )


def trace_to_text(trace):
    lines = ["iteration,objective\n"]
    lines.extend(f"{int(it)},{format_float(obj)}\n" for it, obj in trace)
    return "".join(lines)


def read_trace(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader)
        if head != ["iteration", "objective"]:
            raise ParseError(f"unexpected trace header {head!r}", row=1)
        return [(int(it), float(obj)) for it, obj in reader]


def write_result(result, manifest, out_dir):
    """Write W.csv, H.csv, trace.csv and manifest.json into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise WriteFailure(f"cannot create {out}: {exc}") from exc
    write_matrix(out / "W.csv", result.W)
    write_matrix(out / "H.csv", result.H)
    _atomic_write_text(out / "trace.csv", trace_to_text(result.trace))
    _atomic_write_text(out / MANIFEST_NAME, manifest.to_json())


def verify_outputs(out_dir, input_path=None, rel_tol=1e-12):
    """Check a result directory against its input; return a list of problems.

    Compares the input file digest with the manifest and recomputes the
    objective from W.csv and H.csv.
    """
    from .divergence import matrix_objective

    out = Path(out_dir)
    manifest = RunManifest.read(out / MANIFEST_NAME)
    input_path = Path(input_path or manifest.input_path)
    problems = []
    if not input_path.exists():
        return [f"input {input_path} not found"]
    digest = file_digest(input_path)
    if digest != manifest.input_sha256:
        problems.append(f"digest mismatch: manifest {manifest.input_sha256}, file {digest}")
        return problems
    V = read_matrix(input_path)
    W = read_matrix(out / "W.csv", header=False, row_labels=False)
    H = read_matrix(out / "H.csv", header=False, row_labels=False)
    cfg = manifest.config
    obj = matrix_objective(cfg["alpha"], W, H, V, cfg["eps_floor"]).value
    expected = manifest.final_objective
    if abs(obj - expected) > rel_tol * max(abs(expected), 1e-300):
        problems.append(f"objective mismatch: manifest {expected!r}, recomputed {obj!r}")
    return problems
