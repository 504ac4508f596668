""" io v0.2
CSV ingestion and atomic writers for the result files and PGM images
"""

# Imports
import csv
import json
import os
import tempfile

import numpy as np
import pandas as pd

from locuskit.errors import IoError, ParseError, SchemaMismatch
from locuskit.estimators import Dataset
from locuskit.mylog import get_logger
from locuskit.sequence import Sequence

logger = get_logger(__name__)

SCHEMAS = ("features-only", "features+target", "features+label", "sequence")
TIME_COLUMNS = ("t", "time")


def _numeric_frame(path):
    try:
        raw = pd.read_csv(path, dtype=str, encoding="utf-8", skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise SchemaMismatch(f"{path} has no header row")
    if raw.shape[0] == 0:
        raise SchemaMismatch(f"{path} has no data rows")
    out = {}
    for column in raw.columns:
        values = pd.to_numeric(raw[column], errors="coerce")
        bad = values.isna().to_numpy()
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise ParseError(row + 1, column, raw[column].iloc[row])
        out[column] = values.to_numpy(dtype=float)
    return pd.DataFrame(out, columns=raw.columns)


def csv_columns(path):
    """Header names of a CSV file"""
    try:
        return [c.strip() for c in pd.read_csv(path, nrows=0, encoding="utf-8")]
    except pd.errors.EmptyDataError:
        raise SchemaMismatch(f"{path} has no header row")


def ingest_csv(path, schema):
    """(path, str) -> Dataset | Sequence

    The header is required.  features+target and features+label read the
    last column as the target or the class label; sequence uses a leading
    ``t``/``time`` column as the time index when present.  ParseError rows
    count data rows from 1.
    """
    if schema not in SCHEMAS:
        raise SchemaMismatch(f"unknown schema {schema!r}")
    frame = _numeric_frame(path)
    values = frame.to_numpy()
    columns = list(frame.columns)

    if schema == "sequence":
        if columns[0].strip().lower() in TIME_COLUMNS:
            if len(columns) < 2:
                raise SchemaMismatch("a sequence needs at least one token column")
            seq = Sequence(values[:, 1:], values[:, 0])
        else:
            seq = Sequence(values)
        logger.info(f"read sequence from {path}: T={seq.T}, p={seq.p}")
        return seq

    if schema == "features-only":
        data = Dataset(values)
    else:
        if len(columns) < 2:
            raise SchemaMismatch(f"schema {schema} needs a feature and a last column")
        last = values[:, -1]
        if schema == "features+target":
            data = Dataset(values[:, :-1], y=last)
        else:
            if np.any(last < 0) or np.any(last != np.round(last)):
                raise SchemaMismatch("labels must be non-negative integers")
            data = Dataset(values[:, :-1], labels=last.astype(int))
    logger.info(f"read {path}: N={data.N}, p={data.p}")
    return data


def _cell(value):
    if isinstance(value, (str, bool)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def _atomic_write(path, write, newline=None):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
        try:
            mode = "wb" if newline is False else "w"
            kwargs = {} if newline is False else {"encoding": "utf-8", "newline": ""}
            with os.fdopen(fd, mode, **kwargs) as fh:
                write(fh)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def write_csv(path, header, rows):
    """RFC-4180 CSV with %.17g floats, written through a temp file and rename"""

    def write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])

    _atomic_write(path, write)


def write_json(path, payload):
    def write(fh):
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")

    _atomic_write(path, write)


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_text(path, text):
    _atomic_write(path, lambda fh: fh.write(text))


def write_pgm(path, img):
    """8-bit binary PGM (P5); values are clipped to [0, 255] and rounded"""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise SchemaMismatch(f"PGM images are 2-D, got {img.shape}")
    pixels = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    _atomic_write(path, lambda fh: fh.write(header + pixels.tobytes()), newline=False)


def read_pgm(path):
    """(path) -> H x W float array from an 8-bit P5 file"""
    with open(path, "rb") as fh:
        blob = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if blob[pos : pos + 1] == b"#":
            pos = blob.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        fields.append(blob[start:pos])
    magic, width, height, maxval = fields[0], *map(int, fields[1:])
    if magic != b"P5" or maxval > 255:
        raise SchemaMismatch(f"{path} is not an 8-bit P5 image")
    data = np.frombuffer(blob[pos + 1 : pos + 1 + width * height], dtype=np.uint8)
    if data.size != width * height:
        raise SchemaMismatch(f"{path} is truncated")
    return data.reshape(height, width).astype(float)
