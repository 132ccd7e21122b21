"""Parallel XLSX reader."""

import datetime as _dt

from ._core import ParseError
from ._core import read_sheet as _read_sheet
from ._core import to_csv as _to_csv

__all__ = ["ParseError", "read_sheet", "to_csv"]

_EPOCH = _dt.datetime(1899, 12, 30)


def _to_datetime(serial):
    if serial is None:
        return None
    return _EPOCH + _dt.timedelta(seconds=round(serial * 86400))


def read_sheet(path, sheet="", mode="consecutive", threads=8, parser_threads=2,
               headers=False, strings="parallel"):
    """Returns {name: list} in column order. Nulls are None, dates are datetimes."""
    raw = _read_sheet(str(path), sheet, mode, threads, parser_threads, headers, strings)
    out = {}
    for name, kind, values in zip(raw["names"], raw["types"], raw["columns"]):
        if kind == "date":
            values = [_to_datetime(v) for v in values]
        out[name] = values
    return out


def to_csv(path, sheet="", mode="consecutive", threads=8):
    """CSV bytes of the sheet, identical to the CLI output."""
    return _to_csv(str(path), sheet, mode, threads)
