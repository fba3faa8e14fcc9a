"""Serialization of error tables (CSV) and solution fields (legacy VTK)."""
import csv
import math
from pathlib import Path

import numpy as np

from .analysis import COLUMNS, ErrorReport, ErrorRow
from .exceptions import InvalidArgument, ParseError

CSV_HEADER = ["h", "e_tbar", "rate", "e_l2proj", "rate", "e_l2", "rate", "e_press", "rate"]
INCOMPLETE_MARK = "# INCOMPLETE"


def _fmt_err(v):
    return "%.2e" % v


def _fmt_rate(r):
    return "" if r is None or not math.isfinite(r) else "%.2f" % r


def quantize(report: ErrorReport) -> ErrorReport:
    """The report as it survives a CSV round trip (3 significant digits)."""
    rows = [ErrorRow(r.h, *(float(_fmt_err(getattr(r, c))) for c in COLUMNS), n=r.n)
            for r in report.rows]
    return ErrorReport(rows, report.complete, report.failure, report.label)


def format_csv(report: ErrorReport) -> str:
    import io as _io
    buf = _io.StringIO()
    if report.label:
        buf.write(f"# {report.label}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    rates = {c: report.rates(c) for c in COLUMNS}
    for i, r in enumerate(report.rows):
        line = [repr(float(r.h))]
        for c in COLUMNS:
            line += [_fmt_err(getattr(r, c)), _fmt_rate(rates[c][i])]
        w.writerow(line)
    if not report.complete:
        reason = " ".join(report.failure.split())
        buf.write(f"{INCOMPLETE_MARK}: {reason}\n")
    return buf.getvalue()


def write_csv(report: ErrorReport, path):
    path = Path(path)
    try:
        path.write_text(format_csv(report))
    except OSError as exc:
        raise InvalidArgument(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path) -> ErrorReport:
    """Parse a table written by :func:`write_csv`; rates are recomputed, not read."""
    path = Path(path)
    lines = path.read_text().splitlines()
    report = ErrorReport()
    header_seen = False
    for lineno, line in enumerate(lines, 1):
        if line.startswith(INCOMPLETE_MARK):
            report.complete = False
            report.failure = line[len(INCOMPLETE_MARK):].lstrip(": ").strip()
            continue
        if line.startswith("#"):
            if not header_seen and not report.label:
                report.label = line[1:].strip()
            continue
        if not line.strip():
            continue
        cells = next(csv.reader([line]))
        if not header_seen:
            if cells != CSV_HEADER:
                raise ParseError(f"unexpected header {cells}", path, lineno)
            header_seen = True
            continue
        if len(cells) != len(CSV_HEADER):
            raise ParseError(f"expected {len(CSV_HEADER)} columns, got {len(cells)}", path, lineno)
        try:
            h = float(cells[0])
            errs = [float(cells[i]) for i in (1, 3, 5, 7)]
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
        n = int(round(1.0 / h)) if h > 0 and abs(1.0 / h - round(1.0 / h)) < 1e-9 else None
        report.rows.append(ErrorRow(h, *errs, n=n))
    if not header_seen:
        raise ParseError("missing header row", path, len(lines) + 1)
    return report


# -- VTK ------------------------------------------------------------------

def write_vtk(path, mesh, cell_scalars=None, cell_vectors=None, title="wgbrinkman solution"):
    """Legacy ASCII VTK 3.0 unstructured grid with triangle cells and cell data."""
    cell_scalars = cell_scalars or {}
    cell_vectors = cell_vectors or {}
    ne = mesh.n_elements
    for name, arr in list(cell_scalars.items()) + list(cell_vectors.items()):
        if len(arr) != ne:
            raise InvalidArgument(f"cell field {name!r} has {len(arr)} entries for {ne} cells")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument(f"cell field {name!r} contains non-finite values")
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_vertices} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {ne} {4 * ne}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.elements]
    lines.append(f"CELL_TYPES {ne}")
    lines += ["5"] * ne
    if cell_scalars or cell_vectors:
        lines.append(f"CELL_DATA {ne}")
    for name, arr in cell_scalars.items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.10e}" for v in np.asarray(arr, float)]
    for name, arr in cell_vectors.items():
        lines.append(f"VECTORS {name} double")
        lines += [f"{u:.10e} {v:.10e} 0" for u, v in np.asarray(arr, float)]
    path = Path(path)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise InvalidArgument(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def check_vtk(path):
    """Structural check of a legacy ASCII unstructured-grid file.

    Verifies section headers and that every section holds the number of
    entries it declares. Returns a summary dict with the point and cell
    counts and the cell fields found (``{name: ndarray}``).
    """
    path = Path(path)
    toks = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        toks.append((lineno, line.strip()))
    if len(toks) < 5:
        raise ParseError("truncated file", path, len(toks))
    if not toks[0][1].startswith("# vtk DataFile Version 3.0"):
        raise ParseError("missing '# vtk DataFile Version 3.0' header", path, 1)
    if toks[2][1] != "ASCII":
        raise ParseError("only ASCII files are supported", path, 3)
    if toks[3][1] != "DATASET UNSTRUCTURED_GRID":
        raise ParseError("expected DATASET UNSTRUCTURED_GRID", path, 4)

    pos = 4

    def take(count, width, what):
        nonlocal pos
        out = []
        for _ in range(count):
            if pos >= len(toks):
                raise ParseError(f"{what}: expected {count} entries, file ended", path, len(toks))
            lineno, s = toks[pos]
            vals = s.split()
            if width is not None and len(vals) != width:
                raise ParseError(f"{what}: expected {width} values per line", path, lineno)
            try:
                out.append([float(v) for v in vals])
            except ValueError:
                raise ParseError(f"{what}: non-numeric entry", path, lineno) from None
            pos += 1
        return out

    def header(prefix):
        nonlocal pos
        if pos >= len(toks) or not toks[pos][1].startswith(prefix):
            lineno = toks[pos][0] if pos < len(toks) else len(toks)
            raise ParseError(f"expected section {prefix!r}", path, lineno)
        parts = toks[pos][1].split()
        pos += 1
        return parts

    npts = int(header("POINTS")[1])
    take(npts, 3, "POINTS")
    parts = header("CELLS")
    ncells, size = int(parts[1]), int(parts[2])
    cells = take(ncells, None, "CELLS")
    if sum(len(c) for c in cells) != size:
        raise ParseError(f"CELLS declares size {size}, found {sum(len(c) for c in cells)}", path, pos)
    for c in cells:
        if int(c[0]) != len(c) - 1 or any(not (0 <= v < npts) for v in c[1:]):
            raise ParseError("CELLS entry has a bad count or point index", path, pos)
    if int(header("CELL_TYPES")[1]) != ncells:
        raise ParseError("CELL_TYPES count differs from CELLS", path, pos)
    types = take(ncells, 1, "CELL_TYPES")
    fields = {}
    if pos < len(toks):
        if int(header("CELL_DATA")[1]) != ncells:
            raise ParseError("CELL_DATA count differs from CELLS", path, pos)
        while pos < len(toks):
            if not toks[pos][1]:
                pos += 1
                continue
            parts = toks[pos][1].split()
            if parts[0] == "SCALARS":
                pos += 1
                header("LOOKUP_TABLE")
                fields[parts[1]] = np.array(take(ncells, 1, parts[1]))[:, 0]
            elif parts[0] == "VECTORS":
                pos += 1
                fields[parts[1]] = np.array(take(ncells, 3, parts[1]))
            else:
                raise ParseError(f"unknown section {parts[0]!r}", path, toks[pos][0])
    return {"points": npts, "cells": ncells,
            "cell_types": sorted({int(t[0]) for t in types}), "fields": fields}
