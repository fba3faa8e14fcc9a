"""Inverse-permeability fields: analytic, constant, or read from raster files.

Raster grammar (ASCII)::

    ncols nrows
    v v v ...        <- row 0, the top edge of the unit square (y = 1)
    ...
    v v v ...        <- row nrows-1, the bottom edge (y = 0)

Each value is mapped to ``kappa_inv`` through a value map (identity by
default, or a dict for categorical pixel values).
"""
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .benchmarks import sine_kappa_inv
from .exceptions import InvalidArgument, InvalidData, ParseError

KINDS = ("analytic_sine", "raster", "constant")
SHIPPED_RASTERS = ("checkerboard", "channel", "ring", "quadrant")


class RasterField:
    """Piecewise-constant sampler over an ``nrows x ncols`` grid on ``[0, 1]^2``."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or min(values.shape) < 1:
            raise InvalidData("raster must be a non-empty 2D grid")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            r, c = np.argwhere(~(values > 0) | ~np.isfinite(values))[0]
            raise InvalidData(f"kappa_inv must be positive; cell (row {r}, col {c}) is {values[r, c]}")
        self.values = values

    @property
    def shape(self):
        return self.values.shape

    def cell_index(self, x, y):
        """Row/column of the cell containing ``(x, y)``, clipped to the grid."""
        nrows, ncols = self.values.shape
        col = np.clip(np.floor(np.asarray(x, float) * ncols).astype(int), 0, ncols - 1)
        row = np.clip(np.floor((1.0 - np.asarray(y, float)) * nrows).astype(int), 0, nrows - 1)
        return row, col

    def __call__(self, x, y):
        row, col = self.cell_index(x, y)
        return self.values[row, col]

    @property
    def bounds(self):
        return float(self.values.min()), float(self.values.max())


def _map_values(raw, value_map, path=None):
    if value_map is None:
        return raw
    if callable(value_map):
        return np.asarray(value_map(raw), dtype=float)
    out = np.empty_like(raw)
    for idx, v in np.ndenumerate(raw):
        key = int(v) if float(v).is_integer() else v
        if key not in value_map:
            raise InvalidData(f"{path or 'raster'}: pixel value {v:g} at row {idx[0]} has no entry in the value map")
        out[idx] = value_map[key]
    return out


def parse_raster(text, path=None):
    """Parse raster text into a float array (row 0 = top). Raises :class:`ParseError`."""
    lines = text.splitlines()
    # skip leading blank lines but keep numbering
    i = 0
    while i < len(lines) and not lines[i].strip():
        i += 1
    if i == len(lines):
        raise ParseError("empty raster file", path, 1)
    head = lines[i].split()
    if len(head) != 2:
        raise ParseError(f"header must be 'ncols nrows', got {lines[i].strip()!r}", path, i + 1)
    try:
        ncols, nrows = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError(f"header must hold two integers, got {lines[i].strip()!r}", path, i + 1) from None
    if ncols < 1 or nrows < 1:
        raise ParseError(f"raster dimensions must be >= 1, got {ncols}x{nrows}", path, i + 1)

    rows = []
    for j in range(i + 1, len(lines)):
        s = lines[j].strip()
        if not s:
            continue
        if len(rows) == nrows:
            raise ParseError(f"more than the declared {nrows} rows", path, j + 1)
        tok = s.split()
        if len(tok) != ncols:
            raise ParseError(f"expected {ncols} values, found {len(tok)}", path, j + 1)
        try:
            vals = [float(t) for t in tok]
        except ValueError:
            bad = next(t for t in tok if not _is_float(t))
            raise ParseError(f"not a number: {bad!r}", path, j + 1) from None
        if any(v < 0 or not np.isfinite(v) for v in vals):
            raise ParseError("raster values must be finite and >= 0", path, j + 1)
        rows.append(vals)
    if len(rows) != nrows:
        raise ParseError(f"declared {nrows} rows, found {len(rows)}", path, len(lines) + 1)
    return np.array(rows, dtype=float)


def _is_float(t):
    try:
        float(t)
        return True
    except ValueError:
        return False


def load_raster(path, value_map: Optional[Union[Mapping, Callable]] = None) -> RasterField:
    """Read a raster file and return a ``kappa_inv`` sampler.

    ``value_map`` converts pixel values to ``kappa_inv``: ``None`` for the
    identity, a dict, or a vectorized callable.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidArgument(f"cannot read raster {path}: {exc.strerror or exc}") from exc
    raw = parse_raster(text, path)
    mapped = _map_values(raw, value_map, path)
    try:
        return RasterField(mapped)
    except InvalidData as exc:
        raise InvalidData(f"{path}: {exc}") from None


def write_raster(path, values, fmt="%g"):
    values = np.asarray(values)
    nrows, ncols = values.shape
    with open(path, "w") as fh:
        fh.write(f"{ncols} {nrows}\n")
        for row in values:
            fh.write(" ".join(fmt % v for v in row) + "\n")


# -- synthetic high-contrast layouts ----------------------------------------

def checkerboard(n=10, low=1.0, high=1e6):
    i, j = np.indices((n, n))
    return np.where((i + j) % 2 == 0, low, high)


def channel(n=20, low=1.0, high=1e6, width=4):
    """Obstacle everywhere except a horizontal band through the middle."""
    out = np.full((n, n), high)
    lo = (n - width) // 2
    out[lo:lo + width, :] = low
    return out


def ring(n=40, low=1.0, high=1e6, r_in=0.2, r_out=0.3):
    c = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(c, 1.0 - c)
    r = np.hypot(X - 0.5, Y - 0.5)
    return np.where((r >= r_in) & (r <= r_out), high, low)


def quadrant(low=1.0, high=1e6):
    """2x2 grid with the upper-right cell obstructed."""
    return np.array([[low, high], [low, low]])


def shipped_raster(name):
    """Path to one of the bundled rasters."""
    if name not in SHIPPED_RASTERS:
        raise InvalidArgument(f"unknown shipped raster {name!r}; choose from {SHIPPED_RASTERS}")
    return Path(str(resources.files("wgbrinkman") / "data" / f"{name}.asc"))


# -- spec objects -----------------------------------------------------------

@dataclass
class PermeabilitySpec:
    kind: str = "constant"
    a: float = 10.0
    value: float = 1.0
    path: Optional[str] = None
    value_map: Optional[Mapping] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"permeability kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "constant" and not (self.value > 0):
            raise InvalidData(f"constant kappa_inv must be positive, got {self.value}")
        if self.kind == "analytic_sine" and not (self.a > 0):
            raise InvalidData(f"sine amplitude a must be positive, got {self.a}")
        if self.kind == "raster" and not self.path:
            raise InvalidArgument("raster permeability needs a path")

    def sampler(self):
        if self.kind == "constant":
            v = float(self.value)
            return lambda x, y: np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, v)
        if self.kind == "analytic_sine":
            return sine_kappa_inv(self.a)
        return load_raster(self.path, self.value_map)

    @classmethod
    def parse(cls, text):
        """Parse a command-line permeability spec.

        Accepted forms: ``constant:<v>``, ``sine:<a>``, ``raster:<path>``,
        ``<name>`` for a bundled raster, or a bare file path.
        """
        text = text.strip()
        kind, _, arg = text.partition(":")
        try:
            if kind == "constant":
                return cls("constant", value=float(arg))
            if kind in ("sine", "analytic_sine"):
                return cls("analytic_sine", a=float(arg))
        except ValueError:
            raise InvalidArgument(f"bad number in permeability spec {text!r}") from None
        if kind == "raster":
            return cls("raster", path=arg)
        if text in SHIPPED_RASTERS:
            return cls("raster", path=str(shipped_raster(text)))
        if Path(text).exists():
            return cls("raster", path=text)
        raise InvalidArgument(
            f"unrecognized permeability spec {text!r}; use constant:<v>, sine:<a>, raster:<path> "
            f"or one of {SHIPPED_RASTERS}")
