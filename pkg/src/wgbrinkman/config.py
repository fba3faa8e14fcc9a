"""Run configuration: ``key = value`` files merged with command-line overrides.

File syntax: one ``key = value`` per line, ``#`` starts a comment, blank
lines ignored. Keys use underscores (``stab_visc``); dashes are accepted
and normalized. Every error raised here is a :class:`ConfigError` naming
the key at fault.
"""
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional

from .exceptions import ConfigError, InvalidArgument
from .solver import METHODS, PRECONDITIONERS, SolveOptions

PROBLEMS = ("example1", "lid_flow")
DEFAULT_SIZES = (16, 24, 32, 40, 48, 56, 64)


def _bool(text):
    t = str(text).strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


def _sizes(text):
    if isinstance(text, (list, tuple)):
        return [int(s) for s in text]
    return [int(s) for s in str(text).replace(" ", "").split(",") if s]


def _choice(options):
    def conv(text):
        if text not in options:
            raise ValueError(f"expected one of {options}, got {text!r}")
        return text
    return conv


def _opt_str(text):
    return None if text in (None, "", "none") else str(text)


@dataclass
class RunConfig:
    problem: str = "example1"
    mu: float = 1.0
    a: float = 10.0
    sizes: List[int] = field(default_factory=lambda: list(DEFAULT_SIZES))
    order: int = 1
    stab_visc: bool = True
    kappa_sampling: str = "centroid"
    diagonal: str = "ne_sw"
    method: str = "krylov_minres"
    tol: float = 1e-10
    max_iter: int = 20000
    preconditioner: str = "diag_A_pressure_mass"
    perm: str = "constant:1"
    n: int = 16
    lid: float = 1.0
    top_only: bool = False
    seed: int = 0
    out: Optional[str] = None

    _converters = {
        "problem": _choice(PROBLEMS), "mu": float, "a": float, "sizes": _sizes,
        "order": int, "stab_visc": _bool, "kappa_sampling": _choice(("centroid", "quadrature")),
        "diagonal": _choice(("ne_sw", "nw_se")), "method": _choice(METHODS), "tol": float,
        "max_iter": int, "preconditioner": _choice(PRECONDITIONERS), "perm": str, "n": int,
        "lid": float, "top_only": _bool, "seed": int, "out": _opt_str,
    }

    def validate(self):
        if not self.mu > 0:
            raise ConfigError("mu", f"viscosity must be positive, got {self.mu}")
        if not self.a > 0:
            raise ConfigError("a", f"must be positive, got {self.a}")
        if not self.sizes or any(s < 1 for s in self.sizes):
            raise ConfigError("sizes", f"mesh sizes must be positive integers, got {self.sizes}")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigError("sizes", "mesh sizes must be strictly increasing")
        if self.order < 1:
            raise ConfigError("order", f"must be >= 1, got {self.order}")
        if self.n < 1:
            raise ConfigError("n", f"must be >= 1, got {self.n}")
        if not (0 < self.tol < 1):
            raise ConfigError("tol", f"must lie in (0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError("max_iter", f"must be >= 1, got {self.max_iter}")
        return self

    def solve_options(self):
        try:
            return SolveOptions(self.method, self.tol, self.max_iter, self.preconditioner)
        except InvalidArgument as exc:
            raise ConfigError("method", str(exc)) from None

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls) if not f.name.startswith("_")]

    @classmethod
    def from_mapping(cls, values, source="config"):
        """Build from raw ``{key: value}`` (strings or typed values)."""
        cfg = cls()
        valid = set(cls.keys())
        for raw_key, raw in values.items():
            key = raw_key.strip().replace("-", "_")
            if key not in valid:
                raise ConfigError(raw_key, f"unknown key in {source}")
            try:
                setattr(cfg, key, cls._converters[key](raw))
            except (TypeError, ValueError) as exc:
                raise ConfigError(key, f"bad value {raw!r}: {exc}") from None
        return cfg.validate()


def parse_config_text(text, source="config"):
    """``key = value`` lines to a dict of strings; later duplicates win."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            key = s.split()[0]
            raise ConfigError(key, f"{source}:{lineno}: expected 'key = value'")
        key, value = (t.strip() for t in s.split("=", 1))
        if not key:
            raise ConfigError("", f"{source}:{lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def load_config(path=None, overrides=None, defaults=None):
    """Merge ``defaults``, a config file (optional) and ``overrides``.

    Later sources win. ``overrides`` entries whose value is ``None`` are
    ignored so argparse namespaces can be passed directly.
    """
    values = dict(defaults or {})
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror or exc}") from None
        values.update(parse_config_text(text, str(path)))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k.replace("-", "_")] = v
    return RunConfig.from_mapping(values)
