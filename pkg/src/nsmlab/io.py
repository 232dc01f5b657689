"""Configuration files, ledger CSV, binary snapshots and report tables.

Config files are INI documents::

    [grid]      dim, n, length
    [physics]   mu, sigma, c
    [run]       dt, t_end, n_trunc, sample_stride, seed, track_decomposition, allow_large
    [initial]   recipe, energy_target, ems_norm_target, s_exponent,
                spectrum_slope, spectrum_cutoff, em_split
    [estimates] c_star
    [checks]    <report name> = <tolerance factor>

Snapshots are ``b"NSMX"``, a little-endian ``uint32`` format version, a
little-endian ``uint32`` header length, a UTF-8 JSON header with sorted keys,
then the coefficient arrays as little-endian ``float64`` in
``(field, component, lattice)`` row-major order with real and imaginary parts
interleaved.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import re
import struct
import tempfile

import numpy as np

from .dynamics import PlasmaState, RunConfig
from .estimates import CHECKS
from .ledger import EnergyLedger
from .spectral import SpectralField, make_grid

MAGIC = b"NSMX"
SNAPSHOT_VERSION = 1

_FLOAT, _INT, _BOOL, _STR, _OPT_INT = "float", "int", "bool", "str", "int?"

SCHEMA = {
    "grid": {"dim": _INT, "n": _INT, "length": _FLOAT},
    "physics": {"mu": _FLOAT, "sigma": _FLOAT, "c": _FLOAT},
    "run": {"dt": _FLOAT, "t_end": _FLOAT, "n_trunc": _OPT_INT, "sample_stride": _INT,
            "seed": _INT, "track_decomposition": _BOOL, "allow_large": _BOOL},
    "initial": {"recipe": _STR, "energy_target": _FLOAT, "ems_norm_target": _FLOAT,
                "s_exponent": _FLOAT, "spectrum_slope": _FLOAT, "spectrum_cutoff": _FLOAT,
                "em_split": _FLOAT},
    "estimates": {"c_star": _FLOAT},
}
POSITIVE = {"length", "mu", "sigma", "c", "dt", "n", "sample_stride"}
RECIPES = ("zero", "random", "velocity")


class ConfigError(ValueError):
    """Schema violation in a config file; carries the offending key and line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None,
                 path: str | None = None):
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        if key:
            message = f"[{key}] {message}"
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.key, self.line, self.path = key, line, path


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    index, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), no)
            continue
        m = re.match(r"([^=:]+)[=:]", s)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), no)
    return index


def _convert(kind: str, raw: str):
    s = raw.strip()
    if kind == _FLOAT:
        v = float(s)
        if not math.isfinite(v):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return v
    if kind == _INT:
        return int(s)
    if kind == _OPT_INT:
        return None if s.lower() in ("none", "") else int(s)
    if kind == _BOOL:
        t = s.lower()
        if t in ("1", "true", "yes", "on"):
            return True
        if t in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    return s


def parse_config_text(text: str, path: str | None = None) -> RunConfig:
    """Parse config text into a validated :class:`RunConfig`."""
    lines = _line_index(text)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"),
                                   default_section="__none__")
    try:
        cp.read_string(text, source=str(path or "<config>"))
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], path=path,
                          line=getattr(exc, "lineno", None)) from None
    values, checks = {}, {}
    for section in cp.sections():
        sec_line = lines.get((section, None))
        if section == "checks":
            for key, raw in cp.items(section):
                ln = lines.get((section, key))
                if key not in CHECKS:
                    raise ConfigError(f"unknown check; known: {', '.join(CHECKS)}",
                                      f"checks.{key}", ln, path)
                try:
                    factor = float(raw)
                except ValueError:
                    raise ConfigError(f"tolerance factor must be a number, got {raw!r}",
                                      f"checks.{key}", ln, path) from None
                if not factor > 0:
                    raise ConfigError("tolerance factor must be positive", f"checks.{key}", ln, path)
                checks[key] = factor
            continue
        if section not in SCHEMA:
            raise ConfigError(f"unknown section; known: {', '.join(list(SCHEMA) + ['checks'])}",
                              section, sec_line, path)
        for key, raw in cp.items(section):
            ln = lines.get((section, key))
            kind = SCHEMA[section].get(key)
            if kind is None:
                raise ConfigError("unknown key", f"{section}.{key}", ln, path)
            try:
                v = _convert(kind, raw)
            except ValueError as exc:
                raise ConfigError(str(exc), f"{section}.{key}", ln, path) from None
            if key in POSITIVE and not v > 0:
                raise ConfigError(f"must be positive, got {raw.strip()}", f"{section}.{key}", ln, path)
            if kind == _FLOAT and v < 0:
                raise ConfigError(f"must be nonnegative, got {raw.strip()}",
                                  f"{section}.{key}", ln, path)
            if key == "recipe" and v not in RECIPES:
                raise ConfigError(f"unknown recipe {v!r}; known: {', '.join(RECIPES)}",
                                  f"{section}.{key}", ln, path)
            values[key] = v
    try:
        return RunConfig(**values, checks=checks)
    except ValueError as exc:
        raise ConfigError(str(exc), path=path) from None


def parse_config(path) -> RunConfig:
    """Read and validate a config file."""
    path = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, path)


def config_text(config: RunConfig) -> str:
    """Serialize a config; parsing the result gives an equal config."""
    buf = io.StringIO()
    for section, keys in SCHEMA.items():
        buf.write(f"[{section}]\n")
        for key, kind in keys.items():
            v = getattr(config, key)
            if kind == _FLOAT:
                s = repr(float(v))
            elif kind == _OPT_INT:
                s = "none" if v is None else str(int(v))
            elif kind == _BOOL:
                s = "true" if v else "false"
            else:
                s = str(v)
            buf.write(f"{key} = {s}\n")
        buf.write("\n")
    buf.write("[checks]\n")
    for name, factor in config.checks.items():
        buf.write(f"{name} = {float(factor)!r}\n")
    return buf.getvalue()


def write_config(config: RunConfig, path) -> None:
    _atomic_write(path, config_text(config).encode("utf-8"))


# ---------------------------------------------------------------- atomic writes

def _atomic_write(path, data: bytes) -> None:
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- ledger CSV

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def ledger_csv(ledger: EnergyLedger) -> str:
    names = ledger.names
    out = [",".join(["time"] + names)]
    cols = [ledger.times] + [ledger.channels[n] for n in names]
    for i in range(len(ledger)):
        out.append(",".join(_fmt(c[i]) for c in cols))
    return "\n".join(out) + "\n"


def write_ledger(ledger: EnergyLedger, path) -> None:
    """CSV with header ``time,<channel>...`` and 17 significant digits."""
    _atomic_write(path, ledger_csv(ledger).encode("ascii"))


def meta_path(path) -> str:
    return os.fspath(path) + ".meta.json"


def write_ledger_meta(ledger: EnergyLedger, path) -> None:
    """Sidecar JSON with the run parameters the estimate checks need."""
    text = json.dumps(ledger.meta, sort_keys=True, indent=1, default=_jsonable) + "\n"
    _atomic_write(meta_path(path), text.encode("utf-8"))


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return str(x)


def read_ledger(path) -> EnergyLedger:
    """Read a ledger CSV; a ``.meta.json`` sidecar, if present, fills ``meta``."""
    with open(os.fspath(path), newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "time":
        raise ValueError(f"{path}: not a ledger file (header must start with 'time')")
    head = rows[0]
    body = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=np.float64)
    body = body.reshape(-1, len(head))
    meta = {}
    if os.path.exists(meta_path(path)):
        with open(meta_path(path), encoding="utf-8") as fh:
            meta = json.load(fh)
    return EnergyLedger(body[:, 0], {n: body[:, i] for i, n in enumerate(head[1:], 1)}, meta)


# ---------------------------------------------------------------- snapshots

def snapshot_bytes(state: PlasmaState, meta: dict | None = None) -> bytes:
    g = state.u.grid
    names = ["u", "E", "B"]
    arrs = [state.u.coeffs, state.E.coeffs, state.B.coeffs]
    header = {"grid": {"dim": g.dim, "n": g.n, "length": g.length}, "time": float(state.t),
              "components": int(arrs[0].shape[0]), "fields": names,
              "params": {"mu": state.params.mu, "sigma": state.params.sigma, "c": state.params.c},
              "meta": dict(meta or {})}
    hb = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    data = np.stack(arrs).astype("<c16", copy=False).tobytes(order="C")
    return MAGIC + struct.pack("<II", SNAPSHOT_VERSION, len(hb)) + hb + data


def write_snapshot(state: PlasmaState, path, meta: dict | None = None) -> None:
    _atomic_write(path, snapshot_bytes(state, meta))


def read_snapshot(path):
    """Return ``(header, {name: SpectralField})``."""
    with open(os.fspath(path), "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < 12:
        raise ValueError(f"{path}: truncated header")
    version, hlen = struct.unpack("<II", blob[4:12])
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    if 12 + hlen > len(blob):
        raise ValueError(f"{path}: header length {hlen} exceeds file size")
    header = json.loads(blob[12:12 + hlen].decode("utf-8"))
    gd = header["grid"]
    grid = make_grid(gd["dim"], gd["n"], gd["length"])
    names, nc = header["fields"], header["components"]
    shape = (len(names), nc) + grid.shape
    expected = int(np.prod(shape)) * 16
    payload = blob[12 + hlen:]
    if len(payload) != expected:
        raise ValueError(f"{path}: array payload has {len(payload)} bytes, expected {expected}")
    arr = np.frombuffer(payload, dtype="<c16").reshape(shape).astype(np.complex128)
    return header, {n: SpectralField(grid, arr[i].copy()) for i, n in enumerate(names)}


# ---------------------------------------------------------------- reports

REPORT_COLUMNS = ("name", "left", "right", "empirical_constant", "tolerance_factor", "passed",
                  "flags", "context")

def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, REPORT_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        row = r.row()
        w.writerow({k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def write_reports(reports, path) -> None:
    _atomic_write(path, reports_csv(reports).encode("utf-8"))


def write_table(header, rows, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])
    _atomic_write(path, buf.getvalue().encode("utf-8"))
