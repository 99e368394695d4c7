"""
Run configuration, map documents and result files.

Configs are TOML with sections ``[map]``, ``[params]`` and ``[run]``::

    [map]
    matrix = [[2, 1], [1, 1]]
    # optional displacement of the conjugacy, records (k1, k2, re, im)
    displacement_x = [[0, 1, 0.0, -0.015], [0, -1, 0.0, 0.015]]
    displacement_y = []

    [params]
    pairs = [[-1.0, 1.0]]     # (p, s); use q_pairs for (p, q)
    t = [2.0]

    [run]
    N = 16

CSV files have a single header line and 17 significant digits.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .fourier import TrigPoly
from .torus import ConjugacyDiffeo, SmoothToralMap
from .transfer import MAX_N

FLOAT_FMT = "%.17g"
MATRIX_MAGIC = b"AGM1"
_HEADER = struct.Struct("<4sHH3d")  # 32 bytes


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"[{field}] {message}")
        self.field = field


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % float(x)
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    """(header, rows) with every entry left as a string."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---- maps -------------------------------------------------------------

def map_from_document(doc):
    """Build a map from the ``[map]`` table of a config."""
    if "matrix" not in doc:
        raise ConfigError("map.matrix", "missing")
    matrix = doc["matrix"]
    try:
        arr = np.array(matrix, dtype=np.int64)
        if arr.shape != (2, 2) or not np.array_equal(arr, np.array(matrix, dtype=float)):
            raise ValueError
    except (TypeError, ValueError):
        raise ConfigError("map.matrix", "must be a 2x2 integer matrix") from None
    modes = {}
    for comp, key in enumerate(("displacement_x", "displacement_y")):
        for i, rec in enumerate(doc.get(key, [])):
            if len(rec) != 4:
                raise ConfigError(f"map.{key}[{i}]", "records are (k1, k2, re, im)")
            k = (int(rec[0]), int(rec[1]))
            modes.setdefault(k, np.zeros(2, dtype=complex))[comp] += complex(rec[2], rec[3])
    try:
        if not modes:
            return SmoothToralMap.linear(arr)
        ks = sorted(modes)
        phi = ConjugacyDiffeo(np.array(ks, dtype=np.int64), np.array([modes[k] for k in ks]),
                              kappa_max=float(doc.get("kappa_max", 0.5)))
        if "epsilon" in doc:
            phi = phi.scaled(float(doc["epsilon"]))
        return SmoothToralMap.conjugated(arr, phi)
    except ValueError as exc:
        raise ConfigError("map", str(exc)) from None


def map_to_document(tmap):
    doc = {"matrix": tmap.base.matrix.tolist()}
    if tmap.conjugacy is not None:
        c = tmap.conjugacy
        for comp, key in enumerate(("displacement_x", "displacement_y")):
            doc[key] = [[int(k[0]), int(k[1]), float(v.real), float(v.imag)]
                        for k, v in zip(c.wavevectors, c.coeffs[:, comp]) if v != 0]
    return doc


# ---- run configuration -------------------------------------------------

KINDS = ("L", "M", "L_t", "M_t")
SUBCOMMAND_FORMULAS = ("rho_infty", "rho_one", "thm1", "thm2", "propL1_u", "propL1_s",
                       "propL12", "appendix_Lt", "appendix_Mt")


@dataclass(frozen=True)
class RunConfig:
    map_doc: dict
    pairs: tuple
    ts: tuple
    N: int = 16
    grid: int = 32
    n_max: int = 8
    N_tr: int = 10
    seed: int | None = None
    kind: str = "L"
    formulas: tuple = ("rho_infty", "rho_one")
    margin: float = 0.05
    refine: int = 8
    n_growth: int = 20
    n_funcs: int = 20
    options: dict = field(default_factory=dict)

    @property
    def tmap(self):
        return map_from_document(self.map_doc)

    def canonical(self):
        """Canonical JSON text of the config (seed resolved to 0 when missing)."""
        d = asdict(self)
        d["seed"] = 0 if self.seed is None else self.seed
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def with_seed(self, seed):
        d = asdict(self)
        d["seed"] = seed
        d["pairs"] = tuple(map(tuple, d["pairs"]))
        d["ts"] = tuple(d["ts"])
        d["formulas"] = tuple(d["formulas"])
        return RunConfig(**d)


def _number(value, name, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(name, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def parse_config(text):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("syntax", str(exc)) from None
    return config_from_document(doc)


def read_config(path):
    return parse_config(Path(path).read_text())


def config_from_document(doc):
    unknown = set(doc) - {"map", "params", "run"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    if "map" not in doc:
        raise ConfigError("map", "missing section")
    map_from_document(doc["map"])  # validates
    params = doc.get("params", {})
    pairs = []
    for key, to_ps in (("pairs", lambda a, b: (a, b)), ("q_pairs", lambda a, b: (a, a + b))):
        for i, rec in enumerate(params.get(key, [])):
            name = f"params.{key}[{i}]"
            if not isinstance(rec, list) or len(rec) != 2:
                raise ConfigError(name, "expected a pair")
            p, s = to_ps(_number(rec[0], name), _number(rec[1], name))
            if not p < 0:
                raise ConfigError(name, f"p must be negative, got {p}")
            if not s > 0:
                raise ConfigError(name, f"s must be positive, got {s}")
            pairs.append((p, s))
    if not pairs:
        raise ConfigError("params.pairs", "empty parameter list")
    ts = []
    for i, t in enumerate(params.get("t", [2.0])):
        t = _number(t, f"params.t[{i}]")
        if not 1.0 < t < np.inf:
            raise ConfigError(f"params.t[{i}]", f"t must lie in (1, inf), got {t}")
        ts.append(t)
    if not ts:
        raise ConfigError("params.t", "empty list")

    run = dict(doc.get("run", {}))
    kw = {}
    ints = {"N": (1, MAX_N), "grid": (16, 4096), "n_max": (2, 200), "N_tr": (1, 12),
            "refine": (1, MAX_N), "n_growth": (1, 1000), "n_funcs": (1, 10_000)}
    for key, (lo, hi) in ints.items():
        if key in run:
            v = _number(run.pop(key), f"run.{key}", int)
            if not lo <= v <= hi:
                raise ConfigError(f"run.{key}", f"must lie in [{lo}, {hi}], got {v}")
            kw[key] = v
    if "seed" in run:
        v = _number(run.pop("seed"), "run.seed", int)
        if not 0 <= v < 2 ** 64:
            raise ConfigError("run.seed", "must be an unsigned 64-bit integer")
        kw["seed"] = v
    if "margin" in run:
        v = _number(run.pop("margin"), "run.margin")
        if not v > 0:
            raise ConfigError("run.margin", "must be positive")
        kw["margin"] = v
    if "kind" in run:
        v = run.pop("kind")
        if v not in KINDS:
            raise ConfigError("run.kind", f"must be one of {KINDS}")
        kw["kind"] = v
    if "formulas" in run:
        v = tuple(run.pop("formulas"))
        bad = [f for f in v if f not in SUBCOMMAND_FORMULAS]
        if bad or not v:
            raise ConfigError("run.formulas", f"unknown formula(s) {bad}" if bad else "empty list")
        kw["formulas"] = v
    return RunConfig(doc["map"], tuple(pairs), tuple(ts), options=run, **kw)


# ---- result files ------------------------------------------------------

def write_bound_report(path, report):
    write_csv(path, ["n", "raw_value", "accelerated_value", "grid", "formula_id"], report.rows())


def write_eigenvalues(path, eigs, N, kind, p, q, t):
    values = getattr(eigs, "eigenvalues", np.asarray(eigs))
    residuals = getattr(eigs, "residuals", np.full(len(values), np.nan))
    rows = [(z.real, z.imag, abs(z), r, N, str(kind), p, q, t) for z, r in zip(values, residuals)]
    write_csv(path, ["re", "im", "modulus", "residual", "N", "kind", "p", "q", "t"], rows)


def dump_matrix(path, gm):
    """Binary dump: 32-byte header then little-endian complex128, column-major."""
    head = _HEADER.pack(MATRIX_MAGIC, gm.N, gm.kind.id, gm.params.p, gm.params.q, gm.params.t)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.asarray(gm.matrix, dtype="<c16").tobytes(order="F"))


def load_matrix(path):
    """(matrix, header dict) from :func:`dump_matrix` output."""
    raw = Path(path).read_bytes()
    magic, N, kind_id, p, q, t = _HEADER.unpack_from(raw)
    if magic != MATRIX_MAGIC:
        raise ValueError("not a matrix dump")
    n = (2 * N + 1) ** 2
    A = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape((n, n), order="F")
    return A, {"N": N, "kind_id": kind_id, "p": p, "q": q, "t": t}


def write_trigpoly(path, f):
    N = f.N
    rows = [(k1, k2, f.coeffs[k1 + N, k2 + N].real, f.coeffs[k1 + N, k2 + N].imag)
            for k1 in range(-N, N + 1) for k2 in range(-N, N + 1)]
    write_csv(path, ["k1", "k2", "re", "im"], rows)


def read_trigpoly(path):
    _, rows = read_csv(path)
    recs = [(int(a), int(b), float(c), float(d)) for a, b, c, d in rows]
    N = max(max(abs(r[0]), abs(r[1])) for r in recs) if recs else 0
    out = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
    for k1, k2, re, im in recs:
        out[k1 + N, k2 + N] = complex(re, im)
    return TrigPoly(out)


def write_determinant(path_coeffs, path_zeros, series, zeros):
    t = np.concatenate([[0.0], series.traces])
    write_csv(path_coeffs, ["n", "t_n", "c_n"], [(n, t[n], c) for n, c in enumerate(series.coeffs)])
    write_csv(path_zeros, ["re", "im", "error_bar", "ill_conditioned"],
              [(z.z.real, z.z.imag, z.error, z.ill_conditioned) for z in zeros])


def write_growth(path, record):
    write_csv(path, ["n", "strong_norm", "weak_norm"], record.rows())


class RunDirectory:
    """One directory per config hash; the manifest is written before any result."""

    def __init__(self, root, config, command, argv=()):
        self.config = config
        self.path = Path(root) / f"{command}-{config.digest()}"
        self.path.mkdir(parents=True, exist_ok=True)
        self.manifest = {
            "status": "incomplete",
            "command": command,
            "argv": list(argv),
            "config": json.loads(config.canonical()),
            "seed_defaulted": config.seed is None,
            "versions": _versions(),
            "files": [],
            "verdicts": [],
        }
        self._write_manifest()

    def file(self, name):
        self.manifest["files"].append(name)
        return self.path / name

    def add_verdict(self, text):
        self.manifest["verdicts"].append(text)

    def finish(self, status, wall_time):
        self.manifest["status"] = status
        self.manifest["wall_time_s"] = round(float(wall_time), 3)
        self._write_manifest()

    def _write_manifest(self):
        tmp = self.path / "manifest.json.tmp"
        tmp.write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")
        tmp.replace(self.path / "manifest.json")


def _versions():
    import platform

    import scipy
    import sympy

    from . import __version__
    return {"anisotorus": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "sympy": sympy.__version__, "python": platform.python_version()}
