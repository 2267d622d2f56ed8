"""Parameter sweeps: grid specs, flat config files, evaluation and emission.

Config files are flat ``key = value`` lines with ``#`` comments.  Axes are
declared by ``<name>_min``, ``<name>_max``, ``<name>_steps`` and optionally
``<name>_scale`` (``linear`` or ``log``) for ``name`` in g1, g2, eps, omega.
With ``scaled = true`` the coupling values are read in natural units: g1 in
units of g_s, g2 in units of g_t and eps in units of Omega.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .criticality import critical_eps, critical_g1, locate_qfi_peak
from .errors import ConfigError, InvalidInput, InvalidSpec, NlqrmError
from .metrology import DEFAULT_DELTA, prep_time, qfi_overlap, qfi_sum_rule
from .model import ModelParams, build_hamiltonian, validate_params
from .spectra import TruncationSpec, converge_ground, eigs_full
from .wavefunction import position_wave

AXIS_NAMES = ("g1", "g2", "eps", "omega")
QUANTITIES = ("qfi_g1", "qfi_eps", "gap", "prep_time", "peak", "boundary", "wavefunction_weights")
QFI_METHODS = ("overlap", "sum_rule", "both")
METHOD_ALIASES = {"overlap": "overlap", "sum": "sum_rule", "sum_rule": "sum_rule", "both": "both"}
_CAUGHT = (NlqrmError, ArithmeticError, ValueError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n_steps: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.n_steps)
        return np.linspace(self.lo, self.hi, self.n_steps)


@dataclass(frozen=True)
class SweepSpec:
    base: ModelParams
    axes: tuple[Axis, ...]
    quantities: tuple[str, ...] = ("qfi_g1", "gap")
    trunc: TruncationSpec = field(default_factory=TruncationSpec)
    qfi_method: str = "sum_rule"
    workers: int = 1
    scaled: bool = False
    delta: float = DEFAULT_DELTA
    quad_rtol: float = 1e-6
    peak_bracket: tuple[float, float] = (0.3, 2.0)

    def points(self) -> list[ModelParams]:
        """Grid points in row-major order (first axis slowest)."""
        grids = [axis.values() for axis in self.axes]
        mesh = np.meshgrid(*grids, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=1) if grids else np.empty((1, 0))
        return [self._point(dict(zip((a.name for a in self.axes), row))) for row in coords]

    def _point(self, coords: dict) -> ModelParams:
        values = {
            "omega": self.base.omega, "g1": self.base.g1, "g2": self.base.g2, "eps": self.base.eps,
        }
        values.update({k: float(v) for k, v in coords.items()})
        p = ModelParams(values["omega"], self.base.big_omega)
        if not self.scaled:
            return p.replace(g1=values["g1"], g2=values["g2"], eps=values["eps"])
        if not p.omega > 0:
            return p
        return p.replace(
            g1=values["g1"] * p.g_s, g2=values["g2"] * p.g_t, eps=values["eps"] * p.big_omega,
        )


@dataclass
class SweepTable:
    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)


def validate_spec(spec: SweepSpec) -> None:
    if not 1 <= len(spec.axes) <= 2:
        raise InvalidSpec(f"a sweep needs 1 or 2 axes, got {len(spec.axes)}")
    names = [a.name for a in spec.axes]
    if len(set(names)) != len(names):
        raise InvalidSpec(f"duplicate axes {names}")
    for axis in spec.axes:
        if axis.name not in AXIS_NAMES:
            raise InvalidSpec(f"unknown axis {axis.name!r}")
        if axis.n_steps < 2:
            raise InvalidSpec(f"axis {axis.name} needs n_steps >= 2, got {axis.n_steps}")
        if axis.scale not in ("linear", "log"):
            raise InvalidSpec(f"axis {axis.name} scale must be linear or log")
        if axis.scale == "log" and not (axis.lo > 0 and axis.hi > 0):
            raise InvalidSpec(f"log axis {axis.name} needs positive bounds")
    unknown = set(spec.quantities) - set(QUANTITIES)
    if unknown:
        raise InvalidSpec(f"unknown quantities {sorted(unknown)}")
    if spec.qfi_method not in QFI_METHODS:
        raise InvalidSpec(f"qfi_method must be one of {QFI_METHODS}")
    if spec.workers < 1:
        raise InvalidSpec("workers must be >= 1")
    for p in spec.points():
        try:
            validate_params(p)
        except InvalidInput as exc:
            raise InvalidSpec(f"grid point {p} is invalid: {exc}") from exc


def _qfi_columns(name: str, method: str) -> list[str]:
    if method == "both":
        return [f"{name}_overlap", f"{name}_sum"]
    return [name]


def table_columns(spec: SweepSpec) -> list[str]:
    cols = ["omega", "big_omega", "g1", "g2", "eps"]
    if spec.scaled:
        cols += ["g1_over_gs", "g2_over_gt", "eps_over_bigomega"]
    cols += ["n_c_final", "converged"]
    q = spec.quantities
    for name in ("qfi_g1", "qfi_eps"):
        if name in q:
            cols += _qfi_columns(name, spec.qfi_method)
    if "gap" in q:
        cols.append("gap")
    if "prep_time" in q:
        cols.append("prep_time")
        if "qfi_g1" in q:
            cols.append("qfi_over_time")
    if "peak" in q:
        cols += ["g_m", "qfi_max"]
        if "prep_time" in q:
            cols += ["prep_time_at_gm", "qfi_over_time_at_gm"]
    if "boundary" in q:
        cols += ["g1c", "eps_c"]
    if "wavefunction_weights" in q:
        cols += ["weight_up", "weight_down"]
    cols.append("error")
    return cols


def _tag(errors: list[str], what: str, exc: Exception) -> None:
    errors.append(f"{what}:{type(exc).__name__}")


def evaluate_point(spec: SweepSpec, p: ModelParams) -> dict:
    """All requested quantities at one grid point; failures become tags."""
    q = set(spec.quantities)
    out: dict = {"omega": p.omega, "big_omega": p.big_omega, "g1": p.g1, "g2": p.g2, "eps": p.eps}
    if spec.scaled:
        out.update(g1_over_gs=p.g1 / p.g_s, g2_over_gt=p.g2 / p.g_t, eps_over_bigomega=p.eps / p.big_omega)
    errors: list[str] = []
    ground = None
    out["n_c_final"], out["converged"] = 0, False
    try:
        ground = converge_ground(p, spec.trunc, strict=False)
        out["n_c_final"], out["converged"] = ground.n_c_final, ground.converged
        if not ground.converged:
            errors.append("ground:TruncationExhausted")
            ground = None
    except _CAUGHT as exc:
        _tag(errors, "ground", exc)

    full = None
    qfi_g1 = math.nan
    for name, which in (("qfi_g1", "g1_over_bigomega"), ("qfi_eps", "eps_over_bigomega")):
        if name not in q:
            continue
        for col, method in zip(_qfi_columns(name, spec.qfi_method), _methods(spec.qfi_method)):
            out[col] = math.nan
            if ground is None:
                continue
            try:
                if method == "sum_rule":
                    if full is None:
                        full = eigs_full(build_hamiltonian(p, ground.n_c_final))
                    est = qfi_sum_rule(p, which, ground=ground, full=full, check_truncation=False)
                else:
                    est = qfi_overlap(p, which, spec.delta, ground=ground)
                out[col] = est.value
            except _CAUGHT as exc:
                _tag(errors, col, exc)
        if name == "qfi_g1":
            qfi_g1 = out[_qfi_columns(name, spec.qfi_method)[-1]]

    if "gap" in q:
        out["gap"] = ground.gap if ground is not None else math.nan

    if "prep_time" in q:
        out["prep_time"] = math.nan
        try:
            out["prep_time"] = prep_time(p, abs(p.g1) / p.big_omega, spec.trunc, spec.quad_rtol).value
        except _CAUGHT as exc:
            _tag(errors, "prep_time", exc)
        if "qfi_g1" in q:
            out["qfi_over_time"] = _ratio(qfi_g1, out["prep_time"] * p.big_omega)

    if "peak" in q:
        out["g_m"] = out["qfi_max"] = math.nan
        try:
            bracket = (spec.peak_bracket[0] * p.g_s, spec.peak_bracket[1] * p.g_s)
            peak = locate_qfi_peak(p, "g1_over_bigomega", bracket, t=spec.trunc)
            out["g_m"], out["qfi_max"] = peak.g_m, peak.qfi_max
        except _CAUGHT as exc:
            _tag(errors, "peak", exc)
        if "prep_time" in q:
            out["prep_time_at_gm"] = out["qfi_over_time_at_gm"] = math.nan
            if math.isfinite(out["g_m"]):
                try:
                    t_m = prep_time(p, abs(out["g_m"]) / p.big_omega, spec.trunc, spec.quad_rtol).value
                    out["prep_time_at_gm"] = t_m
                    out["qfi_over_time_at_gm"] = _ratio(out["qfi_max"], t_m * p.big_omega)
                except _CAUGHT as exc:
                    _tag(errors, "prep_time_at_gm", exc)

    if "boundary" in q:
        out["g1c"] = out["eps_c"] = math.nan
        try:
            out["g1c"] = critical_g1(p.omega, p.big_omega, p.g2, p.eps)
        except _CAUGHT as exc:
            _tag(errors, "g1c", exc)
        try:
            out["eps_c"] = critical_eps(p.omega, p.big_omega, p.g1, p.g2)
        except _CAUGHT as exc:
            _tag(errors, "eps_c", exc)

    if "wavefunction_weights" in q:
        out["weight_up"] = out["weight_down"] = math.nan
        if ground is not None:
            try:
                wave = position_wave(ground)
                out["weight_up"], out["weight_down"] = wave.weight_up, wave.weight_down
            except _CAUGHT as exc:
                _tag(errors, "wavefunction", exc)

    out["error"] = ";".join(errors)
    return out


def _methods(method: str) -> list[str]:
    return ["overlap", "sum_rule"] if method == "both" else [method]


def _ratio(a: float, b: float) -> float:
    if not (math.isfinite(a) and math.isfinite(b)) or b <= 0.0:
        return math.nan
    return a / b


def _evaluate_row(args: tuple[SweepSpec, ModelParams, list[str]]) -> list:
    spec, p, columns = args
    try:
        values = evaluate_point(spec, p)
    except Exception as exc:  # keep the row even if something unforeseen breaks
        values = {"omega": p.omega, "big_omega": p.big_omega, "g1": p.g1, "g2": p.g2, "eps": p.eps,
                  "n_c_final": 0, "converged": False, "error": f"point:{type(exc).__name__}"}
    return [values.get(c, math.nan) for c in columns]


def run_sweep(spec: SweepSpec) -> SweepTable:
    validate_spec(spec)
    columns = table_columns(spec)
    jobs = [(spec, p, columns) for p in spec.points()]
    if spec.workers == 1 or len(jobs) == 1:
        rows = [_evaluate_row(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_evaluate_row, jobs, chunksize=1))
    meta = {
        "spec": format_config(spec),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "n_c_final": [row[columns.index("n_c_final")] for row in rows],
        "converged": [row[columns.index("converged")] for row in rows],
    }
    return SweepTable(columns, rows, meta)


# -- config files ---------------------------------------------------------

_PARAM_KEYS = ("omega", "big_omega", "g1", "g2", "eps")
_AXIS_SUFFIXES = ("min", "max", "steps", "scale")
# Keys the CLI consumes that carry no meaning for a sweep spec.
CLI_ONLY_KEYS = frozenset({
    "out", "format", "param", "lambda_end", "xmin", "xmax", "points", "levels", "xtol",
})
SWEEP_KEYS = frozenset({
    *_PARAM_KEYS, "axes", "quantities", "ncut", "nmax", "growth", "rtol", "method",
    "workers", "scaled", "delta", "quad_rtol", "peak_lo", "peak_hi",
    *(f"{a}_{s}" for a in AXIS_NAMES for s in _AXIS_SUFFIXES),
})
CONFIG_KEYS = SWEEP_KEYS | CLI_ONLY_KEYS

DEFAULT_OMEGA = 0.1
DEFAULT_BIG_OMEGA = 1.0


def read_config_text(text: str) -> dict[str, tuple[str, int]]:
    """Parse ``key = value`` lines into ``{key: (value, line_number)}``."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError("unknown key", line=lineno, key=key)
        if key in entries:
            raise ConfigError(f"duplicate key (first on line {entries[key][1]})", line=lineno, key=key)
        if not value:
            raise ConfigError("missing value", line=lineno, key=key)
        entries[key] = (value, lineno)
    return entries


def read_config(path) -> dict[str, tuple[str, int]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return read_config_text(text)


def _typed(entries, key, kind, default=None):
    if key not in entries:
        return default
    value, lineno = entries[key]
    try:
        if kind is bool:
            lowered = value.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return lowered in ("true", "1", "yes")
        if kind is int:
            as_float = float(value)
            if not as_float.is_integer():
                raise ValueError(value)
            return int(as_float)
        return kind(value)
    except ValueError:
        raise ConfigError(f"cannot read {value!r} as {kind.__name__}", line=lineno, key=key) from None


def spec_from_entries(entries: dict[str, tuple[str, int]]) -> SweepSpec:
    """Build a :class:`SweepSpec` from parsed config entries (CLI keys ignored)."""
    params = {k: _typed(entries, k, float, 0.0) for k in ("g1", "g2", "eps")}
    base = ModelParams(
        _typed(entries, "omega", float, DEFAULT_OMEGA),
        _typed(entries, "big_omega", float, DEFAULT_BIG_OMEGA),
        **params,
    )
    declared = []
    for key, (_, lineno) in sorted(entries.items(), key=lambda item: item[1][1]):
        stem, _, suffix = key.rpartition("_")
        if stem in AXIS_NAMES and suffix in _AXIS_SUFFIXES and stem not in declared:
            declared.append(stem)
    if "axes" in entries:
        order = [a.strip() for a in entries["axes"][0].split(",") if a.strip()]
        if sorted(order) != sorted(declared):
            raise ConfigError(f"axes {order} do not match declared axis keys {declared}", key="axes")
        declared = order
    axes = []
    for name in declared:
        missing = [s for s in ("min", "max", "steps") if f"{name}_{s}" not in entries]
        if missing:
            raise ConfigError(f"axis {name} lacks {', '.join(f'{name}_{s}' for s in missing)}")
        axes.append(Axis(
            name,
            _typed(entries, f"{name}_min", float),
            _typed(entries, f"{name}_max", float),
            _typed(entries, f"{name}_steps", int),
            _typed(entries, f"{name}_scale", str, "linear"),
        ))
    if "quantities" in entries:
        quantities = tuple(q.strip() for q in entries["quantities"][0].split(",") if q.strip())
    else:
        quantities = SweepSpec.__dataclass_fields__["quantities"].default
    method = _typed(entries, "method", str, "sum_rule")
    if method not in METHOD_ALIASES:
        raise ConfigError(f"unknown QFI method {method!r}", line=entries["method"][1], key="method")
    try:
        trunc = TruncationSpec(
            n_start=_typed(entries, "ncut", int),
            n_max=_typed(entries, "nmax", int, 2048),
            growth=_typed(entries, "growth", float, 1.5),
            rtol=_typed(entries, "rtol", float, 1e-8),
        )
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc
    return SweepSpec(
        base=base,
        axes=tuple(axes),
        quantities=quantities,
        trunc=trunc,
        qfi_method=METHOD_ALIASES[method],
        workers=_typed(entries, "workers", int, 1),
        scaled=_typed(entries, "scaled", bool, False),
        delta=_typed(entries, "delta", float, DEFAULT_DELTA),
        quad_rtol=_typed(entries, "quad_rtol", float, 1e-6),
        peak_bracket=(_typed(entries, "peak_lo", float, 0.3), _typed(entries, "peak_hi", float, 2.0)),
    )


def parse_config(path) -> SweepSpec:
    spec = spec_from_entries(read_config(path))
    validate_spec(spec)
    return spec


def parse_config_text(text: str) -> SweepSpec:
    spec = spec_from_entries(read_config_text(text))
    validate_spec(spec)
    return spec


def format_config(spec: SweepSpec) -> str:
    """Config text that parses back to ``spec``."""
    lines = [f"{k} = {getattr(spec.base, k)!r}" for k in _PARAM_KEYS]
    lines.append(f"axes = {', '.join(a.name for a in spec.axes)}")
    for a in spec.axes:
        lines += [f"{a.name}_min = {a.lo!r}", f"{a.name}_max = {a.hi!r}",
                  f"{a.name}_steps = {a.n_steps}", f"{a.name}_scale = {a.scale}"]
    lines.append(f"quantities = {', '.join(spec.quantities)}")
    if spec.trunc.n_start is not None:
        lines.append(f"ncut = {spec.trunc.n_start}")
    lines += [
        f"nmax = {spec.trunc.n_max}",
        f"growth = {spec.trunc.growth!r}",
        f"rtol = {spec.trunc.rtol!r}",
        f"method = {spec.qfi_method}",
        f"workers = {spec.workers}",
        f"scaled = {'true' if spec.scaled else 'false'}",
        f"delta = {spec.delta!r}",
        f"quad_rtol = {spec.quad_rtol!r}",
        f"peak_lo = {spec.peak_bracket[0]!r}",
        f"peak_hi = {spec.peak_bracket[1]!r}",
    ]
    return "\n".join(lines) + "\n"


# -- emission -------------------------------------------------------------

def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _json_value(value):
    if isinstance(value, list):
        return [_json_cell(v) for v in value]
    return _json_cell(value)


def render(table: SweepTable, fmt: str = "csv") -> str:
    if fmt == "json":
        payload = {
            "meta": {k: _json_value(v) for k, v in table.meta.items()},
            "columns": list(table.columns),
            "rows": [[_json_cell(v) for v in row] for row in table.rows],
        }
        return json.dumps(payload, indent=1) + "\n"
    if fmt != "csv":
        raise InvalidInput(f"unknown output format {fmt!r}")
    buf = io.StringIO()
    for key, value in table.meta.items():
        buf.write(f"# {key}: {json.dumps(_json_value(value))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def emit(table: SweepTable, fmt: str, path) -> None:
    """Write ``table`` as CSV or JSON; I/O failures name the path."""
    text = render(table, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def read_csv_table(path) -> SweepTable:
    """Inverse of CSV emission; numeric cells come back as float, int or bool."""
    meta: dict = {}
    body = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("# ") and ": " in line and not body:
                key, value = line[2:].split(": ", 1)
                meta[key] = json.loads(value)
            elif line.startswith("#"):
                continue
            else:
                body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = [[_parse_cell(c) for c in row] for row in reader]
    return SweepTable(columns, rows, meta)


def _parse_cell(cell: str):
    if cell in ("true", "false"):
        return cell == "true"
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell
