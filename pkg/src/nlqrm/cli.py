"""Command-line interface.

Every subcommand prints (or writes with ``--out``) a table in CSV or JSON.
Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from . import __version__
from .criticality import critical_eps, critical_g1, critical_scales, locate_qfi_peak
from .errors import BiasNeedsNonlinearity, ConfigError, InvalidInput, NumericalFailure
from .metrology import DEFAULT_DELTA, prep_time, qfi_overlap, qfi_sum_rule
from .model import ModelParams, validate_params
from .spectra import TruncationSpec, converge_ground
from .sweep import (
    SweepTable,
    emit,
    read_config,
    render,
    run_sweep,
    spec_from_entries,
    validate_spec,
)
from .wavefunction import position_wave

log = logging.getLogger("nlqrm")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

# flag dest -> (type, default)
SHARED = {
    "omega": (float, 0.1),
    "big_omega": (float, 1.0),
    "g1": (float, 0.0),
    "g2": (float, 0.0),
    "eps": (float, 0.0),
    "ncut": (int, None),
    "nmax": (int, 2048),
    "rtol": (float, 1e-8),
    "growth": (float, 1.5),
    "out": (str, None),
    "format": (str, "csv"),
    "workers": (int, 1),
}
EXTRA = {
    "spectrum": {"levels": (int, 6)},
    "qfi": {"param": (str, "g1"), "method": (str, "both"), "delta": (float, DEFAULT_DELTA)},
    "gap": {},
    "prep-time": {"lambda_end": (float, None), "quad_rtol": (float, 1e-6)},
    "boundary": {},
    "peak": {"param": (str, "g1"), "method": (str, "sum"), "peak_lo": (float, 0.3),
             "peak_hi": (float, 2.0), "xtol": (float, None)},
    "wavefunction": {"xmin": (float, None), "xmax": (float, None), "points": (int, 801)},
    "sweep": {},
}
CHOICES = {"format": ("csv", "json"), "param": ("g1", "eps"), "method": ("overlap", "sum", "sum_rule", "both")}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlqrm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, extra in EXTRA.items():
        cmd = sub.add_parser(name)
        for dest, (kind, _) in {**SHARED, **extra}.items():
            flag = "--" + dest.replace("_", "-")
            cmd.add_argument(flag, dest=dest, type=kind, default=None, choices=CHOICES.get(dest))
        cmd.add_argument("--config", default=None, help="flat key = value file; flags override")
        cmd.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_options(args: argparse.Namespace) -> tuple[dict, dict]:
    """Merge defaults < config file < flags.  Returns (options, config entries)."""
    entries = read_config(args.config) if args.config else {}
    table = {**SHARED, **EXTRA[args.command]}
    options = {}
    for dest, (kind, default) in table.items():
        value = getattr(args, dest)
        if value is None and dest in entries:
            raw, lineno = entries[dest]
            try:
                value = kind(raw)
            except ValueError:
                raise ConfigError(f"cannot read {raw!r}", line=lineno, key=dest) from None
            if dest in CHOICES and value not in CHOICES[dest]:
                raise ConfigError(f"must be one of {CHOICES[dest]}", line=lineno, key=dest)
        options[dest] = default if value is None else value
    return options, entries


def _params(o: dict) -> ModelParams:
    p = ModelParams(o["omega"], o["big_omega"], o["g1"], o["g2"], o["eps"])
    validate_params(p)
    return p


def _trunc(o: dict) -> TruncationSpec:
    try:
        return TruncationSpec(n_start=o["ncut"], n_max=o["nmax"], growth=o["growth"], rtol=o["rtol"])
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc


def _table(columns, rows, **meta) -> SweepTable:
    return SweepTable(list(columns), [list(r) for r in rows], {"version": __version__, **meta})


def cmd_spectrum(o, entries):
    p, t = _params(o), _trunc(o)
    ground = converge_ground(p, t, k=o["levels"])
    rows = [(i, float(e), float(e - ground.e0)) for i, e in enumerate(ground.eigen.values)]
    return _table(("level", "energy", "excitation"), rows,
                  params=p.as_dict(), n_c_final=ground.n_c_final, converged=ground.converged)


def cmd_qfi(o, entries):
    p, t = _params(o), _trunc(o)
    ground = converge_ground(p, t)
    methods = {"overlap": ["overlap"], "sum": ["sum_rule"], "sum_rule": ["sum_rule"],
               "both": ["overlap", "sum_rule"]}[o["method"]]
    rows = []
    for method in methods:
        if method == "overlap":
            est = qfi_overlap(p, o["param"], o["delta"], ground=ground)
        else:
            est = qfi_sum_rule(p, o["param"], ground=ground)
        rows.append((o["param"], est.lam, est.method, est.value, math.log(est.value) if est.value > 0 else -math.inf,
                     est.step if est.step is not None else math.nan, est.n_c))
    return _table(("param", "lambda", "method", "qfi", "ln_qfi", "step", "n_c"), rows, params=p.as_dict())


def cmd_gap(o, entries):
    p, t = _params(o), _trunc(o)
    ground = converge_ground(p, t)
    rows = [(ground.gap, ground.gap / p.omega, ground.n_c_final, ground.converged)]
    return _table(("gap", "gap_over_omega", "n_c_final", "converged"), rows, params=p.as_dict())


def cmd_prep_time(o, entries):
    p, t = _params(o), _trunc(o)
    lam = o["lambda_end"] if o["lambda_end"] is not None else abs(p.g1) / p.big_omega
    res = prep_time(p, lam, t, o["quad_rtol"])
    rows = [(res.lambda_end, res.value, res.quad_error, len(res.evaluations))]
    return _table(("lambda_end", "prep_time", "quad_error", "gap_evaluations"), rows, params=p.as_dict())


def cmd_boundary(o, entries):
    scales = critical_scales(o["omega"], o["big_omega"])
    g1c = critical_g1(o["omega"], o["big_omega"], o["g2"], o["eps"])
    try:
        eps_c = critical_eps(o["omega"], o["big_omega"], o["g1"], o["g2"])
    except BiasNeedsNonlinearity:
        eps_c = math.nan
    note = "second-order point; finite-omega QFI peak lies above" if o["g2"] == 0 and o["eps"] == 0 else ""
    rows = [(scales.g_s, scales.g_t, g1c, g1c / scales.g_s, eps_c, note)]
    return _table(("g_s", "g_t", "g1c", "g1c_over_gs", "eps_c", "note"), rows)


def cmd_peak(o, entries):
    p, t = _params(o), _trunc(o)
    method = "overlap" if o["method"] == "overlap" else "sum_rule"
    bracket = (o["peak_lo"] * p.g_s, o["peak_hi"] * p.g_s)
    peak = locate_qfi_peak(p, o["param"], bracket, o["xtol"], t, method=method)
    rows = [(peak.g_m, peak.g_m / p.g_s, peak.qfi_max, math.log(peak.qfi_max),
             peak.bracket[0], peak.bracket[1], peak.evaluations)]
    return _table(("g_m", "g_m_over_gs", "qfi_max", "ln_qfi_max", "lo", "hi", "evaluations"), rows,
                  params=p.as_dict())


def cmd_wavefunction(o, entries):
    p, t = _params(o), _trunc(o)
    ground = converge_ground(p, t)
    grid = None
    if o["xmin"] is not None or o["xmax"] is not None:
        if o["xmin"] is None or o["xmax"] is None:
            raise InvalidInput("--xmin and --xmax go together")
        grid = (o["xmin"], o["xmax"], o["points"])
    wave = position_wave(ground, grid)
    rows = zip(wave.xs, wave.xs / wave.x_s, wave.psi_up, wave.psi_down)
    return _table(("x", "x_over_xs", "psi_up", "psi_down"), rows, params=p.as_dict(), x_s=wave.x_s,
                  weight_up=wave.weight_up, weight_down=wave.weight_down, n_c_final=ground.n_c_final)


def cmd_sweep(o, entries):
    if not entries:
        raise InvalidInput("sweep needs --config")
    merged = dict(entries)
    for dest, value in o["explicit"].items():
        if dest not in ("out", "format"):
            merged[dest] = (str(value), 0)
    spec = spec_from_entries(merged)
    validate_spec(spec)
    return run_sweep(spec)


COMMANDS = {
    "spectrum": cmd_spectrum, "qfi": cmd_qfi, "gap": cmd_gap, "prep-time": cmd_prep_time,
    "boundary": cmd_boundary, "peak": cmd_peak, "wavefunction": cmd_wavefunction, "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        options, entries = resolve_options(args)
        # Sweep specs take every key from the file; only explicit flags override.
        options["explicit"] = {k: getattr(args, k) for k in SHARED if getattr(args, k) is not None}
        table = COMMANDS[args.command](options, entries)
        if options["out"]:
            emit(table, options["format"], options["out"])
            log.info("wrote %d rows to %s", len(table.rows), options["out"])
        else:
            sys.stdout.write(render(table, options["format"]))
    except ValueError as exc:  # InvalidInput, plus argument checks in the numerics
        print(f"nlqrm: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"nlqrm: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"nlqrm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
