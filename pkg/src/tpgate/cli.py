"""Command-line front end: ``tpgate {spectrum,gate,scan,optimize}``.

Every command writes one table, as CSV (``#``-prefixed key/value header
followed by a column header and rows) or JSON (``metadata``, ``summary``,
``columns``, ``rows``).  Both carry exactly the same fields.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .crystal import TrapConfig, linearity_check, solve_equilibrium
from .dynamics import PulseSequence, gate_result
from .errors import InfeasibleError, InstabilityError, SolverFailure, TpGateError, ValidationError
from .fidelity import WEIGHT_CONVENTIONS
from .modes import Axis, build_matrix, normal_modes
from .optimizer import (
    OptimizationProblem,
    default_mu_grid,
    grid_points,
    optimize_gate,
    sideband_window,
    solve_pencil,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INSTABILITY = 3
EXIT_INFEASIBLE = 4
EXIT_SOLVER = 5

DEFAULTS = {
    "ions": 10,
    "beta": 10.0,
    "nbar": 3.0,
    "eta_ref": 0.1,
    "tau": 5.0,
    "segments": 1,
    "pair": "1,2",
    "mu": None,
    "mu_grid": None,
    "mu_window": "full",
    "amplitudes": None,
    "axis": "x",
    "convention": "literal",
    "tau_sweep": None,
    "target": 0.0099,
    "out": None,
    "format": "csv",
}


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def _parse_pair(text):
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    if len(parts) != 2:
        raise ValidationError(f"--pair expects 'j,n', got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_range(text, name):
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(":")
    if len(parts) != 3:
        raise ValidationError(f"{name} expects 'lo:hi:step', got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if not step > 0 or hi < lo:
        raise ValidationError(f"{name} {text!r} describes an empty grid")
    return lo, hi, step


def _parse_floats(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with parameters; flags override it")
    common.add_argument("--ions", type=int, help="number of ions N")
    common.add_argument("--beta", type=float, help="transverse/axial trap frequency ratio")
    common.add_argument("--nbar", type=float, help="mean phonon number of the CM mode")
    common.add_argument("--eta-ref", dest="eta_ref", type=float, help="Lamb-Dicke parameter at w_z")
    common.add_argument("--axis", choices=["x", "z"], help="gate axis")
    common.add_argument("--convention", choices=WEIGHT_CONVENTIONS, help="thermal weight convention")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"], help="output format")

    gate_opts = argparse.ArgumentParser(add_help=False)
    gate_opts.add_argument("--tau", type=float, help="gate time in units of tau0 = 2 pi / w_z")
    gate_opts.add_argument("--pair", help="target ions 'j,n' (1-based)")

    scan_opts = argparse.ArgumentParser(add_help=False)
    scan_opts.add_argument("--segments", type=int, help="number of equal pulse segments m")
    scan_opts.add_argument("--mu-grid", dest="mu_grid", help="detuning grid 'lo:hi:step' in units of w_z")
    scan_opts.add_argument(
        "--mu-window",
        dest="mu_window",
        choices=["full", "sideband"],
        help="default grid: full mode band, or the first sideband of the top mode",
    )

    parser = argparse.ArgumentParser(prog="tpgate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="normal-mode spectrum of both axes")
    g = sub.add_parser("gate", parents=[common, gate_opts], help="evaluate one pulse sequence")
    g.add_argument("--mu", type=float, help="detuning in units of w_z")
    g.add_argument("--amplitudes", help="comma-separated segment Rabi amplitudes (units of w_z)")
    sub.add_parser("scan", parents=[common, gate_opts, scan_opts], help="optimal infidelity versus detuning")
    o = sub.add_parser("optimize", parents=[common, gate_opts, scan_opts], help="optimise detuning and amplitudes")
    o.add_argument("--tau-sweep", dest="tau_sweep", help="sweep gate time 'lo:hi:step' in tau0 units")
    o.add_argument("--target", type=float, help="infidelity target for the sweep threshold")
    return parser


def resolve_options(args):
    """Merge defaults, config file and explicit flags (in that order)."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ValidationError(f"unknown config key {key!r}")
            opts[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    opts["command"] = args.command
    return opts


def _trap_config(opts):
    return TrapConfig(
        n_ions=int(opts["ions"]),
        beta_x=float(opts["beta"]),
        eta_ref=float(opts["eta_ref"]),
        nbar_cm=float(opts["nbar"]),
    )


def _metadata(opts, config):
    meta = {"artifact": "tpgate", "version": __version__}
    meta.update({k: opts[k] for k in sorted(opts) if k not in ("out", "format")})
    meta.update(n_ions=config.n_ions, beta_x=config.beta_x, eta_ref=config.eta_ref, nbar_cm=config.nbar_cm)
    if opts.get("tau") is not None:
        meta["tau_internal"] = float(opts["tau"]) * 2.0 * math.pi
    return meta


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (list, tuple)):
        return json.dumps([_jsonable(v) for v in value])
    if value is None:
        return ""
    return str(value)


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def render(fmt, metadata, summary, columns, rows):
    if fmt == "json":
        doc = {
            "metadata": {k: _jsonable(v) for k, v in metadata.items()},
            "summary": {k: _jsonable(v) for k, v in summary.items()},
            "columns": list(columns),
            "rows": [{c: _jsonable(r[c]) for c in columns} for r in rows],
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    for key, value in metadata.items():
        buf.write(f"# {key}: {_fmt(value)}\n")
    for key, value in summary.items():
        buf.write(f"# summary.{key}: {_fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _emit(opts, text):
    if opts["out"]:
        with open(opts["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_spectrum(opts):
    config = _trap_config(opts)
    ok, margin = linearity_check(config)
    if not ok:
        print(f"warning: beta_x below the empirical linear-chain threshold (margin {margin:.3g})", file=sys.stderr)
    chain = solve_equilibrium(config.n_ions)
    n = config.n_ions
    columns = ["axis", "mode_index", "frequency", "eigenvalue"] + [f"b{j + 1}" for j in range(n)]
    rows = []
    for axis in (Axis.LONGITUDINAL, Axis.TRANSVERSE):
        table = normal_modes(build_matrix(chain, config.beta_x, axis), axis, config.eta_ref)
        # label 1 = CM mode: table order for x, reversed for z
        order = range(n) if axis is Axis.TRANSVERSE else range(n - 1, -1, -1)
        for label, k in enumerate(order, start=1):
            row = {"axis": axis.value, "mode_index": label,
                   "frequency": float(table.frequencies[k]), "eigenvalue": float(table.eigenvalues[k])}
            row.update({f"b{j + 1}": float(table.eigenvectors[j, k]) for j in range(n)})
            rows.append(row)
    meta = _metadata({k: opts[k] for k in ("command", "ions", "beta", "eta_ref", "nbar", "out", "format")}, config)
    meta["linear_margin"] = margin
    return render(opts["format"], meta, {}, columns, rows)


def _gate_modes(opts, config):
    axis = Axis.parse(opts["axis"])
    beta = config.beta_x if axis is Axis.TRANSVERSE else 1.0
    chain = solve_equilibrium(config.n_ions)
    return normal_modes(build_matrix(chain, beta, axis), axis, config.eta_ref)


def _tau_internal(opts):
    tau = float(opts["tau"])
    if not tau > 0:
        raise ValidationError("--tau must be positive")
    return tau * 2.0 * math.pi


def cmd_gate(opts):
    config = _trap_config(opts)
    if opts["mu"] is None or opts["amplitudes"] is None:
        raise ValidationError("gate requires --mu and --amplitudes")
    modes = _gate_modes(opts, config)
    seq = PulseSequence(float(opts["mu"]), _tau_internal(opts), _parse_floats(opts["amplitudes"]),
                        _parse_pair(opts["pair"]), modes.axis)
    seq.check_modes(modes)
    res = gate_result(seq, modes, config.nbar_cm, opts["convention"])
    columns = ["mode_index", "frequency", "weight",
               "alpha_j_re", "alpha_j_im", "alpha_j_abs", "alpha_n_re", "alpha_n_im", "alpha_n_abs"]
    rows = []
    for k in range(modes.n_modes):
        aj, an = res.alpha[0, k], res.alpha[1, k]
        rows.append({"mode_index": k + 1, "frequency": float(modes.frequencies[k]), "weight": float(res.weights[k]),
                     "alpha_j_re": aj.real, "alpha_j_im": aj.imag, "alpha_j_abs": abs(aj),
                     "alpha_n_re": an.real, "alpha_n_im": an.imag, "alpha_n_abs": abs(an)})
    summary = {"phi": res.phi, "phase_error": res.phase_error, "infidelity": res.infidelity}
    return render(opts["format"], _metadata(opts, config), summary, columns, rows)


def _problem(opts, config, tau=None):
    modes = _gate_modes(opts, config)
    tau = _tau_internal(opts) if tau is None else tau
    if opts["mu_grid"] is not None:
        grid = _parse_range(opts["mu_grid"], "--mu-grid")
    elif opts["mu_window"] == "sideband":
        grid = sideband_window(modes, tau)
    elif opts["mu_window"] == "full":
        grid = default_mu_grid(modes, config.beta_x if modes.axis is Axis.TRANSVERSE else 1.0)
    else:
        raise ValidationError(f"unknown --mu-window {opts['mu_window']!r}")
    return OptimizationProblem(config, modes, _parse_pair(opts["pair"]), tau, int(opts["segments"]),
                               grid, opts["convention"])


def _require_pair(config):
    if config.n_ions < 2:
        raise ValidationError("a two-ion gate needs at least two ions")


def cmd_scan(opts):
    config = _trap_config(opts)
    _require_pair(config)
    problem = _problem(opts, config)
    mus = grid_points(problem.mu_grid)
    mm, gg = problem.forms(mus)
    m = problem.m
    columns = ["mu", "infidelity", "phase"] + [f"amplitude_{p + 1}" for p in range(m)]
    rows = []
    for q, mu in enumerate(mus):
        amps, f = solve_pencil(mm[q], gg[q])
        row = {"mu": float(mu), "infidelity": f, "phase": float(amps @ gg[q] @ amps)}
        row.update({f"amplitude_{p + 1}": float(amps[p]) for p in range(m)})
        rows.append(row)
    finite = [r for r in rows if math.isfinite(r["infidelity"])]
    if not finite:
        raise InfeasibleError("no detuning in the grid reaches the target phase")
    best = min(finite, key=lambda r: r["infidelity"])
    summary = {"min_infidelity": best["infidelity"], "argmin_mu": best["mu"], "mu_grid": list(problem.mu_grid)}
    return render(opts["format"], _metadata(opts, config), summary, columns, rows)


def cmd_optimize(opts):
    config = _trap_config(opts)
    _require_pair(config)
    m = int(opts["segments"])
    if opts["tau_sweep"] is None:
        problem = _problem(opts, config)
        rep = optimize_gate(problem)
        summary = {"best_mu": rep.best_mu, "best_infidelity": rep.best_infidelity,
                   "phase_achieved": rep.phase_achieved, "max_amplitude": rep.max_amplitude,
                   "best_amplitudes": rep.best_amplitudes.tolist(), "mu_grid": list(problem.mu_grid)}
        rows = [{"mu": mu, "infidelity": f} for mu, f in rep.scan_curve]
        return render(opts["format"], _metadata(opts, config), summary, ["mu", "infidelity"], rows)

    lo, hi, step = _parse_range(opts["tau_sweep"], "--tau-sweep")
    taus = lo + step * np.arange(int(math.floor((hi - lo) / step + 1e-9)) + 1)
    target = float(opts["target"])
    columns = ["tau", "best_mu", "best_infidelity", "phase_achieved", "max_amplitude"] + [
        f"amplitude_{p + 1}" for p in range(m)]
    rows = []
    threshold = None
    for tau0 in taus:
        problem = _problem(opts, config, tau=float(tau0) * 2.0 * math.pi)
        rep = optimize_gate(problem)
        row = {"tau": float(tau0), "best_mu": rep.best_mu, "best_infidelity": rep.best_infidelity,
               "phase_achieved": rep.phase_achieved, "max_amplitude": rep.max_amplitude}
        row.update({f"amplitude_{p + 1}": float(rep.best_amplitudes[p]) for p in range(m)})
        rows.append(row)
        if threshold is None and rep.best_infidelity <= target:
            threshold = float(tau0)
    summary = {"target": target, "threshold_tau": threshold}
    return render(opts["format"], _metadata(opts, config), summary, columns, rows)


COMMANDS = {"spectrum": cmd_spectrum, "gate": cmd_gate, "scan": cmd_scan, "optimize": cmd_optimize}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        text = COMMANDS[args.command](opts)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InstabilityError as exc:
        print(f"unstable chain: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except TpGateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(opts, text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
