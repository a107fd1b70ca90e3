"""Command-line front end: ``shgpla spectrum | compare | dynamics``.

Every subcommand assembles its output in memory and writes plain CSV
(``.`` decimal point, ``\\n`` line endings, 12 significant digits) or a
JSON mirror with the same field names.  Exit codes: 0 success, 2 invalid
arguments, 3 solver failure, 4 capacity exceeded.

Only the output directory (``SHGPLA_OUTDIR``) and the worker count
(``SHGPLA_WORKERS``) may come from the environment.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .dynamics import DEFAULT_EPS, DEFAULT_S_CAP, InitialState, evolve, tau_scale
from .errors import ArgumentError, CapacityError, ConvergenceError, UndefinedMeasureError
from .exact import RTOL, solve
from .measures import delta2_E, delta2_H, overlap_deficit
from .model import Block, ModelParams
from .quasiclassical import TABLE_STRATEGIES, AngleStrategy, approximate

EXIT_OK, EXIT_ARGS, EXIT_CONVERGENCE, EXIT_CAPACITY = 0, 2, 3, 4
ORACLE_AGREEMENT = 1e-8


def fmt(x) -> str:
    """12 significant digits, no negative zero, 'nan' for undefined values."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0.0:
        return "0"
    return format(x, ".12g")


def fmt_table1(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    text = format(x, ".1f")
    return "0.0" if text == "-0.0" else text


def _rounded(x):
    text = fmt(x)
    return float(text) if text else None


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(row) for row in rows]
    return "\n".join(lines) + "\n"


def _write(outdir: Path, name: str, text: str):
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / name, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=True) + "\n"


def _env_workers() -> int:
    raw = os.environ.get("SHGPLA_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ArgumentError(f"SHGPLA_WORKERS must be an integer, got {raw!r}") from None
    return n


# ---------------------------------------------------------------- parsing


def _add_model_args(p, need_s=True):
    p.add_argument("--k", type=int, default=0, help="harmonic parity label, 0 or 1")
    p.add_argument("--s", type=int, required=need_s, help="block size label (dimension s+1)")
    p.add_argument("--g", type=float, default=1.0, help="coupling magnitude |g|")
    p.add_argument("--g-phase", type=float, default=0.0, help="coupling phase arg(g) in radians")
    p.add_argument("--omega0", type=float, help="pump-mode frequency (with --omega1)")
    p.add_argument("--omega1", type=float, help="subharmonic-mode frequency (with --omega0)")
    p.add_argument("--delta", type=float, help="detuning 2*omega1 - omega0")
    p.add_argument("--resonance", action="store_true", help="force zero detuning (default)")
    p.add_argument("--method", choices=("sturm", "oracle", "both"), default="sturm")
    p.add_argument("--rtol", type=float, default=RTOL, help="relative eigenvalue tolerance")
    p.add_argument("--workers", type=int, default=None, help="threads for eigenvalue refinement")
    p.add_argument("--out", default=None, help="output directory (default $SHGPLA_OUTDIR or .)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shgpla", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="exact eigenvalues of one block")
    _add_model_args(sp)
    sp.add_argument("--amplitudes", action="store_true", help="also write amplitudes.csv")
    sp.add_argument("--table1", action="store_true", help="print lambda rounded to one decimal")

    cp = sub.add_parser("compare", help="exact vs quasiclassical spectra and accuracy measures")
    _add_model_args(cp)
    cp.add_argument("--stride", type=int, default=1, help="emit every n-th level")
    cp.add_argument("--qc", action="store_true", help="add expectation-value columns qc_r1,qc_r2,qc_r3")
    cp.add_argument("--table1", action="store_true", help="one-decimal levels, three-decimal measures")

    dp = sub.add_parser("dynamics", help="population dynamics for an initial state")
    _add_model_args(dp, need_s=False)
    dp.add_argument("--init", default="cluster", help="cluster | fock:n1,n0 | coherent:a1,a0")
    grid = dp.add_mutually_exclusive_group(required=True)
    grid.add_argument("--tau-max", type=float, help="end of grid in tau = |g| t sqrt(2 s_bar)")
    grid.add_argument("--t-max", type=float, help="end of grid in physical time")
    dp.add_argument("--steps", type=int, default=1000, help="number of intervals (rows = steps + 1)")
    dp.add_argument("--qc", action="store_true", help="add the closed-form approximation")
    dp.add_argument("--strategy", action="append", default=[],
                    help="add a trace propagated with a quasiclassical spectrum (repeatable)")
    dp.add_argument("--normalize", action="store_true", help="divide populations by s_bar")
    dp.add_argument("--eps", type=float, default=DEFAULT_EPS, help="coherent-state truncation tolerance")
    dp.add_argument("--s-max", type=int, default=DEFAULT_S_CAP, help="largest block a coherent state may use")
    return parser


def params_from_args(args) -> ModelParams:
    """Resolve the detuning flags; they are mutually exclusive."""
    omegas = (args.omega0 is not None, args.omega1 is not None)
    chosen = sum([any(omegas), args.delta is not None, args.resonance])
    if chosen > 1:
        raise ArgumentError("--omega0/--omega1, --delta and --resonance are mutually exclusive")
    if any(omegas) and not all(omegas):
        raise ArgumentError("--omega0 and --omega1 must be given together")
    if all(omegas):
        return ModelParams(args.omega0, args.omega1, args.g, args.g_phase)
    if args.delta is not None:
        return ModelParams.from_detuning(args.delta, args.g, args.g_phase)
    return ModelParams.from_detuning(0.0, args.g, args.g_phase)


def _validate_common(args):
    if args.g < 0 or not math.isfinite(args.g):
        raise ArgumentError("--g must be finite and non-negative")
    if not 0 < args.rtol < 1:
        raise ArgumentError("--rtol must lie in (0, 1)")
    workers = args.workers if args.workers is not None else _env_workers()
    if workers < 1:
        raise ArgumentError("worker count must be >= 1")
    args.workers = workers
    args.outdir = Path(args.out if args.out is not None else os.environ.get("SHGPLA_OUTDIR", "."))


# ---------------------------------------------------------------- commands


def _solve(block, params, args, vectors):
    method = "sturm" if args.method == "both" else args.method
    sol = solve(block, params, method=method, vectors=vectors, workers=args.workers, rtol=args.rtol)
    if args.method == "both":
        ref = solve(block, params, method="oracle", vectors=False)
        diff = float(np.max(np.abs(sol.lambdas - ref.lambdas)))
        scale = max(1.0, sol.spectral_radius)
        print(f"sturm vs oracle: max |dlambda| = {diff:.3e}", file=sys.stderr)
        if diff > ORACLE_AGREEMENT * scale:
            raise ConvergenceError(f"Sturm and oracle spectra disagree by {diff:.3e}")
    return sol


def cmd_spectrum(args, params) -> None:
    block = Block(args.k, args.s)
    sol = _solve(block, params, args, vectors=args.amplitudes)
    cell = fmt_table1 if args.table1 else fmt
    v = range(block.dim)
    if args.format == "json":
        doc = {"v": list(v), "lambda": [_rounded(x) for x in sol.lambdas]}
        if args.amplitudes:
            doc["Q"] = [[_rounded(x) for x in sol.Q[:, i]] for i in v]
        _write(args.outdir, "spectrum.json", _json(doc))
        return
    _write(args.outdir, "spectrum.csv", _csv(["v", "lambda"], ([str(i), cell(x)] for i, x in enumerate(sol.lambdas))))
    if args.amplitudes:
        rows = ([str(i), str(f), fmt(sol.Q[f, i])] for i in v for f in range(block.dim))
        _write(args.outdir, "amplitudes.csv", _csv(["v", "f", "Q"], rows))


def _measure(fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except UndefinedMeasureError:
        warnings.warn("reference spectrum is identically zero; relative measures undefined", RuntimeWarning)
        return math.nan


def cmd_compare(args, params) -> None:
    if args.stride < 1:
        raise ArgumentError("--stride must be >= 1")
    block = Block(args.k, args.s)
    sol = _solve(block, params, args, vectors=True)
    approx = [approximate(block, params, st, vectors=True) for st in TABLE_STRATEGIES]
    single = [a for a in approx if a.strategy.single_angle]
    exact = sol.lambdas
    names = [a.strategy.name for a in approx]

    d2 = {
        name: {
            "H": _measure(delta2_H, exact, a.lambdas_cmf, percent=True),
            "E": _measure(delta2_E, exact, a.lambdas_cmf, percent=True),
            "E_up": _measure(delta2_E, exact, a.lambdas_cmf, upper_only=True, percent=True),
        }
        for name, a in zip(names, approx)
    }
    levels = list(range(0, block.dim, args.stride))
    overlaps = []
    for v in range(block.dim):
        for a in single:
            cos, ef = overlap_deficit(a.S[:, v], sol.Q[:, v])
            overlaps.append((v, a.strategy.name, cos, ef))

    if args.format == "json":
        doc = {
            "v": levels,
            "lambda": [_rounded(exact[v]) for v in levels],
            "cmf": {n: [_rounded(a.lambdas_cmf[v]) for v in levels] for n, a in zip(names, approx)},
            "delta2": {n: {key: _rounded(val) for key, val in d.items()} for n, d in d2.items()},
            "overlap": [{"v": v, "strategy": n, "cos": _rounded(c), "delta2_ef": _rounded(e)}
                        for v, n, c, e in overlaps],
        }
        if args.qc:
            doc["qc"] = {a.strategy.name: [_rounded(a.lambdas_qc[v]) for v in levels] for a in single}
        _write(args.outdir, "compare.json", _json(doc))
        return

    cell = fmt_table1 if args.table1 else fmt
    mcell = (lambda x: "nan" if math.isnan(x) else format(x, ".3f")) if args.table1 else fmt
    header = ["v", "lambda_exact"] + [f"cmf_{n}" for n in names]
    if args.qc:
        header += [f"qc_{a.strategy.name}" for a in single]
    rows = []
    for v in levels:
        row = [str(v), cell(exact[v])] + [cell(a.lambdas_cmf[v]) for a in approx]
        if args.qc:
            row += [cell(a.lambdas_qc[v]) for a in single]
        rows.append(row)
    pad = [""] * (len(single) if args.qc else 0)
    for label, key in (("delta2_H", "H"), ("delta2_E", "E"), ("delta2_E_up", "E_up")):
        rows.append([label, ""] + [mcell(d2[n][key]) for n in names] + pad)
    _write(args.outdir, "compare.csv", _csv(header, rows))
    orows = ([str(v), n, fmt(c), fmt(e)] for v, n, c, e in overlaps)
    _write(args.outdir, "overlap.csv", _csv(["v", "strategy", "cos", "delta2_ef"], orows))


def cmd_dynamics(args, params) -> None:
    if args.steps < 1:
        raise ArgumentError("--steps must be >= 1")
    kind = args.init.strip().lower()
    if kind.startswith("cluster") and args.s is None:
        raise ArgumentError("--init cluster needs --s")
    initial = InitialState.parse(args.init, eps=args.eps, s_cap=args.s_max, k=args.k, s=args.s)
    strategies = tuple(AngleStrategy.parse(x) for x in args.strategy)

    if args.t_max is not None:
        t_max = args.t_max
    else:
        scale = tau_scale(params, initial.s_bar)
        if scale == 0.0:
            raise ArgumentError("--tau-max is undefined for |g| = 0 or s_bar = 0; use --t-max")
        t_max = args.tau_max / scale
    if not (math.isfinite(t_max) and t_max >= 0):
        raise ArgumentError("time range must be finite and non-negative")
    times = np.linspace(0.0, t_max, args.steps + 1)
    method = "sturm" if args.method == "both" else args.method
    trace = evolve(initial, params, times, qc=args.qc, approx=strategies, method=method, workers=args.workers)

    norm = 1.0
    if args.normalize:
        if trace.s_bar == 0.0:
            raise ArgumentError("--normalize needs s_bar > 0")
        norm = trace.s_bar
    cols = {"t": trace.times, "tau": trace.taus, "Y0": trace.Y0, "N0": trace.N0 / norm, "N1": trace.N1 / norm}
    if args.qc:
        cols["Y0_qc"] = trace.Y0_qc
        cols["N0_qc"] = trace.N0_qc / norm
    for name, y in trace.approx.items():
        cols[f"Y0_{name}"] = y
        cols[f"N0_{name}"] = trace.populations(y)[0] / norm

    if args.format == "json":
        doc = {"series": {key: [_rounded(x) for x in val] for key, val in cols.items()},
               "s_bar": _rounded(trace.s_bar), "k_bar": _rounded(trace.k_bar)}
        _write(args.outdir, "dynamics.json", _json(doc))
        return
    header = list(cols)
    data = list(cols.values())
    rows = ([fmt(col[i]) for col in data] for i in range(times.size))
    _write(args.outdir, "dynamics.csv", _csv(header, rows))


COMMANDS = {"spectrum": cmd_spectrum, "compare": cmd_compare, "dynamics": cmd_dynamics}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        _validate_common(args)
        params = params_from_args(args)
        COMMANDS[args.command](args, params)
    except (ArgumentError, UndefinedMeasureError) as exc:
        print(f"shgpla: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except ConvergenceError as exc:
        print(f"shgpla: solver failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except CapacityError as exc:
        print(f"shgpla: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
