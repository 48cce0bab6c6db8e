"""Command-line interface: simulate, separate, asv, benchmark, lagselect."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import asymptotics, joint_diag, metrics, presets
from .autocovariance import autocov_set
from .signal_model import MixingModel, SourceSpec, expand_to_ma, mix, simulate_sources

_METHODS = ("amuse", "deflation", "symmetric-fixedpoint", "symmetric-jacobi")


def _parse_lags(spec: str) -> tuple[int, ...]:
    """Lag list syntax: "1-10", "1-10,12-20/2,25", or a preset name."""
    spec = spec.strip()
    if spec.lower() in presets.LAG_PRESETS:
        return presets.lag_preset(spec)
    out: list[int] = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        step = 1
        if "/" in item:
            item, step_s = item.split("/")
            step = int(step_s)
        if "-" in item.lstrip("-"):
            lo, hi = item.split("-")
            out.extend(range(int(lo), int(hi) + 1, step))
        else:
            out.append(int(item))
    return tuple(out)


def _load_model(path: str | None, preset: str | None):
    if (path is None) == (preset is None):
        raise ValueError("provide exactly one of --model or --preset")
    if preset is not None:
        return list(presets.benchmark_model(preset)), None, None
    with open(path) as fh:
        doc = json.load(fh)
    specs = [SourceSpec.from_dict(c) for c in doc["components"]]
    omega = np.asarray(doc["omega"], dtype=float) if doc.get("omega") is not None else None
    mu = np.asarray(doc["mu"], dtype=float) if doc.get("mu") is not None else None
    return specs, omega, mu


def _write_series(path: str, x: np.ndarray, header: bool):
    head = ",".join(f"x{i+1}" for i in range(x.shape[0])) if header else ""
    np.savetxt(path, x.T, delimiter=",", fmt="%.17g", header=head, comments="")


def _read_series(path: str) -> np.ndarray:
    with open(path) as fh:
        first = fh.readline()
    skip = 0
    try:
        [float(tok) for tok in first.strip().split(",")]
    except ValueError:
        skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    return data.T


def _read_matrix(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def _fit(acs, method, args):
    if method == "amuse":
        tau = args.tau if args.tau is not None else min(acs.lags)
        return joint_diag.amuse(acs, tau)
    if method == "deflation":
        return joint_diag.sobi_deflation(
            acs, tol=args.tol, max_iter=args.max_iter,
            restarts=args.restarts, seed=args.seed)
    if method == "symmetric-fixedpoint":
        return joint_diag.sobi_symmetric_fixedpoint(
            acs, tol=args.tol, max_iter=args.max_iter)
    if method == "symmetric-jacobi":
        return joint_diag.sobi_symmetric_jacobi(
            acs, tol=args.jacobi_tol, max_sweeps=args.max_sweeps)
    raise ValueError(f"unknown method {method!r}")


def _sorted_expansions(specs, lags):
    """Expansions in identifiability order over the analysis lags.

    The deflation variance formulas are defined for components sorted by
    decreasing sum of squared autocovariances; sorting here makes the
    reported tables independent of the order components were listed in.
    """
    exps = [expand_to_ma(s, component_index=i) for i, s in enumerate(specs)]

    def strength(e):
        psi = e.psi
        return sum(
            float(np.dot(psi[: psi.size - k], psi[k:])) ** 2
            for k in lags if k < psi.size
        )

    return sorted(exps, key=strength, reverse=True)


def cmd_simulate(args) -> int:
    specs, omega, mu = _load_model(args.model, args.preset)
    z = simulate_sources(specs, args.T, args.seed, burn_in=args.burn_in)
    if args.mix:
        p = len(specs)
        model = MixingModel(omega if omega is not None else np.eye(p), mu)
        z = mix(z, model)
    _write_series(args.output, z, args.header)
    return 0


def cmd_separate(args) -> int:
    x = _read_series(args.data)
    lags = _parse_lags(args.lags)
    acs = autocov_set(x, lags, centered=not args.no_center)
    result = _fit(acs, args.method, args)
    z = result.gamma @ (x - x.mean(axis=1, keepdims=True)
                        if not args.no_center else x)
    _write_series(args.output + ".csv", z, args.header)
    report = {
        "gamma": result.gamma.tolist(),
        "method": result.method,
        "iterations": result.iterations,
        "converged": bool(result.converged),
        "residual": result.residual,
        "objective": result.objective,
        "warnings": list(result.warnings),
    }
    if args.omega:
        omega = _read_matrix(args.omega)
        gain = result.gamma @ omega
        report["mdi"] = metrics.mdi(gain)
        report["amari"] = metrics.amari(gain)
    with open(args.output + ".json", "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"{result.method}: converged={result.converged} "
          f"residual={result.residual:.3e}"
          + (f" mdi={report['mdi']:.6g}" if "mdi" in report else ""))
    return 0


def cmd_asv(args) -> int:
    specs, _, _ = _load_model(args.model, args.preset)
    lags = _parse_lags(args.lags)
    exps = _sorted_expansions(specs, lags)
    model = asymptotics.build_model(exps, lags)
    methods = ("deflation", "symmetric") if args.method == "both" else (args.method,)
    lines = []
    for method in methods:
        table = (asymptotics.asv_deflation(model) if method == "deflation"
                 else asymptotics.asv_symmetric(model))
        p = table.per_element.shape[0]
        for j in range(p):
            for i in range(p):
                lines.append(f"{method},{j+1},{i+1},{table.per_element[j,i]:.17g}")
        crit = asymptotics.global_criterion(table)
        lines.append(f"{method},global,,{crit:.17g}")
        print(f"{method},global,{crit:.17g}")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write("method,row,col,value\n")
            fh.write("\n".join(lines) + "\n")
    return 0


def _benchmark_rep(payload) -> float:
    (spec_dicts, lags, method, T, seed, rep, burn_in, tol, max_iter,
     restarts, jacobi_tol, max_sweeps) = payload
    specs = [SourceSpec.from_dict(d) for d in spec_dicts]
    z = simulate_sources(specs, T, (seed, rep), burn_in=burn_in)
    acs = autocov_set(z, lags, centered=True)
    if method == "deflation":
        res = joint_diag.sobi_deflation(acs, tol=tol, max_iter=max_iter,
                                        restarts=restarts, seed=(seed, rep, 1))
    elif method == "symmetric-fixedpoint":
        res = joint_diag.sobi_symmetric_fixedpoint(acs, tol=tol, max_iter=max_iter)
    else:
        res = joint_diag.sobi_symmetric_jacobi(acs, tol=jacobi_tol,
                                               max_sweeps=max_sweeps)
    p = z.shape[0]
    return T * (p - 1) * metrics.mdi(res.gamma) ** 2


def cmd_benchmark(args) -> int:
    specs, _, _ = _load_model(args.model, args.preset)
    lags = _parse_lags(args.lags)
    t_values = [int(t) for t in args.T_values.split(",")]
    methods = [m.strip() for m in args.methods.split(",")]
    spec_dicts = [s.to_dict() for s in specs]

    expected = {}
    exps = _sorted_expansions(specs, lags)
    model = asymptotics.build_model(exps, lags)
    for method in methods:
        try:
            table = (asymptotics.asv_deflation(model) if method == "deflation"
                     else asymptotics.asv_symmetric(model))
            expected[method] = asymptotics.global_criterion(table)
        except ValueError:
            expected[method] = float("nan")

    rows = []
    for T in t_values:
        for method in methods:
            payloads = [
                (spec_dicts, lags, method, T, args.seed, rep, args.burn_in,
                 args.tol, args.max_iter, args.restarts, args.jacobi_tol,
                 args.max_sweeps)
                for rep in range(args.reps)
            ]
            if args.jobs > 1:
                with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                    vals = list(ex.map(_benchmark_rep, payloads, chunksize=8))
            else:
                vals = [_benchmark_rep(p) for p in payloads]
            avg = float(np.mean(vals))
            rows.append((T, method, args.reps, avg, expected[method]))
            print(f"{T},{method},{args.reps},{avg:.17g},{expected[method]:.17g}")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write("T,method,reps,average,expected\n")
            for r in rows:
                fh.write(f"{r[0]},{r[1]},{r[2]},{r[3]:.17g},{r[4]:.17g}\n")
    return 0


def cmd_lagselect(args) -> int:
    x = _read_series(args.data)
    lag_sets = [_parse_lags(s) for s in args.lag_sets.split(";")]
    if len(lag_sets) < 2:
        raise ValueError("need at least two candidate lag sets")
    rows_sel = ([int(r) - 1 for r in args.rows.split(",")]
                if args.rows else list(range(x.shape[0])))
    scored = []
    for lags in lag_sets:
        acs = autocov_set(x, lags, centered=not args.no_center)
        result = _fit(acs, args.method, args)
        table = asymptotics.empirical_asv(x, result, lags, kmax=args.kmax)
        score = float(table.row_sums()[rows_sel].sum())
        scored.append((score, lags))
    scored.sort(key=lambda t: t[0])
    lines = ["rank,lags,row_variance_sum"]
    for rank, (score, lags) in enumerate(scored, start=1):
        lagstr = " ".join(str(k) for k in lags)
        lines.append(f"{rank},{lagstr},{score:.17g}")
        print(lines[-1])
    if args.output:
        with open(args.output, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def _add_solver_options(sp):
    sp.add_argument("--method", default="symmetric-jacobi", choices=_METHODS)
    sp.add_argument("--tau", type=int, default=None,
                    help="lag diagonalized by amuse (default: smallest)")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=1000)
    sp.add_argument("--restarts", type=int, default=5)
    sp.add_argument("--jacobi-tol", type=float, default=1e-12)
    sp.add_argument("--max-sweeps", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-center", action="store_true",
                    help="skip mean removal (data already centered)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sobikit",
        description="Blind source separation of stationary time series "
                    "via joint diagonalization of autocovariance matrices.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="simulate sources or mixtures")
    sp.add_argument("--model", help="JSON model file")
    sp.add_argument("--preset", help="bundled benchmark model a..d")
    sp.add_argument("--T", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--burn-in", type=int, default=2000)
    sp.add_argument("--mix", action="store_true",
                    help="apply the model's mixing matrix and location")
    sp.add_argument("--header", action="store_true")
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("separate", help="estimate the unmixing matrix")
    sp.add_argument("--data", required=True, help="CSV, rows = time points")
    sp.add_argument("--lags", required=True)
    sp.add_argument("--omega", help="CSV with the true mixing matrix")
    sp.add_argument("--header", action="store_true")
    sp.add_argument("--output", required=True, help="output path prefix")
    _add_solver_options(sp)
    sp.set_defaults(func=cmd_separate)

    sp = sub.add_parser("asv", help="asymptotic variances of a source model")
    sp.add_argument("--model", help="JSON model file")
    sp.add_argument("--preset", help="bundled benchmark model a..d")
    sp.add_argument("--lags", required=True)
    sp.add_argument("--method", default="both",
                    choices=("both", "deflation", "symmetric"))
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_asv)

    sp = sub.add_parser("benchmark", help="Monte Carlo efficiency sweep")
    sp.add_argument("--model", help="JSON model file")
    sp.add_argument("--preset", help="bundled benchmark model a..d")
    sp.add_argument("--lags", required=True)
    sp.add_argument("--methods", default="deflation,symmetric-jacobi")
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--T-values", dest="T_values", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--burn-in", type=int, default=2000)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=1000)
    sp.add_argument("--restarts", type=int, default=5)
    sp.add_argument("--jacobi-tol", type=float, default=1e-12)
    sp.add_argument("--max-sweeps", type=int, default=100)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("lagselect", help="rank candidate lag sets")
    sp.add_argument("--data", required=True)
    sp.add_argument("--lag-sets", required=True,
                    help="semicolon-separated lag lists or preset names")
    sp.add_argument("--rows", help="1-based source rows to score (default all)")
    sp.add_argument("--kmax", type=int, default=None)
    sp.add_argument("--output")
    _add_solver_options(sp)
    sp.set_defaults(func=cmd_lagselect)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
