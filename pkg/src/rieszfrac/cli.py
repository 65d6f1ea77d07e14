"""Command line front end: catalog fractals, run experiments, emit plot data.

Every run is a pure function of its flags (or config document): numeric CSV
columns are printed at 17 significant digits, summaries are sorted JSON, and
no timestamps or environment details are written, so reruns are
byte-identical regardless of RIESZ_THREADS.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import math
import os
from dataclasses import dataclass

import jsonschema

from .asymptotics import (
    empirical_cell_measure,
    g_curve,
    gap_certificate,
    geometric_limit,
    monotonicity_check,
)
from .energy import min_pairwise_distance
from .errors import (
    ClassificationError,
    DomainError,
    HypothesisError,
    ResourceBudgetError,
    RieszFracError,
    SingularConfigurationError,
    UsageError,
)
from .fractal import load_fractal, moran_dimension, parse_number
from .minimize import (
    DEFAULT_SUBSET_BUDGET,
    SearchOptions,
    _auto_depth,
    best_packing,
    exhaustive_minimize,
    local_search_minimize,
)
from .serialize import configuration_to_csv, fmt_float, read_table, write_table

_ENERGY_NOTE = "energy convention: ordered pairs, sum over i != j of |xi - xj|^(-s)"


def _load_schema() -> dict:
    ref = importlib.resources.files("rieszfrac") / "schemas" / "experiment.schema.json"
    return json.loads(ref.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ExperimentConfig:
    """A schema-validated experiment document."""

    doc: dict

    @classmethod
    def from_dict(cls, doc) -> "ExperimentConfig":
        try:
            jsonschema.Draft7Validator(_load_schema()).validate(doc)
        except jsonschema.ValidationError as exc:
            raise UsageError(f"experiment config rejected: {exc.message}") from exc
        return cls(doc)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


def _search_options(params: dict) -> SearchOptions:
    return SearchOptions(
        depth=params.get("depth"),
        max_depth=params.get("max_depth"),
        restarts=params.get("restarts", 3),
        moves_budget=params.get("moves_budget", 10_000),
        seed=params.get("seed", 0),
        strategy=params.get("strategy", "local-search"),
    )


def _write_summary(out_dir: str, name: str, summary: dict):
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _run_minimize(fractal, params: dict, out_dir: str) -> dict:
    n = params.get("n")
    if n is None:
        raise UsageError("minimize needs n")
    s = params["s"]
    opts = _search_options(params)
    if opts.strategy == "exhaustive":
        depth = opts.depth if opts.depth is not None else _auto_depth(len(fractal.maps), n)
        budget = params.get("subset_budget", DEFAULT_SUBSET_BUDGET)
        result = exhaustive_minimize(fractal, n, s, depth, budget=budget)
    else:
        depth = opts.depth if opts.depth is not None else _auto_depth(len(fractal.maps), n)
        result = local_search_minimize(fractal, n, s, opts)
    delta = min_pairwise_distance(result.config)
    write_table(
        os.path.join(out_dir, "minimize_results.csv"),
        ["N", "s", "depth", "strategy", "seed", "energy", "normalized",
         "min_distance", "certified"],
        [[n, s, depth, result.strategy, opts.seed, result.record.energy,
          result.record.normalized, delta, result.certified]],
        comment=_ENERGY_NOTE,
    )
    configuration_to_csv(result.config, os.path.join(out_dir, "minimize_points.csv"))
    summary = {
        "N": n, "s": s, "depth": depth, "strategy": result.strategy,
        "seed": opts.seed, "energy": result.record.energy,
        "normalized": result.record.normalized, "min_distance": delta,
        "certified": result.certified, "iterations": result.iterations,
    }
    _write_summary(out_dir, "minimize_summary.json", summary)
    return summary


def _run_packing(fractal, params: dict, out_dir: str) -> dict:
    n = params.get("n")
    if n is None:
        raise UsageError("packing needs n")
    depth = params.get("depth")
    if depth is None:
        depth = _auto_depth(len(fractal.maps), n)
    opts = _search_options(params)
    budget = params.get("subset_budget", DEFAULT_SUBSET_BUDGET)
    result = best_packing(fractal, n, depth, opts, budget=budget)
    write_table(
        os.path.join(out_dir, "packing_results.csv"),
        ["N", "depth", "delta", "certified", "strategy"],
        [[n, depth, result.delta, result.certified, result.strategy]],
        comment="delta: best found minimum pairwise distance",
    )
    configuration_to_csv(result.config, os.path.join(out_dir, "packing_points.csv"))
    summary = {"N": n, "depth": depth, "delta": result.delta,
               "certified": result.certified, "strategy": result.strategy}
    _write_summary(out_dir, "packing_summary.json", summary)
    return summary


def _run_geometric_limit(fractal, params: dict, out_dir: str) -> dict:
    s = params["s"]
    n0 = params.get("n0", 2)
    k_max = params.get("k_max", 6)
    polish = params.get("polish", True)
    opts = _search_options(params)
    report = geometric_limit(fractal, s, n0, k_max, opts, polish=polish)
    rows = []
    for j in range(len(report.n_values)):
        delta = math.nan if j == 0 else report.deltas[j - 1]
        sep = min_pairwise_distance(report.stages[j].config) \
            if report.stages[j].config.n >= 2 else math.nan
        rows.append([j, report.n_values[j], report.energies[j],
                     report.normalized[j], delta, report.tail_bounds[j], sep])
    write_table(
        os.path.join(out_dir, "geometric_limit.csv"),
        ["k", "N", "energy", "normalized", "delta", "tail_bound", "min_distance"],
        rows,
        comment=_ENERGY_NOTE + "; normalized = energy / N^(1+s/d)",
    )
    summary = {
        "limit_estimate": report.limit_estimate, "s": s, "d": report.d,
        "n0": n0, "k_max": k_max, "polish": polish,
        "last_delta": report.deltas[-1], "tail_at_n0": report.tail_bounds[0],
    }
    _write_summary(out_dir, "geometric_limit_summary.json", summary)
    return summary


def _run_g_curve(fractal, params: dict, out_dir: str) -> dict:
    s = params["s"]
    bins = params.get("bins", 16)
    n_min = params.get("n_min")
    n_max = params.get("n_max")
    if n_min is None or n_max is None:
        raise UsageError("g-curve needs n_min and n_max")
    opts = _search_options({**params, "strategy": params.get("strategy", "lift-seeded")})
    points = g_curve(fractal, s, bins, n_min, n_max, opts)
    rows = []
    sample_rows = []
    for i, pt in enumerate(points):
        rows.append([i, pt.theta, len(pt.N_list), pt.estimate, pt.spread])
        for n, v in zip(pt.N_list, pt.normalized_values):
            sample_rows.append([n, pt.theta, v])
    sample_rows.sort(key=lambda r: r[0])
    write_table(
        os.path.join(out_dir, "g_curve.csv"),
        ["bin", "theta", "count", "estimate", "spread"],
        rows,
        comment=_ENERGY_NOTE + "; theta = bin center of {log_M N}",
    )
    write_table(
        os.path.join(out_dir, "g_curve_samples.csv"),
        ["N", "theta", "normalized"],
        sample_rows,
        comment=_ENERGY_NOTE,
    )
    estimates = [pt.estimate for pt in points]
    filled = [e for e in estimates if not math.isnan(e)]
    jumps = []
    prev = None
    for e in estimates:
        if math.isnan(e):
            continue
        if prev is not None:
            jumps.append(abs(e - prev))
        prev = e
    summary = {
        "bins": bins, "n_min": n_min, "n_max": n_max, "s": s,
        "estimates": estimates, "empty_bins": len(estimates) - len(filled),
        "max_adjacent_jump": max(jumps) if jumps else math.nan,
    }
    _write_summary(out_dir, "g_curve_summary.json", summary)
    return summary


def _run_gap(fractal, params: dict, out_dir: str) -> dict:
    cert = gap_certificate(fractal, params["s"])
    fields = ["M", "r", "d", "sigma", "s", "R", "s_threshold",
              "threshold_defined", "upper_coeff", "lower_coeff", "ratio",
              "certified"]
    row = [getattr(cert, f) for f in fields]
    write_table(
        os.path.join(out_dir, "gap_certificate.csv"),
        fields, [row],
        comment="closed-form certificate; sigma is rescaled to diameter 1",
    )
    summary = {f: getattr(cert, f) for f in fields}
    _write_summary(out_dir, "gap_summary.json", summary)
    return summary


def _run_weakstar(fractal, params: dict, out_dir: str) -> dict:
    n = params.get("n")
    if n is None:
        raise UsageError("weakstar needs n")
    s = params["s"]
    depth = params.get("measure_depth", 2)
    opts = _search_options({**params, "strategy": params.get("strategy", "lift-seeded")})
    result = local_search_minimize(fractal, n, s, opts)
    report = empirical_cell_measure(fractal, result.config, depth)
    rows = []
    for cell in sorted(report.counts):
        rows.append([cell, report.counts[cell], report.empirical[cell],
                     report.target[cell],
                     abs(report.empirical[cell] - report.target[cell])])
    write_table(
        os.path.join(out_dir, "weakstar.csv"),
        ["cell", "count", "empirical", "target", "abs_dev"],
        rows,
        comment="empirical = count/N; target = prod r_mi^d over the cell word",
    )
    summary = {"N": n, "s": s, "measure_depth": depth,
               "max_abs_dev": report.max_abs_dev,
               "energy": result.record.energy}
    _write_summary(out_dir, "weakstar_summary.json", summary)
    return summary


def _run_monotonicity(fractal, params: dict, out_dir: str) -> dict:
    s = params["s"]
    n_min = params.get("n_min", 2)
    n_max = params.get("n_max")
    if n_max is None:
        raise UsageError("monotonicity needs n_max")
    opts = _search_options({**params, "strategy": params.get("strategy", "exhaustive")})
    report = monotonicity_check(fractal, s, range(n_min, n_max + 1), opts)
    rows = []
    for j, N in enumerate(report.N_values):
        inc = math.nan if j == 0 else report.increments[j - 1]
        c = math.nan if j == 0 else report.c_values[j - 1]
        rows.append([N, report.energies[j], inc, c])
    write_table(
        os.path.join(out_dir, "monotonicity.csv"),
        ["N", "energy", "increment", "c_value"],
        rows,
        comment=_ENERGY_NOTE + "; c_value = increment / N^(s/d) at the lower N",
    )
    summary = {"s": s, "n_min": n_min, "n_max": n_max,
               "violations": list(report.violations),
               "monotone": not report.violations,
               "fitted_C": report.fitted_C}
    _write_summary(out_dir, "monotonicity_summary.json", summary)
    return summary


_RUNNERS = {
    "minimize": _run_minimize,
    "packing": _run_packing,
    "geometric-limit": _run_geometric_limit,
    "g-curve": _run_g_curve,
    "gap": _run_gap,
    "weakstar": _run_weakstar,
    "monotonicity": _run_monotonicity,
}


def run(config, out_dir: str = ".") -> dict:
    """Validate, dispatch, and execute one experiment; returns the summary."""
    if isinstance(config, str):
        config = ExperimentConfig.from_file(config)
    elif isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    doc = dict(config.doc)
    os.makedirs(out_dir, exist_ok=True)
    fractal = load_fractal(doc["fractal"])
    return _RUNNERS[doc["experiment"]](fractal, doc, out_dir)


# ---------------------------------------------------------------------------
# plot data extraction


def _read_table_rows(path: str):
    if not os.path.exists(path):
        raise UsageError(f"missing experiment artifact: {path}")
    return read_table(path)


def _write_dat(path: str, columns, rows):
    lines = ["# " + " ".join(columns)]
    for row in rows:
        lines.append(" ".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_plot_data(out_dir: str, kind: str = None) -> list:
    """Convert run artifacts to whitespace tables; returns written paths."""
    written = []
    want = lambda k: kind is None or kind == k
    gcurve_csv = os.path.join(out_dir, "g_curve.csv")
    if want("gcurve") and (kind == "gcurve" or os.path.exists(gcurve_csv)):
        header, rows = _read_table_rows(gcurve_csv)
        ti, ei = header.index("theta"), header.index("estimate")
        path = os.path.join(out_dir, "plot_gcurve.dat")
        _write_dat(path, ["theta", "g_estimate"], [[r[ti], r[ei]] for r in rows])
        written.append(path)
    limit_csv = os.path.join(out_dir, "geometric_limit.csv")
    if (want("limit") or want("separation")) and \
            (kind in ("limit", "separation") or os.path.exists(limit_csv)):
        header, rows = _read_table_rows(limit_csv)
        ki, ni = header.index("k"), header.index("N")
        vi, di = header.index("normalized"), header.index("min_distance")
        if want("limit"):
            path = os.path.join(out_dir, "plot_limit.dat")
            _write_dat(path, ["k", "normalized_energy"],
                       [[r[ki], r[vi]] for r in rows if int(r[ki]) >= 1])
            written.append(path)
        if want("separation"):
            sep_rows = []
            for r in rows:
                n, delta = int(r[ni]), float(r[di])
                if n >= 2 and delta > 0.0 and math.isfinite(delta):
                    sep_rows.append([fmt_float(math.log(n)),
                                     fmt_float(math.log(delta))])
            path = os.path.join(out_dir, "plot_separation.dat")
            _write_dat(path, ["log_N", "log_min_distance"], sep_rows)
            written.append(path)
    if not written:
        raise UsageError(f"no experiment artifacts found in {out_dir}")
    return written


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness")


def _add_fractal(p):
    p.add_argument("--fractal", required=True,
                   help="catalog name like 'cantor(1/3)' or a fractal JSON path")


def _add_search(p):
    p.add_argument("--depth", type=int, default=None, help="initial cell depth")
    p.add_argument("--max-depth", type=int, default=None, help="refinement cap")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--budget", type=int, default=None,
                   help="move budget (local search) or subset budget (exhaustive)")
    p.add_argument("--strategy", default=None,
                   choices=["exhaustive", "local-search", "lift-seeded"])


def _collect_search_params(args, default_strategy="local-search") -> dict:
    params = {"seed": args.seed, "restarts": args.restarts}
    if args.depth is not None:
        params["depth"] = args.depth
    if args.max_depth is not None:
        params["max_depth"] = args.max_depth
    strategy = args.strategy if args.strategy is not None else default_strategy
    params["strategy"] = strategy
    if args.budget is not None:
        if strategy == "exhaustive":
            params["subset_budget"] = args.budget
        else:
            params["moves_budget"] = args.budget
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rieszfrac",
        description="Riesz energy minimization and asymptotics on self-similar fractals",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dimension", help="solve the Moran equation")
    p.add_argument("--ratios", help="comma-separated contraction ratios, e.g. 1/3,1/3")
    p.add_argument("--fractal", help="catalog name or fractal JSON path")
    p.set_defaults(func=_cmd_dimension)

    p = sub.add_parser("minimize", help="minimize the Riesz s-energy of N points")
    _add_fractal(p)
    p.add_argument("--s", required=True, type=parse_number)
    p.add_argument("--n", required=True, type=int)
    _add_search(p)
    _add_common(p)
    p.set_defaults(func=_cmd_minimize)

    p = sub.add_parser("pack", help="best-packing (maximin) search")
    _add_fractal(p)
    p.add_argument("--n", required=True, type=int)
    _add_search(p)
    _add_common(p)
    p.set_defaults(func=_cmd_pack)

    p = sub.add_parser("geometric-limit", help="normalized energies along N = n0*M^k")
    _add_fractal(p)
    p.add_argument("--s", required=True, type=parse_number)
    p.add_argument("--n0", type=int, default=2)
    p.add_argument("--k-max", type=int, default=6)
    p.add_argument("--no-polish", action="store_true",
                   help="report raw iterated lifts without per-stage search")
    _add_search(p)
    _add_common(p)
    p.set_defaults(func=_cmd_geometric_limit)

    p = sub.add_parser("g-curve", help="normalized energy vs fractional log_M N")
    _add_fractal(p)
    p.add_argument("--s", required=True, type=parse_number)
    p.add_argument("--bins", type=int, default=16)
    p.add_argument("--n-min", required=True, type=int)
    p.add_argument("--n-max", required=True, type=int)
    _add_search(p)
    _add_common(p)
    p.set_defaults(func=_cmd_g_curve)

    p = sub.add_parser("gap", help="closed-form liminf/limsup gap certificate")
    _add_fractal(p)
    p.add_argument("--s", required=True, type=parse_number)
    _add_common(p)
    p.set_defaults(func=_cmd_gap)

    p = sub.add_parser("weakstar", help="cell counts of a minimizer vs the self-similar measure")
    _add_fractal(p)
    p.add_argument("--s", required=True, type=parse_number)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--measure-depth", type=int, default=2)
    _add_search(p)
    _add_common(p)
    p.set_defaults(func=_cmd_weakstar)

    p = sub.add_parser("monotonicity", help="minimized energies over consecutive N")
    _add_fractal(p)
    p.add_argument("--s", required=True, type=parse_number)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", required=True, type=int)
    _add_search(p)
    _add_common(p)
    p.set_defaults(func=_cmd_monotonicity)

    p = sub.add_parser("run", help="run an experiment from a JSON config")
    p.add_argument("--config", required=True, help="experiment JSON path")
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plot-data", help="emit gnuplot-style tables from run artifacts")
    p.add_argument("--from", dest="src", default=".", help="directory with run artifacts")
    p.add_argument("--kind", choices=["gcurve", "limit", "separation"], default=None)
    p.set_defaults(func=_cmd_plot_data)

    return parser


def _cmd_dimension(args) -> int:
    if args.ratios:
        ratios = [parse_number(tok) for tok in args.ratios.split(",") if tok.strip()]
        d = moran_dimension(ratios)
    elif args.fractal:
        d = load_fractal(args.fractal).dimension
    else:
        raise UsageError("dimension needs --ratios or --fractal")
    print(fmt_float(d))
    return 0


def _dispatch(args, kind: str, extra: dict, default_strategy="local-search") -> int:
    params = _collect_search_params(args, default_strategy)
    params.update(extra)
    fractal = load_fractal(args.fractal)
    os.makedirs(args.out, exist_ok=True)
    summary = _RUNNERS[kind](fractal, params, args.out)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_minimize(args) -> int:
    return _dispatch(args, "minimize", {"n": args.n, "s": args.s})


def _cmd_pack(args) -> int:
    return _dispatch(args, "packing", {"n": args.n})


def _cmd_geometric_limit(args) -> int:
    return _dispatch(args, "geometric-limit",
                     {"s": args.s, "n0": args.n0, "k_max": args.k_max,
                      "polish": not args.no_polish})


def _cmd_g_curve(args) -> int:
    return _dispatch(args, "g-curve",
                     {"s": args.s, "bins": args.bins, "n_min": args.n_min,
                      "n_max": args.n_max}, default_strategy="lift-seeded")


def _cmd_gap(args) -> int:
    fractal = load_fractal(args.fractal)
    os.makedirs(args.out, exist_ok=True)
    summary = _run_gap(fractal, {"s": args.s}, args.out)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_weakstar(args) -> int:
    return _dispatch(args, "weakstar",
                     {"s": args.s, "n": args.n, "measure_depth": args.measure_depth},
                     default_strategy="lift-seeded")


def _cmd_monotonicity(args) -> int:
    return _dispatch(args, "monotonicity",
                     {"s": args.s, "n_min": args.n_min, "n_max": args.n_max},
                     default_strategy="exhaustive")


def _cmd_run(args) -> int:
    summary = run(args.config, args.out)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_plot_data(args) -> int:
    for path in emit_plot_data(args.src, args.kind):
        print(path)
    return 0


_EXIT_CODES = (
    (UsageError, 2),
    (HypothesisError, 3),
    (ResourceBudgetError, 4),
    (DomainError, 5),
    (SingularConfigurationError, 5),
    (ClassificationError, 5),
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001  CLI boundary
        code = 1
        for klass, c in _EXIT_CODES:
            if isinstance(exc, klass):
                code = c
                break
        if not isinstance(exc, (RieszFracError, OSError, ValueError)):
            raise
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc),
                                    "exit_code": code}}, sort_keys=True))
        return code


if __name__ == "__main__":
    raise SystemExit(main())
