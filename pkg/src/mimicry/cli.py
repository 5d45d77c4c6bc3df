"""Config-driven experiment runner.

Subcommands: calibrate, simulate, verify, generator-check, report.
Exit codes: 0 all requested checks pass, 1 any statistical rejection,
2 config or runtime error.  MIMICRY_THREADS provides the --threads default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import ConfigError, Experiment, load_config
from .errors import CalibrationError
from .generator import Polynomial, probe_record
from .mimic import export_binary, export_csv, generate_ensemble, resolve_threads
from .subordinator import FAMILIES, SubordinatorSpec, calibrate, laplace_exponent
from .verify import (
    all_pass,
    marginal_match_test,
    martingale_slope_test,
    read_reports_jsonl,
    reports_to_csv,
    self_similarity_test,
    write_reports_jsonl,
)

SELF_SIM_SEED_OFFSET = 7919  # companion-ensemble seed shift for the scaling test

_DEFAULT_PROBES = [
    {"f": [0.0, 1.0], "t": 1.0, "x": 0.5},
    {"f": [0.0, 0.0, 1.0], "t": 1.0, "x": 0.5},
    {"f": [0.0, 0.0, 0.0, 1.0], "t": 1.0, "x": 0.5},
    {"f": [0.0, 1.0], "t": 2.0, "x": -1.0},
    {"f": [0.0, 0.0, 1.0], "t": 2.0, "x": -1.0},
    {"f": [0.0, 0.0, 0.0, 1.0], "t": 2.0, "x": -1.0},
]


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CalibrationError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mimicry",
        description="Simulate and verify self-similar Markov martingales with prescribed marginals.",
    )
    sub = parser.add_subparsers(required=True)

    cal = sub.add_parser("calibrate", help="solve psi(kappa) = kappa for one free parameter")
    cal.add_argument("--family", required=True, choices=FAMILIES)
    cal.add_argument("--kappa", required=True, type=float)
    cal.add_argument("--beta", type=float, default=0.0)
    cal.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="template value for a family parameter (repeatable)",
    )
    cal.add_argument("--free-param", default=None, help="parameter to solve for (family default otherwise)")
    cal.add_argument("--json", action="store_true", help="print the calibrated spec as JSON")
    cal.set_defaults(func=_cmd_calibrate)

    for name, fn, extra in (
        ("simulate", _cmd_simulate, "sample an ensemble and export it"),
        ("verify", _cmd_verify, "run the configured statistical tests"),
        ("generator-check", _cmd_generator_check, "compare generator evaluation routes"),
    ):
        p = sub.add_parser(name, help=extra)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out-dir", default=None)
        p.add_argument("--format", default=None, help="comma-separated subset of csv,json,svg")
        if name == "verify":
            p.add_argument("--tests", default=None, help="comma-separated subset of marginal,martingale,selfsim")
        p.set_defaults(func=fn)

    rep = sub.add_parser("report", help="summarise an existing report.jsonl")
    rep.add_argument("--out-dir", required=True)
    rep.set_defaults(func=_cmd_report)
    return parser


def _cmd_calibrate(args) -> int:
    params = {}
    for item in args.param:
        name, _, value = item.partition("=")
        if not value:
            raise ConfigError(f"--param expects NAME=VALUE, got {item!r}")
        params[name] = float(value)
    template = _calibration_template(args.family, args.beta, params)
    spec = calibrate(template, args.kappa, free_param=args.free_param)
    if args.json:
        print(json.dumps(spec.to_config(), sort_keys=True))
    else:
        shown = {"beta": spec.beta, **spec.params}
        for name, value in shown.items():
            print(f"{name} = {value!r}")
        print(f"psi({args.kappa}) = {laplace_exponent(spec, args.kappa)!r}")
    return 0


def _calibration_template(family: str, beta: float, params: dict) -> SubordinatorSpec:
    from .subordinator import PARAM_NAMES  # template needs every family param

    defaults = {"rate": 1.0, "theta": 1.0, "c": 1.0, "alpha": 0.5}
    full = {name: params.get(name, defaults[name]) for name in PARAM_NAMES[family]}
    unknown = set(params) - set(full)
    if unknown:
        raise ConfigError(f"family {family!r} does not take params {sorted(unknown)}")
    return SubordinatorSpec(family=family, beta=beta, params=full)


def _prepare(args):
    exp = load_config(args.config)
    if args.seed is not None:
        exp.seed = args.seed
    if args.out_dir is not None:
        exp.out_dir = args.out_dir
    if args.format is not None:
        exp.formats = tuple(args.format.split(","))
        unknown = set(exp.formats) - {"csv", "json", "svg"}
        if unknown:
            raise ConfigError(f"unknown output formats {sorted(unknown)}")
    os.makedirs(exp.out_dir, exist_ok=True)
    return exp


def _simulate_ensemble(exp: Experiment, threads):
    raw = generate_ensemble(
        exp.reference, exp.spec, exp.grid, exp.n_paths, exp.seed, exp.route, threads
    )
    return exp.apply_transform(raw)


def _cmd_simulate(args) -> int:
    exp = _prepare(args)
    ensemble = _simulate_ensemble(exp, resolve_threads(args.threads))
    out = os.path.join(exp.out_dir, "ensemble")
    if "csv" in exp.formats:
        export_csv(ensemble, out + ".csv")
    if "json" in exp.formats:
        export_binary(ensemble, out)
    if "svg" in exp.formats:
        _best_effort_plots(exp, ensemble)
    return 0


def _cmd_verify(args) -> int:
    exp = _prepare(args)
    requested = None if args.tests is None else set(args.tests.split(","))
    ensemble = _simulate_ensemble(exp, resolve_threads(args.threads))
    if "csv" in exp.formats:
        export_csv(ensemble, os.path.join(exp.out_dir, "ensemble.csv"))

    reports = []
    for entry in exp.tests:
        if requested is not None and entry["name"] not in requested:
            continue
        reports.append(_run_test(exp, ensemble, entry, resolve_threads(args.threads)))
    if requested is not None:
        missing = requested - {e["name"] for e in exp.tests}
        if missing:
            raise ConfigError(f"tests {sorted(missing)} are not defined in the config")

    write_reports_jsonl(reports, os.path.join(exp.out_dir, "report.jsonl"))
    if "csv" in exp.formats:
        reports_to_csv(reports, os.path.join(exp.out_dir, "summary.csv"))
    if "svg" in exp.formats:
        _best_effort_plots(exp, ensemble)
    for report in reports:
        print(f"{report.test_name}: {report.verdict}")
    return 0 if all_pass(reports) else 1


def _run_test(exp: Experiment, ensemble, entry: dict, threads: int):
    alpha = entry.get("alpha", 0.01)
    name = entry["name"]
    if name == "marginal":
        times = entry.get("times", [float(t) for t in ensemble.grid.times])
        return marginal_match_test(
            ensemble,
            exp.reference,
            times,
            alpha=alpha,
            seed=exp.seed,
            transform=exp.marginal_transform(),
        )
    if name == "martingale":
        s = entry.get("s", float(ensemble.grid.times[0]))
        t = entry.get("t", float(ensemble.grid.times[-1]))
        return martingale_slope_test(
            ensemble,
            ensemble.grid.index_of(s),
            ensemble.grid.index_of(t),
            alpha=alpha,
            trim=entry.get("trim", 0.0),
        )
    # selfsim: compare values at c*t from an independent companion ensemble
    t = entry.get("t", float(ensemble.grid.times[0]))
    c = entry.get("c", 2.0)
    companion = exp.apply_transform(
        generate_ensemble(
            exp.reference,
            exp.spec,
            exp.grid,
            exp.n_paths,
            exp.seed + SELF_SIM_SEED_OFFSET,
            exp.route,
            threads,
        )
    )
    report = self_similarity_test(
        ensemble.column(t), companion.column(c * t), c, ensemble.kappa, alpha=alpha
    )
    report.seed = exp.seed
    return report


def _cmd_generator_check(args) -> int:
    exp = _prepare(args)
    probes = exp.generator_probes or _DEFAULT_PROBES
    records = []
    ok = True
    for probe in probes:
        rec = probe_record(
            exp.reference,
            exp.spec,
            Polynomial(tuple(probe["f"])),
            t=probe["t"],
            x=probe["x"],
            h=probe.get("h", 1e-3),
            n=probe.get("n", 200_000),
            seed=exp.seed,
        )
        rel = abs(rec["composed"] - rec["closed_form"]) / max(abs(rec["closed_form"]), 1e-12)
        fd_tol = max(0.05 * abs(rec["closed_form"]), 3.0 * rec["fd_se"])
        rec["composed_rel_diff"] = rel
        rec["fd_within_tolerance"] = bool(abs(rec["fd_estimate"] - rec["closed_form"]) <= fd_tol)
        rec["ok"] = bool(rel < 1e-9 and rec["fd_within_tolerance"])
        ok &= rec["ok"]
        records.append(rec)
    path = os.path.join(exp.out_dir, "generator_report.jsonl")
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    for rec in records:
        print(f"f={rec['f']} t={rec['t']} x={rec['x']}: {'ok' if rec['ok'] else 'MISMATCH'}")
    return 0 if ok else 1


def _cmd_report(args) -> int:
    path = os.path.join(args.out_dir, "report.jsonl")
    reports = read_reports_jsonl(path)
    reports_to_csv(reports, os.path.join(args.out_dir, "summary.csv"))
    width = max((len(r.test_name) for r in reports), default=10)
    for r in reports:
        print(f"{r.test_name:<{width}}  {r.verdict:>6}  statistic={r.statistic:.6g}")
    return 0 if all_pass(reports) else 1


def _best_effort_plots(exp: Experiment, ensemble):
    from . import plots

    try:
        plots.save_sample_paths(ensemble, os.path.join(exp.out_dir, "paths.svg"))
        t = float(ensemble.grid.times[-1])
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(exp.seed, spawn_key=(4242,))))
        fresh = np.asarray(exp.reference.sample_marginal(t, rng, size=ensemble.n_paths))
        transform = exp.marginal_transform()
        if transform is not None:
            fresh = transform(fresh, t)
        col = ensemble.column(t)
        plots.save_ecdf_overlay(col, fresh, ("mimic", "reference"), os.path.join(exp.out_dir, "ecdf.svg"))
        plots.save_qq(col, fresh, ("mimic", "reference"), os.path.join(exp.out_dir, "qq.svg"))
    except Exception as err:  # decoration only, never fail the run
        print(f"plotting skipped: {err}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
