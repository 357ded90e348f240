"""Command line interface: ``dyadreg {analyze,simulate,diagnose,export}``.

Exit codes: 0 success, 2 bad input or flags, 3 rank-deficient design,
4 non-positive variance (only possible with ``--psd none``).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from dyadreg.datafile import read_dyad_csv, write_dyad_csv
from dyadreg.estimator import PsdPolicy, sandwich
from dyadreg.exceptions import (
    DyadError,
    InputError,
    NonPositiveVarianceError,
    RankDeficientError,
)
from dyadreg.graph import diagnostics, janson_ratio, read_edgelist, to_dot, write_edgelist
from dyadreg.harness import (
    DEFAULT_G_LIST,
    SimConfig,
    emit_table,
    load_config,
    run_coverage,
    run_table,
)
from dyadreg.inference import confidence_interval
from dyadreg.simulation import DesignSpec, RngStream, gen_graph, simulate_dataset

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RANK = 3
EXIT_VARIANCE = 4

# med(M_g) / max(M_g) below this flags a hub-dominated configuration
HUB_WARNING_RATIO = 0.25


def _g4(x: float) -> str:
    return f"{x:.4g}"


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _psd(args) -> PsdPolicy:
    kind = args.psd.replace("-", "_")
    return PsdPolicy(kind, args.eps)


def _criticals(name: str) -> tuple[str, ...]:
    return {"normal": ("normal",), "tkappa": ("t_kappa",), "both": ("normal", "t_kappa")}[name]


# -- analyze -----------------------------------------------------------------


def _resolve_coef(coef: str, names: list[str]) -> int:
    if coef in names:
        return names.index(coef)
    try:
        k = int(coef)
    except ValueError:
        raise InputError(f"unknown coefficient {coef!r}; columns are {names}") from None
    if not 0 <= k < len(names):
        raise InputError(f"coefficient index {k} outside 0..{len(names) - 1}")
    return k


def cmd_analyze(args, out) -> int:
    table = read_dyad_csv(args.data, add_intercept=args.add_intercept)
    data = table.dataset
    names = table.regressor_names
    k = _resolve_coef(args.coef, names) if args.coef is not None else (
        1 if args.add_intercept and len(names) > 1 else 0
    )
    diag = diagnostics(data.graph)
    fit, var = sandwich(data, _psd(args))
    res = confidence_interval(fit, var, k, args.level, diag, beta0=args.beta0)

    if args.verbose and table.unit_labels is not None:
        out.write("unit labels:\n")
        for i, lab in enumerate(table.unit_labels, start=1):
            out.write(f"  {i}: {lab}\n")
    pct = f"{100 * args.level:g}%"
    out.write(f"coefficient        {names[k]} (index {k})\n")
    out.write(f"estimate           {_g4(res.beta_hat_k)}\n")
    out.write(f"dyadic-robust SE   {_g4(res.se_k)}\n")
    out.write(f"t statistic        {_g4(res.t_stat)}  (beta0 = {args.beta0:g})\n")
    out.write(f"kappa              {_g4(res.kappa)}\n")
    if args.critical in ("normal", "both"):
        lo, hi = res.ci_normal
        out.write(f"{pct} CI normal     [{_g4(lo)}, {_g4(hi)}]  crit {_g4(res.crit_normal)}\n")
    if args.critical in ("tkappa", "both"):
        lo, hi = res.ci_tkappa
        out.write(f"{pct} CI t_kappa    [{_g4(lo)}, {_g4(hi)}]  crit {_g4(res.crit_tkappa)}\n")
    out.write(
        f"graph              G={diag.num_units} N={diag.num_dyads} M^H={diag.m_high} "
        f"M^L={diag.m_low} med={_g4(diag.med_degree)} kappa={_g4(diag.kappa)}\n"
    )
    out.write(f"psd policy         {var.policy} (clamped eigenvalues: {var.n_clamped})\n")

    if args.out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["coef", "name", "beta_hat", "se", "t_stat", "beta0", "kappa", "level",
                    "ci_normal_lo", "ci_normal_hi", "ci_tkappa_lo", "ci_tkappa_hi",
                    "clamped"])
        g = "%.17g"
        w.writerow([k, names[k], g % res.beta_hat_k, g % res.se_k, g % res.t_stat,
                    g % res.beta0, g % res.kappa, g % res.level,
                    g % res.ci_normal[0], g % res.ci_normal[1],
                    g % res.ci_tkappa[0], g % res.ci_tkappa[1], var.n_clamped])
        Path(args.out).write_text(buf.getvalue())
    return EXIT_OK


# -- simulate ------------------------------------------------------------------


def cmd_simulate(args, out) -> int:
    fmt = args.format
    progress = None
    if not args.quiet:
        def progress(rep):
            cells = ", ".join(
                f"{c}={r.coverage:.1f}" for c, r in rep.results.items()
            )
            sys.stderr.write(f"[dyadreg] {rep.config.design.label()}: {cells}\n")

    if args.config:
        reports = []
        for cfg in load_config(args.config):
            rep = run_coverage(cfg)
            reports.append(rep)
            if progress:
                progress(rep)
    elif args.table:
        crits = _criticals(args.critical) if args.critical else None
        reports = run_table(
            args.table,
            reps=args.reps,
            g_list=args.g,
            seed=args.seed,
            workers=args.workers,
            criticals=crits,
            level=args.level,
            psd_policy=_psd(args),
            progress=progress,
        )
    else:
        if not args.model:
            raise InputError("give --table, --config, or --model with --error")
        reports = []
        for G in args.g:
            cfg = SimConfig(
                DesignSpec(args.model, G, args.error, args.r),
                replications=args.reps,
                level=args.level,
                psd_policy=_psd(args),
                criticals=_criticals(args.critical or "normal"),
                master_seed=args.seed,
                workers=args.workers,
            )
            rep = run_coverage(cfg)
            reports.append(rep)
            if progress:
                progress(rep)

    doc = emit_table(reports, fmt)
    if args.out:
        Path(args.out).write_text(doc)
    else:
        out.write(doc)
    return EXIT_OK


# -- diagnose / export ---------------------------------------------------------


def _graph_from_args(args):
    if getattr(args, "data", None):
        return read_dyad_csv(args.data).dataset.graph
    if getattr(args, "edges", None):
        return read_edgelist(args.edges)
    if getattr(args, "model", None) and getattr(args, "units", None):
        return gen_graph(args.model, args.units)
    raise InputError("give --data, --edges, or --model with --units")


def cmd_diagnose(args, out) -> int:
    graph = _graph_from_args(args)
    diag = diagnostics(graph)
    q = np.percentile(graph.degrees, [0, 25, 50, 75, 100])
    out.write(f"units G            {diag.num_units}\n")
    out.write(f"dyads N            {diag.num_dyads}\n")
    out.write(
        "degree M_g         min {:g}  q1 {:g}  median {:g}  q3 {:g}  max {:g}\n".format(*q)
    )
    out.write(f"M^H / M^L          {diag.m_high} / {diag.m_low}\n")
    out.write(f"dependency degree  {diag.dependency_degree}\n")
    out.write(f"kappa              {_g4(diag.kappa)}\n")
    if args.sigma is not None:
        ratio = janson_ratio(graph, args.sigma, args.bound_a, args.ell)
        out.write(f"janson ratio       {_g4(ratio)}  (ell={args.ell}, sigma={args.sigma:g}, "
                  f"A={args.bound_a:g})\n")
    ratio = diag.med_degree / diag.m_high
    if ratio < HUB_WARNING_RATIO:
        out.write(
            f"warning: hub-dominated configuration (median/max degree = {ratio:.3g} < "
            f"{HUB_WARNING_RATIO}); normal critical values may under-cover, "
            "consider t_kappa\n"
        )
    return EXIT_OK


def cmd_export(args, out) -> int:
    if args.format == "data":
        if not args.model:
            raise InputError("--format data needs --model")
        design = DesignSpec(args.model, args.units, args.error, args.r)
        ds = simulate_dataset(design, RngStream(args.seed, args.rep))
        doc = write_dyad_csv(ds, regressor_names=["x"], drop_intercept=True)
    else:
        graph = _graph_from_args(args)
        doc = write_edgelist(graph) if args.format == "edgelist" else to_dot(graph)
    if args.out:
        Path(args.out).write_text(doc)
    else:
        out.write(doc)
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def _add_design_flags(p, units_flag="--units"):
    p.add_argument("--model", type=str.upper, choices=["D", "S", "B"])
    p.add_argument(units_flag, dest="units", type=int, help="number of units G")
    p.add_argument("--error", default="iid",
                   choices=["iid", "unit-shock", "two-group"])
    p.add_argument("--r", type=float, default=None, help="rate for two-group errors")


def _add_psd_flags(p):
    p.add_argument("--psd", default="clamp-eps", choices=["none", "clamp-zero", "clamp-eps"])
    p.add_argument("--eps", type=float, default=1e-7)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyadreg", description="Inference for linear regression with dyadic data."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="fit a dyad CSV and report robust inference")
    p.add_argument("data", help="CSV with unit_g, unit_h, y, regressors")
    p.add_argument("--coef", default=None, help="coefficient name or 0-based index")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--critical", default="both", choices=["normal", "tkappa", "both"])
    _add_psd_flags(p)
    p.add_argument("--beta0", type=float, default=0.0)
    p.add_argument("--add-intercept", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", help="write a CSV result row here")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run Monte Carlo coverage experiments")
    p.add_argument("--table", type=int, choices=[1, 2, 3])
    p.add_argument("--config", help="flat key = value experiment file")
    p.add_argument("--model", type=str.upper, choices=["D", "S", "B"])
    p.add_argument("--error", default="iid", choices=["iid", "unit-shock", "two-group"])
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--g", type=_int_list, default=list(DEFAULT_G_LIST),
                   help="comma-separated unit counts")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--critical", default=None, choices=["normal", "tkappa", "both"])
    _add_psd_flags(p)
    p.add_argument("--format", default="csv", choices=["csv", "text"])
    p.add_argument("--out")
    p.add_argument("-q", "--quiet", action="store_true", help="no per-cell progress")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="graph diagnostics and df correction")
    p.add_argument("--data")
    p.add_argument("--edges", help="edge list file")
    _add_design_flags(p, "--g")
    p.add_argument("--ell", type=int, default=3)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--bound-a", type=float, default=1.0)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("export", help="write a design graph or simulated dataset")
    _add_design_flags(p, "--g")
    p.add_argument("--edges", help="re-export an edge list file")
    p.add_argument("--format", default="edgelist", choices=["edgelist", "dot", "data"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rep", type=int, default=0, help="replication index for --format data")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except NonPositiveVarianceError as exc:
        sys.stderr.write(f"dyadreg: {exc}\n")
        return EXIT_VARIANCE
    except RankDeficientError as exc:
        sys.stderr.write(f"dyadreg: {exc}\n")
        return EXIT_RANK
    except (DyadError, OSError) as exc:
        sys.stderr.write(f"dyadreg: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
