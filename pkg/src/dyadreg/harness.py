"""Monte Carlo coverage experiments and the coverage tables.

A cell is one :class:`SimConfig`: a design simulated ``R`` times, each
replication drawing from its own RNG stream ``(seed, rep)``. Results are
reduced in replication order, so a report depends only on the configuration
and never on ``workers``.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from dyadreg.estimator import CLAMP_EPS, PsdPolicy, sandwich
from dyadreg.exceptions import ConfigError, InputError, NumericalError
from dyadreg.graph import diagnostics
from dyadreg.inference import critical_value, normalize_critical
from dyadreg.simulation import DesignSpec, RngStream, gen_graph, simulate_dataset

__all__ = [
    "SCHEMA_VERSION",
    "SimConfig",
    "CriticalCoverage",
    "CoverageReport",
    "run_coverage",
    "table_designs",
    "run_table",
    "emit_table",
    "parse_csv",
    "load_config",
    "DEFAULT_G_LIST",
]

SCHEMA_VERSION = 1
DEFAULT_G_LIST = (10, 25, 50, 100)
TABLE_IDS = ("T1", "T2", "T3")
R_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class SimConfig:
    design: DesignSpec
    replications: int = 2000
    level: float = 0.95
    psd_policy: PsdPolicy = CLAMP_EPS
    criticals: tuple = ("normal",)
    master_seed: int = 0
    workers: int = 1
    coef_index: int = 1
    beta0: float = 0.0

    def __post_init__(self):
        if int(self.replications) < 1:
            raise ConfigError("replications must be at least 1")
        if not 0.0 < self.level < 1.0:
            raise ConfigError("level must lie in (0, 1)")
        crits = tuple(dict.fromkeys(normalize_critical(c) for c in self.criticals))
        if not crits:
            raise ConfigError("at least one critical value family is required")
        if int(self.workers) < 1:
            raise ConfigError("workers must be at least 1")
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "criticals", crits)
        object.__setattr__(self, "psd_policy", PsdPolicy.parse(self.psd_policy))
        object.__setattr__(self, "workers", int(self.workers))


@dataclass(frozen=True)
class CriticalCoverage:
    critical: str
    crit_value: float
    covered: int
    succeeded: int

    @property
    def coverage(self) -> float:
        """Coverage in percent."""
        if self.succeeded == 0:
            return float("nan")
        return 100.0 * self.covered / self.succeeded

    @property
    def mc_se(self) -> float:
        """Monte Carlo standard error in percentage points."""
        if self.succeeded == 0:
            return float("nan")
        p = self.covered / self.succeeded
        return 100.0 * math.sqrt(p * (1.0 - p) / self.succeeded)


@dataclass(frozen=True, eq=False)
class CoverageReport:
    config: SimConfig
    num_dyads: int
    kappa: float
    results: dict
    succeeded: int
    failed: int
    clamped: int
    beta_hat: np.ndarray = field(repr=False)
    se: np.ndarray = field(repr=False)

    @property
    def t_stats(self) -> np.ndarray:
        """Per-replication t-statistics (NaN for failed replications)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return (self.beta_hat - self.config.beta0) / self.se

    def coverage(self, critical: str = "normal") -> float:
        return self.results[normalize_critical(critical)].coverage

    def mc_se(self, critical: str = "normal") -> float:
        return self.results[normalize_critical(critical)].mc_se


def _replicate(config: SimConfig, rep: int) -> tuple[float, float, bool]:
    data = simulate_dataset(config.design, RngStream(config.master_seed, rep))
    try:
        fit, var = sandwich(data, config.psd_policy)
    except NumericalError:
        return math.nan, math.nan, False
    k = config.coef_index
    vkk = var.v_used[k, k]
    se = math.sqrt(vkk) if vkk > 0 else math.nan
    return float(fit.beta_hat[k]), se, var.n_clamped > 0


def _replicate_range(config: SimConfig, start: int, stop: int):
    return [_replicate(config, rep) for rep in range(start, stop)]


def run_coverage(config: SimConfig) -> CoverageReport:
    """Simulate ``config.replications`` datasets and record CI coverage.

    A replication fails when the fit is rank deficient or its variance for
    the tested coefficient is not positive; failures are excluded from the
    coverage denominator and counted separately.
    """
    graph = gen_graph(config.design.model, config.design.num_units)
    diag = diagnostics(graph)
    R = config.replications

    if config.workers == 1:
        rows = _replicate_range(config, 0, R)
    else:
        chunk = max(1, math.ceil(R / (4 * config.workers)))
        bounds = [(a, min(a + chunk, R)) for a in range(0, R, chunk)]
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = pool.map(lambda b: _replicate_range(config, *b), bounds)
            rows = [row for part in parts for row in part]

    beta = np.array([r[0] for r in rows])
    se = np.array([r[1] for r in rows])
    ok = np.isfinite(beta) & np.isfinite(se)
    clamped = int(sum(1 for r, good in zip(rows, ok) if good and r[2]))
    succeeded = int(ok.sum())

    results = {}
    for crit in config.criticals:
        c = critical_value(config.level, crit, diag.kappa)
        lo = beta[ok] - c * se[ok]
        hi = beta[ok] + c * se[ok]
        covered = int(np.count_nonzero((lo <= config.beta0) & (config.beta0 <= hi)))
        results[crit] = CriticalCoverage(crit, c, covered, succeeded)

    return CoverageReport(
        config=config,
        num_dyads=graph.num_dyads,
        kappa=diag.kappa,
        results=results,
        succeeded=succeeded,
        failed=R - succeeded,
        clamped=clamped,
        beta_hat=np.where(ok, beta, np.nan),
        se=np.where(ok, se, np.nan),
    )


# -- tables ------------------------------------------------------------------


def _table_id(table_id) -> str:
    key = str(table_id).upper()
    if not key.startswith("T"):
        key = "T" + key
    if key not in TABLE_IDS:
        raise ConfigError(f"unknown table {table_id!r}; choose 1, 2 or 3")
    return key


def table_designs(table_id, g_list: Iterable[int] = DEFAULT_G_LIST) -> list[DesignSpec]:
    """Designs of a table, in row-major order of the printed layout."""
    key = _table_id(table_id)
    out = []
    if key in ("T1", "T3"):
        for model in ("D", "S", "B"):
            for err in ("iid", "unit_shock"):
                out.extend(DesignSpec(model, G, err) for G in g_list)
    else:
        for model in ("D", "S"):
            for r in R_GRID:
                out.extend(DesignSpec(model, G, "two_group", r) for G in g_list)
    return out


def run_table(
    table_id,
    reps: int = 2000,
    g_list: Sequence[int] = DEFAULT_G_LIST,
    seed: int = 0,
    workers: int = 1,
    criticals: Sequence[str] | None = None,
    level: float = 0.95,
    psd_policy="clamp_eps",
    progress: Callable[[CoverageReport], None] | None = None,
) -> list[CoverageReport]:
    """Run every cell of a coverage table.

    Tables 1 and 2 use normal critical values and table 3 the ``t_kappa``
    ones unless ``criticals`` says otherwise. Every cell uses ``seed`` as its
    master seed, so tables 1 and 3 share replications.
    """
    key = _table_id(table_id)
    if criticals is None:
        criticals = ("t_kappa",) if key == "T3" else ("normal",)
    reports = []
    for design in table_designs(key, g_list):
        cfg = SimConfig(
            design,
            replications=reps,
            level=level,
            psd_policy=psd_policy,
            criticals=tuple(criticals),
            master_seed=seed,
            workers=workers,
        )
        report = run_coverage(cfg)
        reports.append(report)
        if progress is not None:
            progress(report)
    return reports


# -- emission ----------------------------------------------------------------

CSV_FIELDS = (
    "schema_version", "model", "error", "r", "G", "N", "reps", "level",
    "psd_policy", "critical", "crit_value", "kappa", "coverage", "mc_se",
    "covered", "succeeded", "failed", "clamped", "seed",
)
_INT_FIELDS = {"schema_version", "G", "N", "reps", "covered", "succeeded",
               "failed", "clamped", "seed"}
_FLOAT_FIELDS = {"r", "level", "crit_value", "kappa", "coverage", "mc_se"}


def _g17(x: float) -> str:
    return "%.17g" % x


def _csv(reports: Sequence[CoverageReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for rep in reports:
        cfg = rep.config
        d = cfg.design
        for crit, cov in rep.results.items():
            writer.writerow([
                SCHEMA_VERSION, d.model, d.error_spec,
                "" if d.r is None else _g17(d.r),
                d.num_units, rep.num_dyads, cfg.replications, _g17(cfg.level),
                str(cfg.psd_policy), crit, _g17(cov.crit_value), _g17(rep.kappa),
                _g17(cov.coverage), _g17(cov.mc_se), cov.covered, cov.succeeded,
                rep.failed, rep.clamped, cfg.master_seed,
            ])
    return buf.getvalue()


def _row_label(d: DesignSpec) -> str:
    if d.error_spec == "two_group":
        return f"r={d.r:g}"
    return {"iid": "i.i.d.", "unit_shock": "unit-level shock"}[d.error_spec]


def _text(reports: Sequence[CoverageReport]) -> str:
    g_list = sorted({r.config.design.num_units for r in reports})
    crits = list(dict.fromkeys(c for r in reports for c in r.results))
    cells = {}
    rows = []
    for rep in reports:
        d = rep.config.design
        row = (d.model, d.error_spec, d.r)
        if row not in cells:
            cells[row] = {}
            rows.append((row, d))
        cells[row][d.num_units] = rep

    level = reports[0].config.level
    width = 8
    lines = []
    for crit in crits:
        title = "normal" if crit == "normal" else "t_kappa"
        lines.append(
            f"Coverage (%) of {100 * level:g}% CIs for beta = 0, {title} critical values;"
            " simulation SEs in parentheses"
        )
        header = f"{'Model':<8}{'Specification':<18}" + "".join(
            f"{'G=' + str(g):>{width}}" for g in g_list
        )
        lines.append(header)
        lines.append("-" * len(header))
        last_model = None
        for row, d in rows:
            model = f"Model {d.model}" if d.model != last_model else ""
            last_model = d.model
            cov_line = f"{model:<8}{_row_label(d):<18}"
            se_line = " " * 26
            for g in g_list:
                rep = cells[row].get(g)
                if rep is None or crit not in rep.results:
                    cov_line += f"{'':>{width}}"
                    se_line += f"{'':>{width}}"
                    continue
                res = rep.results[crit]
                cov_line += f"{res.coverage:>{width}.1f}"
                se_line += f"{'(%.2f)' % res.mc_se:>{width}}"
            lines.append(cov_line)
            lines.append(se_line)
        lines.append("")
    return "\n".join(lines)


def emit_table(reports: Sequence[CoverageReport], fmt: str = "csv") -> str:
    """Render reports as CSV (17 significant digits) or an aligned text grid."""
    if not reports:
        raise InputError("no reports to emit")
    if fmt == "csv":
        return _csv(reports)
    if fmt == "text":
        return _text(reports)
    raise InputError(f"unknown format {fmt!r}")


def parse_csv(text: str) -> list[dict]:
    """Parse CSV produced by :func:`emit_table` back into typed rows."""
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row: dict = {}
        for key, value in raw.items():
            if key in _INT_FIELDS:
                row[key] = int(value)
            elif key in _FLOAT_FIELDS:
                row[key] = None if value == "" else float(value)
            else:
                row[key] = value
        rows.append(row)
    return rows


# -- config files --------------------------------------------------------------


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]


def load_config(source) -> list[SimConfig]:
    """Read a flat ``key = value`` experiment description.

    Recognised keys: ``model``, ``error``, ``r``, ``G`` (one value or a comma
    list, one cell per value), ``reps``, ``level``, ``psd_policy``,
    ``criticals``, ``seed``, ``workers``. Lines starting with ``#`` are
    comments.
    """
    if isinstance(source, Path) or (
        isinstance(source, str) and "\n" not in source and Path(source).exists()
    ):
        text = Path(source).read_text()
    else:
        text = str(source)
    parser = configparser.ConfigParser(
        delimiters=("=", ":"), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",)
    )
    parser.optionxform = str.lower
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    sec = dict(parser["experiment"])
    known = {"model", "error", "r", "g", "reps", "level", "psd_policy",
             "criticals", "seed", "workers"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for required in ("model", "g"):
        if required not in sec:
            raise ConfigError(f"config is missing {required!r}")
    try:
        g_values = [int(v) for v in _split_list(sec["g"])]
        r = float(sec["r"]) if "r" in sec else None
        base = dict(
            replications=int(sec.get("reps", 2000)),
            level=float(sec.get("level", 0.95)),
            psd_policy=PsdPolicy.parse(sec.get("psd_policy", "clamp_eps")),
            criticals=tuple(_split_list(sec.get("criticals", "normal"))),
            master_seed=int(sec.get("seed", 0)),
            workers=int(sec.get("workers", 1)),
        )
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from None
    error = sec.get("error", "iid")
    return [SimConfig(DesignSpec(sec["model"], g, error, r), **base) for g in g_values]


def with_workers(config: SimConfig, workers: int) -> SimConfig:
    return replace(config, workers=workers)
