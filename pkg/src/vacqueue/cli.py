"""Command-line front end.

Exit codes: 0 success, 1 internal error, 2 invalid parameters or usage,
3 an engine comparison failed its tolerance.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from .analytic_mv import MultipleVacationModel
from .analytic_sv import SingleVacationModel
from .errors import InvalidConfig, ValidationError, VacQueueError
from .model import BalanceVariant, Engine, ModelParams, Policy, validate
from .oracle import DEFAULT_N_TRUNC, oracle_measures, solve_stationary, build_generator
from .quad import DEFAULT_TOL
from .report import SCHEMA_VERSION, PerformanceReport, round_sig
from .sim import SimConfig, estimates_asdict, simulate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_INTERNAL, EXIT_VALIDATION, EXIT_COMPARE = 0, 1, 2, 3

PARAM_KEYS = {"lambda": "lam", "mu": "mu", "gamma": "gamma", "xi": "xi"}


class ComparisonFailed(VacQueueError):
    pass


def fmt(x) -> str:
    v = round_sig(x)
    return "" if v is None else repr(v)


def load_config(path: str | None) -> dict:
    """Flat ``key = value`` settings; section headers only group keys."""
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    flat = {}
    for key, value in data.items():
        if isinstance(value, dict):
            flat.update(value)
        else:
            flat[key] = value
    return {k.replace("-", "_"): v for k, v in flat.items()}


def _setting(opts: dict, config: dict, name: str, default=None):
    value = opts.get(name)
    if value is not None:
        return value
    return config.get(name, default)


def _params(opts: dict, config: dict) -> ModelParams:
    values = {}
    for key, attr in PARAM_KEYS.items():
        value = _setting(opts, config, key)
        if value is None:
            raise InvalidConfig(f"missing parameter --{key}")
        values[attr] = float(value)
    model = _setting(opts, config, "model", "mm1")
    servers = int(_setting(opts, config, "servers", 1))
    if model == "mm1" and servers != 1:
        raise InvalidConfig("--model mm1 needs --servers 1; use --model mmc")
    policy = Policy(_setting(opts, config, "policy", "single"))
    return ModelParams(servers=servers, policy=policy, **values)


def model_options(f):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="TOML file of key = value settings; flags override it."),
        click.option("--model", type=click.Choice(["mm1", "mmc"]), default=None, help="Default mm1."),
        click.option("--policy", type=click.Choice([p.value for p in Policy]), default=None,
                     help="Vacation policy (default single)."),
        click.option("--lambda", "lambda", type=float, default=None, help="Arrival rate."),
        click.option("--mu", type=float, default=None, help="Service rate per server."),
        click.option("--gamma", type=float, default=None, help="Vacation completion rate."),
        click.option("--xi", type=float, default=None, help="Impatience rate per waiting customer."),
        click.option("--servers", type=int, default=None, help="Number of servers (mmc only)."),
        click.option("--output", type=click.Choice(["json", "csv", "table"]), default=None),
        click.option("--output-path", "-o", type=click.Path(dir_okay=False), default=None,
                     help="Write output here instead of stdout."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def oracle_options(f):
    f = click.option("--balance-variant", type=click.Choice([v.value for v in BalanceVariant]),
                     default=None, help="Multi-server return-rate reading (default corrected).")(f)
    f = click.option("--n-trunc", type=int, default=None, help=f"Oracle level cap (default {DEFAULT_N_TRUNC}).")(f)
    return f


def sim_options(f):
    opts = [
        click.option("--horizon", type=float, default=None, help="Simulated time per replication."),
        click.option("--warmup", type=float, default=None, help="Discarded initial time."),
        click.option("--replications", type=int, default=None),
        click.option("--seed", type=int, default=None),
        click.option("--batch-count", type=int, default=None, help="Batches for a single replication."),
        click.option("--workers", type=int, default=None, help="Parallel replication processes."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _sim_config(params: ModelParams, opts: dict, config: dict, **defaults) -> SimConfig:
    base = dict(horizon=5e5, warmup=5e4, replications=20, seed=20240601, batch_count=20, workers=1)
    base.update(defaults)
    values = {k: _setting(opts, config, k, v) for k, v in base.items()}
    return SimConfig(
        params,
        horizon=float(values["horizon"]), warmup=float(values["warmup"]),
        replications=int(values["replications"]), seed=int(values["seed"]),
        batch_count=int(values["batch_count"]), workers=int(values["workers"]),
    )


def analytic_model(params: ModelParams, tol: float = DEFAULT_TOL):
    cls = SingleVacationModel if params.policy is Policy.SINGLE else MultipleVacationModel
    return cls(params, tol)


def _oracle_report(params, opts, config) -> tuple[PerformanceReport, object]:
    n_trunc = int(_setting(opts, config, "n_trunc", DEFAULT_N_TRUNC))
    variant = _setting(opts, config, "balance_variant", BalanceVariant.CORRECTED.value)
    table = solve_stationary(build_generator(params, n_trunc, variant), strict=False)
    report = oracle_measures(table)
    for i, flag in enumerate(table.flags):
        click.echo(f"warning: {flag}", err=True)
    return report, table


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _rows_to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _rows_to_table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells) + "\n"


def _report_output(report: PerformanceReport, params, kind: str, pgf=None) -> str:
    if kind == "json":
        data = report.to_dict(params)
        if pgf is not None:
            data["pgf"] = pgf
        return json.dumps(data, indent=2) + "\n"
    rows = [[name, fmt(value)] for name, value in report.measures().items()]
    rows += [[f"extra.{k}", fmt(v)] for k, v in sorted(report.extra.items())]
    return (_rows_to_csv if kind == "csv" else _rows_to_table)(["measure", "value"], rows)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Steady-state measures of vacation queues with impatient customers."""


@cli.command()
@model_options
@click.option("--tol", type=float, default=None, help=f"Quadrature tolerance (default {DEFAULT_TOL:g}).")
@click.option("--pgf-grid", default=None, help="Comma-separated z values in [0, 1) for P0(z), P1(z).")
def analyze(**opts):
    """Closed-form measures for one server (single or multiple vacations).

    CSV/table output has columns measure,value; extra.* rows carry the
    published formula values next to the corrected ones.
    """
    config = load_config(opts["config_path"])
    params = _params(opts, config)
    validate(params, Engine.ANALYTIC).raise_if_invalid()
    engine = analytic_model(params, float(_setting(opts, config, "tol", DEFAULT_TOL)))
    report = engine.measures()
    pgf = None
    grid = _setting(opts, config, "pgf_grid")
    if grid:
        zs = [float(z) for z in str(grid).split(",")] if isinstance(grid, str) else [float(z) for z in grid]
        pgf = []
        for z in zs:
            for ev in (engine.pgf0(z), engine.pgf1(z)):
                pgf.append({"phase": ev.phase, "z": round_sig(z), "value": round_sig(ev.value),
                            "abs_error_estimate": round_sig(ev.abs_error_estimate)})
    _emit(_report_output(report, params, _setting(opts, config, "output", "json"), pgf), opts["output_path"])


@cli.command()
@model_options
@oracle_options
@click.option("--table-csv", type=click.Path(dir_okay=False), default=None,
              help="Also write the stationary table (columns phase,count,prob).")
def oracle(**opts):
    """Truncated-CTMC measures; any server count.

    With --output csv the stationary table itself is emitted, with columns
    phase,count,prob.
    """
    config = load_config(opts["config_path"])
    params = _params(opts, config)
    report, table = _oracle_report(params, opts, config)
    kind = _setting(opts, config, "output", "json")
    if opts["table_csv"]:
        table.write_csv(opts["table_csv"])
    if kind == "csv":
        _emit(table.to_csv(), opts["output_path"])
    else:
        _emit(_report_output(report, params, kind), opts["output_path"])


@cli.command(name="simulate")
@model_options
@sim_options
@click.option("--replications-csv", type=click.Path(dir_okay=False), default=None,
              help="Per-replication summaries (replication, arrivals, served, reneged, "
                   "in_system_at_end, then one column per measure).")
def simulate_cmd(**opts):
    """Discrete-event estimates with 95% confidence intervals.

    CSV/table output has columns measure,mean,half_width_95,replications.
    """
    config = load_config(opts["config_path"])
    params = _params(opts, config)
    result = simulate(_sim_config(params, opts, config))
    if opts["replications_csv"]:
        result.write_csv(opts["replications_csv"])
    kind = _setting(opts, config, "output", "json")
    if kind == "json":
        data = {"schema": SCHEMA_VERSION, "engine": Engine.SIMULATION.value, "params": params.as_dict(),
                "config": {k: getattr(result.config, k) for k in
                           ("horizon", "warmup", "replications", "seed", "batch_count")},
                "conservation": all(r.conserved for r in result.replications),
                "estimates": estimates_asdict(result)}
        text = json.dumps(data, indent=2) + "\n"
    else:
        rows = [[name, fmt(e.mean), fmt(e.half_width_95), e.replications_used]
                for name, e in sorted(result.estimates.items())]
        text = (_rows_to_csv if kind == "csv" else _rows_to_table)(
            ["measure", "mean", "half_width_95", "replications"], rows)
    _emit(text, opts["output_path"])


COMPARE_HEADER = ["measure", "analytic", "oracle", "sim_mean", "sim_half_width", "abs_diff",
                  "tolerance", "status", "discrepancy"]


def comparison_rows(params, analytic, oracle_rep, sim, tolerance: float) -> list[list]:
    """Rows of the comparison table; ``status`` is PASS, FAIL, FLAG (known defect) or INFO."""
    rows = []
    reference = oracle_rep if oracle_rep is not None else analytic
    for name in PerformanceReport.MEASURES:
        a = getattr(analytic, name) if analytic is not None else None
        o = getattr(oracle_rep, name) if oracle_rep is not None else None
        est = sim.estimates.get(name) if sim is not None else None
        if name == "mean_sojourn" and sim is not None:
            est = sim.estimates.get("mean_sojourn")
        diff, status = None, "INFO"
        if a is not None and o is not None:
            diff = abs(a - o)
            status = "PASS" if diff <= tolerance else "FAIL"
        elif est is not None and reference is not None and getattr(reference, name) is not None:
            status = "PASS" if est.covers(getattr(reference, name)) else "FAIL"
        rows.append([name, fmt(a), fmt(o), fmt(est.mean) if est else "", fmt(est.half_width_95) if est else "",
                     fmt(diff), fmt(tolerance), status, ""])
    if analytic is not None:
        truth_s00 = oracle_rep.sojourn_00 if oracle_rep is not None else analytic.sojourn_00
        printed = analytic.extra["S_0_0_published_formula"]
        rows.append(["S_0_0_published_formula", fmt(printed), fmt(truth_s00), "", "", fmt(abs(printed - truth_s00)),
                     "", "FLAG" if abs(printed - truth_s00) > 1e-9 else "INFO",
                     fmt(printed - truth_s00)])
        truth_n1 = oracle_rep.mean_n1 if oracle_rep is not None else analytic.mean_n1
        published_n1 = analytic.extra["mean_n1_published_formula"]
        gap = None if published_n1 is None or math.isnan(published_n1) else published_n1 - truth_n1
        rows.append(["mean_n1_published_formula", fmt(published_n1), fmt(truth_n1), "", "", fmt(None if gap is None else abs(gap)),
                     "", "FLAG" if gap is None or abs(gap) > 1e-9 else "INFO", fmt(gap)])
        if "p_ser_published_formula" in analytic.extra:
            truth = oracle_rep.p_ser if oracle_rep is not None else analytic.p_ser
            printed = analytic.extra["p_ser_published_formula"]
            rows.append(["p_ser_published_formula", fmt(printed), fmt(truth), "", "", fmt(abs(printed - truth)),
                         "", "FLAG" if abs(printed - truth) > 1e-9 else "INFO", fmt(printed - truth)])
        if "p00_published_formula" in analytic.extra:
            printed = analytic.extra["p00_published_formula"]
            rows.append(["p00_published_formula", fmt(printed), fmt(oracle_rep.p00 if oracle_rep else analytic.p00),
                         "", "", "", "", "FLAG" if math.isnan(printed) else "INFO",
                         "combination diverges at z=1" if math.isnan(printed) else ""])
    return rows


@cli.command()
@model_options
@oracle_options
@sim_options
@click.option("--engines", default="analytic,oracle", show_default=True,
              help="Comma-separated subset of analytic,oracle,simulation (at least two).")
@click.option("--tolerance", type=float, default=None, help="Analytic-vs-oracle tolerance (default 1e-5).")
def compare(**opts):
    """Side-by-side engine values with PASS/FAIL per measure.

    Columns: measure, analytic, oracle, sim_mean, sim_half_width, abs_diff,
    tolerance, status, discrepancy.  FLAG rows report published formulas
    that disagree with the model; they never fail the run.
    """
    config = load_config(opts["config_path"])
    params = _params(opts, config)
    engines = [e.strip() for e in str(_setting(opts, config, "engines", "analytic,oracle")).split(",") if e.strip()]
    unknown = set(engines) - {e.value for e in Engine}
    if unknown or len(set(engines)) < 2:
        raise click.UsageError(f"--engines needs two or more of analytic,oracle,simulation; got {engines}")
    tolerance = float(_setting(opts, config, "tolerance", 1e-5))
    analytic = oracle_rep = sim = None
    if "analytic" in engines:
        validate(params, Engine.ANALYTIC).raise_if_invalid()
        analytic = analytic_model(params).measures()
    if "oracle" in engines:
        oracle_rep, _ = _oracle_report(params, opts, config)
    if "simulation" in engines:
        sim = simulate(_sim_config(params, opts, config, replications=5, horizon=5e4, warmup=5e3))
    rows = comparison_rows(params, analytic, oracle_rep, sim, tolerance)
    kind = _setting(opts, config, "output", "table")
    if kind == "json":
        text = json.dumps({"schema": SCHEMA_VERSION, "params": params.as_dict(),
                           "rows": [dict(zip(COMPARE_HEADER, r)) for r in rows]}, indent=2) + "\n"
    else:
        text = (_rows_to_csv if kind == "csv" else _rows_to_table)(COMPARE_HEADER, rows)
    _emit(text, opts["output_path"])
    failed = [r[0] for r in rows if r[7] == "FAIL"]
    if failed:
        raise ComparisonFailed(f"comparison failed for: {', '.join(failed)}")


def _trend(values: list[float]) -> str:
    v = np.asarray([x for x in values if x is not None and math.isfinite(x)])
    if v.size < 2:
        return "undetermined"
    d = np.diff(v)
    if np.all(d >= 0):
        return "nondecreasing"
    if np.all(d <= 0):
        return "nonincreasing"
    return "non-monotone"


@cli.command()
@model_options
@oracle_options
@click.option("--param", "sweep_param", type=click.Choice(list(PARAM_KEYS)), required=True)
@click.option("--from", "start", type=float, required=True)
@click.option("--to", "stop", type=float, required=True)
@click.option("--steps", type=int, required=True, help="Number of grid points (endpoints included).")
@click.option("--engine", type=click.Choice(["analytic", "oracle"]), default="oracle", show_default=True)
def sweep(**opts):
    """Measures over a linear grid of one parameter.

    CSV columns: index, <param>, status (OK or SKIPPED), reason, then one
    column per measure.  The trend of every measure goes to stderr.
    """
    config = load_config(opts["config_path"])
    name = opts["sweep_param"]
    if opts["steps"] < 1:
        raise click.UsageError("--steps must be >= 1")
    header = ["index", name, "status", "reason", *PerformanceReport.MEASURES]
    rows, series = [], {m: [] for m in PerformanceReport.MEASURES}
    for i, value in enumerate(np.linspace(opts["start"], opts["stop"], opts["steps"])):
        point = dict(opts, **{name: float(value)})
        try:
            params = _params(point, config)
            if opts["engine"] == "analytic":
                validate(params, Engine.ANALYTIC).raise_if_invalid()
                report = analytic_model(params).measures()
            else:
                report, _ = _oracle_report(params, point, config)
        except (ValidationError, InvalidConfig) as exc:
            rows.append([i, fmt(value), "SKIPPED", str(exc), *([""] * len(PerformanceReport.MEASURES))])
            continue
        measures = report.measures()
        for m, v in measures.items():
            series[m].append(v)
        rows.append([i, fmt(value), "OK", "", *(fmt(v) for v in measures.values())])
    kind = _setting(opts, config, "output", "csv")
    text = (_rows_to_table if kind == "table" else _rows_to_csv)(header, rows)
    if kind == "json":
        text = json.dumps({"schema": SCHEMA_VERSION, "rows": [dict(zip(header, r)) for r in rows]}, indent=2) + "\n"
    _emit(text, opts["output_path"])
    for m, values in series.items():
        click.echo(f"trend {m}: {_trend(values)}", err=True)


def main(argv: list[str] | None = None) -> int:
    """Entry point mapping exceptions onto the exit-code contract."""
    try:
        cli.main(args=argv, prog_name="vacqueue", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_VALIDATION
    except ValidationError as exc:
        click.echo(f"validation failed: {exc}", err=True)
        return EXIT_VALIDATION
    except InvalidConfig as exc:
        click.echo(f"invalid configuration: {exc}", err=True)
        return EXIT_VALIDATION
    except ComparisonFailed as exc:
        click.echo(str(exc), err=True)
        return EXIT_COMPARE
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 1
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_INTERNAL
    return EXIT_OK


def run() -> None:
    sys.exit(main())
