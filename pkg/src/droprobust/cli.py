"""Command-line surface: audits, scenario generation, diagnostics, benchmarks.

Audit exit codes are a scripting contract: 0 means the audit ran and no
method found a conclusion-changing drop set, 2 means at least one method
did, 1 means a usage or data error. Machine formats (json, csv) print
numbers at full precision (repr round-trip); the human table rounds to
three decimals.
"""

from __future__ import annotations

import contextlib
import csv
import json
import math
import os
import sys

import click
import numpy as np

from .benchmark import BENCH_METHODS, records_to_csv, run_benchmark
from .core import fit as ols_fit
from .core import make_dataset
from .diagnostics import masking_report
from .errors import DropRobustError
from .estimator import resolve_direction
from .greedy import GREEDY_AMIP, GREEDY_ONE_EXACT, greedy_audit
from .oracle import OracleResult, brute_force_mip, failure_classify
from .report import AuditReport
from .scenarios import SCENARIO_IDS, Scenario, generate
from .scores import (
    ADDITIVE_ONE_EXACT,
    AMIP,
    additive_audit,
    additive_report,
    drop_budget,
)

METHOD_FLAGS = {
    "amip": AMIP,
    "add1e": ADDITIVE_ONE_EXACT,
    "greedy-amip": GREEDY_AMIP,
    "greedy-1e": GREEDY_ONE_EXACT,
    "oracle": "oracle",
}
# "all" covers the four approximations; the oracle is opt-in because its
# cost is combinatorial in N.
ALL_METHODS = ("amip", "add1e", "greedy-amip", "greedy-1e")


@contextlib.contextmanager
def _thread_cap():
    """Cap BLAS parallelism when ROBAUDIT_THREADS is set."""
    cap = os.environ.get("ROBAUDIT_THREADS")
    if not cap:
        yield None
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=int(cap)):
        yield int(cap)


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _read_csv(path: str):
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                _fail(f"{path}: empty file")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    _fail(f"{path}:{lineno}: expected {len(header)} fields, "
                          f"got {len(row)}")
                parsed = []
                for col, cell in enumerate(row):
                    try:
                        parsed.append(float(cell))
                    except ValueError:
                        _fail(
                            f"{path}:{lineno}: non-numeric value {cell!r} "
                            f"in column {header[col]!r}"
                        )
                rows.append(parsed)
    except FileNotFoundError:
        _fail(f"{path}: file not found")
    if not rows:
        _fail(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=float)


def _load_dataset(path, target, intercept):
    header, data = _read_csv(path)
    if target not in header:
        _fail(f"target column {target!r} not in {path} (columns: {header})")
    t = header.index(target)
    y = data[:, t]
    X = np.delete(data, t, axis=1)
    names = [h for i, h in enumerate(header) if i != t]
    try:
        return make_dataset(X, y, names, add_intercept=intercept)
    except DropRobustError as exc:
        _fail(str(exc))


def _fmt_est(value, ill=False, human=True):
    if value is None:
        return "—"
    if ill or (isinstance(value, float) and math.isnan(value)):
        return "ill-defined"
    return f"{value:.3f}" if human else repr(float(value))


def _report_doc(report: AuditReport) -> dict:
    return {
        "method": report.method,
        "base_estimate": report.base_estimate,
        "predicted_estimate": report.predicted_estimate,
        "refit_estimate": None if report.refit_ill_defined else report.refit_estimate,
        "refit_ill_defined": report.refit_ill_defined,
        "dropped_indices": list(report.dropped_indices),
        "dropped_count": report.dropped_count,
        "budget": report.budget,
        "direction": report.direction,
        "sign_changed": report.sign_changed,
        "classification": report.classification,
        "runtime_seconds": report.runtime_seconds,
    }


def _print_table(reports):
    headers = ["Method", "Predicted", "Refit", "Dropped", "Flip", "Class"]
    rows = []
    for r in reports:
        rows.append([
            r.method,
            _fmt_est(r.predicted_estimate),
            _fmt_est(r.refit_estimate, r.refit_ill_defined),
            str(r.dropped_count),
            "yes" if r.sign_changed else "no",
            r.classification or "-",
        ])
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(headers)]
    click.echo("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    for row in rows:
        click.echo("  ".join(c.ljust(w) for c, w in zip(row, widths)))


@click.group()
def main():
    """Worst-case data-dropping robustness audits for OLS regression."""


@main.command("audit")
@click.argument("csv_path", type=click.Path())
@click.option("--target", "-y", required=True, help="Response column name.")
@click.option("--coef", default=None, help="Audited coefficient (column name "
              "or index); defaults to the first covariate.")
@click.option("--alpha", default=0.01, show_default=True,
              help="Maximum fraction of rows to drop.")
@click.option("--direction", default="auto", show_default=True,
              type=click.Choice(["auto", "to_negative", "to_positive"]))
@click.option("--methods", default="all", show_default=True,
              help="Comma list of amip,add1e,greedy-amip,greedy-1e,oracle; "
                   "'all' = the four approximations.")
@click.option("--intercept/--no-intercept", default=True, show_default=True)
@click.option("--known-set", "known_set_path", type=click.Path(), default=None,
              help="Sidecar JSON with known influential indices; enables "
                   "failure classification.")
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "json", "csv"]))
def cmd_audit(csv_path, target, coef, alpha, direction, methods, intercept,
              known_set_path, fmt):
    """Audit whether dropping <= alpha*N rows flips a coefficient's sign."""
    requested = []
    for name in methods.split(","):
        name = name.strip()
        if name == "all":
            requested.extend(m for m in ALL_METHODS if m not in requested)
        elif name in METHOD_FLAGS:
            if name not in requested:
                requested.append(name)
        else:
            _fail(f"unknown method {name!r}")

    dataset = _load_dataset(csv_path, target, intercept)
    if coef is None:
        p = 0
    else:
        try:
            p = dataset.coef_index(int(coef) if coef.lstrip("-").isdigit() else coef)
        except DropRobustError as exc:
            _fail(str(exc))

    known_set = None
    if known_set_path is not None:
        try:
            with open(known_set_path, encoding="utf-8") as handle:
                known_set = tuple(json.load(handle)["known_set"])
        except (OSError, KeyError, TypeError, ValueError) as exc:
            _fail(f"{known_set_path}: {exc}")

    import time as _time

    try:
        with _thread_cap():
            full = ols_fit(dataset)
            resolved = resolve_direction(direction, float(full.theta[p]))
            k = drop_budget(alpha, dataset.n_rows)
            reports = []
            oracle_result = None
            for name in requested:
                t0 = _time.perf_counter()
                if name in ("amip", "add1e"):
                    audit = additive_audit(
                        dataset, p, alpha, METHOD_FLAGS[name], resolved,
                        base_fit=full,
                    )
                    reports.append(
                        additive_report(audit, _time.perf_counter() - t0)
                    )
                elif name in ("greedy-amip", "greedy-1e"):
                    report, _ = greedy_audit(
                        dataset, p, alpha, METHOD_FLAGS[name], resolved
                    )
                    reports.append(report)
                else:
                    oracle_result = brute_force_mip(
                        dataset, p, k, direction=resolved
                    )
                    reports.append(AuditReport(
                        method="oracle",
                        base_estimate=oracle_result.base_estimate,
                        predicted_estimate=None,
                        refit_estimate=oracle_result.best_estimate,
                        refit_ill_defined=False,
                        dropped_indices=oracle_result.best_drop.indices,
                        budget=k,
                        direction=resolved,
                        sign_changed=oracle_result.sign_flip_found(),
                        runtime_seconds=_time.perf_counter() - t0,
                    ))
            ground_truth = known_set if known_set is not None else oracle_result
            if ground_truth is not None:
                for report in reports:
                    report.classification = failure_classify(
                        dataset, p, alpha, report, ground_truth
                    )
    except DropRobustError as exc:
        _fail(str(exc))

    if fmt == "text":
        click.echo(f"coefficient {dataset.column_names[p]!r}: full-data "
                   f"estimate {float(full.theta[p]):.3f}, budget {k} of "
                   f"{dataset.n_rows} rows, direction {resolved}")
        _print_table(reports)
    elif fmt == "json":
        click.echo(json.dumps({
            "coefficient": dataset.column_names[p],
            "base_estimate": float(full.theta[p]),
            "budget": k,
            "n_rows": dataset.n_rows,
            "direction": resolved,
            "reports": [_report_doc(r) for r in reports],
        }))
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["method", "predicted_estimate", "refit_estimate",
                         "dropped_count", "dropped_indices", "sign_changed",
                         "classification"])
        for r in reports:
            writer.writerow([
                r.method,
                "" if r.predicted_estimate is None
                else repr(float(r.predicted_estimate)),
                "ill-defined" if r.refit_ill_defined
                else repr(float(r.refit_estimate)),
                r.dropped_count,
                " ".join(str(i) for i in r.dropped_indices),
                "true" if r.sign_changed else "false",
                r.classification or "",
            ])

    sys.exit(2 if any(r.sign_changed for r in reports) else 0)


def _normalize_scenario(ctx, param, value):
    normalized = value.replace("-", "_")
    if normalized not in SCENARIO_IDS:
        raise click.BadParameter(
            f"unknown scenario {value!r} (choose from {', '.join(SCENARIO_IDS)})"
        )
    return normalized


@main.command("generate")
@click.argument("scenario_id", callback=_normalize_scenario)
@click.option("--seed", default=None, type=int,
              help="RNG seed; defaults to the scenario's pinned seed.")
@click.option("--param", "params", multiple=True,
              help="Scenario parameter as name=value (repeatable).")
@click.option("--out", "out_path", required=True, type=click.Path())
def cmd_generate(scenario_id, seed, params, out_path):
    """Write a scenario dataset as CSV plus a sidecar metadata JSON."""
    parsed = {}
    for item in params:
        if "=" not in item:
            _fail(f"bad --param {item!r}, expected name=value")
        key, value = item.split("=", 1)
        parsed[key] = float(value) if "." in value or "e" in value.lower() \
            else int(value)
    try:
        dataset, meta = generate(Scenario(scenario_id, parsed, seed))
    except DropRobustError as exc:
        _fail(str(exc))

    cols = [
        (name, i) for i, name in enumerate(dataset.column_names)
        if not (dataset.has_intercept and i == dataset.n_cols - 1)
    ]
    with open(out_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([name for name, _ in cols] + ["y"])
        for row in range(dataset.n_rows):
            writer.writerow(
                [repr(float(dataset.X[row, i])) for _, i in cols]
                + [repr(float(dataset.y[row]))]
            )
    sidecar = {
        "scenario": meta["scenario"],
        "seed": meta["seed"] + meta["seed_bumps"],
        "params": meta["params"],
        "known_set": None if meta["known_set"] is None
        else list(meta["known_set"]),
        "coef": meta["coef"],
    }
    sidecar_path = out_path + ".meta.json"
    with open(sidecar_path, "w", encoding="utf-8") as handle:
        json.dump(sidecar, handle, sort_keys=True)
        handle.write("\n")
    click.echo(f"wrote {dataset.n_rows} rows to {out_path} "
               f"(sidecar {sidecar_path})")


@main.command("diagnose")
@click.argument("csv_path", type=click.Path())
@click.option("--target", "-y", required=True)
@click.option("--coef", default=None)
@click.option("--intercept/--no-intercept", default=True, show_default=True)
@click.option("--all-pairs", is_flag=True, default=False,
              help="Emit every hat-matrix pair, not just the top rows.")
@click.option("--out", "out_prefix", required=True, type=click.Path(),
              help="Output prefix; writes <prefix>.csv and <prefix>.json.")
def cmd_diagnose(csv_path, target, coef, intercept, all_pairs, out_prefix):
    """Export leverage/residual/score diagnostics and pair bounds."""
    dataset = _load_dataset(csv_path, target, intercept)
    if coef is None:
        p = 0
    else:
        try:
            p = dataset.coef_index(int(coef) if coef.lstrip("-").isdigit() else coef)
        except DropRobustError as exc:
            _fail(str(exc))
    try:
        with _thread_cap():
            report = masking_report(
                ols_fit(dataset), dataset, p, all_pairs=all_pairs
            )
    except DropRobustError as exc:
        _fail(str(exc))
    with open(out_prefix + ".csv", "w", encoding="utf-8") as handle:
        handle.write(report.to_csv())
    with open(out_prefix + ".json", "w", encoding="utf-8") as handle:
        handle.write(report.to_json())
        handle.write("\n")
    click.echo(f"wrote {out_prefix}.csv and {out_prefix}.json")


@main.command("benchmark")
@click.option("--n", "n_values", multiple=True, type=int, required=True)
@click.option("--p", "p_values", multiple=True, type=int, required=True)
@click.option("--alpha", default=0.01, show_default=True)
@click.option("--methods", default="all", show_default=True)
@click.option("--repeats", default=3, show_default=True)
@click.option("--time-budget", default=None, type=float,
              help="Per-method per-cell cap in seconds.")
@click.option("--seed", default=None, type=int)
def cmd_benchmark(n_values, p_values, alpha, methods, repeats, time_budget, seed):
    """Time the audit methods over an (N, P) grid; CSV on stdout."""
    if methods == "all":
        selected = BENCH_METHODS
    else:
        flags = {"amip": AMIP, "add1e": ADDITIVE_ONE_EXACT,
                 "greedy-amip": GREEDY_AMIP, "greedy-1e": GREEDY_ONE_EXACT}
        selected = []
        for name in methods.split(","):
            name = name.strip()
            if name not in flags:
                _fail(f"unknown method {name!r}")
            selected.append(flags[name])
    with _thread_cap() as cap:
        records = run_benchmark(
            n_values, p_values, alpha=alpha, methods=selected,
            repeats=repeats, time_budget=time_budget, seed=seed,
        )
    out = records_to_csv(records)
    sys.stdout.write(out)
    if cap is not None:
        click.echo(f"# ROBAUDIT_THREADS={cap}", err=True)


if __name__ == "__main__":
    main()
