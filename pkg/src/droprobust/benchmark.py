"""Wall-clock comparison of the audit methods on synthetic data.

Each grid cell generates one dataset, runs a discarded warm-up, then
times every requested method end to end (scoring, selection, and the
final refit) for a median over repeats. Cells that blow the per-cell
time budget are recorded as timed out rather than dropped, so a partial
grid still serializes cleanly.
"""

from __future__ import annotations

import csv
import io
import platform
import time
from dataclasses import dataclass

from .greedy import GREEDY_AMIP, GREEDY_ONE_EXACT, greedy_audit
from .scenarios import Scenario, generate
from .scores import ADDITIVE_ONE_EXACT, AMIP, additive_audit

BENCH_METHODS = (AMIP, ADDITIVE_ONE_EXACT, GREEDY_AMIP, GREEDY_ONE_EXACT)
DEFAULT_REPEATS = 3


@dataclass(frozen=True)
class BenchRecord:
    method: str
    n: int
    p: int
    alpha: float
    wall_seconds: float  # median over repeats; NaN when timed out
    repeats: int
    machine: str
    timed_out: bool = False


def machine_fingerprint() -> str:
    return f"{platform.machine()}/{platform.system()}/python{platform.python_version()}"


def _run_method(method, dataset, alpha):
    if method in (AMIP, ADDITIVE_ONE_EXACT):
        additive_audit(dataset, 0, alpha, method)
    else:
        greedy_audit(dataset, 0, alpha, method)


def run_benchmark(
    n_values,
    p_values,
    alpha: float = 0.01,
    methods=BENCH_METHODS,
    repeats: int = DEFAULT_REPEATS,
    time_budget: float | None = None,
    seed: int | None = None,
) -> list[BenchRecord]:
    """Time each method on every (N, P) cell; returns one record per pair.

    ``time_budget`` caps seconds per method per cell: if the warm-up or
    any repeat exceeds it, the cell is marked timed out with the partial
    median (NaN if nothing finished in time).
    """
    machine = machine_fingerprint()
    records = []
    for n in n_values:
        for p in p_values:
            params = {"n": int(n), "p": int(p)}
            dataset, _ = generate(Scenario("runtime_bench", params, seed))
            for method in methods:
                times = []
                timed_out = False
                for rep in range(repeats + 1):  # rep 0 is the warm-up
                    t0 = time.perf_counter()
                    _run_method(method, dataset, alpha)
                    elapsed = time.perf_counter() - t0
                    if rep > 0:
                        times.append(elapsed)
                    if time_budget is not None and elapsed > time_budget:
                        timed_out = True
                        break
                times.sort()
                median = times[len(times) // 2] if times else float("nan")
                records.append(
                    BenchRecord(
                        method=method,
                        n=int(n),
                        p=int(p),
                        alpha=alpha,
                        wall_seconds=median,
                        repeats=len(times),
                        machine=machine,
                        timed_out=timed_out,
                    )
                )
    return records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "N", "P", "alpha", "seconds", "repeats"])
    for r in records:
        writer.writerow(
            [r.method, r.n, r.p, repr(r.alpha), repr(r.wall_seconds), r.repeats]
        )
    return buf.getvalue()
