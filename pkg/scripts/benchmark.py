#!/usr/bin/env python3
"""
covham benchmark harness

Times the desk-scale workloads (verification suites, trajectory export, characteristic
roots, equilibrium grids) and writes a CSV of every run plus a text summary.

Workloads and repeat counts come from a JSON config (see benchmark_config.json).
"""

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

import numpy as np

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))
sys.path.insert(0, ROOT)

from cli.commands import cmd_equilibrium, cmd_roots, cmd_simulate, cmd_verify  # noqa: E402
from cli.scenario import Scenario, load_scenario  # noqa: E402
from utils.timing import PerformanceMonitor  # noqa: E402

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[logging.StreamHandler(sys.stderr)]
)
logger = logging.getLogger(__name__)


@dataclass
class Workload:
    """One timed operation on one scenario."""
    name: str
    kind: str
    scenario: str
    samples: Optional[int] = None
    bound_seconds: Optional[float] = None


@dataclass
class RunResult:
    workload: str
    repeat: int
    elapsed_seconds: float
    rss_mb: float
    outcome: str


@dataclass
class WorkloadSummary:
    workload: str
    runs: int
    mean_seconds: float
    min_seconds: float
    max_seconds: float
    bound_seconds: Optional[float]
    within_bound: bool
    outcomes: List[str] = field(default_factory=list)


def _run_verify(scenario: Scenario, workload: Workload, workdir: str) -> str:
    report = cmd_verify(scenario, samples=workload.samples)
    return report.status


def _run_simulate(scenario: Scenario, workload: Workload, workdir: str) -> str:
    summary, _ = cmd_simulate(scenario, os.path.join(workdir, f"{workload.name}.csv"))
    return str(summary["status"])


def _run_roots(scenario: Scenario, workload: Workload, workdir: str) -> str:
    points = scenario.sample(workload.samples or 100)
    oscillatory = sum(bool(cmd_roots(scenario, x)["oscillatory"]) for x in points)
    return f"{oscillatory}/{len(points)} oscillatory"


def _run_equilibrium(scenario: Scenario, workload: Workload, workdir: str) -> str:
    found = set()
    for q in np.linspace(-2.5, 1.0, 5):
        for p in np.linspace(-1.0, 1.0, 5):
            data, code = cmd_equilibrium(scenario, [q, p])
            if code == 0:
                found.add(tuple(round(v, 9) + 0.0 for v in data["state"]))
    return ";".join(str(state) for state in sorted(found))


RUNNERS: Dict[str, Callable[[Scenario, Workload, str], str]] = {
    "verify": _run_verify,
    "simulate": _run_simulate,
    "roots": _run_roots,
    "equilibrium": _run_equilibrium,
}


class BenchmarkRunner:
    def __init__(self, workloads: List[Workload], repeats: int):
        self.workloads = workloads
        self.repeats = repeats
        self.monitor = PerformanceMonitor()
        self.results: List[RunResult] = []

    def run(self) -> List[WorkloadSummary]:
        summaries = []
        with tempfile.TemporaryDirectory() as workdir:
            for workload in self.workloads:
                if workload.kind not in RUNNERS:
                    raise ValueError(f"unknown workload kind '{workload.kind}'")
                scenario = load_scenario(os.path.join(ROOT, workload.scenario))
                outcomes = []
                for repeat in range(self.repeats):
                    with self.monitor.measure(workload.name):
                        outcome = RUNNERS[workload.kind](scenario, workload, workdir)
                    elapsed = self.monitor.durations[workload.name][-1]
                    rss_mb = self.monitor.sample_memory() / (1024 * 1024)
                    self.results.append(RunResult(workload.name, repeat, elapsed, rss_mb, outcome))
                    outcomes.append(outcome)
                    logger.info(f"{workload.name} run {repeat + 1}/{self.repeats}: {elapsed:.4f}s ({outcome})")
                stats = self.monitor.summary(workload.name)
                within = workload.bound_seconds is None or stats["max_seconds"] < workload.bound_seconds
                summaries.append(WorkloadSummary(
                    workload=workload.name,
                    runs=int(stats["runs"]),
                    mean_seconds=stats["mean_seconds"],
                    min_seconds=stats["min_seconds"],
                    max_seconds=stats["max_seconds"],
                    bound_seconds=workload.bound_seconds,
                    within_bound=within,
                    outcomes=sorted(set(outcomes)),
                ))
        return summaries

    def generate_report(self, summaries: List[WorkloadSummary], output_dir: str) -> str:
        os.makedirs(output_dir, exist_ok=True)
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")

        runs_csv = os.path.join(output_dir, f"benchmark_runs_{timestamp}.csv")
        with open(runs_csv, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['workload', 'repeat', 'elapsed_seconds', 'rss_mb', 'outcome'])
            for result in self.results:
                writer.writerow([result.workload, result.repeat, f"{result.elapsed_seconds:.6f}",
                                 f"{result.rss_mb:.1f}", result.outcome])

        summary_path = os.path.join(output_dir, f"benchmark_summary_{timestamp}.txt")
        with open(summary_path, 'w') as f:
            f.write("COVHAM BENCHMARK SUMMARY\n")
            f.write("=" * 60 + "\n")
            for summary in summaries:
                bound = "-" if summary.bound_seconds is None else f"{summary.bound_seconds:.2f}s"
                status = "ok" if summary.within_bound else "SLOW"
                f.write(f"{summary.workload:36s} mean {summary.mean_seconds:8.4f}s  "
                        f"max {summary.max_seconds:8.4f}s  bound {bound:>7s}  {status}\n")
                f.write(f"    outcomes: {', '.join(summary.outcomes)}\n")
            f.write("\n")
            f.write(json.dumps([asdict(s) for s in summaries], indent=2))
            f.write("\n")
        logger.info(f"Results written to {runs_csv} and {summary_path}")
        return summary_path


def load_config(path: Optional[str]) -> Dict[str, Any]:
    path = path or os.path.join(os.path.dirname(os.path.abspath(__file__)), "benchmark_config.json")
    with open(path, 'r') as f:
        return json.load(f)


def main():
    """Main entry point for the benchmark."""
    parser = argparse.ArgumentParser(description="covham benchmark harness")
    parser.add_argument("--config", help="Path to configuration JSON file")
    parser.add_argument("--repeats", type=int, help="Runs per workload")
    parser.add_argument("--only", nargs="+", help="Workload names to run")
    parser.add_argument("--output-dir", default="benchmark_results", help="Output directory for results")
    args = parser.parse_args()

    config = load_config(args.config)
    workloads = [Workload(**data) for data in config.get("workloads", [])]
    if args.only:
        workloads = [w for w in workloads if w.name in set(args.only)]
    repeats = args.repeats or config.get("repeats", 3)

    runner = BenchmarkRunner(workloads, repeats)
    summaries = runner.run()
    runner.generate_report(summaries, args.output_dir)

    print("\n" + "=" * 60)
    print("BENCHMARK COMPLETED")
    print("=" * 60)
    for summary in summaries:
        print(f"{summary.workload}: mean {summary.mean_seconds:.4f}s"
              + ("" if summary.within_bound else "  (over bound)"))
    print("=" * 60)
    return 0 if all(s.within_bound for s in summaries) else 1


if __name__ == "__main__":
    sys.exit(main())
