from collections import defaultdict
from contextlib import contextmanager
import statistics
import time
from typing import Dict, Iterator, List

import psutil


class PerformanceMonitor:
    """Wall-clock durations per named operation, plus the peak resident set size seen."""

    def __init__(self):
        self.durations: Dict[str, List[float]] = defaultdict(list)
        self.process = psutil.Process()
        self.peak_rss = self.process.memory_info().rss

    def record_operation(self, operation: str, duration: float):
        self.durations[operation].append(duration)
        self.sample_memory()

    @contextmanager
    def measure(self, operation: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.record_operation(operation, time.perf_counter() - start)

    def sample_memory(self) -> int:
        rss = self.process.memory_info().rss
        self.peak_rss = max(self.peak_rss, rss)
        return rss

    def elapsed(self, operation: str) -> float:
        return sum(self.durations.get(operation, ()))

    def summary(self, operation: str) -> Dict[str, float]:
        """mean/min/max/total seconds over the recorded runs of one operation."""
        runs = self.durations.get(operation)
        if not runs:
            raise KeyError(f"no runs recorded for '{operation}'")
        return {
            "runs": len(runs),
            "mean_seconds": statistics.mean(runs),
            "min_seconds": min(runs),
            "max_seconds": max(runs),
            "total_seconds": sum(runs),
        }
