from dataclasses import dataclass, field
import json
import math
from typing import Any, Dict, List, Optional


@dataclass
class CheckResult:
    """Outcome of one identity check over all sample points.

    A point passes when residual <= tolerance * max(1, scale); `normalized` is the worst
    residual / max(1, scale) seen.
    """

    name: str
    residual: float
    normalized: float
    tolerance: float
    elapsed: float = 0.0
    worst_point: Optional[List[float]] = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return math.isfinite(self.normalized) and self.normalized <= self.tolerance

    @property
    def finite(self) -> bool:
        return math.isfinite(self.residual)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "name": self.name,
            "residual": self.residual if self.finite else str(self.residual),
            "normalized_residual": self.normalized if math.isfinite(self.normalized) else str(self.normalized),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "elapsed": self.elapsed,
        }
        if self.worst_point is not None:
            data["worst_point"] = self.worst_point
        if self.detail:
            data["detail"] = self.detail
        return data


@dataclass
class RunReport:
    command: str
    scenario: str
    fingerprint: str
    seed: int
    samples: int
    checks: List[CheckResult] = field(default_factory=list)
    elapsed: float = 0.0
    peak_rss_bytes: int = 0

    def add(self, check: CheckResult):
        self.checks.append(check)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def numerical_failure(self) -> bool:
        return any(not check.finite for check in self.checks)

    @property
    def status(self) -> str:
        if self.numerical_failure:
            return "error"
        return "pass" if self.passed else "fail"

    def exit_code(self) -> int:
        if self.numerical_failure:
            return 3
        return 0 if self.passed else 1

    def failed_checks(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "scenario": self.scenario,
            "fingerprint": self.fingerprint,
            "seed": self.seed,
            "samples": self.samples,
            "status": self.status,
            "checks": [check.to_dict() for check in self.checks],
            "elapsed": self.elapsed,
            "peak_rss_bytes": self.peak_rss_bytes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
