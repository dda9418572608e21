"""Verification reports: named max-norm residuals with pass/fail verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckResult:
    """One named residual.  ``tolerance=None`` marks an informational entry
    that never counts against the overall verdict."""

    name: str
    residual: float
    tolerance: float | None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool | None:
        if self.tolerance is None:
            return None
        return self.residual < self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": self.details,
        }

    def __str__(self):
        if self.tolerance is None:
            return f"[INFO] {self.name}: residual={self.residual:.3e}"
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.name}: residual={self.residual:.3e} tol={self.tolerance:.1e}"


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, name, residual, tolerance=None, **details) -> CheckResult:
        result = CheckResult(name, float(residual), tolerance, details)
        self.checks.append(result)
        return result

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(CheckResult(prefix + c.name, c.residual, c.tolerance, c.details))

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if c.passed is False]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def __str__(self):
        return "\n".join(str(c) for c in self.checks)
