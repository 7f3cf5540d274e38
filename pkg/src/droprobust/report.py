"""Shared audit-report record emitted by every method."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class AuditReport:
    """One method's verdict on one dataset/coefficient/budget.

    ``predicted_estimate`` is None for methods that do not predict
    without refitting (the greedy methods and the oracle).
    ``refit_estimate`` is NaN with ``refit_ill_defined`` set when deleting
    the chosen rows leaves the coefficient unidentified.
    """

    method: str
    base_estimate: float
    predicted_estimate: float | None
    refit_estimate: float
    refit_ill_defined: bool
    dropped_indices: tuple[int, ...]
    budget: int
    direction: str
    sign_changed: bool
    classification: str | None = None
    runtime_seconds: float | None = None
    notes: dict = field(default_factory=dict)

    @property
    def dropped_count(self) -> int:
        return len(self.dropped_indices)
