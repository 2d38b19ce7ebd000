"""Shared imputation outcome record, serialized with the run's audit artifacts."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class ImputationReport:
    """cells_imputed equals the pre-imputation null count of the treated
    columns; the treated columns of the output dataset hold zero nulls."""

    method_used: dict  # column -> method name
    cells_imputed: int
    iterations: int = 0
    convergence_delta: float | None = None
    residual_flags: tuple = ()
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = asdict(self)
        doc["residual_flags"] = [list(f) for f in self.residual_flags]
        return json.dumps(doc, sort_keys=True)
