"""Solver result container and its JSON document."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .oracle import QueryLedger


@dataclass
class SolverReport:
    best_route: tuple[int, ...]
    best_energy: float
    ledger: QueryLedger
    rounds: int
    trace: list[dict] = field(default_factory=list)
    # solver-specific series, e.g. {"population_trace": [...]}
    extra: dict = field(default_factory=dict)
    status: str = "ok"

    @property
    def total_queries(self) -> int:
        return self.ledger.total

    @property
    def unique_queries(self) -> int:
        return self.ledger.unique

    def to_document(self) -> dict:
        doc = {
            "best_route": list(self.best_route),
            "best_energy": self.best_energy,
            "total_queries": self.total_queries,
            "unique_queries": self.unique_queries,
            "rounds": self.rounds,
            "trace": self.trace,
        }
        doc.update(self.extra)
        if self.status != "ok":
            doc["status"] = self.status
        return doc

    def to_json(self) -> bytes:
        return (json.dumps(self.to_document(), separators=(",", ":")) + "\n").encode()


IMPROVE_RTOL = 1e-9


class BestTracker:
    """Best-ever route over every evaluated candidate.

    A candidate replaces the incumbent only if it is lower by more than
    ``IMPROVE_RTOL`` relative, so rounding drift in cached costs never counts
    as progress and the first of tied routes is kept.
    """

    def __init__(self):
        self.route: tuple[int, ...] | None = None
        self.energy = np.inf

    def update(self, perms: np.ndarray, energies: np.ndarray) -> bool:
        i = int(np.argmin(energies))
        if self.route is None or energies[i] < self.energy - IMPROVE_RTOL * abs(self.energy):
            self.energy = float(energies[i])
            self.route = tuple(int(x) for x in perms[i])
            return True
        return False
