"""Query accounting, exhaustive enumeration and the [span, error] metric."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import enumerate_min
from .errors import CapExceededError, LedgerOverflowError, OracleViolationError

DEFAULT_CAP = 10
TIE_RTOL = 1e-9
DEVIATION_SLACK = 1e-9
# rough single-core throughput of the compiled enumerator, used for refusal messages
ROUTES_PER_SECOND = 2.0e7
DEFAULT_MAX_UNIQUE = 50_000_000


class QueryLedger:
    """Counts cost evaluations, total and over distinct routes.

    Routes of length ``n <= 15`` are packed into one int64 key (base ``n + 1``
    digits); longer routes are keyed by their raw bytes. The set is exact and
    bounded by ``max_unique`` entries (about 60 bytes each for int keys);
    crossing the bound raises :class:`LedgerOverflowError`.
    """

    def __init__(self, n: int, max_unique: int = DEFAULT_MAX_UNIQUE, keep_log: bool = False):
        self.n = n
        self.total = 0
        self.max_unique = max_unique
        self._seen: set = set()
        self._powers = (n + 1) ** np.arange(n, dtype=np.int64) if n <= 15 else None
        self.log: list[np.ndarray] | None = [] if keep_log else None

    @property
    def unique(self) -> int:
        return len(self._seen)

    def record(self, perms: np.ndarray) -> None:
        """Record one evaluation per row of a ``(count, n)`` route array."""
        perms = np.asarray(perms)
        if perms.ndim == 1:
            perms = perms[None, :]
        if perms.shape[1] != self.n:
            raise ValueError(f"routes of length {perms.shape[1]} recorded in an n={self.n} ledger")
        self.total += perms.shape[0]
        if self._powers is not None:
            self._seen.update((perms @ self._powers).tolist())
        else:
            self._seen.update(bytes(row) for row in np.ascontiguousarray(perms, dtype=np.uint8))
        if self.log is not None:
            self.log.append(perms.copy())
        if len(self._seen) > self.max_unique:
            raise LedgerOverflowError(
                f"unique-route set exceeded {self.max_unique} entries; raise max_unique to continue"
            )


@dataclass(frozen=True)
class ExactResult:
    min_route: tuple[int, ...]
    min_cost: float
    evaluations: int

    def to_document(self) -> dict:
        return {
            "min_route": list(self.min_route),
            "min_cost": self.min_cost,
            "evaluations": self.evaluations,
        }


@dataclass(frozen=True)
class PerformanceVector:
    span: float
    error: float

    def as_list(self) -> list[float]:
        return [self.span, self.error]


def brute_force(problem, cap: int = DEFAULT_CAP) -> ExactResult:
    """Enumerate all ``n!`` routes in lexicographic order and return the minimum.

    Costs within ``TIE_RTOL`` relative of the running minimum count as ties, and
    the earliest (lexicographically smallest) route wins.
    """
    n = problem.n
    if n > cap:
        routes = math.factorial(n)
        raise CapExceededError(
            f"n={n} exceeds the brute-force cap of {cap}: {routes} routes, "
            f"roughly {routes / ROUTES_PER_SECOND:.3g} s of enumeration"
        )
    if not hasattr(problem, "load_model"):
        best_route, best, count = None, math.inf, 0
        for route in itertools.permutations(range(1, n + 1)):
            c = problem.cost(route)
            count += 1
            if best_route is None or c < best - TIE_RTOL * abs(best):
                best_route, best = route, c
    else:
        perm, count = enumerate_min(n, *problem.load_model(), TIE_RTOL)
        best_route = tuple(int(x) for x in perm)
    return ExactResult(min_route=best_route, min_cost=problem.cost(best_route), evaluations=int(count))


def deviation(found: float, exact: ExactResult) -> float:
    """Relative deviation ``(found - min) / min`` of a solver's best cost.

    Costs within ``DEVIATION_SLACK`` of the minimum count as exact hits.
    """
    ref = exact.min_cost
    slack = DEVIATION_SLACK * max(abs(ref), 1.0)
    if found < ref - slack:
        raise OracleViolationError(f"reported cost {found!r} is below the exact minimum {ref!r}")
    if abs(found - ref) <= slack:
        return 0.0
    if ref == 0:
        return max(found, 0.0)
    return max((found - ref) / ref, 0.0)


def performance_vector(ledgers: Sequence[QueryLedger], deviations: Sequence[float]) -> PerformanceVector:
    """``span = mean(unique) / n!`` and ``error = mean(deviation)`` over a batch."""
    if not ledgers:
        raise ValueError("performance_vector needs at least one ledger")
    if len(ledgers) != len(deviations):
        raise ValueError("one deviation per ledger is required")
    sizes = {ledger.n for ledger in ledgers}
    if len(sizes) != 1:
        raise ValueError(f"all instances in a batch must share n, got {sorted(sizes)}")
    n = sizes.pop()
    span = float(np.mean([ledger.unique for ledger in ledgers])) / math.factorial(n)
    return PerformanceVector(span=span, error=float(np.mean(deviations)))
