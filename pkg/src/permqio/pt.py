"""Parallel tempering over permutations.

Replicas sit at fixed temperatures on a descending ladder. Each round runs a
number of Metropolis sweeps on every replica, then attempts exchanges between
neighbouring temperature slots: even pairs on even rounds, odd pairs on odd
rounds. A sweep is ``n - 1`` proposals, one per possible adjacent
transposition on average.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import ConfigError
from .oracle import QueryLedger
from .perm import make_rng, random_permutations, swap_rows
from .report import BestTracker, SolverReport


def geometric_ladder(t_hot: float, t_cold: float, m: int) -> np.ndarray:
    """``T_i = T_1 (T_m / T_1)^((i-1)/(m-1))``, from ``t_hot`` down to ``t_cold``."""
    _check_endpoints(t_hot, t_cold, m)
    frac = np.arange(m) / (m - 1)
    temps = t_hot * (t_cold / t_hot) ** frac
    temps[0], temps[-1] = t_hot, t_cold
    return temps


def inverse_linear_ladder(t_hot: float, t_cold: float, m: int) -> np.ndarray:
    """Inverse temperatures equally spaced between ``1/t_hot`` and ``1/t_cold``."""
    _check_endpoints(t_hot, t_cold, m)
    b_hot, b_cold = 1.0 / t_hot, 1.0 / t_cold
    betas = b_hot + (b_cold - b_hot) * np.arange(m) / (m - 1)
    temps = 1.0 / betas
    temps[0], temps[-1] = t_hot, t_cold
    return temps


def _check_endpoints(t_hot, t_cold, m):
    if m < 2:
        raise ConfigError(f"a ladder needs at least 2 temperatures, got m={m}")
    if not (t_hot > t_cold > 0) or not math.isfinite(t_hot):
        raise ConfigError(f"need t_hot > t_cold > 0, got t_hot={t_hot}, t_cold={t_cold}")


LADDERS = {"geometric": geometric_ladder, "inverse-linear": inverse_linear_ladder}


def calibrate_temperatures(problem, rng, ledger: QueryLedger, moves: int = 100,
                           hot_acceptance: float = 0.8, cold_acceptance: float = 0.01):
    """Pick ``(t_hot, t_cold)`` from ``moves`` random proposals.

    Each temperature is set so the mean Metropolis acceptance of the uphill
    proposals in the sample equals the target rate. The sampled routes are
    recorded in ``ledger``.
    """
    n = problem.n
    if n < 2:
        return 1.0, 0.1
    perms = random_permutations(n, moves, rng)
    energies = problem.batch_cost(perms)
    ledger.record(perms)
    k = rng.integers(0, n - 1, size=moves)
    new_energies = problem.batch_swap_cost(perms, k, energies)
    swap_rows(perms, k)
    ledger.record(perms)
    uphill = (new_energies - energies)
    uphill = uphill[uphill > 1e-12 * np.abs(energies).max()]
    if uphill.size == 0:
        return 1.0, 0.1
    return _temperature_for(uphill, hot_acceptance), _temperature_for(uphill, cold_acceptance)


def _temperature_for(uphill: np.ndarray, target: float) -> float:
    # mean acceptance is increasing in T; bisect on log T
    lo, hi = math.log(uphill.min()) - 30.0, math.log(uphill.max()) + 30.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        rate = np.exp(-uphill / math.exp(mid)).mean()
        if rate < target:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def metropolis_sweep(states: np.ndarray, energies: np.ndarray, temperatures: np.ndarray,
                     problem, ledger: QueryLedger, rng: np.random.Generator,
                     tracker: BestTracker | None = None) -> int:
    """One sweep on every row of ``states``, in place; returns the accepted count.

    Row ``r`` runs at ``temperatures[r]``. Every proposal is an adjacent
    transposition at a uniform position, accepted with probability
    ``min(1, exp(-dE / T))``. All proposed routes are recorded in ``ledger``.
    """
    count, n = states.shape
    if n < 2 or count == 0:
        return 0
    ks = rng.integers(0, n - 1, size=(n - 1, count))
    us = rng.random((n - 1, count))
    proposals = np.empty((n - 1, count, n), dtype=states.dtype)
    proposal_e = np.empty((n - 1, count))
    if hasattr(problem, "load_model"):
        accepted = _kernels.metropolis_sweep(states, energies, temperatures, ks, us,
                                             *problem.load_model(), proposals, proposal_e)
    else:
        accepted = _sweep_numpy(states, energies, temperatures, ks, us, problem, proposals, proposal_e)
    flat = proposals.reshape(-1, n)
    ledger.record(flat)
    if tracker is not None:
        tracker.update(flat, proposal_e.ravel())
    return accepted


def _sweep_numpy(states, energies, temperatures, ks, us, problem, proposals, proposal_e):
    accepted = 0
    for t in range(ks.shape[0]):
        new_energies = problem.batch_swap_cost(states, ks[t], energies)
        proposed = states.copy()
        swap_rows(proposed, ks[t])
        proposals[t] = proposed
        proposal_e[t] = new_energies
        with np.errstate(over="ignore"):
            accept = us[t] < np.exp(-(new_energies - energies) / temperatures)
        states[accept] = proposed[accept]
        energies[accept] = new_energies[accept]
        accepted += int(accept.sum())
    return accepted


def swap_probability(t_i: float, t_j: float, e_i: float, e_j: float) -> float:
    """``min(1, exp(dbeta * dE))`` with ``dbeta = 1/t_j - 1/t_i`` and ``dE = e_j - e_i``."""
    x = (1.0 / t_j - 1.0 / t_i) * (e_j - e_i)
    return 1.0 if x >= 0 else math.exp(x)


@dataclass(frozen=True)
class PtReplica:
    state: tuple[int, ...]
    energy: float
    temperature_index: int


def swap_attempt(r_i: PtReplica, r_j: PtReplica, ladder, rng: np.random.Generator):
    """Try to exchange the states of two replicas at neighbouring ladder slots.

    Temperatures stay with their slots; only states and energies move.
    """
    if abs(r_i.temperature_index - r_j.temperature_index) != 1:
        raise ValueError(
            f"replicas at slots {r_i.temperature_index} and {r_j.temperature_index} are not adjacent"
        )
    p = swap_probability(ladder[r_i.temperature_index], ladder[r_j.temperature_index],
                         r_i.energy, r_j.energy)
    if rng.random() < p:
        return (replace(r_j, temperature_index=r_i.temperature_index),
                replace(r_i, temperature_index=r_j.temperature_index), True)
    return r_i, r_j, False


@dataclass(frozen=True)
class PtConfig:
    replicas: int = 8
    t_hot: float | None = None
    t_cold: float | None = None
    profile: str = "geometric"
    sweeps_per_round: int = 10
    max_rounds: int = 300
    # rounds without improvement before stopping; the default never triggers
    # first, so every run spends the same query budget
    patience: int = 300
    hot_acceptance: float = 0.8
    cold_acceptance: float = 0.01
    calibration_moves: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if self.profile not in LADDERS:
            raise ConfigError(f"unknown ladder profile {self.profile!r}; choose from {sorted(LADDERS)}")
        for name in ("sweeps_per_round", "max_rounds", "patience", "calibration_moves"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if (self.t_hot is None) != (self.t_cold is None):
            raise ConfigError("set both t_hot and t_cold, or neither to calibrate them")
        if self.t_hot is not None and not self.t_hot > self.t_cold > 0:
            raise ConfigError(f"need t_hot > t_cold > 0, got {self.t_hot}, {self.t_cold}")
        if not 0 < self.cold_acceptance < self.hot_acceptance < 1:
            raise ConfigError("need 0 < cold_acceptance < hot_acceptance < 1")


def resolve_temperatures(problem, t_hot, t_cold, rng, ledger, moves, hot_acc, cold_acc):
    if t_hot is not None:
        return t_hot, t_cold
    return calibrate_temperatures(problem, rng, ledger, moves, hot_acc, cold_acc)


def run_pt(problem, config: PtConfig = PtConfig()) -> SolverReport:
    n = problem.n
    ledger = QueryLedger(n)
    rng = make_rng(config.seed, 0)
    t_hot, t_cold = resolve_temperatures(
        problem, config.t_hot, config.t_cold, rng, ledger, config.calibration_moves,
        config.hot_acceptance, config.cold_acceptance)
    m = config.replicas
    if m == 1:
        temps = np.array([t_cold])
    else:
        temps = LADDERS[config.profile](t_hot, t_cold, m)

    states = random_permutations(n, m, rng)
    energies = problem.batch_cost(states)
    ledger.record(states)
    tracker = BestTracker()
    tracker.update(states, energies)

    trace = []
    last_improved = 0
    rounds = 0
    for rnd in range(config.max_rounds):
        before = tracker.energy
        for _ in range(config.sweeps_per_round):
            metropolis_sweep(states, energies, temps, problem, ledger, rng, tracker)
        for i in range(rnd % 2, m - 1, 2):
            p = swap_probability(temps[i], temps[i + 1], energies[i], energies[i + 1])
            if rng.random() < p:
                states[[i, i + 1]] = states[[i + 1, i]]
                energies[[i, i + 1]] = energies[[i + 1, i]]
        rounds = rnd + 1
        trace.append({"round": rounds, "best": tracker.energy})
        if tracker.energy < before:
            last_improved = rnd
        elif rnd - last_improved >= config.patience:
            break

    return SolverReport(
        best_route=tracker.route,
        best_energy=tracker.energy,
        ledger=ledger,
        rounds=rounds,
        trace=trace,
        extra={"ladder": [float(t) for t in temps]},
    )
