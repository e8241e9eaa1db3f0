"""Population annealing over permutations.

A population starts uniform at ``beta_0 = 0`` and is cooled through a
geometric schedule of inverse temperatures. At each step members are copied
in proportion to their Boltzmann reweighting, then swept at the new
temperature with the same Metropolis moves as parallel tempering.

Normalised weights are ``tau_hat_j = (R / R_prev) * exp(-dbeta E_j) / Q`` with
``Q`` the mean of ``exp(-dbeta E)`` over the ``R_prev`` current members, so
the expected new population size is the nominal ``R``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ExtinctionError
from .oracle import QueryLedger
from .perm import make_rng, random_permutations
from .pt import metropolis_sweep, resolve_temperatures
from .report import BestTracker, SolverReport


def resampling_weights(energies: np.ndarray, beta_prev: float, beta_next: float,
                       nominal_size: int) -> np.ndarray:
    energies = np.asarray(energies, dtype=np.float64)
    if energies.size == 0:
        raise ValueError("cannot resample an empty population")
    if not beta_next > beta_prev:
        raise ValueError(f"beta must increase, got {beta_prev} -> {beta_next}")
    x = -(beta_next - beta_prev) * energies
    boltz = np.exp(x - x.max())
    tau = boltz / boltz.mean()
    return (nominal_size / energies.size) * tau


def copy_counts(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Round each weight to its floor or floor + 1, keeping the mean equal to the weight."""
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    base = np.floor(weights)
    u = rng.random(weights.size)
    return (base + (u < weights - base)).astype(np.int64)


def population_energy(energies: np.ndarray, n: int) -> float:
    """Population mean energy per route position."""
    energies = np.asarray(energies, dtype=np.float64)
    if energies.size == 0:
        raise ValueError("empty population")
    return float(energies.mean() / n)


def anneal_schedule(t_hot: float, t_cold: float, steps: int) -> np.ndarray:
    """``[0, beta_1, ..., beta_f]`` with ``steps`` geometric values from ``1/t_hot`` to ``1/t_cold``."""
    if steps < 1:
        raise ConfigError("the schedule needs at least one step")
    if not t_hot > t_cold > 0:
        raise ConfigError(f"need t_hot > t_cold > 0, got {t_hot}, {t_cold}")
    b0, b1 = 1.0 / t_hot, 1.0 / t_cold
    if steps == 1:
        return np.array([0.0, b1])
    return np.concatenate([[0.0], b0 * (b1 / b0) ** (np.arange(steps) / (steps - 1))])


@dataclass
class Population:
    states: np.ndarray
    energies: np.ndarray
    nominal_size: int

    @property
    def size(self) -> int:
        return self.states.shape[0]


def pa_step(pop: Population, beta_prev: float, beta_next: float, sweeps: int, problem,
            ledger: QueryLedger, rng: np.random.Generator,
            tracker: BestTracker | None = None) -> Population:
    """Resample from ``beta_prev`` to ``beta_next``, then sweep every member ``sweeps`` times."""
    tau = resampling_weights(pop.energies, beta_prev, beta_next, pop.nominal_size)
    counts = copy_counts(tau, rng)
    if counts.sum() == 0:
        raise ExtinctionError(
            f"population died out resampling to beta={beta_next:.6g} "
            f"(previous size {pop.size}, max weight {tau.max():.3g})", step=-1)
    idx = np.repeat(np.arange(pop.size), counts)
    states = pop.states[idx]
    energies = pop.energies[idx]
    temps = np.full(states.shape[0], 1.0 / beta_next)
    for _ in range(sweeps):
        metropolis_sweep(states, energies, temps, problem, ledger, rng, tracker)
    return Population(states, energies, pop.nominal_size)


@dataclass(frozen=True)
class PaConfig:
    population: int = 100
    steps: int = 50
    sweeps: int = 5
    t_hot: float | None = None
    t_cold: float | None = None
    hot_acceptance: float = 0.8
    cold_acceptance: float = 0.01
    calibration_moves: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ConfigError("population must be >= 2")
        if self.sweeps < 1 or self.steps < 1:
            raise ConfigError("sweeps and steps must be >= 1")
        if (self.t_hot is None) != (self.t_cold is None):
            raise ConfigError("set both t_hot and t_cold, or neither to calibrate them")
        if self.t_hot is not None and not self.t_hot > self.t_cold > 0:
            raise ConfigError(f"need t_hot > t_cold > 0, got {self.t_hot}, {self.t_cold}")


def run_pa(problem, config: PaConfig = PaConfig()) -> SolverReport:
    n = problem.n
    ledger = QueryLedger(n)
    rng = make_rng(config.seed, 1)
    t_hot, t_cold = resolve_temperatures(
        problem, config.t_hot, config.t_cold, rng, ledger, config.calibration_moves,
        config.hot_acceptance, config.cold_acceptance)
    betas = anneal_schedule(t_hot, t_cold, config.steps)

    states = random_permutations(n, config.population, rng)
    energies = problem.batch_cost(states)
    ledger.record(states)
    tracker = BestTracker()
    tracker.update(states, energies)
    pop = Population(states, energies, config.population)

    trace = []
    population_trace = [{"beta": 0.0, "size": pop.size, "e_bar": population_energy(pop.energies, n)}]
    for step in range(1, betas.size):
        try:
            pop = pa_step(pop, betas[step - 1], betas[step], config.sweeps, problem, ledger, rng, tracker)
        except ExtinctionError as exc:
            report = _report(tracker, ledger, step - 1, trace, population_trace, "extinct")
            raise ExtinctionError(str(exc), step=step, report=report) from None
        trace.append({"round": step, "best": tracker.energy})
        population_trace.append({"beta": float(betas[step]), "size": pop.size,
                                 "e_bar": population_energy(pop.energies, n)})
    return _report(tracker, ledger, betas.size - 1, trace, population_trace)


def _report(tracker, ledger, rounds, trace, population_trace, status="ok"):
    return SolverReport(best_route=tracker.route, best_energy=tracker.energy, ledger=ledger,
                        rounds=rounds, trace=trace,
                        extra={"population_trace": population_trace}, status=status)
