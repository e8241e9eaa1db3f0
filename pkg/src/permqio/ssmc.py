"""Substochastic Monte Carlo over permutations.

Walkers diffuse on the move graph of ``S_n`` (vertices are routes, edges are
adjacent transpositions, every vertex has degree ``n - 1``) while a schedule
``s: 0 -> 1`` shifts weight from diffusion ``a(s)`` to cost ``b(s)``. In each
time step a walker at cost ``w`` either

- steps to a uniformly chosen neighbour with probability ``a dt (n-1)``,
- dies with probability ``b dt (w - threshold)`` when above the threshold,
- stays and spawns a copy with probability ``b dt (threshold - w)`` when below,
- or stays.

The threshold is the step-start mean cost minus an offset ``E`` that holds
the walker count near nominal. The default controller sets
``E = gain * spread * (count - nominal) / nominal`` after every step, with
``spread`` the current max-min cost range; ``controller="integral"`` adds that
amount to the previous offset instead.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, ExtinctionError
from .oracle import QueryLedger
from .perm import make_rng, random_permutations, swap_rows
from .report import BestTracker, SolverReport

GUARD_TOL = 1e-12

Schedule = Callable[[float], "tuple[float, float]"]


def linear_schedule(s: float) -> tuple[float, float]:
    return 1.0 - s, s


def quadratic_schedule(s: float) -> tuple[float, float]:
    return (1.0 - s) ** 2, s * s


CONTROLLERS = ("proportional", "integral")

SCHEDULES: dict[str, Schedule] = {"linear": linear_schedule, "quadratic": quadratic_schedule}


def transition_probabilities(energy, threshold, a, b, dt, n):
    """Return ``(p_step, p_stay, p_die, p_spawn)`` for walkers at ``energy``.

    Every argument broadcasts, so one call can cover a whole ensemble or a
    batch of parameter tuples. Raises :class:`ConfigError` if ``dt`` is too
    large for the stay probability to be non-negative.
    """
    dev = np.asarray(energy, dtype=np.float64) - threshold
    p_step = np.asarray(a * dt * (np.asarray(n) - 1), dtype=np.float64)
    kill = b * dt * dev
    p_die = np.maximum(kill, 0.0)
    p_spawn = np.maximum(-kill, 0.0)
    p_stay = 1.0 - p_step - np.abs(kill)
    if np.any(p_stay < -GUARD_TOL) or np.any(p_step > 1.0 + GUARD_TOL):
        i = np.unravel_index(np.argmin(p_stay), p_stay.shape)
        pick = lambda x: float(np.broadcast_to(x, p_stay.shape)[i])  # noqa: E731
        raise ConfigError(
            f"time step too large: dt={pick(dt):.6g}, a={pick(a):.6g}, b={pick(b):.6g}, "
            f"degree={pick(np.asarray(n) - 1):.0f}, |w - threshold|={pick(np.abs(dev)):.6g} "
            f"gives stay probability {float(p_stay[i]):.6g}"
        )
    p_stay = np.maximum(p_stay, 0.0)
    shape = np.broadcast_shapes(p_step.shape, p_stay.shape)
    return tuple(np.broadcast_to(x, shape) for x in (p_step, p_stay, p_die, p_spawn))


def max_time_step(energies: np.ndarray, threshold: float, a: float, b: float, n: int) -> float:
    """Largest ``dt`` whose worst-case stay probability is zero."""
    rate = a * (n - 1) + b * float(np.abs(energies - threshold).max())
    return np.inf if rate == 0 else 1.0 / rate


@dataclass
class WalkerEnsemble:
    states: np.ndarray
    energies: np.ndarray
    nominal_size: int
    energy_offset: float = 0.0

    @property
    def size(self) -> int:
        return self.states.shape[0]


def ssmc_step(ens: WalkerEnsemble, s: float, schedule: Schedule, problem, ledger: QueryLedger,
              rng: np.random.Generator, dt_fraction: float = 0.5, gain: float = 0.1,
              tracker: BestTracker | None = None, dt: float | None = None,
              controller: str = "proportional") -> WalkerEnsemble:
    """Advance every walker one time step and update the energy offset.

    ``dt`` defaults to ``dt_fraction`` times the largest admissible step.
    """
    if ens.size == 0:
        raise ExtinctionError("no walkers left", step=-1)
    n = problem.n
    a, b = schedule(s)
    threshold = float(ens.energies.mean()) - ens.energy_offset
    if dt is None:
        dt = dt_fraction * max_time_step(ens.energies, threshold, a, b, n)
        if not np.isfinite(dt):
            dt = 1.0
    p_step, _, p_die, p_spawn = transition_probabilities(ens.energies, threshold, a, b, dt, n)

    count = ens.size
    u = rng.random(count)
    k = rng.integers(0, max(n - 1, 1), size=count)
    step = u < p_step
    die = ~step & (u < p_step + p_die)
    spawn = ~step & ~die & (u < p_step + p_die + p_spawn)

    states = ens.states.copy()
    energies = ens.energies.copy()
    if step.any() and n > 1:
        movers = states[step]
        new_e = problem.batch_swap_cost(movers, k[step], energies[step])
        swap_rows(movers, k[step])
        ledger.record(movers)
        if tracker is not None:
            tracker.update(movers, new_e)
        states[step] = movers
        energies[step] = new_e

    keep = np.where(die, 0, np.where(spawn, 2, 1))
    idx = np.repeat(np.arange(count), keep)
    out = WalkerEnsemble(states[idx], energies[idx], ens.nominal_size, ens.energy_offset)
    if out.size:
        spread = float(out.energies.max() - out.energies.min())
        correction = gain * spread * (out.size - out.nominal_size) / out.nominal_size
        if controller == "integral":
            out.energy_offset += correction
        else:
            out.energy_offset = correction
    return out


@dataclass(frozen=True)
class SsmcConfig:
    walkers: int = 500
    # None -> steps_per_stop * n
    steps: int | None = None
    steps_per_stop: int = 100
    dt_fraction: float = 0.5
    gain: float = 0.1
    schedule: str = "linear"
    controller: str = "proportional"
    seed: int = 0

    def __post_init__(self):
        if self.walkers < 1:
            raise ConfigError("walkers must be >= 1")
        if self.steps is not None and self.steps < 2:
            raise ConfigError("steps must be >= 2")
        if self.steps_per_stop < 1:
            raise ConfigError("steps_per_stop must be >= 1")
        if not 0 < self.dt_fraction <= 1:
            raise ConfigError("dt_fraction must lie in (0, 1]")
        if self.gain < 0:
            raise ConfigError("gain must be non-negative")
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"unknown controller {self.controller!r}; choose from {CONTROLLERS}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}; choose from {sorted(SCHEDULES)}")

    def step_count(self, n: int) -> int:
        return self.steps if self.steps is not None else max(2, self.steps_per_stop * n)


def run_ssmc(problem, config: SsmcConfig = SsmcConfig()) -> SolverReport:
    n = problem.n
    ledger = QueryLedger(n)
    rng = make_rng(config.seed, 2)
    schedule = SCHEDULES[config.schedule]
    steps = config.step_count(n)

    states = random_permutations(n, config.walkers, rng)
    energies = problem.batch_cost(states)
    ledger.record(states)
    tracker = BestTracker()
    tracker.update(states, energies)
    ens = WalkerEnsemble(states, energies, config.walkers)

    trace = []
    walker_trace = []
    grid = np.linspace(0.0, 1.0, steps)
    for j, s in enumerate(grid):
        walker_trace.append({"s": float(s), "count": ens.size,
                             "mean_energy": float(ens.energies.mean()),
                             "offset": float(ens.energy_offset)})
        ens = ssmc_step(ens, float(s), schedule, problem, ledger, rng,
                        config.dt_fraction, config.gain, tracker, controller=config.controller)
        trace.append({"round": j + 1, "best": tracker.energy})
        if ens.size == 0:
            report = SolverReport(tracker.route, tracker.energy, ledger, j + 1, trace,
                                  {"walker_trace": walker_trace}, status="extinct")
            raise ExtinctionError(f"all walkers died at step {j + 1} (s={s:.4g})",
                                  step=j + 1, report=report)

    return SolverReport(tracker.route, tracker.energy, ledger, steps, trace,
                        {"walker_trace": walker_trace})
