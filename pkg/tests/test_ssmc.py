import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import flat_tsp
from permqio.errors import ConfigError, ExtinctionError
from permqio.oracle import QueryLedger, brute_force
from permqio.perm import make_rng, random_permutations
from permqio.problems import generate_espdp
from permqio.ssmc import (SsmcConfig, WalkerEnsemble, linear_schedule, max_time_step,
                          quadratic_schedule, run_ssmc, ssmc_step, transition_probabilities)


def test_worked_example():
    p_step, p_stay, p_die, p_spawn = transition_probabilities(2.0, 0.0, a=1, b=1, dt=0.01, n=5)
    assert float(p_step) == pytest.approx(0.04)
    assert float(p_die) == pytest.approx(0.02)
    assert float(p_stay) == pytest.approx(0.94)
    assert float(p_spawn) == 0.0


def test_at_threshold_only_diffusion():
    p_step, _, p_die, p_spawn = transition_probabilities(3.0, 3.0, a=0.7, b=2.0, dt=0.05, n=6)
    assert float(p_die) == float(p_spawn) == 0.0
    assert float(p_step) == pytest.approx(0.7 * 0.05 * 5)


def test_pure_diffusion_at_schedule_start():
    a, b = linear_schedule(0.0)
    assert (a, b) == (1.0, 0.0)
    _, _, p_die, p_spawn = transition_probabilities(np.array([0.0, 5.0, 100.0]), 20.0, a, b, 0.1, 4)
    assert np.all(p_die == 0) and np.all(p_spawn == 0)


def test_below_threshold_spawns():
    _, _, p_die, p_spawn = transition_probabilities(-1.0, 0.0, a=0.0, b=1.0, dt=0.1, n=3)
    assert float(p_die) == 0.0 and float(p_spawn) == pytest.approx(0.1)


def test_guard_violation_names_magnitudes():
    with pytest.raises(ConfigError, match=r"dt=0\.5.*\|w - threshold\|=10"):
        transition_probabilities(np.array([0.0, 10.0]), 0.0, a=1.0, b=1.0, dt=0.5, n=4)


def test_probabilities_valid_over_1e6_tuples():
    rng = make_rng(77)
    size = 1_000_000
    a = rng.random(size)
    b = rng.random(size)
    n = rng.integers(2, 16, size=size)
    dev = rng.uniform(-50, 50, size=size)
    dt = rng.random(size) / (a * (n - 1) + b * np.abs(dev))
    probs = np.stack(transition_probabilities(dev, 0.0, a, b, dt, n))
    assert probs.shape == (4, size)
    assert np.all((probs >= 0) & (probs <= 1))
    np.testing.assert_allclose(probs.sum(0), 1.0, atol=1e-12)
    # a walker either dies or spawns, never both
    assert np.all((probs[2] == 0) | (probs[3] == 0))


@given(st.floats(0, 1), st.floats(0, 1), st.floats(-100, 100), st.integers(2, 20), st.floats(0, 1))
def test_probabilities_valid_under_guard(a, b, dev, n, frac):
    rate = a * (n - 1) + b * abs(dev)
    dt = frac / rate if rate > 0 else 1.0
    probs = [float(x) for x in transition_probabilities(dev, 0.0, a, b, dt, n)]
    assert all(0 <= p <= 1 for p in probs)
    assert sum(probs) == pytest.approx(1.0, abs=1e-12)


def test_max_time_step_zeroes_worst_stay():
    e = np.array([1.0, 4.0, 9.0])
    dt = max_time_step(e, 4.0, 0.5, 2.0, 5)
    _, p_stay, _, _ = transition_probabilities(e, 4.0, 0.5, 2.0, dt, 5)
    assert float(p_stay.min()) == pytest.approx(0.0, abs=1e-12)


def test_schedules_run_from_diffusion_to_cost():
    for sched in (linear_schedule, quadratic_schedule):
        assert sched(0.0) == (1.0, 0.0) and sched(1.0) == (0.0, 1.0)


def _ensemble(inst, count, seed):
    rng = make_rng(seed)
    states = random_permutations(inst.n, count, rng)
    return WalkerEnsemble(states, inst.batch_cost(states), count), rng


def test_no_cost_channel_keeps_population_exact():
    inst = generate_espdp(7, make_rng(1))
    ens, rng = _ensemble(inst, 200, 0)
    no_cost = lambda s: (1.0 - s, 0.0)  # noqa: E731
    for s in np.linspace(0, 1, 200):
        ens = ssmc_step(ens, float(s), no_cost, inst, QueryLedger(7), rng)
        assert ens.size == 200


def test_flat_landscape_keeps_population_exact():
    inst = flat_tsp(6)
    ens, rng = _ensemble(inst, 150, 1)
    for s in np.linspace(0, 1, 100):
        ens = ssmc_step(ens, float(s), linear_schedule, inst, QueryLedger(6), rng)
        assert ens.size == 150


def test_spawned_walkers_copy_parent_exactly():
    inst = generate_espdp(6, make_rng(2))
    ens, rng = _ensemble(inst, 300, 2)
    cost_only = lambda s: (0.0, 1.0)  # noqa: E731
    parents = {(tuple(r), e) for r, e in zip(ens.states.tolist(), ens.energies.tolist())}
    new = ssmc_step(ens, 0.5, cost_only, inst, QueryLedger(6), rng)
    children = [(tuple(r), e) for r, e in zip(new.states.tolist(), new.energies.tolist())]
    assert all(c in parents for c in children)
    assert len(children) - len(set(children)) >= 1


def test_degree_used_for_stepping():
    inst = generate_espdp(9, make_rng(3))
    ens, rng = _ensemble(inst, 20_000, 3)
    ledger = QueryLedger(9)
    dt = 0.01
    ssmc_step(ens, 0.0, linear_schedule, inst, ledger, rng, dt=dt)
    expected = 1.0 * dt * (9 - 1)
    sigma = np.sqrt(expected * (1 - expected) / 20_000)
    assert abs(ledger.total / 20_000 - expected) <= 4 * sigma


def test_ledger_matches_log_and_is_monotone():
    inst = generate_espdp(6, make_rng(4))
    ens, rng = _ensemble(inst, 100, 4)
    ledger = QueryLedger(6, keep_log=True)
    last = (0, 0)
    for s in np.linspace(0, 1, 60):
        ens = ssmc_step(ens, float(s), linear_schedule, inst, ledger, rng)
        assert ledger.total >= last[0] and ledger.unique >= last[1]
        assert ledger.unique <= ledger.total
        last = (ledger.total, ledger.unique)
    logged = np.concatenate(ledger.log)
    assert len(logged) == ledger.total
    assert len({tuple(r) for r in logged.tolist()}) == ledger.unique
    np.testing.assert_allclose(ens.energies, inst.batch_cost(ens.states), rtol=1e-9)


def test_empty_ensemble_is_extinct():
    inst = flat_tsp(3)
    empty = WalkerEnsemble(np.empty((0, 3), dtype=np.int64), np.empty(0), 10)
    with pytest.raises(ExtinctionError):
        ssmc_step(empty, 0.5, linear_schedule, inst, QueryLedger(3), make_rng(0))


def test_run_reports_extinction_with_best_so_far(espdp6, monkeypatch):
    real = ssmc_step

    def kill_after_five(ens, s, *args, **kwargs):
        out = real(ens, s, *args, **kwargs)
        if len(calls) >= 5:
            out = WalkerEnsemble(out.states[:0], out.energies[:0], out.nominal_size)
        calls.append(s)
        return out

    calls = []
    monkeypatch.setattr("permqio.ssmc.ssmc_step", kill_after_five)
    with pytest.raises(ExtinctionError) as info:
        run_ssmc(espdp6, SsmcConfig(walkers=50, seed=0))
    assert info.value.step == 6
    assert info.value.report.status == "extinct"
    assert sorted(info.value.report.best_route) == list(range(1, 7))


def test_config_validation():
    for bad in [dict(walkers=0), dict(steps=1), dict(dt_fraction=0.0), dict(dt_fraction=1.5),
                dict(gain=-1.0), dict(schedule="cubic"), dict(controller="pid")]:
        with pytest.raises(ConfigError):
            SsmcConfig(**bad)
    assert SsmcConfig().step_count(7) == 700
    assert SsmcConfig(steps=50).step_count(7) == 50


@pytest.mark.parametrize("seed", range(5))
def test_walker_count_stays_near_nominal(espdp6, seed):
    report = run_ssmc(espdp6, SsmcConfig(seed=seed))
    counts = [t["count"] for t in report.extra["walker_trace"]]
    assert 250 <= min(counts) and max(counts) <= 1000


def test_mean_energy_falls_over_run():
    drops = 0
    for seed in range(50):
        inst = generate_espdp(6, make_rng(seed, 6))
        trace = run_ssmc(inst, SsmcConfig(walkers=100, seed=seed)).extra["walker_trace"]
        drops += trace[-1]["mean_energy"] <= trace[0]["mean_energy"]
    assert drops == 50


def test_integral_controller_available(espdp6):
    report = run_ssmc(espdp6, SsmcConfig(controller="integral", walkers=100, seed=1, steps=100))
    assert report.rounds == 100


def test_run_report_shape(espdp6):
    report = run_ssmc(espdp6, SsmcConfig(walkers=100, seed=2))
    assert report.best_energy == pytest.approx(espdp6.cost(report.best_route), rel=1e-9)
    trace = report.extra["walker_trace"]
    assert trace[0]["s"] == 0.0 and trace[-1]["s"] == 1.0 and len(trace) == 600
    bests = [t["best"] for t in report.trace]
    assert all(x >= y for x, y in zip(bests, bests[1:]))


def test_fixed_seed_is_deterministic(espdp6):
    cfg = SsmcConfig(walkers=100, seed=5)
    assert run_ssmc(espdp6, cfg).to_json() == run_ssmc(espdp6, cfg).to_json()


def test_finds_minimum_on_n6(espdp6):
    exact = brute_force(espdp6)
    hits = sum(run_ssmc(espdp6, SsmcConfig(seed=s)).best_energy <= exact.min_cost * (1 + 1e-9)
               for s in range(50))
    assert hits >= 43
