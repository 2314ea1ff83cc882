import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoi_bandits.env import (AoIState, Instance, age_path, draw_environment, draw_slot, genie_path,
                             init_age, replication_streams, run_genie, step, success_bits)
from aoi_bandits.policies import POLICY_NAMES
from aoi_bandits.simulate import simulate_replication

probs = st.floats(min_value=0.01, max_value=1.0)


def test_instance_derived_quantities():
    inst = Instance((0.2, 0.5, 0.5, 0.1))
    assert inst.K == 4
    assert inst.mu_star == 0.5 and inst.mu_min == 0.1
    assert inst.k_star == 1  # smallest maximiser
    assert inst.delta == 0.0
    assert Instance((0.2, 0.7, 0.5)).delta == pytest.approx(0.2)


@pytest.mark.parametrize("mu", [(), (0.0, 0.5), (1.2,), (-0.1,), (float("nan"),)])
def test_instance_rejects_bad_mu(mu):
    with pytest.raises(ValueError):
        Instance(mu)


@pytest.mark.parametrize("age, success, expected", [(5, False, 6), (7, True, 1), (1, False, 2)])
def test_step(age, success, expected):
    assert step(AoIState(age), success).age == expected


def test_age_must_be_positive():
    with pytest.raises(ValueError):
        AoIState(0)


class _FixedU:
    def __init__(self, u):
        self.u = u

    def random(self, size=None):
        return self.u if size is None else np.full(size, self.u)


@pytest.mark.parametrize("u, expected", [(0.2, [0, 1, 1]), (0.9, [0, 0, 0])])
def test_draw_slot_coupled_threshold(u, expected):
    bits = draw_slot(Instance((0.1, 0.3, 0.5)), _FixedU(u), coupled=True)
    assert bits.tolist() == expected


def test_draw_slot_independent_deterministic_channels():
    rng = np.random.default_rng(0)
    assert draw_slot(Instance((1.0, 1.0)), rng, coupled=False).tolist() == [1, 1]


@given(st.lists(probs, min_size=1, max_size=6), st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_coupling_monotone(mu, seed):
    inst = Instance(tuple(mu))
    bits = success_bits(inst, np.random.default_rng(seed).random(200), coupled=True)
    m = np.asarray(mu)
    for i in range(len(mu)):
        for j in range(len(mu)):
            if m[j] >= m[i]:
                assert np.all(bits[:, j] >= bits[:, i])


@pytest.mark.parametrize("coupled", [True, False])
def test_marginals_preserved(coupled):
    inst = Instance((0.1, 0.35, 0.8))
    N = 200_000
    u = np.random.default_rng(5).random((N,) if coupled else (N, inst.K))
    freq = success_bits(inst, u, coupled).mean(axis=0)
    sigma = np.sqrt(inst.as_array() * (1 - inst.as_array()) / N)
    assert np.all(np.abs(freq - inst.as_array()) <= 4 * sigma)


def test_init_age_modes():
    rng = np.random.default_rng(1)
    assert {init_age(Instance((0.3, 1.0)), rng).age for _ in range(100)} == {1}
    assert init_age(Instance((0.3, 0.4)), rng, "unit").age == 1
    with pytest.raises(ValueError):
        init_age(Instance((0.5,)), rng, "bogus")


def test_init_age_geometric_mean():
    # mean of Geometric(0.5) on {1, 2, ...} is 1 / 0.5
    rng = np.random.default_rng(2)
    draws = [init_age(Instance((0.5,)), rng).age for _ in range(10**6)]
    assert abs(np.mean(draws) - 2.0) < 0.01


def test_genie_certain_channel():
    rng = np.random.default_rng(3)
    assert np.all(run_genie(Instance((0.3, 1.0)), 500, rng) == 1)
    unit = run_genie(Instance((0.3, 1.0)), 500, rng, init_mode="unit")
    assert np.all(unit == 1)


def test_genie_mean_matches_inverse_mu_star():
    inst = Instance((0.2, 0.5))
    means = [run_genie(inst, 10_000, replication_streams(9, r, 0)).mean() for r in range(1000)]
    assert abs(np.mean(means) - 2.0) < 0.05


@given(st.integers(1, 20), st.lists(st.booleans(), min_size=1, max_size=60))
def test_age_path_matches_step(age0, success):
    state, expected = AoIState(age0), []
    for ok in success:
        expected.append(state.age)
        state = step(state, ok)
    assert age_path(age0, np.array(success)).tolist() == expected


@pytest.mark.parametrize("name", POLICY_NAMES)
def test_dominance_and_reset(name, backend):
    inst = Instance((0.15, 0.4, 0.65))
    for rep in range(3):
        tr = simulate_replication(inst, name, 2000, 17, rep, backend=backend)
        assert np.all(tr.aoi >= 1)
        assert np.all(tr.genie_aoi <= tr.aoi)
        # age resets to 1 exactly after a successful slot
        draws = draw_environment(inst, 2000, replication_streams(17, rep, 0))
        ok = draws.u <= inst.as_array()[tr.chosen]
        assert np.array_equal(tr.aoi[1:] == 1, ok[:-1])
        np.testing.assert_array_equal(tr.cum_regret, np.cumsum(tr.aoi - tr.genie_aoi))


def test_independent_mode_genie_uses_own_column():
    inst = Instance((0.3, 0.6))
    draws = draw_environment(inst, 50, np.random.default_rng(4), coupled=False)
    g = genie_path(inst, draws)
    assert np.array_equal(g, age_path(draws.init_age, draws.u[:, 1] <= 0.6))


def test_streams_are_order_independent():
    a = replication_streams(42, 7, 0).random(5)
    for r in range(7):
        replication_streams(42, r, 0).random(100)
    assert np.array_equal(a, replication_streams(42, 7, 0).random(5))
    assert not np.array_equal(a, replication_streams(42, 6, 0).random(5))


def test_determinism(backend):
    inst = Instance((0.2, 0.4, 0.6))
    a = simulate_replication(inst, "aa-ts", 3000, 5, 2, backend=backend)
    b = simulate_replication(inst, "aa-ts", 3000, 5, 2, backend=backend)
    for f in ("chosen", "aoi", "genie_aoi", "branch"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
