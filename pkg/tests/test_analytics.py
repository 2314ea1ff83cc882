import math
from fractions import Fraction
from itertools import product

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoi_bandits import analytics as A
from aoi_bandits.env import Instance

# Path enumeration with exact rationals for mu=(0.9,0.1), schedule (0,1,0),
# pre-history 0: per-slot values 10/9, 2, 6/5.
ENUMERATED_091 = Fraction(194, 45)
# KL(Ber(0.1) || Ber(0.55)) at 40 significant digits via mpmath.
KL_01_055 = 0.4533576532801082550110377636616636380933


def enumerate_expected_aoi(mu, channels, pre):
    """E[age after slot t] by summing over all 2^t success paths."""
    out = []
    for t in range(1, len(channels) + 1):
        e = 0.0
        for bits in product((0, 1), repeat=t):
            p = 1.0
            for c, b in zip(channels, bits):
                p *= mu[c] if b else 1.0 - mu[c]
            hits = [i for i, b in enumerate(bits) if b]
            age = t - hits[-1] if hits else t + 1.0 / mu[pre]
            e += p * age
        out.append(e)
    return out


# ---------------------------------------------------------------- oracle

def test_all_optimal_is_stationary():
    inst = Instance((0.2, 0.5))
    sched = A.FixedSchedule((1,) * 12)
    for t in range(1, 13):
        assert A.exact_expected_aoi(inst, sched, t) == pytest.approx(2.0, abs=1e-12)


def test_single_slot():
    assert A.exact_expected_aoi(Instance((0.5,)), A.FixedSchedule((0,), 0), 1) == 2.0


def test_two_slot_hand_value():
    inst = Instance((0.8, 0.2))
    v = A.exact_expected_aoi(inst, A.FixedSchedule((1, 0), pre_history=0), 2)
    assert v == pytest.approx(1 + (1 - 0.8) * (1 + (1 - 0.2) / 0.8), abs=1e-12)
    assert v == pytest.approx(1.4, abs=1e-12)


def test_two_slot_monte_carlo():
    # age after slot 2: 1 on a slot-2 success, 2 if only slot 1 succeeds,
    # else 2 + a Geometric(0.8) pre-history age
    rng = np.random.default_rng(0)
    n = 10**6
    s2 = rng.random(n) <= 0.8
    s1 = rng.random(n) <= 0.2
    age = np.where(s2, 1, np.where(s1, 2, 2 + rng.geometric(0.8, n)))
    assert abs(age.mean() - 1.4) < 4 * age.std() / math.sqrt(n)


def test_cumulative_examples():
    inst = Instance((0.5, 0.3))
    assert A.exact_cumulative_aoi(inst, A.FixedSchedule((0,) * 10)) == pytest.approx(20.0, abs=1e-12)
    assert A.exact_cumulative_aoi(inst, A.FixedSchedule(())) == 0


def test_cumulative_matches_enumeration_value():
    inst = Instance((0.9, 0.1))
    v = A.exact_cumulative_aoi(inst, A.FixedSchedule((0, 1, 0), 0))
    assert round(v, 12) == round(float(ENUMERATED_091), 12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=3),
       st.data())
def test_oracle_matches_enumeration(mu, data):
    K = len(mu)
    chans = data.draw(st.lists(st.integers(0, K - 1), max_size=10))
    pre = data.draw(st.integers(0, K - 1))
    inst = Instance(tuple(mu))
    sched = A.FixedSchedule(tuple(chans), pre)
    ref = enumerate_expected_aoi(inst.mu, chans, pre)
    for t in range(1, len(chans) + 1):
        assert A.exact_expected_aoi(inst, sched, t) == pytest.approx(ref[t - 1], abs=1e-9)


@given(st.floats(0.01, 1.0), st.integers(1, 40))
def test_genie_identity(mu_star, T):
    inst = Instance((mu_star / 2, mu_star))
    sched = A.FixedSchedule((1,) * T)
    for t in (1, T):
        assert abs(A.exact_expected_aoi(inst, sched, t) - 1 / mu_star) <= 1e-12 / mu_star


def test_oracle_errors():
    inst = Instance((0.5, 0.3))
    with pytest.raises(ValueError):
        A.exact_expected_aoi(inst, A.FixedSchedule((0, 1)), 3)
    with pytest.raises(ValueError):
        A.exact_expected_aoi(inst, A.FixedSchedule((0, 2)), 1)
    with pytest.raises(ValueError):
        A.exact_expected_aoi(inst, A.FixedSchedule((0,), pre_history=5), 1)


# ---------------------------------------------------------------- schedule transforms

def test_worsen_and_cluster():
    inst = Instance((0.9, 0.5, 0.1))
    s = A.FixedSchedule((0, 1, 2))
    a = A.worsen_suboptimal(s, inst)
    assert a.channels == (0, 2, 2)
    assert A.suboptimal_uses(a, inst) == A.suboptimal_uses(s, inst) == 2
    assert A.cluster_worst_first(a, inst).channels == (2, 2, 0)
    opt = A.FixedSchedule((0, 0, 0))
    assert A.worsen_suboptimal(opt, inst) == opt
    assert A.cluster_worst_first(opt, inst) == opt


schedules = st.integers(1, 4).flatmap(lambda K: st.tuples(
    st.lists(st.floats(0.01, 1.0), min_size=K, max_size=K),
    st.lists(st.integers(0, K - 1), min_size=1, max_size=8)))


@settings(max_examples=300, deadline=None)
@given(schedules)
def test_exchange_chain_and_ceiling(case):
    mu, chans = case
    inst = Instance(tuple(mu))
    s = A.FixedSchedule(tuple(chans))
    a = A.worsen_suboptimal(s, inst)
    b = A.cluster_worst_first(a, inst)
    v, va, vb = (A.exact_cumulative_aoi(inst, x) for x in (s, a, b))
    assert v <= va + 1e-9
    assert va <= vb + 1e-9
    n = A.suboptimal_uses(s, inst)
    assert v <= A.lemma5_bound(inst, len(s), n) + 1e-9
    # clustered form: no optimal slot before a worst slot
    seen_opt = False
    for c in b.channels:
        seen_opt |= c == inst.k_star
        assert not (seen_opt and c != inst.k_star)


# ---------------------------------------------------------------- bounds

@given(st.floats(0.0, 1.0))
def test_kl_self_is_zero(p):
    assert A.bernoulli_kl(p, p) == pytest.approx(0.0, abs=1e-15)


def test_kl_reference_value():
    assert A.bernoulli_kl(0.1, 0.55) == pytest.approx(KL_01_055, rel=1e-14)
    mpmath.mp.dps = 30
    f = lambda x: mpmath.mpf(0.1) * mpmath.log(mpmath.mpf(0.1) / x) \
        + mpmath.mpf(0.9) * mpmath.log(mpmath.mpf(0.9) / (1 - x))
    assert float(f(mpmath.mpf(0.55))) == pytest.approx(A.bernoulli_kl(0.1, 0.55), rel=1e-14)


def test_kl_boundaries():
    assert A.bernoulli_kl(0.2, 1.0) == math.inf
    assert A.bernoulli_kl(1.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        A.bernoulli_kl(1.2, 0.5)


def test_ucb_linear_branch():
    assert A.ucb_upper(Instance((0.2, 0.5)), 1) == pytest.approx(3.0, rel=1e-12)


def test_ucb_log_branch_closed_form():
    inst = Instance((0.1, 0.15, 0.2, 0.25, 0.3))
    T = 10_000
    want = (0.7 / (0.3 * 0.1)) + (10 - 1 / 0.3) * 4 * (32 * math.log(T) / 0.05 ** 2 + 1 + math.pi ** 2 / 3)
    assert A.ucb_upper(inst, T) == pytest.approx(want, rel=1e-12)


def test_lower_bound_closed_form():
    inst = Instance((0.2, 0.5))
    p = A.BoundParams(alpha=0.5, C=1.0)
    D = 0.3 / KL_02_075
    want = D / 0.5 * (0.5 * math.log(1000) - math.log(8))
    assert A.lower_bound(inst, 1000, p) == pytest.approx(want, rel=1e-12)


KL_02_075 = 0.2 * math.log(0.2 / 0.75) + 0.8 * math.log(0.8 / 0.25)


def test_q_bound_form():
    inst = Instance((0.2, 0.5))
    T = 500
    c = -1 / math.log(0.5)
    lt = math.log(T)
    q, h = A.q_policy_upper(inst, T, 1.0)
    assert q == pytest.approx((c * lt + 1 + c * 2 * lt ** 4 + 2 / T ** 2) / 0.2, rel=1e-12)
    assert h == pytest.approx(2 / T ** 2 / 0.2, rel=1e-12)
    assert A.q_policy_upper(inst, 5, 10.0)[0] == pytest.approx(3.0 * 5)


def test_bound_errors():
    with pytest.raises(A.BoundError):
        A.eval_bounds(Instance((0.4, 0.4)), 100)
    with pytest.raises(A.BoundError):
        A.eval_bounds(Instance((0.3, 1.0)), 100)  # (mu*+1)/2 = 1
    with pytest.raises(A.BoundError):
        A.eval_bounds(Instance((0.7,)), 100)
    with pytest.raises(ValueError):
        A.BoundParams(alpha=1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=2, max_size=8, unique=True),
       st.integers(1, 10**6))
def test_bounds_finite(mu, T):
    inst = Instance(tuple(mu))
    if inst.delta <= 0:
        return
    r = A.eval_bounds(inst, T)
    for k in ("lower_bound", "ucb_upper", "ts_upper_shape", "q_ucb_upper", "q_ts_upper"):
        assert math.isfinite(getattr(r, k))
    assert r.to_dict()["constants_used"] == {"alpha": 0.5, "C": 1.0, "t0": 1.0}


def test_counts_ceiling():
    inst = Instance((0.2, 0.5))
    r = A.eval_bounds(inst, 100, counts=10)
    assert r.counts_upper == pytest.approx(0.5 / 0.1 + 3.0 * 10)
