"""Exact expected AoI for fixed schedules and numeric regret bounds.

Oracle convention: for a schedule ``k(1..T)``, ``exact_expected_aoi(t)`` is the
expected age right after the slot-``t`` transmission attempt, i.e. the age seen
at the start of slot ``t + 1``.  Thus

    P(a(t) > tau) = prod_{i=0}^{tau-1} (1 - mu_{k(t-i)}),

and every slot ``<= 0`` uses the ``pre_history`` channel, whose geometric tail
is summed in closed form.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .env import Instance


class BoundError(ValueError):
    """A requested bound is undefined or non-finite for the instance."""


@dataclass(frozen=True)
class FixedSchedule:
    channels: tuple[int, ...]
    pre_history: int | None = None  # None means k*

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))

    def __len__(self):
        return len(self.channels)

    def validate(self, instance: Instance) -> int:
        for c in self.channels:
            if not 0 <= c < instance.K:
                raise ValueError(f"channel {c} invalid for K={instance.K}")
        pre = instance.k_star if self.pre_history is None else self.pre_history
        if not 0 <= pre < instance.K:
            raise ValueError(f"pre-history channel {pre} invalid for K={instance.K}")
        if instance.mu[pre] <= 0.0:
            raise ValueError("pre-history channel has zero success probability; tail diverges")
        return pre


def exact_expected_aoi(instance: Instance, schedule: FixedSchedule, t: int) -> float:
    """E[a(t)] for ``1 <= t <= len(schedule)``, with no truncation."""
    if not 1 <= t <= len(schedule):
        raise ValueError(f"slot {t} outside 1..{len(schedule)}")
    pre = schedule.validate(instance)
    mu = instance.mu
    total = 0.0
    surv = 1.0  # P(a(t) > tau) for the current tau
    for i in range(t):
        total += surv
        surv *= 1.0 - mu[schedule.channels[t - 1 - i]]
    return total + surv / mu[pre]


def exact_cumulative_aoi(instance: Instance, schedule: FixedSchedule) -> float:
    return math.fsum(exact_expected_aoi(instance, schedule, t)
                     for t in range(1, len(schedule) + 1))


def suboptimal_uses(schedule: FixedSchedule, instance: Instance) -> int:
    return sum(1 for c in schedule.channels if c != instance.k_star)


def worsen_suboptimal(schedule: FixedSchedule, instance: Instance) -> FixedSchedule:
    """Replace every sub-optimal slot by the worst channel."""
    ks, w = instance.k_star, instance.worst
    return FixedSchedule(tuple(c if c == ks else w for c in schedule.channels),
                         schedule.pre_history)


def cluster_worst_first(schedule: FixedSchedule, instance: Instance) -> FixedSchedule:
    """Worst channel for the first N slots, the optimal channel afterwards."""
    n = suboptimal_uses(schedule, instance)
    T = len(schedule)
    return FixedSchedule((instance.worst,) * n + (instance.k_star,) * (T - n),
                         schedule.pre_history)


def lemma5_bound(instance: Instance, T: int, n_suboptimal: float) -> float:
    """Cumulative-AoI ceiling for a schedule with ``n_suboptimal`` bad slots."""
    ms, mn = instance.mu_star, instance.mu_min
    return T / ms + (1 - ms) / (ms * mn) + (1 / mn - 1 / ms) * n_suboptimal


def bernoulli_kl(p: float, q: float) -> float:
    """KL(Ber(p) || Ber(q)) in nats; ``inf`` when q sits on a boundary p does not."""
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("KL arguments must be probabilities")

    def term(a, b):
        if a == 0.0:
            return 0.0
        if b == 0.0:
            return math.inf
        return a * math.log(a / b)

    return term(p, q) + term(1.0 - p, 1.0 - q)


@dataclass(frozen=True)
class BoundParams:
    alpha: float = 0.5
    C: float = 1.0
    t0: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.C > 0.0:
            raise ValueError("C must be positive")
        if not self.t0 >= 1.0:
            raise ValueError("t0 must be >= 1")


@dataclass
class BoundReport:
    horizon: int
    lower_bound: float
    ucb_upper: float
    ts_upper_shape: float
    q_ucb_upper: float
    q_ts_upper: float
    q_heuristic_term: float
    counts_upper: float | None
    constants_used: BoundParams
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def linear_bound(instance: Instance, T: int) -> float:
    return (1 / instance.mu_min - 1 / instance.mu_star) * T


def kl_constant(instance: Instance) -> float:
    """D(mu) = Delta / KL(mu_min, (mu* + 1) / 2)."""
    if instance.delta <= 0.0:
        raise BoundError("Delta = 0: the optimal channel is not unique")
    kl = bernoulli_kl(instance.mu_min, (instance.mu_star + 1) / 2)
    if not math.isfinite(kl) or kl == 0.0:
        raise BoundError(f"KL(mu_min, (mu*+1)/2) = {kl}: lower bound undefined")
    return instance.delta / kl


def lower_bound(instance: Instance, T: int, params: BoundParams) -> float:
    K, ms = instance.K, instance.mu_star
    D = kl_constant(instance)
    return (K - 1) * D / ms * ((1 - params.alpha) * math.log(T) - math.log(4 * K * params.C))


def ucb_upper(instance: Instance, T: int) -> float:
    if T <= instance.K:
        return linear_bound(instance, T)
    if instance.delta <= 0.0:
        raise BoundError("Delta = 0: UCB bound undefined")
    ms, mn, K = instance.mu_star, instance.mu_min, instance.K
    sub = (K - 1) * (32 * math.log(T) / instance.delta ** 2 + 1 + math.pi ** 2 / 3)
    return (1 - ms) / (ms * mn) + (1 / mn - 1 / ms) * sub


def ts_upper_shape(instance: Instance, T: int) -> float:
    """Constant-free TS shape: additive term plus (1/mu_min - 1/mu*) K log T."""
    if T <= instance.K:
        return linear_bound(instance, T)
    ms, mn = instance.mu_star, instance.mu_min
    return (1 - ms) / (ms * mn) + (1 / mn - 1 / ms) * instance.K * math.log(T)


def q_policy_upper(instance: Instance, T: int, t0: float) -> tuple[float, float]:
    """Q-UCB / Q-TS bound and the O(K/T^2) term taken with unit constant."""
    if T <= t0:
        return linear_bound(instance, T), 0.0
    ms, mn, K = instance.mu_star, instance.mu_min, instance.K
    c = 0.0 if ms >= 1.0 else -1.0 / math.log(1.0 - ms)
    lt = math.log(T)
    heuristic = K / T ** 2
    return (c * lt + 1 + c * K * lt ** 4 + heuristic) / mn, heuristic / mn


def eval_bounds(instance: Instance, horizon: int, params: BoundParams | None = None,
                counts: float | None = None) -> BoundReport:
    """Evaluate every bound at ``horizon``.

    ``counts`` is an optional expected number of sub-optimal slots; when given,
    the report also carries the regret ceiling it implies.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    params = params or BoundParams()
    T = horizon
    q, heur = q_policy_upper(instance, T, params.t0)
    counts_upper = None
    if counts is not None:
        counts_upper = lemma5_bound(instance, T, counts) - T / instance.mu_star
    return BoundReport(
        horizon=T,
        lower_bound=lower_bound(instance, T, params),
        ucb_upper=ucb_upper(instance, T),
        ts_upper_shape=ts_upper_shape(instance, T),
        q_ucb_upper=q,
        q_ts_upper=q,
        q_heuristic_term=heur,
        counts_upper=counts_upper,
        constants_used=params,
        notes=[
            "ts_upper_shape omits the unknown constant of the O(K log T) term",
            "q bounds include O(K/T^2) with unit constant (q_heuristic_term)",
            "alpha, C and t0 are user inputs",
        ],
    )
