"""Channel model, AoI recurrence, genie baseline and random stream handling.

Time convention used by the simulator: ``aoi[t]`` is the age observed at the
start of slot ``t`` (the value a policy sees when it decides).  The outcome of
the slot-``t`` transmission determines ``aoi[t + 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INIT_MODES = ("geometric", "unit")
COUPLING_MODES = ("coupled", "independent")


@dataclass(frozen=True)
class Instance:
    """Channel success probabilities and the quantities derived from them."""

    mu: tuple[float, ...]

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        if len(mu) < 1:
            raise ValueError("an instance needs at least one channel")
        for m in mu:
            if not (0.0 < m <= 1.0) or m != m:
                raise ValueError(f"success probabilities must lie in (0, 1], got {m!r}")
        object.__setattr__(self, "mu", mu)

    @property
    def K(self) -> int:
        return len(self.mu)

    @property
    def mu_star(self) -> float:
        return max(self.mu)

    @property
    def mu_min(self) -> float:
        return min(self.mu)

    @property
    def k_star(self) -> int:
        # smallest index attaining the maximum
        return self.mu.index(self.mu_star)

    @property
    def delta(self) -> float:
        """Gap between the best channel and the best of the others (0 for K=1)."""
        if self.K == 1:
            return 0.0
        others = [m for k, m in enumerate(self.mu) if k != self.k_star]
        return self.mu_star - max(others)

    @property
    def worst(self) -> int:
        return self.mu.index(self.mu_min)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.mu, dtype=np.float64)


@dataclass
class AoIState:
    age: int = 1

    def __post_init__(self):
        if self.age < 1:
            raise ValueError(f"age must be >= 1, got {self.age}")


def step(state: AoIState, success: bool) -> AoIState:
    """Advance the age by one slot."""
    return AoIState(1 if success else state.age + 1)


def draw_slot(instance: Instance, rng: np.random.Generator, coupled: bool = True) -> np.ndarray:
    """Per-channel success bits for one slot.

    In coupled mode one uniform ``u`` is shared and channel ``k`` succeeds iff
    ``u <= mu_k``.  Otherwise each channel gets its own uniform.
    """
    mu = instance.as_array()
    if coupled:
        return (rng.random() <= mu).astype(np.int8)
    return (rng.random(instance.K) <= mu).astype(np.int8)


def success_bits(instance: Instance, u: np.ndarray, coupled: bool) -> np.ndarray:
    """Expand stored uniforms to a ``(T, K)`` matrix of success bits."""
    mu = instance.as_array()
    if coupled:
        return (u[:, None] <= mu[None, :]).astype(np.int8)
    return (u <= mu[None, :]).astype(np.int8)


def init_age(instance: Instance, rng: np.random.Generator, mode: str = "geometric") -> AoIState:
    """Initial age at slot 1.

    ``geometric`` draws from the genie's stationary law Geometric(mu*) on
    ``{1, 2, ...}``; ``unit`` starts from age 1.
    """
    if mode == "geometric":
        return AoIState(int(rng.geometric(instance.mu_star)))
    if mode == "unit":
        return AoIState(1)
    raise ValueError(f"unknown init mode {mode!r}; expected one of {INIT_MODES}")


@dataclass
class EnvDraws:
    """All environment randomness for one replication.

    ``u`` has shape ``(T,)`` in coupled mode and ``(T, K)`` otherwise.  The
    same draws are replayed for the genie and for every policy.
    """

    init_age: int
    u: np.ndarray
    coupled: bool

    @property
    def horizon(self) -> int:
        return self.u.shape[0]


def draw_environment(instance: Instance, horizon: int, rng: np.random.Generator,
                     coupled: bool = True, init_mode: str = "geometric") -> EnvDraws:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    age0 = init_age(instance, rng, init_mode).age
    shape = (horizon,) if coupled else (horizon, instance.K)
    return EnvDraws(age0, rng.random(shape), coupled)


@dataclass
class Trajectory:
    chosen: np.ndarray
    aoi: np.ndarray
    genie_aoi: np.ndarray
    branch: np.ndarray = field(repr=False)

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.aoi - self.genie_aoi)


def replication_streams(seed: int, rep: int, stream: int) -> np.random.Generator:
    """Generator for ``(seed, rep, stream)``.

    Streams are derived through ``SeedSequence`` spawn keys, so a replication's
    draws never depend on which other replications ran or in what order.
    Stream 0 is the environment; policies use ``1 + registry index``.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(rep, stream))
    return np.random.Generator(np.random.PCG64(ss))


def run_genie(instance: Instance, horizon: int, rng: np.random.Generator,
              coupled: bool = True, init_mode: str = "geometric") -> np.ndarray:
    """Genie AoI path: ``k*`` every slot, driven by freshly drawn environment."""
    draws = draw_environment(instance, horizon, rng, coupled, init_mode)
    return genie_path(instance, draws)


def genie_path(instance: Instance, draws: EnvDraws) -> np.ndarray:
    if draws.coupled:
        ok = draws.u <= instance.mu_star
    else:
        ok = draws.u[:, instance.k_star] <= instance.mu_star
    return age_path(draws.init_age, ok)


def age_path(age0: int, success: np.ndarray) -> np.ndarray:
    """Ages at the start of each slot given per-slot success flags."""
    T = len(success)
    aoi = np.empty(T, dtype=np.int64)
    # slots since the most recent success strictly before t, else age0 + t - 1
    idx = np.arange(T)
    last = np.where(success, idx, -1)
    last = np.maximum.accumulate(last)
    aoi[0] = age0
    if T > 1:
        prev = last[:-1]
        aoi[1:] = np.where(prev >= 0, idx[1:] - prev, age0 + idx[1:])
    return aoi
