"""Scheduling policies behind one decision interface.

Every ``*_decide`` function looks at a :class:`PolicyState` and the age
observed at the start of the current slot, and returns a :class:`Decision`.
Channels are 0-based.  Argmax ties always resolve to the lowest index.

Random draws happen in a fixed order so that the compiled kernel, which
replays the same sequence of ``random()``/``beta()`` calls on the same bit
generator, makes identical decisions:

* Q-type policies draw the exploration-gate uniform first, then one more
  uniform to pick the channel if they explore.
* Posterior sampling draws one Beta variate per channel, in channel order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

POLICY_NAMES = (
    "ucb", "ts", "q-ucb", "q-ts",
    "aa-ucb", "aa-ts", "aa-q-ucb", "aa-q-ts",
    "genie", "uniform-random",
)
PAPER_POLICIES = POLICY_NAMES[:8]
POLICY_CODES = {name: i for i, name in enumerate(POLICY_NAMES)}

# agnostic counterpart of each AoI-aware policy
AA_COUNTERPART = {"aa-ucb": "ucb", "aa-ts": "ts", "aa-q-ucb": "q-ucb", "aa-q-ts": "q-ts"}

FORCED_INIT, EXPLORE, EXPLOIT = "forced-init", "explore", "exploit"
BRANCHES = (FORCED_INIT, EXPLORE, EXPLOIT)

DEFAULT_THR = 2.0


@dataclass
class PolicyState:
    """Learning state shared by all policies.

    Success counts are kept as integers; ``mu_hat`` is derived from them so the
    running-mean update stays exact.
    """

    K: int
    counts: np.ndarray = field(default=None)
    successes: np.ndarray = field(default=None)
    t: int = 1

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.K, dtype=np.int64)
        if self.successes is None:
            self.successes = np.zeros(self.K, dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.successes = np.asarray(self.successes, dtype=np.int64)
        if self.counts.shape != (self.K,) or self.successes.shape != (self.K,):
            raise ValueError("counts and successes must have length K")
        if np.any(self.successes > self.counts) or np.any(self.successes < 0):
            raise ValueError("success counts must lie in [0, counts]")

    @classmethod
    def from_estimates(cls, mu_hat, counts, t=None) -> "PolicyState":
        counts = np.asarray(counts, dtype=np.int64)
        succ = np.rint(np.asarray(mu_hat, dtype=float) * counts).astype(np.int64)
        return cls(len(counts), counts, succ, int(counts.sum()) + 1 if t is None else t)

    @property
    def mu_hat(self) -> np.ndarray:
        out = np.zeros(self.K)
        np.divide(self.successes, self.counts, out=out, where=self.counts > 0)
        return out

    @property
    def alpha(self) -> np.ndarray:
        return self.successes + 1

    @property
    def beta(self) -> np.ndarray:
        return self.counts - self.successes + 1

    def copy(self) -> "PolicyState":
        return PolicyState(self.K, self.counts.copy(), self.successes.copy(), self.t)


@dataclass(frozen=True)
class Decision:
    channel: int
    branch: str


def update(state: PolicyState, channel: int, reward_bit: int) -> PolicyState:
    """Record the outcome of the chosen channel and advance the slot counter."""
    if not 0 <= channel < state.K:
        raise ValueError(f"channel {channel} out of range for K={state.K}")
    if reward_bit not in (0, 1):
        raise ValueError("reward must be 0 or 1")
    state.counts[channel] += 1
    state.successes[channel] += reward_bit
    state.t += 1
    return state


def _argmax(values) -> int:
    best, arg = -math.inf, 0
    for k, v in enumerate(values):
        if v > best:
            best, arg = v, k
    return arg


def ucb_index(state: PolicyState) -> list[float]:
    lt = math.log(state.t)
    out = []
    for k in range(state.K):
        n = int(state.counts[k])
        if n == 0:
            out.append(math.inf)
        else:
            out.append(int(state.successes[k]) / n + math.sqrt(8.0 * lt / n))
    return out


def q_ucb_index(state: PolicyState) -> list[float]:
    lt = math.log(state.t)
    out = []
    for k in range(state.K):
        n = int(state.counts[k])
        if n == 0:
            out.append(math.inf)
        else:
            out.append(int(state.successes[k]) / n + math.sqrt(lt * lt / (2.0 * n)))
    return out


def explore_probability(K: int, t: int) -> float:
    """Forced-exploration probability ``min(1, 3 K log(t)^2 / t)``."""
    lt = math.log(t)
    return min(1.0, 3.0 * K * lt * lt / t)


def limit(state: PolicyState) -> float:
    """AoI threshold ``min_k (alpha_k + beta_k) / alpha_k``, a smoothed 1/mu_hat*."""
    best = math.inf
    for k in range(state.K):
        a = float(state.successes[k] + 1)
        b = float(state.counts[k] - state.successes[k] + 1)
        best = min(best, (a + b) / a)
    return best


def greedy_channel(state: PolicyState) -> int:
    """Argmax of mu_hat; exact ties go to the larger posterior mean, then lowest index.

    With plain lowest-index ties an uninformed state (all mu_hat = 0) keeps
    re-selecting channel 0 however often it has failed.
    """
    best, best_pm, arg = -1.0, -1.0, 0
    for k in range(state.K):
        n, s = int(state.counts[k]), int(state.successes[k])
        m = s / n if n > 0 else 0.0
        pm = (s + 1.0) / (n + 2.0)
        if m > best or (m == best and pm > best_pm):
            best, best_pm, arg = m, pm, k
    return arg


def _posterior_sample(state: PolicyState, rng: np.random.Generator) -> int:
    thetas = []
    for k in range(state.K):
        a = float(state.successes[k] + 1)
        b = float(state.counts[k] - state.successes[k] + 1)
        thetas.append(rng.beta(a, b))
    return _argmax(thetas)


def _uniform_channel(K: int, rng: np.random.Generator) -> int:
    return min(int(rng.random() * K), K - 1)


def ucb_decide(state: PolicyState, current_age: int = 1) -> Decision:
    if state.t <= state.K:
        return Decision(state.t - 1, FORCED_INIT)
    return Decision(_argmax(ucb_index(state)), EXPLOIT)


def ts_decide(state: PolicyState, current_age: int, rng: np.random.Generator) -> Decision:
    return Decision(_posterior_sample(state, rng), EXPLOIT)


def q_ucb_decide(state: PolicyState, current_age: int, rng: np.random.Generator) -> Decision:
    if rng.random() < explore_probability(state.K, state.t):
        return Decision(_uniform_channel(state.K, rng), EXPLORE)
    return Decision(_argmax(q_ucb_index(state)), EXPLOIT)


def q_ts_decide(state: PolicyState, current_age: int, rng: np.random.Generator) -> Decision:
    if rng.random() < explore_probability(state.K, state.t):
        return Decision(_uniform_channel(state.K, rng), EXPLORE)
    return Decision(_posterior_sample(state, rng), EXPLOIT)


def aa_ts_decide(state: PolicyState, current_age: int, rng: np.random.Generator,
                 limit_override: float | None = None) -> Decision:
    lim = limit(state) if limit_override is None else limit_override
    if current_age > lim:
        return Decision(greedy_channel(state), EXPLOIT)
    return Decision(_posterior_sample(state, rng), EXPLORE)


def aa_ucb_decide(state: PolicyState, current_age: int,
                  limit_override: float | None = None) -> Decision:
    if state.t <= state.K:
        return Decision(state.t - 1, FORCED_INIT)
    lim = limit(state) if limit_override is None else limit_override
    if current_age > lim:
        return Decision(greedy_channel(state), EXPLOIT)
    return Decision(_argmax(ucb_index(state)), EXPLORE)


def aa_q_ucb_decide(state: PolicyState, current_age: int, rng: np.random.Generator,
                    thr: float = DEFAULT_THR) -> Decision:
    # round-robin start, as in the AA-Q-UCB pseudocode (plain Q-UCB has none)
    if state.t <= state.K:
        return Decision(state.t - 1, FORCED_INIT)
    gate = rng.random() < explore_probability(state.K, state.t)
    if gate and current_age < thr:
        return Decision(_uniform_channel(state.K, rng), EXPLORE)
    return Decision(_argmax(q_ucb_index(state)), EXPLOIT)


def aa_q_ts_decide(state: PolicyState, current_age: int, rng: np.random.Generator,
                   thr: float = DEFAULT_THR) -> Decision:
    gate = rng.random() < explore_probability(state.K, state.t)
    if gate and current_age < thr:
        return Decision(_uniform_channel(state.K, rng), EXPLORE)
    return Decision(_posterior_sample(state, rng), EXPLOIT)


def genie_decide(state: PolicyState, current_age: int, k_star: int) -> Decision:
    return Decision(k_star, EXPLOIT)


def uniform_decide(state: PolicyState, current_age: int, rng: np.random.Generator) -> Decision:
    return Decision(_uniform_channel(state.K, rng), EXPLORE)


def decide(name: str, state: PolicyState, current_age: int, rng: np.random.Generator,
           *, k_star: int = 0, thr: float = DEFAULT_THR,
           limit_override: float | None = None) -> Decision:
    """Dispatch on the registry name."""
    if name == "ucb":
        return ucb_decide(state, current_age)
    if name == "ts":
        return ts_decide(state, current_age, rng)
    if name == "q-ucb":
        return q_ucb_decide(state, current_age, rng)
    if name == "q-ts":
        return q_ts_decide(state, current_age, rng)
    if name == "aa-ucb":
        return aa_ucb_decide(state, current_age, limit_override)
    if name == "aa-ts":
        return aa_ts_decide(state, current_age, rng, limit_override)
    if name == "aa-q-ucb":
        return aa_q_ucb_decide(state, current_age, rng, thr)
    if name == "aa-q-ts":
        return aa_q_ts_decide(state, current_age, rng, thr)
    if name == "genie":
        return genie_decide(state, current_age, k_star)
    if name == "uniform-random":
        return uniform_decide(state, current_age, rng)
    raise ValueError(f"unknown policy {name!r}; expected one of {', '.join(POLICY_NAMES)}")


def check_roster(names) -> tuple[str, ...]:
    names = tuple(names)
    if not names:
        raise ValueError("policy roster is empty")
    bad = [n for n in names if n not in POLICY_CODES]
    if bad:
        raise ValueError(f"unknown policies: {', '.join(bad)}")
    return names
