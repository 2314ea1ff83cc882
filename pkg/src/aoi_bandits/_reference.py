"""Pure-Python replication loop, used when the compiled kernel is unavailable.

It drives the decision functions in :mod:`aoi_bandits.policies` one slot at a
time and is the behavioural reference the kernel is tested against.
"""
from __future__ import annotations

import math

import numpy as np

from .env import EnvDraws
from .policies import BRANCHES, PolicyState, decide, update

_BRANCH_CODE = {b: i for i, b in enumerate(BRANCHES)}


def run_policy(mu: np.ndarray, k_star: int, name: str, draws: EnvDraws,
               rng: np.random.Generator, thr: float, limit_override: float | None):
    mu = [float(m) for m in mu]
    K = len(mu)
    T = draws.horizon
    u = draws.u
    chosen = np.empty(T, dtype=np.int32)
    aoi = np.empty(T, dtype=np.int64)
    branch = np.empty(T, dtype=np.int8)
    state = PolicyState(K)
    age = draws.init_age
    if limit_override is not None and math.isnan(limit_override):
        limit_override = None
    for i in range(T):
        aoi[i] = age
        d = decide(name, state, age, rng, k_star=k_star, thr=thr,
                   limit_override=limit_override)
        ch = d.channel
        draw = u[i] if draws.coupled else u[i, ch]
        ok = 1 if draw <= mu[ch] else 0
        update(state, ch, ok)
        chosen[i] = ch
        branch[i] = _BRANCH_CODE[d.branch]
        age = 1 if ok else age + 1
    return chosen, aoi, branch
