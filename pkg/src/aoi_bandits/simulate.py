"""Backend selection and single-replication simulation.

The compiled kernel is used when it imported cleanly; ``AOI_LAB_BACKEND=python``
forces the pure-Python loop.  Both consume the policy stream identically, so
they produce the same trajectories.
"""
from __future__ import annotations

import math
import os

import numpy as np

from . import _reference
from .env import EnvDraws, Instance, Trajectory, draw_environment, genie_path, replication_streams
from .policies import DEFAULT_THR, POLICY_CODES

try:
    from . import _kernel
except ImportError:  # extension not built
    _kernel = None

BACKENDS = ("cython", "python")


def available_backends() -> tuple[str, ...]:
    return BACKENDS if _kernel is not None else ("python",)


def default_backend() -> str:
    want = os.environ.get("AOI_LAB_BACKEND", "auto").lower()
    if want == "python" or _kernel is None:
        return "python"
    return "cython"


def run_policy(instance: Instance, name: str, draws: EnvDraws, rng: np.random.Generator,
               *, thr: float = DEFAULT_THR, limit_override: float | None = None,
               backend: str | None = None):
    """Run ``name`` on pre-drawn environment randomness.

    Returns ``(chosen, aoi, branch)`` arrays of length ``T``; branch codes index
    :data:`aoi_bandits.policies.BRANCHES`.
    """
    code = POLICY_CODES[name]
    backend = backend or default_backend()
    if backend == "cython":
        if _kernel is None:
            raise RuntimeError("compiled kernel is not available")
        lim = math.nan if limit_override is None else float(limit_override)
        u = np.ascontiguousarray(draws.u, dtype=np.float64).ravel()
        return _kernel.run_policy(code, instance.as_array(), instance.k_star, u,
                                  draws.coupled, draws.horizon, draws.init_age,
                                  rng.bit_generator, float(thr), lim)
    if backend == "python":
        return _reference.run_policy(instance.as_array(), instance.k_star, name, draws,
                                     rng, float(thr), limit_override)
    raise ValueError(f"unknown backend {backend!r}")


def simulate_replication(instance: Instance, name: str, horizon: int, seed: int, rep: int = 0,
                         *, coupled: bool = True, init_mode: str = "geometric",
                         thr: float = DEFAULT_THR, backend: str | None = None) -> Trajectory:
    """One replication of one policy together with its coupled genie path."""
    draws = draw_environment(instance, horizon, replication_streams(seed, rep, 0),
                             coupled, init_mode)
    rng = replication_streams(seed, rep, 1 + POLICY_CODES[name])
    chosen, aoi, branch = run_policy(instance, name, draws, rng, thr=thr, backend=backend)
    return Trajectory(chosen, aoi, genie_path(instance, draws), branch)
