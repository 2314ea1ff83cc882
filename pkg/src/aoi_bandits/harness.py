"""Monte-Carlo experiments: settings, regret curves, tables and output files."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .analytics import BoundError, eval_bounds
from .env import COUPLING_MODES, INIT_MODES, Instance, draw_environment, genie_path, replication_streams
from .policies import DEFAULT_THR, PAPER_POLICIES, POLICY_CODES, check_roster
from .simulate import run_policy

log = logging.getLogger(__name__)

CSV_HEADER = ("policy", "t", "mean_regret", "stderr", "replications")

PAPER_HORIZON = 10_000
PRESETS = {"desk": 100, "paper": 1000}

_SET1_RANGES = {"a": 0.3, "b": 0.4, "c": 0.5, "d": 0.6, "e": 0.7}
_SET2_ARMS = {"a": 2, "b": 4, "c": 6, "d": 8, "e": 10}


def equally_spaced(lo: float, hi: float, K: int) -> tuple[float, ...]:
    # rounding strips linspace noise such as 0.22000000000000003
    return tuple(round(float(x), 12) for x in np.linspace(lo, hi, K))


def setting_instance(setting_id: str) -> Instance:
    group, _, letter = setting_id.partition(".")
    if group == "1" and letter in _SET1_RANGES:
        return Instance(equally_spaced(0.1, _SET1_RANGES[letter], 5))
    if group == "2" and letter in _SET2_ARMS:
        return Instance(equally_spaced(0.05, 0.9, _SET2_ARMS[letter]))
    raise KeyError(f"unknown setting id {setting_id!r}; expected 1.a-1.e or 2.a-2.e")


SETTING_IDS = tuple(f"{g}.{c}" for g in "12" for c in "abcde")


@dataclass
class ExperimentConfig:
    setting_id: str
    instance: Instance
    horizon: int = PAPER_HORIZON
    replications: int = PRESETS["paper"]
    seed: int = 0
    policies: tuple[str, ...] = PAPER_POLICIES
    coupling: str = "coupled"
    init_mode: str = "geometric"
    thr: float = DEFAULT_THR
    out: str | None = None
    record_all: bool = False

    def __post_init__(self):
        self.policies = check_roster(self.policies)
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.coupling not in COUPLING_MODES:
            raise ValueError(f"coupling must be one of {COUPLING_MODES}")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"init mode must be one of {INIT_MODES}")
        if not self.thr >= 1:
            raise ValueError("thr must be >= 1")

    @property
    def coupled(self) -> bool:
        return self.coupling == "coupled"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["instance"] = list(self.instance.mu)
        d["policies"] = list(self.policies)
        return d


def builtin_setting(setting_id: str, **overrides) -> ExperimentConfig:
    return ExperimentConfig(setting_id=setting_id, instance=setting_instance(setting_id), **overrides)


def load_config(path: str | os.PathLike, **overrides) -> ExperimentConfig:
    """Read a JSON or TOML experiment document.

    Recognised keys: ``setting`` (built-in id used as a base), ``setting_id``,
    ``mu``, ``horizon``, ``replications``, ``seed``, ``policies``,
    ``coupling``, ``init``, ``thr``, ``out``, ``record_all``.
    """
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        doc = tomllib.loads(raw.decode())
    else:
        doc = json.loads(raw)
    if not isinstance(doc, dict):
        raise ValueError("config must be a key-value document")
    known = {"setting", "setting_id", "mu", "horizon", "replications", "seed", "policies",
             "coupling", "init", "thr", "out", "record_all"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "mu" in doc:
        instance = Instance(tuple(doc["mu"]))
        setting_id = doc.get("setting_id", doc.get("setting", path.stem))
    elif "setting" in doc:
        instance = setting_instance(doc["setting"])
        setting_id = doc.get("setting_id", doc["setting"])
    else:
        raise ValueError("config needs either 'mu' or 'setting'")
    kw = {}
    for key, name, conv in (("horizon", "horizon", int), ("replications", "replications", int),
                            ("seed", "seed", int), ("coupling", "coupling", str),
                            ("init", "init_mode", str), ("thr", "thr", float),
                            ("out", "out", str), ("record_all", "record_all", bool)):
        if key in doc:
            kw[name] = conv(doc[key])
    if "policies" in doc:
        pol = doc["policies"]
        kw["policies"] = tuple(pol.split(",") if isinstance(pol, str) else pol)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(setting_id=str(setting_id), instance=instance, **kw)


def record_times(horizon: int, record_all: bool = False) -> np.ndarray:
    """200 log-spaced slots, every power of ten, and the horizon itself."""
    if record_all:
        return np.arange(1, horizon + 1)
    ts = set(np.unique(np.rint(np.logspace(0, math.log10(horizon), 200)).astype(np.int64)).tolist())
    p = 1
    while p <= horizon:
        ts.add(p)
        p *= 10
    ts.add(horizon)
    return np.array(sorted(t for t in ts if 1 <= t <= horizon), dtype=np.int64)


@dataclass
class RegretCurve:
    policy: str
    times: np.ndarray
    mean_regret: np.ndarray
    stderr: np.ndarray
    replications: int
    final: np.ndarray = field(repr=False)  # per-replication regret at T
    mean_suboptimal: float = 0.0

    def at(self, t: int) -> tuple[float, float]:
        i = int(np.searchsorted(self.times, t))
        if i >= len(self.times) or self.times[i] != t:
            raise KeyError(f"slot {t} was not recorded")
        return float(self.mean_regret[i]), float(self.stderr[i])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    curves: dict[str, RegretCurve]
    genie_cum_aoi_mean: float
    genie_cum_aoi_stderr: float
    dominance_violations: int

    def __getitem__(self, name: str) -> RegretCurve:
        return self.curves[name]


def worker_count() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get("AOI_LAB_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def _one_replication(config: ExperimentConfig, rep: int, idx: np.ndarray, backend):
    inst = config.instance
    draws = draw_environment(inst, config.horizon, replication_streams(config.seed, rep, 0),
                             config.coupled, config.init_mode)
    genie = genie_path(inst, draws)
    rows = np.empty((len(config.policies), len(idx)), dtype=np.int64)
    subopt = np.empty(len(config.policies), dtype=np.int64)
    violations = 0
    for j, name in enumerate(config.policies):
        rng = replication_streams(config.seed, rep, 1 + POLICY_CODES[name])
        chosen, aoi, _ = run_policy(inst, name, draws, rng, thr=config.thr, backend=backend)
        diff = aoi - genie
        if config.coupled:
            violations += int(np.count_nonzero(diff < 0))
        rows[j] = np.cumsum(diff)[idx]
        subopt[j] = np.count_nonzero(chosen != inst.k_star)
    return rows, subopt, int(genie.sum()), violations


def run_experiment(config: ExperimentConfig, backend: str | None = None,
                   workers: int | None = None) -> ExperimentResult:
    """Estimate regret curves for every policy in the roster.

    All policies of a replication see the same environment draws as the genie;
    regret is the running sum of ``a_policy - a_genie`` along that path.
    """
    times = record_times(config.horizon, config.record_all)
    idx = times - 1
    R = config.replications
    workers = workers or worker_count()
    log.info("running %s: K=%d T=%d R=%d policies=%s", config.setting_id, config.instance.K,
             config.horizon, R, ",".join(config.policies))

    def job(rep):
        return _one_replication(config, rep, idx, backend)

    if workers > 1 and R > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(job, range(R)))
    else:
        results = [job(rep) for rep in range(R)]

    # reduction in replication order, independent of completion order
    paths = np.stack([r[0] for r in results])          # (R, P, n_times)
    subopt = np.stack([r[1] for r in results])         # (R, P)
    genie_cum = np.array([r[2] for r in results], dtype=np.float64)
    violations = sum(r[3] for r in results)

    curves = {}
    for j, name in enumerate(config.policies):
        p = paths[:, j, :].astype(np.float64)
        mean = p.mean(axis=0)
        se = p.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros_like(mean)
        curves[name] = RegretCurve(name, times, mean, se, R, paths[:, j, -1].copy(),
                                   float(subopt[:, j].mean()))
    g_se = float(genie_cum.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0
    return ExperimentResult(config, curves, float(genie_cum.mean()), g_se, violations)


def genie_mean_aoi(instance: Instance, horizon: int, replications: int, seed: int,
                   coupled: bool = True, init_mode: str = "geometric") -> tuple[float, float]:
    """Mean per-slot genie AoI and its standard error across replications."""
    means = np.empty(replications)
    for rep in range(replications):
        draws = draw_environment(instance, horizon, replication_streams(seed, rep, 0),
                                 coupled, init_mode)
        means[rep] = genie_path(instance, draws).mean()
    se = means.std(ddof=1) / math.sqrt(replications) if replications > 1 else 0.0
    return float(means.mean()), float(se)


@dataclass(frozen=True)
class TableRow:
    setting: str
    policy: str
    mean_regret: float
    stderr: float
    replications: int


def final_regret_table(configs, policies=None, backend=None) -> list[TableRow]:
    """Mean and standard error of regret at the horizon for each setting x policy.

    ``configs`` may hold :class:`ExperimentConfig` or :class:`ExperimentResult`
    objects; results are used as-is, configs are run.
    """
    rows = []
    for item in configs:
        if isinstance(item, ExperimentResult):
            result = item
        else:
            cfg = item if policies is None else replace(item, policies=tuple(policies))
            result = run_experiment(cfg, backend=backend)
        names = policies or result.config.policies
        for name in names:
            c = result.curves[name]
            rows.append(TableRow(result.config.setting_id, name, float(c.mean_regret[-1]),
                                 float(c.stderr[-1]), c.replications))
    return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def curves_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for name in result.config.policies:
        c = result.curves[name]
        for t, m, s in zip(c.times, c.mean_regret, c.stderr):
            w.writerow((name, int(t), _fmt(m), _fmt(s), c.replications))
    return buf.getvalue()


def table_csv(rows: list[TableRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("setting", "policy", "mean_regret", "stderr", "replications"))
    for r in rows:
        w.writerow((r.setting, r.policy, _fmt(r.mean_regret), _fmt(r.stderr), r.replications))
    return buf.getvalue()


def git_blob_hash(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def bound_report_dict(instance: Instance, horizon: int, counts=None) -> dict:
    try:
        return eval_bounds(instance, horizon, counts=counts).to_dict()
    except BoundError as exc:
        return {"error": str(exc)}


def manifest(result: ExperimentResult, outputs: dict[str, bytes]) -> dict:
    cfg = result.config
    return {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "bounds": bound_report_dict(cfg.instance, cfg.horizon),
        "genie": {
            "analytic_cumulative_aoi": cfg.horizon / cfg.instance.mu_star,
            "empirical_cumulative_aoi": result.genie_cum_aoi_mean,
            "empirical_stderr": result.genie_cum_aoi_stderr,
        },
        "mean_suboptimal_uses": {n: c.mean_suboptimal for n, c in result.curves.items()},
        "dominance_violations": result.dominance_violations,
        "outputs": {name: git_blob_hash(data) for name, data in sorted(outputs.items())},
    }


class OutputExists(FileExistsError):
    pass


def write_outputs(result: ExperimentResult, out_dir: str | os.PathLike,
                  force: bool = False) -> tuple[Path, Path]:
    """Write ``<setting>.csv`` and ``<setting>.manifest.json``; refuses to overwrite."""
    out = Path(out_dir)
    stem = result.config.setting_id.replace("/", "_")
    csv_path = out / f"{stem}.csv"
    man_path = out / f"{stem}.manifest.json"
    if not force:
        for p in (csv_path, man_path):
            if p.exists():
                raise OutputExists(f"{p} exists; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    data = curves_csv(result).encode()
    man = json.dumps(manifest(result, {csv_path.name: data}), indent=2, sort_keys=True) + "\n"
    csv_path.write_bytes(data)
    man_path.write_text(man)
    return csv_path, man_path
