"""Experiment configuration, the replication runner, and result summaries.

A run is: draw (or load) a dataset once, then for each replicate run a
fresh Gibbs chain, select the pivot, relabel, build the proposals and
execute every requested estimator with its own keyed substream.  Replicate
results are deterministic functions of (config, seed) regardless of
execution order or thread count.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datasets import BUILTIN_NAMES, builtin_dataset, load_dataset
from .estimators import (
    DEFAULT_TAU,
    bridge_sampling,
    build_dual_proposal,
    build_permuted_mixture,
    build_plugin_proposal,
    calibrate_truncation,
    chib,
    importance_estimate,
)
from .gibbs import GibbsConfig, permute_chain, run_gibbs, select_pivot
from .model import Dataset, FixedPrior, HierarchicalPrior, PriorSpec
from .numerics import RngStream
from .relabel import relabel_chain

__all__ = [
    "KNOWN_ESTIMATORS",
    "ExperimentConfig",
    "RunRecord",
    "parse_prior",
    "resolve_dataset",
    "run_experiment",
    "run_replicate",
    "summarize",
    "write_summary_csv",
    "read_summary_csv",
]

KNOWN_ESTIMATORS = (
    "chib_kfact",    # candidate-point estimate times k!
    "chib_perm",     # candidate-point estimate averaged over relabellings
    "plugin_is",     # symmetrized single-draw proposal
    "sym_is",        # pooled symmetrized proposal, all k! clusters
    "sym_is_trunc",  # pooled symmetrized proposal, contributing clusters only
    "mixture_is",    # randomly permuted J1-mixture proposal
    "bridge",        # iterative bridge sampling
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one estimator comparison."""

    dataset: str = "d1"
    k: int = 2
    prior: str = "fixed:2,3"
    estimators: tuple[str, ...] = KNOWN_ESTIMATORS
    T: int = 10_000
    J: int = 100
    J1: int | None = None           # default: min(100 k!, 5000)
    M: int = 1_000
    M1: int = 6_000
    M2: int = 6_000
    bridge_J1: int = 4_000
    bridge_iterations: int = 10
    tau: float = DEFAULT_TAU
    iterations: int = 15_000
    burn_in: int = 5_000
    thinning: int = 1
    replicates: int = 50
    seed: int = 0
    n: int | None = None            # sample size for simulated datasets
    out: str | None = None
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        unknown = [e for e in self.estimators if e not in KNOWN_ESTIMATORS]
        if unknown:
            raise ValueError(f"unknown estimators {unknown}; known: {KNOWN_ESTIMATORS}")
        for name in ("k", "T", "J", "M", "M1", "M2", "bridge_J1",
                     "bridge_iterations", "replicates", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")

    @property
    def effective_J1(self) -> int:
        if self.J1 is not None:
            return self.J1
        return min(100 * math.factorial(self.k), 5_000)

    def gibbs_config(self, random_permutation: bool = False) -> GibbsConfig:
        return GibbsConfig(
            iterations=self.iterations,
            burn_in=self.burn_in,
            thinning=self.thinning,
            random_permutation=random_permutation,
            seed=self.seed,
        )

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["estimators"] = list(self.estimators)
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        payload = dict(payload)
        if "estimators" in payload:
            payload["estimators"] = tuple(payload["estimators"])
        return cls(**payload)


def parse_prior(spec: str, data: Dataset) -> PriorSpec:
    """Parse 'fixed:a,b' or 'rg' (hierarchical, calibrated from the data)."""
    token = spec.strip().lower()
    if token in ("rg", "hierarchical"):
        return HierarchicalPrior.from_data(data)
    if token.startswith("fixed"):
        _, _, args = token.partition(":")
        if args:
            try:
                a, b = (float(v) for v in args.split(","))
            except ValueError:
                raise ValueError(f"bad fixed prior spec {spec!r}; want fixed:a,b") from None
        else:
            a, b = 2.0, 3.0
        return FixedPrior(var_shape=a, var_scale=b)
    raise ValueError(f"unknown prior spec {spec!r}; want 'fixed:a,b' or 'rg'")


def resolve_dataset(config: ExperimentConfig) -> Dataset:
    root = RngStream(config.seed)
    name = config.dataset
    if name.lower() in BUILTIN_NAMES:
        return builtin_dataset(name, n=config.n, rng=root.substream("dataset"))
    return load_dataset(name)


def run_replicate(config: ExperimentConfig, data: Dataset, prior: PriorSpec,
                  replicate: int) -> list[dict]:
    """All requested estimators on one fresh chain; failures are recorded rows."""
    stream = RngStream(config.seed).substream("replicate", replicate)
    chain = run_gibbs(data, prior, config.k, config.gibbs_config(),
                      rng=stream.substream("gibbs"))
    permuted = permute_chain(chain, stream.substream("permute"))
    pivot = select_pivot(chain, data, prior)

    relabelled = None
    dual = None

    def dual_proposal():
        nonlocal relabelled, dual
        if dual is None:
            relabelled = relabel_chain(chain, pivot[0])
            dual = build_dual_proposal(relabelled, data, prior, config.J,
                                       stream.substream("subsample"))
        return dual

    rows = []
    for method in config.estimators:
        row = {"replicate": replicate, "method": method}
        try:
            if method == "chib_kfact":
                est = chib(data, prior, chain, pivot, mode="k_fact")
            elif method == "chib_perm":
                est = chib(data, prior, permuted, pivot, mode="permutation_averaged")
            elif method == "plugin_is":
                proposal = build_plugin_proposal(data, prior, pivot)
                est = importance_estimate(proposal, config.T, stream.substream("plugin"))
            elif method == "sym_is":
                est = importance_estimate(dual_proposal(), config.T,
                                          stream.substream("dual"))
            elif method == "sym_is_trunc":
                est = importance_estimate(dual_proposal(), config.T,
                                          stream.substream("dual"),
                                          truncated=True, M=config.M, tau=config.tau)
            elif method == "mixture_is":
                proposal = build_permuted_mixture(chain, data, prior,
                                                  config.effective_J1,
                                                  stream.substream("j1"))
                est = importance_estimate(proposal, config.T, stream.substream("j1-particles"))
            elif method == "bridge":
                proposal = build_permuted_mixture(chain, data, prior,
                                                  config.bridge_J1,
                                                  stream.substream("bridge-q"))
                est = bridge_sampling(data, prior, proposal, config.M1, config.M2,
                                      config.bridge_iterations,
                                      stream.substream("bridge"), permuted)
            else:  # pragma: no cover - guarded by config validation
                raise ValueError(method)
            rec = est.as_record()
            rec.pop("trace", None)
            row.update(rec)
            row["error"] = ""
        except Exception as exc:  # noqa: BLE001 - per-replicate isolation
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def _worker(payload):
    config_dict, data_obs, data_name, replicate = payload
    config = ExperimentConfig.from_dict(config_dict)
    data = Dataset(np.array(data_obs), name=data_name)
    prior = parse_prior(config.prior, data)
    return run_replicate(config, data, prior, replicate)


@dataclass
class RunRecord:
    """Config echo, per-replicate estimator rows, and summary tables."""

    config: ExperimentConfig
    dataset_name: str
    rows: list[dict]
    summary: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "config": self.config.as_dict(),
            "dataset_name": self.dataset_name,
            "rows": self.rows,
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunRecord":
        return cls(
            config=ExperimentConfig.from_dict(payload["config"]),
            dataset_name=payload["dataset_name"],
            rows=list(payload["rows"]),
            summary=dict(payload.get("summary", {})),
        )

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=1)

    @classmethod
    def from_json(cls, path) -> "RunRecord":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def run_experiment(config: ExperimentConfig) -> RunRecord:
    """The full protocol: replicated chains, estimators, summaries, outputs."""
    data = resolve_dataset(config)
    prior = parse_prior(config.prior, data)
    payloads = [
        (config.as_dict(), data.observations.tolist(), data.name, r)
        for r in range(config.replicates)
    ]
    if config.threads > 1 and config.replicates > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            per_rep = list(pool.map(_worker, payloads))
    else:
        per_rep = [run_replicate(config, data, prior, r)
                   for r in range(config.replicates)]
    rows = [row for rep_rows in per_rep for row in rep_rows]
    record = RunRecord(config=config, dataset_name=data.name, rows=rows)
    record.summary = summarize(rows)
    if config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        record.to_json(out / "records.json")
        write_summary_csv(record.summary, out)
        _write_long_csv(rows, out / "long.csv")
    return record


def calibration_report(config: ExperimentConfig, replicate: int = 0):
    """The contribution ranking for one replicate's proposal (no estimation)."""
    data = resolve_dataset(config)
    prior = parse_prior(config.prior, data)
    stream = RngStream(config.seed).substream("replicate", replicate)
    chain = run_gibbs(data, prior, config.k, config.gibbs_config(),
                      rng=stream.substream("gibbs"))
    pivot = select_pivot(chain, data, prior)
    relabelled = relabel_chain(chain, pivot[0])
    proposal = build_dual_proposal(relabelled, data, prior, config.J,
                                   stream.substream("subsample"))
    return calibrate_truncation(proposal, config.M, config.tau,
                                stream.substream("dual"), T=config.T)


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

def _stats(values) -> dict:
    arr = np.array(values, dtype=float)
    if arr.size == 0:
        return {"count": 0, "mean": None, "sd": None,
                "q25": None, "median": None, "q75": None}
    return {
        "count": int(arr.size),
        "mean": float(np.mean(arr)),
        "sd": float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0,
        "q25": float(np.quantile(arr, 0.25)),
        "median": float(np.quantile(arr, 0.5)),
        "q75": float(np.quantile(arr, 0.75)),
    }


def summarize(rows: list[dict]) -> dict:
    """Per-estimator summary tables over the successful replicates."""
    methods = []
    for row in rows:
        if row["method"] not in methods:
            methods.append(row["method"])
    tables: dict[str, list[dict]] = {
        "log_evidence": [], "R": [], "truncation": [], "elapsed": [], "errors": [],
    }
    for method in methods:
        ok = [r for r in rows if r["method"] == method and not r.get("error")]
        bad = [r for r in rows if r["method"] == method and r.get("error")]
        tables["log_evidence"].append(
            {"method": method, **_stats([r["log_evidence"] for r in ok])}
        )
        tables["R"].append({"method": method, **_stats([r["R"] for r in ok])})
        trunc = [r for r in ok if "A_size" in r]
        if trunc:
            tables["truncation"].append(
                {
                    "method": method,
                    "count": len(trunc),
                    "A_size_mean": float(np.mean([r["A_size"] for r in trunc])),
                    "A_size_sd": float(np.std([r["A_size"] for r in trunc], ddof=1)) if len(trunc) > 1 else 0.0,
                    "delta_mean": float(np.mean([r["delta"] for r in trunc])),
                    "delta_sd": float(np.std([r["delta"] for r in trunc], ddof=1)) if len(trunc) > 1 else 0.0,
                }
            )
        tables["elapsed"].append(
            {"method": method, **_stats([r["elapsed_seconds"] for r in ok])}
        )
        tables["errors"].append({"method": method, "failures": len(bad)})
    return tables


def write_summary_csv(tables: dict, out_dir) -> None:
    out_dir = Path(out_dir)
    for name, rows in tables.items():
        if not rows:
            continue
        path = out_dir / f"summary_{name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _fmt(v) for k, v in row.items()})


def read_summary_csv(out_dir) -> dict:
    out_dir = Path(out_dir)
    tables = {}
    for path in sorted(out_dir.glob("summary_*.csv")):
        name = path.stem.removeprefix("summary_")
        with open(path, newline="") as fh:
            rows = []
            for row in csv.DictReader(fh):
                parsed = {}
                for key, value in row.items():
                    if key == "method":
                        parsed[key] = value
                    elif value == "":
                        parsed[key] = None
                    elif key in ("count", "failures"):
                        parsed[key] = int(value)
                    else:
                        parsed[key] = float(value)
                rows.append(parsed)
        tables[name] = rows
    return tables


def _write_long_csv(rows: list[dict], path) -> None:
    """Boxplot-ready long format: estimator, replicate, log_evidence, R."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "replicate", "log_evidence", "R"])
        for row in rows:
            if row.get("error"):
                continue
            writer.writerow([
                row["method"], row["replicate"],
                _fmt(row["log_evidence"]), _fmt(row["R"]),
            ])


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)
