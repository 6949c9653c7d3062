"""Config-driven replicated runs, record summaries and the Lipschitz study.

Config files are flat ``key = value`` text, one pair per line, ``#`` starts a
comment and list values are comma separated. The ``LIPBATCH_SEED``
environment variable overrides the ``seed`` key.
"""

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from lipbatch.acquisition import AcquisitionSpec
from lipbatch.batch import STRATEGIES, BatchStrategy, DesignSettings, run_bbo
from lipbatch.benchmarks import BENCHMARKS, cosines_grad, get_benchmark, grid_max_grad_norm, with_noise
from lipbatch.errors import ConfigError, LipbatchError, SchemaError
from lipbatch.gp import Dataset, fit_gp
from lipbatch.lipschitz import estimate_L_global
from lipbatch.records import ExperimentRecord, header, iteration_series, read_csv, rows_to_csv

log = logging.getLogger(__name__)

SEED_ENV = "LIPBATCH_SEED"


def parse_key_values(text):
    """Parse ``key = value`` lines into a dict of raw strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _convert(key, raw, typ):
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is tuple:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        return typ(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None


def _build(cls, text, env):
    raw = parse_key_values(text)
    types = {f.name: f.type for f in fields(cls)}
    unknown = sorted(set(raw) - set(types))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    kwargs = {k: _convert(k, v, types[k]) for k, v in raw.items()}
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        kwargs["seed"] = _convert(SEED_ENV, env[SEED_ENV], int)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class ExperimentConfig:
    benchmark: str
    output: str
    dimension: int = None
    strategy: str = "lp"
    acquisition: str = "ucb"
    kappa: float = 2.0
    transform: str = None
    batch_size: int = 5
    iterations: int = 10
    replicates: int = 20
    init_size: int = None
    noise: float = 0.0
    seed: int = 0
    restarts: int = 10
    seeds: int = 10
    timing: bool = True
    workers: int = 1
    label: str = None

    def __post_init__(self):
        if self.benchmark.lower() not in BENCHMARKS:
            raise ConfigError(f"unknown benchmark {self.benchmark!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.replicates < 1 or self.iterations < 1 or self.batch_size < 1:
            raise ConfigError("replicates, iterations and batch_size must be >= 1")
        if self.noise < 0:
            raise ConfigError("noise must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            self.benchmark_obj()
            self.acquisition_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_text(cls, text, env=None):
        return _build(cls, text, env)

    @classmethod
    def from_file(cls, path, env=None):
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text, env)

    def benchmark_obj(self):
        return get_benchmark(self.benchmark, self.dimension)

    def acquisition_spec(self):
        kappa = self.kappa if self.acquisition.lower() == "ucb" else None
        return AcquisitionSpec(self.acquisition, kappa, self.transform)

    def strategy_obj(self):
        return BatchStrategy(self.strategy, self.batch_size, self.acquisition_spec())

    @property
    def method_label(self):
        return self.label or f"{self.strategy}-{self.acquisition}-nb{self.batch_size}"


def summary_path(output):
    p = Path(output)
    return p.with_name(p.stem + ".summary.json")


def run_replicate(config, replicate):
    """One independent run; replicate ``r`` uses seed ``config.seed + r``."""
    bench = config.benchmark_obj()
    seed = config.seed + replicate
    objective = bench.objective()
    if config.noise > 0:
        objective = with_noise(objective, config.noise, np.random.default_rng([seed, 1]))
    settings = DesignSettings(seeds=config.seeds, restarts=config.restarts)
    return run_bbo(
        objective, bench.domain, config.strategy_obj(), config.iterations,
        init_size=config.init_size, seed=seed, settings=settings,
        replicate=replicate, record_timing=config.timing,
    )


def _guarded_replicate(config, replicate):
    try:
        return run_replicate(config, replicate), None
    except LipbatchError as exc:
        return getattr(exc, "record", None), str(exc)


def _replicate_results(config):
    if config.workers == 1:
        for r in range(config.replicates):
            yield r, _guarded_replicate(config, r)
        return
    with ProcessPoolExecutor(config.workers) as pool:
        futures = [pool.submit(_guarded_replicate, config, r) for r in range(config.replicates)]
        for r, fut in enumerate(futures):
            yield r, fut.result()


def run_experiment(config):
    """Run every replicate, appending rows to ``config.output`` as they finish.

    Rows are written in replicate order whether or not replicates run in
    parallel, so the file depends only on the config. A failing replicate is
    logged and listed under ``failures`` in the summary file; its partial
    rows are kept and the remaining replicates still run.
    """
    bench = config.benchmark_obj()
    out = Path(config.output)
    record = ExperimentRecord(dim=bench.dim)
    failures, recommendations = [], {}
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv([], bench.dim))
            for r, (rec, error) in _replicate_results(config):
                if error is not None:
                    log.error("replicate %d failed: %s", r, error)
                    failures.append({"replicate": r, "error": error})
                elif rec.recommendation is not None:
                    recommendations[r] = [float(v) for v in rec.recommendation]
                if rec is None:
                    continue
                rows = rec.sorted_rows()
                fh.write(rows_to_csv(rows, bench.dim).split("\n", 1)[1])
                fh.flush()
                record.rows.extend(rows)
        summary = {
            "label": config.method_label,
            "benchmark": bench.name,
            "dimension": bench.dim,
            "strategy": config.strategy,
            "acquisition": config.acquisition,
            "batch_size": config.batch_size,
            **record.summary(),
            "failures": failures,
            "recommendations": {str(k): v for k, v in recommendations.items()},
        }
        summary_path(out).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise LipbatchError(f"cannot write results to {out}: {exc}") from exc
    record.summary_info = summary
    return record


SUMMARY_COLUMNS = (
    "method", "iteration", "replicates", "mean_best", "std_best",
    "mean_wall_clock_s", "std_wall_clock_s",
)


def _label_for(path):
    sp = summary_path(path)
    if sp.exists():
        try:
            return json.loads(sp.read_text(encoding="utf-8")).get("label") or Path(path).stem
        except (OSError, ValueError):
            pass
    return Path(path).stem


def _std(col):
    return float(np.std(col, ddof=1)) if col.size > 1 else 0.0


def summarize(paths, out_csv=None):
    """Best-so-far and wall clock versus iteration, mean and std over replicates.

    Returns the table as a list of dicts and writes it to ``out_csv`` when
    given. All records must share one column layout.
    """
    records = [(Path(p), read_csv(p)) for p in paths]
    if not records:
        raise SchemaError("no records given")
    cols = header(records[0][1].dim)
    for p, rec in records[1:]:
        if header(rec.dim) != cols:
            raise SchemaError(f"{p} has columns {header(rec.dim)}, expected {cols}")
    series = []
    all_iters = set()
    for p, rec in records:
        iters, best, wall = iteration_series(rec)
        all_iters.update(iters)
        series.append((_label_for(p), iters, best, wall))
    table = []
    for label, iters, best, wall in series:
        pos = {it: i for i, it in enumerate(iters)}
        for it in sorted(all_iters):
            if it not in pos:
                continue
            b, w = best[:, pos[it]], wall[:, pos[it]]
            table.append({
                "method": label, "iteration": it, "replicates": int(b.size),
                "mean_best": float(np.mean(b)), "std_best": _std(b),
                "mean_wall_clock_s": float(np.mean(w)), "std_wall_clock_s": _std(w),
            })
    if out_csv is not None:
        try:
            with open(out_csv, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(SUMMARY_COLUMNS)
                for row in table:
                    w.writerow([row[c] if isinstance(row[c], (str, int)) else repr(row[c]) for c in SUMMARY_COLUMNS])
        except OSError as exc:
            raise LipbatchError(f"cannot write {out_csv}: {exc}") from exc
    return table


@dataclass(frozen=True)
class LipschitzStudyConfig:
    output: str
    benchmark: str = "cosines"
    sample_sizes: tuple = (10.0, 20.0, 30.0, 40.0, 50.0)
    noise_levels: tuple = (0.0, 0.1, 0.25)
    replicates: int = 30
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.benchmark.lower() != "cosines":
            raise ConfigError("the Lipschitz study needs an analytic gradient; only cosines is supported")
        if self.replicates < 1 or not self.sample_sizes:
            raise ConfigError("need replicates >= 1 and at least one sample size")
        if any(n < 2 or n != int(n) for n in self.sample_sizes):
            raise ConfigError("sample sizes must be integers >= 2")
        if any(s < 0 for s in self.noise_levels):
            raise ConfigError("noise levels must be >= 0")

    @classmethod
    def from_text(cls, text, env=None):
        return _build(cls, text, env)

    @classmethod
    def from_file(cls, path, env=None):
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text, env)


STUDY_COLUMNS = ("noise", "n", "replicates", "mean_L", "std_L", "ci95_low", "ci95_high", "true_L")


def lipschitz_estimates(n, noise, replicates, seed=0, restarts=10):
    """GP-LCA estimates on cosines from ``n`` uniform samples, one per replicate."""
    bench = get_benchmark("cosines")
    out = []
    for r in range(replicates):
        rng = np.random.default_rng([seed, r, n, int(round(noise * 1e6))])
        X = bench.domain.from_unit(rng.random((n, 2)))
        y = bench.evaluate(X) + noise * rng.standard_normal(n)
        gp = fit_gp(Dataset(X, y, bench.domain), restarts, rng)
        out.append(estimate_L_global(gp, rng=rng).value)
    return np.array(out)


def lipschitz_study(config):
    """Mean GP-LCA estimate versus sample size for each noise level."""
    bench = get_benchmark(config.benchmark)
    _, true_L = grid_max_grad_norm(cosines_grad, bench.domain, 2001)
    table = []
    for noise in config.noise_levels:
        for n in config.sample_sizes:
            est = lipschitz_estimates(int(n), noise, config.replicates, config.seed, config.restarts)
            half = 1.96 * _std(est) / np.sqrt(est.size)
            mean = float(np.mean(est))
            table.append({
                "noise": noise, "n": int(n), "replicates": int(est.size),
                "mean_L": mean, "std_L": _std(est),
                "ci95_low": mean - half, "ci95_high": mean + half, "true_L": true_L,
            })
    try:
        out = Path(config.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(STUDY_COLUMNS)
            for row in table:
                w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in STUDY_COLUMNS])
    except OSError as exc:
        raise LipbatchError(f"cannot write {config.output}: {exc}") from exc
    return table
