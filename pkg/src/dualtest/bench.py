"""Repetition harness: Type-I error / power estimation and ablations.

Trials are fully determined by (base_seed, trial index): data generation,
splitting, the training-phase null resample and the testing rng all derive
from the per-trial seed, so the four ablation variants can be run on
identical datasets (paired comparison) and any report is reproducible.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from ._rng import derive_rng
from .bootstrap import TestResult, run_test
from .data import DatasetSpec, generate, split_train_test
from .train import TrainConfig, learn_kernels

CSV_COLUMNS = ["variant", "problem", "hypothesis", "n", "R", "rejections",
               "rate", "ci_low", "ci_high", "mean_threshold",
               "mean_statistic", "seconds"]


@dataclass(frozen=True)
class Variant:
    """Ablation switch: diversity studentization and selection inference."""

    use_diversity: bool = True
    use_selection: bool = True

    @property
    def name(self) -> str:
        return {(False, False): "AU", (True, False): "AU+D",
                (False, True): "AU+S", (True, True): "DUAL"}[
                    (self.use_diversity, self.use_selection)]


VARIANTS = {v.name: v for v in (Variant(False, False), Variant(True, False),
                                Variant(False, True), Variant(True, True))}


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # keep pytest from collecting this as a test class

    alpha: float = 0.05
    n_boot: int = 300
    lam: float | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.n_boot < 1:
            raise ValueError("n_boot must be >= 1")


@dataclass(frozen=True)
class TrialResult:
    reject: bool
    statistic: float
    threshold: float
    p_value: float
    mask: np.ndarray
    failure: str | None = None


@dataclass(frozen=True)
class PowerReport:
    variant: str
    problem: str
    hypothesis: str
    n: int
    trials: int
    rejections: int
    mean_threshold: float
    mean_statistic: float
    selection_freq: np.ndarray = field(repr=False)
    failures: int = 0
    seconds: float = 0.0

    @property
    def rate(self) -> float:
        return self.rejections / self.trials

    @property
    def ci(self) -> tuple:
        se = np.sqrt(max(self.rate * (1.0 - self.rate), 0.0) / self.trials)
        return (self.rate - 1.96 * se, self.rate + 1.96 * se)


def run_trial(spec: DatasetSpec, variant: Variant, train_cfg: TrainConfig,
              test_cfg: TestConfig, trial_seed: int) -> TrialResult:
    """One full pipeline execution: generate, split, train, test."""
    data = generate(spec, derive_rng(trial_seed, 0))
    data_tr, data_te = split_train_test(data, derive_rng(trial_seed, 1))
    resample_seed = int(derive_rng(trial_seed, 2).integers(2 ** 62))
    cfg = replace(train_cfg, resample_seed=resample_seed,
                  use_diversity=variant.use_diversity)
    trained = learn_kernels(data_tr, cfg)
    result: TestResult = run_test(
        data_te, trained.pool, trained.f_tr, alpha=test_cfg.alpha,
        n_boot=test_cfg.n_boot, lam=test_cfg.lam, rng=derive_rng(trial_seed, 3),
        use_diversity=variant.use_diversity,
        use_selection=variant.use_selection)
    return TrialResult(reject=result.reject, statistic=result.statistic,
                       threshold=result.threshold, p_value=result.p_value,
                       mask=result.mask)


def _safe_trial(spec, variant, train_cfg, test_cfg, trial_seed, c):
    try:
        return run_trial(spec, variant, train_cfg, test_cfg, trial_seed)
    except Exception as exc:  # conservative: failures count as non-rejections
        return TrialResult(reject=False, statistic=np.nan, threshold=np.nan,
                           p_value=np.nan, mask=np.zeros(c),
                           failure=f"trial seed {trial_seed}: {exc!r}")


def trial_seeds(base_seed: int, trials: int) -> np.ndarray:
    return np.random.SeedSequence(base_seed).generate_state(trials, np.uint64)


def run_trials(spec: DatasetSpec, variant: Variant, train_cfg: TrainConfig,
               test_cfg: TestConfig, trials: int, base_seed: int,
               workers: int = 1) -> list:
    """R independent trials with derived per-trial seeds."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = trial_seeds(base_seed, trials)
    args = [(spec, variant, train_cfg, test_cfg, int(s), train_cfg.c)
            for s in seeds]
    if workers > 1:
        return Parallel(n_jobs=workers)(delayed(_safe_trial)(*a) for a in args)
    return [_safe_trial(*a) for a in args]


def summarize(spec: DatasetSpec, variant: Variant, results,
              seconds: float = 0.0) -> PowerReport:
    trials = len(results)
    ok = [r for r in results if r.failure is None]
    rejections = sum(r.reject for r in results)
    masks = np.array([r.mask for r in ok]) if ok else np.zeros((0, 1))
    return PowerReport(
        variant=variant.name, problem=spec.problem,
        hypothesis=spec.hypothesis, n=spec.n, trials=trials,
        rejections=int(rejections),
        mean_threshold=float(np.mean([r.threshold for r in ok])) if ok else np.nan,
        mean_statistic=float(np.mean([r.statistic for r in ok])) if ok else np.nan,
        selection_freq=masks.mean(axis=0) if len(ok) else np.array([]),
        failures=trials - len(ok), seconds=seconds)


def estimate_rate(spec: DatasetSpec, variant: Variant, train_cfg: TrainConfig,
                  test_cfg: TestConfig, trials: int, base_seed: int,
                  workers: int = 1) -> PowerReport:
    start = time.perf_counter()
    results = run_trials(spec, variant, train_cfg, test_cfg, trials,
                         base_seed, workers)
    return summarize(spec, variant, results, time.perf_counter() - start)


def ablation_suite(spec: DatasetSpec, train_cfg: TrainConfig,
                   test_cfg: TestConfig, trials: int, base_seed: int,
                   workers: int = 1) -> dict:
    """All four variants on shared per-trial seeds (paired design)."""
    return {name: estimate_rate(spec, variant, train_cfg, test_cfg, trials,
                                base_seed, workers)
            for name, variant in VARIANTS.items()}


def selection_diagnostics(reports) -> list:
    """Per-kernel selection probabilities, one row per (report, kernel)."""
    rows = []
    for rep in reports:
        for k, p in enumerate(rep.selection_freq):
            rows.append({"variant": rep.variant, "hypothesis": rep.hypothesis,
                         "n": rep.n, "kernel": k, "prob": float(p)})
    return rows


# ---------------------------------------------------------------------------
# serialization

def report_rows(reports, with_timings: bool = False) -> list:
    """Schema rows; timings are omitted by default so identical configs and
    seeds serialize byte-identically."""
    rows = []
    for rep in reports:
        lo, hi = rep.ci
        rows.append({
            "variant": rep.variant, "problem": rep.problem,
            "hypothesis": rep.hypothesis, "n": rep.n, "R": rep.trials,
            "rejections": rep.rejections, "rate": round(rep.rate, 10),
            "ci_low": round(lo, 10), "ci_high": round(hi, 10),
            "mean_threshold": round(rep.mean_threshold, 10),
            "mean_statistic": round(rep.mean_statistic, 10),
            "seconds": round(rep.seconds, 3) if with_timings else None,
        })
    return rows


def write_csv(reports, path, with_timings: bool = False) -> None:
    rows = report_rows(reports, with_timings)
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(
            "" if row[col] is None else str(row[col]) for col in CSV_COLUMNS))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(reports, path, with_timings: bool = False) -> None:
    with open(path, "w") as fh:
        json.dump(report_rows(reports, with_timings), fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
