"""Command-line entry point.

Commands: ``single-test``, ``type1``, ``power``, ``ablation``, ``selfcheck``.
Options may come from a flat key=value config file (``--config``); explicit
flags override file values, which override built-in defaults. All randomness
derives from ``--seed``, so re-running a command with the same configuration
produces byte-identical report files.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields

from .bench import (TestConfig, Variant, ablation_suite, estimate_rate,
                    run_trial, write_csv, write_json)
from .data import ALT, INDEPENDENCE, NULL, TWO_SAMPLE, DatasetSpec
from .kernels import FAMILIES
from .selfcheck import run_selfcheck
from .train import TrainConfig

COMMANDS = ("single-test", "type1", "power", "ablation", "selfcheck")

_DEFAULTS = {
    "dataset": "blob", "hypothesis": NULL, "n": 100, "dim": 2, "rho": 0.5,
    "slope": 0.5, "noise": 1.0, "k_perturb": None,
    "c": 6, "families": "gaussian,mahalanobis", "epochs": 200, "lr": 5e-4,
    "lam": None, "alpha": 0.05, "n_boot": 300, "trials": 200, "seed": 0,
    "workers": None, "sizes": "100,200,300", "no_diversity": False,
    "no_selection": False, "output": "report", "format": "csv",
}

_TYPES = {
    "dataset": str, "hypothesis": str, "n": int, "dim": int, "rho": float,
    "slope": float, "noise": float, "k_perturb": int, "c": int,
    "families": str, "epochs": int, "lr": float, "lam": float,
    "alpha": float, "n_boot": int, "trials": int, "seed": int,
    "workers": int, "sizes": str, "no_diversity": bool, "no_selection": bool,
    "output": str, "format": str,
}


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    dataset: str
    hypothesis: str
    n: int
    dim: int
    rho: float
    slope: float
    noise: float
    k_perturb: int | None
    c: int
    families: str
    epochs: int
    lr: float
    lam: float | None
    alpha: float
    n_boot: int
    trials: int
    seed: int
    workers: int
    sizes: str
    no_diversity: bool
    no_selection: bool
    output: str
    format: str

    @property
    def problem(self) -> str:
        return TWO_SAMPLE if self.dataset == "blob" else INDEPENDENCE

    def dataset_spec(self, n: int | None = None) -> DatasetSpec:
        return DatasetSpec(problem=self.problem, hypothesis=self.hypothesis,
                           n=self.n if n is None else n, dim=self.dim,
                           rho=self.rho, slope=self.slope, noise=self.noise,
                           k_perturb=self.k_perturb, seed=self.seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(c=self.c, families=tuple(self.families.split(",")),
                           epochs=self.epochs, learning_rate=self.lr,
                           lam=self.lam, use_diversity=not self.no_diversity)

    def test_config(self) -> TestConfig:
        return TestConfig(alpha=self.alpha, n_boot=self.n_boot, lam=self.lam)

    def variant(self) -> Variant:
        return Variant(use_diversity=not self.no_diversity,
                       use_selection=not self.no_selection)

    def size_list(self) -> list:
        return [int(s) for s in self.sizes.split(",") if s]


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dualtest",
        description="Diverse multi-kernel two-sample / independence testing")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--dataset", choices=("blob", "indep"))
    hyp = p.add_mutually_exclusive_group()
    hyp.add_argument("--alt", dest="hypothesis", action="store_const",
                     const=ALT, default=None)
    hyp.add_argument("--null", dest="hypothesis", action="store_const",
                     const=NULL)
    p.add_argument("--n", type=int, help="per-split sample count")
    p.add_argument("--dim", type=int)
    p.add_argument("--rho", type=float, help="blob covariance perturbation")
    p.add_argument("--slope", type=float, help="independence signal strength")
    p.add_argument("--noise", type=float)
    p.add_argument("--k-perturb", dest="k_perturb", type=int)
    p.add_argument("-c", "--kernels", dest="c", type=int)
    p.add_argument("--families")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--B", dest="n_boot", type=int,
                   help="wild bootstrap iterations")
    p.add_argument("--R", dest="trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--sizes", help="comma-separated n values (power command)")
    p.add_argument("--no-diversity", action="store_const", const=True,
                   default=None)
    p.add_argument("--no-selection", action="store_const", const=True,
                   default=None)
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv", "json"))
    return p


def _parse_file(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        typ = _TYPES[key]
        try:
            values[key] = (raw.lower() in ("1", "true", "yes")
                           if typ is bool else typ(raw))
        except ValueError:
            raise ConfigError(f"invalid value for {key!r}: {raw!r}") from None
    return values


def _validate(cfg: RunConfig) -> None:
    if not 0.0 < cfg.alpha < 1.0:
        raise ConfigError("alpha must be in (0,1)")
    if cfg.n < 4:
        raise ConfigError("n must be >= 4")
    if cfg.n_boot < 1:
        raise ConfigError("B must be >= 1")
    if cfg.trials < 1:
        raise ConfigError("R must be >= 1")
    if cfg.c < 1:
        raise ConfigError("c must be >= 1")
    if cfg.epochs < 0:
        raise ConfigError("epochs must be >= 0")
    if cfg.lr <= 0:
        raise ConfigError("lr must be > 0")
    if cfg.lam is not None and cfg.lam < 0:
        raise ConfigError("lambda must be >= 0")
    if not -1.0 < cfg.rho < 1.0:
        raise ConfigError("rho must be in (-1,1)")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    for fam in cfg.families.split(","):
        if fam not in FAMILIES:
            raise ConfigError(f"unknown kernel family {fam!r}")
    try:
        sizes = cfg.size_list()
    except ValueError:
        raise ConfigError("sizes must be comma-separated integers") from None
    if cfg.command == "power" and not sizes:
        raise ConfigError("sizes must not be empty")


def parse_config(argv, config_text: str | None = None) -> RunConfig:
    """Merge defaults, config-file values and flags (flags win)."""
    ns = _build_parser().parse_args(argv)
    file_values = {}
    if config_text is None and ns.config:
        try:
            with open(ns.config) as fh:
                config_text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    if config_text is not None:
        file_values = _parse_file(config_text)

    values = dict(_DEFAULTS)
    values.update(file_values)
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        flag = getattr(ns, f.name, None)
        if flag is not None:
            values[f.name] = flag
    if values["workers"] is None:
        values["workers"] = int(os.environ.get("DUALTEST_WORKERS", "1"))
    cfg = RunConfig(command=ns.command, **values)
    _validate(cfg)
    return cfg


def _write_reports(reports, cfg: RunConfig) -> str:
    path = cfg.output
    if not path.endswith("." + cfg.format):
        path = f"{path}.{cfg.format}"
    if cfg.format == "csv":
        write_csv(reports, path)
    else:
        write_json(reports, path)
    return path


def _cmd_single_test(cfg: RunConfig) -> int:
    result = run_trial(cfg.dataset_spec(), cfg.variant(), cfg.train_config(),
                       cfg.test_config(), cfg.seed)
    print(f"statistic  {result.statistic:.6g}")
    print(f"threshold  {result.threshold:.6g}")
    print(f"p-value    {result.p_value:.6g}")
    print(f"reject     {str(result.reject).lower()}")
    print("mask       " + "".join(str(int(m)) for m in result.mask))
    return 0


def _cmd_rate(cfg: RunConfig, hypothesis: str | None = None) -> int:
    spec = cfg.dataset_spec()
    if hypothesis is not None and spec.hypothesis != hypothesis:
        spec = DatasetSpec(problem=spec.problem, hypothesis=hypothesis,
                           n=spec.n, dim=spec.dim, rho=spec.rho,
                           slope=spec.slope, noise=spec.noise,
                           k_perturb=spec.k_perturb, seed=spec.seed)
    rep = estimate_rate(spec, cfg.variant(), cfg.train_config(),
                        cfg.test_config(), cfg.trials, cfg.seed, cfg.workers)
    path = _write_reports([rep], cfg)
    lo, hi = rep.ci
    print(f"{rep.variant} {spec.problem} {spec.hypothesis} n={rep.n} "
          f"rate={rep.rate:.4f} ci=[{lo:.4f},{hi:.4f}] "
          f"({rep.seconds:.1f}s) -> {path}")
    return 0


def _cmd_power(cfg: RunConfig) -> int:
    reports = []
    for n in cfg.size_list():
        rep = estimate_rate(cfg.dataset_spec(n), cfg.variant(),
                            cfg.train_config(), cfg.test_config(),
                            cfg.trials, cfg.seed, cfg.workers)
        reports.append(rep)
        lo, hi = rep.ci
        print(f"{rep.variant} n={n} rate={rep.rate:.4f} "
              f"ci=[{lo:.4f},{hi:.4f}] ({rep.seconds:.1f}s)")
    path = _write_reports(reports, cfg)
    print(f"-> {path}")
    return 0


def _cmd_ablation(cfg: RunConfig) -> int:
    reports = ablation_suite(cfg.dataset_spec(), cfg.train_config(),
                             cfg.test_config(), cfg.trials, cfg.seed,
                             cfg.workers)
    for name, rep in reports.items():
        lo, hi = rep.ci
        print(f"{name:5s} rate={rep.rate:.4f} ci=[{lo:.4f},{hi:.4f}]")
    path = _write_reports(list(reports.values()), cfg)
    print(f"-> {path}")
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if cfg.command == "selfcheck":
        ok = run_selfcheck()
        print("selfcheck: " + ("ok" if ok else "FAILED"))
        return 0 if ok else 1
    try:
        if cfg.command == "single-test":
            return _cmd_single_test(cfg)
        if cfg.command == "type1":
            return _cmd_rate(cfg, hypothesis=NULL)
        if cfg.command == "power":
            return _cmd_power(cfg)
        if cfg.command == "ablation":
            return _cmd_ablation(cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {cfg.command}")


if __name__ == "__main__":
    sys.exit(main())
