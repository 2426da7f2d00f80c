"""Monte-Carlo harness for empirical size and power of the scan test."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from .epidemic_test import ScanConfig, fit_min_len, scan, scan_set, default_window
from .model_core import CountSeries, EpiscanError, ModelSpec
from .simulate import DEFAULT_BURNIN, EpidemicDesign, SeedSpec, simulate_epidemic, simulate_null

# keep the scan at roughly a couple thousand pairs; the refinement pass
# restores full resolution around the coarse argmax
_PAIR_BUDGET = 2500


def auto_stride(n: int, v_n: int) -> int:
    pairs = len(scan_set(n, v_n, 1))
    if pairs <= _PAIR_BUDGET:
        return 1
    return int(np.ceil(np.sqrt(pairs / _PAIR_BUDGET)))


@dataclass
class ExperimentConfig:
    family: str
    theta0: List[float]
    n: int
    noise: str = "poisson"
    r: Optional[int] = None
    theta1: Optional[List[float]] = None
    tau1: float = 0.3
    tau2: float = 0.7
    reps: int = 100
    alpha: float = 0.05
    seed: int = 0
    burnin: int = DEFAULT_BURNIN
    stride: Optional[int] = None  # None: chosen from the pair count
    u_n: Optional[int] = None
    v_n: Optional[int] = None
    n_jobs: int = 1

    @property
    def is_power(self) -> bool:
        return self.theta1 is not None

    def spec(self) -> ModelSpec:
        return ModelSpec(family=self.family, noise=self.noise, r=self.r)

    def scan_config(self) -> ScanConfig:
        spec = self.spec()
        w = max(default_window(self.n), fit_min_len(spec))
        u = self.u_n if self.u_n is not None else w
        v = self.v_n if self.v_n is not None else w
        stride = self.stride if self.stride is not None else auto_stride(self.n, v)
        return ScanConfig(u_n=u, v_n=v, stride=stride, alpha=self.alpha)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class RepRecord:
    rep: int
    q_n: Optional[float] = None
    reject: Optional[bool] = None
    k_hat: Optional[Tuple[int, int]] = None
    error: Optional[str] = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rejection_frequency: float
    completed: int
    failed: int
    records: List[RepRecord]
    true_breaks: Optional[Tuple[int, int]] = None

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "rejection_frequency": self.rejection_frequency,
            "completed": self.completed,
            "failed": self.failed,
            "true_breaks": list(self.true_breaks) if self.true_breaks else None,
            "records": [asdict(r) for r in self.records],
        }

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def _one_rep(config: ExperimentConfig, rep: int) -> RepRecord:
    spec = config.spec()
    seed = SeedSpec(config.seed, stream=rep)
    try:
        if config.is_power:
            design = EpidemicDesign(np.asarray(config.theta0),
                                    np.asarray(config.theta1),
                                    config.tau1, config.tau2)
            series, _ = simulate_epidemic(spec, design, config.n, config.burnin, seed)
        else:
            series = simulate_null(spec, np.asarray(config.theta0), config.n,
                                   config.burnin, seed)
        result = scan(spec, series, config.scan_config())
        return RepRecord(rep=rep, q_n=float(result.q_n), reject=bool(result.reject),
                         k_hat=result.k_hat)
    except EpiscanError as exc:
        return RepRecord(rep=rep, error=str(exc))


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Replicate simulate -> scan -> decide over independent seed streams."""
    if config.n_jobs > 1:
        records = Parallel(n_jobs=config.n_jobs)(
            delayed(_one_rep)(config, rep) for rep in range(config.reps)
        )
    else:
        records = [_one_rep(config, rep) for rep in range(config.reps)]
    records = sorted(records, key=lambda r: r.rep)
    done = [r for r in records if r.error is None]
    freq = float(np.mean([r.reject for r in done])) if done else float("nan")
    breaks = None
    if config.is_power:
        design = EpidemicDesign(np.asarray(config.theta0), np.asarray(config.theta1),
                                config.tau1, config.tau2)
        breaks = design.breaks(config.n)
    return ExperimentResult(
        config=config,
        rejection_frequency=freq,
        completed=len(done),
        failed=len(records) - len(done),
        records=records,
        true_breaks=breaks,
    )
