"""Monte-Carlo critical values for the scan statistic's limiting distribution.

The null limit is ``sup over 0 <= s < t <= 1 of ||W(s) - W(t)||^2`` where W is
a d-dimensional Brownian bridge.  Quantiles are estimated by simulating the
bridge on a uniform grid; a default table precomputed at 5000 replications on
a grid of size 1000 ships with the package.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from . import _kernels
from .model_core import EpiscanError

DEFAULT_REPS = 5000
DEFAULT_GRID = 1000

# precomputed with reps=5000, grid=1000
DEFAULT_ENTRIES: Dict[Tuple[int, float], float] = {
    (1, 0.01): 3.907, (2, 0.01): 7.320, (3, 0.01): 12.384,
    (4, 0.01): 16.004, (5, 0.01): 19.039,
    (1, 0.05): 2.973, (2, 0.05): 5.690, (3, 0.05): 8.948,
    (4, 0.05): 11.708, (5, 0.05): 14.471,
    (1, 0.10): 2.503, (2, 0.10): 4.988, (3, 0.10): 7.650,
    (4, 0.10): 9.954, (5, 0.10): 12.410,
}


class QuantileError(EpiscanError, KeyError):
    pass


@dataclass
class QuantileTable:
    entries: Dict[Tuple[int, float], float] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "meta": self.meta,
            "entries": [
                {"d": d, "alpha": a, "c": c}
                for (d, a), c in sorted(self.entries.items())
            ],
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "QuantileTable":
        payload = json.loads(text)
        entries = {
            (int(e["d"]), float(e["alpha"])): float(e["c"])
            for e in payload["entries"]
        }
        return cls(entries=entries, meta=payload.get("meta", {}))

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "QuantileTable":
        return cls.from_json(Path(path).read_text())


def default_table() -> QuantileTable:
    return QuantileTable(
        entries=dict(DEFAULT_ENTRIES),
        meta={"reps": DEFAULT_REPS, "grid": DEFAULT_GRID, "source": "precomputed"},
    )


def _bridge(rng: np.random.Generator, d: int, grid_size: int) -> np.ndarray:
    """Bridge values on the grid {0, 1/G, ..., 1}, shape (G+1, d)."""
    g = grid_size
    incr = rng.normal(scale=np.sqrt(1.0 / g), size=(g, d))
    b = np.vstack([np.zeros((1, d)), np.cumsum(incr, axis=0)])
    tau = np.arange(g + 1)[:, None] / g
    return b - tau * b[-1]


def sup_sq_increment(w: np.ndarray) -> float:
    """max over grid pairs of the squared distance between bridge values."""
    if w.shape[1] == 1:
        return float((w.max() - w.min()) ** 2)
    return float(_kernels.pairwise_sup_sq(np.ascontiguousarray(w)))


def sample_sup(d: int, grid_size: int, seed) -> float:
    """One Monte-Carlo draw of the sup statistic."""
    if d < 1 or grid_size < 2:
        raise ValueError("need d >= 1 and grid_size >= 2")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return sup_sq_increment(_bridge(rng, d, grid_size))


def sample_sups(d: int, reps: int, grid_size: int, seed) -> np.ndarray:
    rng = np.random.default_rng([seed, d])
    return np.array([sup_sq_increment(_bridge(rng, d, grid_size)) for _ in range(reps)])


def empirical_quantile(samples: np.ndarray, alpha: float) -> float:
    """Order statistic at rank ceil((1 - alpha) * reps), 1-based."""
    reps = samples.size
    rank = int(np.ceil((1.0 - alpha) * reps))
    return float(np.sort(samples)[rank - 1])


def bootstrap_quantile_se(samples: np.ndarray, alpha: float,
                          n_boot: int = 200, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    reps = samples.size
    qs = [
        empirical_quantile(samples[rng.integers(0, reps, reps)], alpha)
        for _ in range(n_boot)
    ]
    return float(np.std(qs))


def build_table(dims: Iterable[int], alphas: Iterable[float], reps: int = DEFAULT_REPS,
                grid_size: int = DEFAULT_GRID, seed: int = 0,
                cache_path=None) -> QuantileTable:
    """Estimate the quantiles by Monte-Carlo and optionally persist them."""
    if reps < 100:
        raise ValueError("reps must be >= 100")
    entries = {}
    for d in dims:
        sups = sample_sups(d, reps, grid_size, seed)
        for a in alphas:
            entries[(d, float(a))] = empirical_quantile(sups, a)
    table = QuantileTable(
        entries=entries,
        meta={"reps": reps, "grid": grid_size, "seed": seed},
    )
    if cache_path is not None:
        table.save(cache_path)
    return table


def lookup(table: Optional[QuantileTable], d: int, alpha: float,
           on_demand: bool = False, reps: int = DEFAULT_REPS,
           grid_size: int = DEFAULT_GRID, seed: int = 0) -> float:
    """Critical value for dimension d at level alpha."""
    table = table or default_table()
    key = (int(d), float(alpha))
    if key in table.entries:
        return table.entries[key]
    if on_demand:
        built = build_table([d], [alpha], reps=reps, grid_size=grid_size, seed=seed)
        table.entries.update(built.entries)
        return table.entries[key]
    raise QuantileError(f"no critical value for d={d}, alpha={alpha}")
