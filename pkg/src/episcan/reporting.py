"""CSV ingestion and the JSON detection report."""

import io
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .epidemic_test import ScanConfig, ScanResult, scan
from .model_core import CountSeries, EpiscanError, ModelSpec, Segment


class InputError(EpiscanError, ValueError):
    pass


def ingest_csv(source) -> CountSeries:
    """Read counts from a CSV file, path, or stream.

    One record per line; an optional single header line; the first column is
    the count, further columns are ignored.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        try:
            lines = Path(source).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise InputError(f"cannot read {source}: {exc}") from exc
    values = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        cell = line.split(",")[0].strip()
        try:
            x = float(cell)
        except ValueError:
            if lineno == 1 and not values:
                continue  # header
            raise InputError(f"line {lineno}: non-numeric count {cell!r}") from None
        if not x.is_integer():
            raise InputError(f"line {lineno}: fractional count {cell!r}")
        if x < 0:
            raise InputError(f"line {lineno}: negative count {cell!r}")
        values.append(int(x))
    if not values:
        raise InputError("no counts found in input")
    return CountSeries(np.array(values, dtype=np.int64))


def write_series_csv(series: CountSeries, path):
    Path(path).write_text("y\n" + "\n".join(str(v) for v in series.values) + "\n")


def write_surface_csv(surface, path):
    with open(path, "w") as f:
        f.write("k1,k2,Q\n")
        for (k1, k2), q in sorted(surface.items()):
            f.write(f"{k1},{k2},{q!r}\n")


@dataclass
class RegimeEstimate:
    segment: Tuple[int, int]
    theta_hat: List[float]
    robust_se: List[float]
    converged: bool


@dataclass
class DetectReport:
    n: int
    family: str
    noise: str
    r: Optional[int]
    u_n: int
    v_n: int
    stride: int
    alpha: float
    q_n: float
    c_alpha: float
    reject: bool
    k_hat: Tuple[int, int]
    regimes: List[RegimeEstimate]
    baseline_return_gap: float  # euclidean distance between regime 1 and 3 estimates
    warnings: List[str]
    excluded_pairs: int
    runtime_s: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        runtime = d.pop("runtime_s")
        d["k_hat"] = list(d["k_hat"])
        for reg in d["regimes"]:
            reg["segment"] = list(reg["segment"])
        return {"result": d, "run_info": {"runtime_s": runtime}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, payload: dict) -> "DetectReport":
        d = dict(payload["result"])
        d["k_hat"] = tuple(d["k_hat"])
        d["regimes"] = [
            RegimeEstimate(segment=tuple(r["segment"]), theta_hat=r["theta_hat"],
                           robust_se=r["robust_se"], converged=r["converged"])
            for r in d["regimes"]
        ]
        d["runtime_s"] = payload.get("run_info", {}).get("runtime_s")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "DetectReport":
        return cls.from_dict(json.loads(text))


def _regime(est) -> RegimeEstimate:
    return RegimeEstimate(
        segment=(est.seg.lo, est.seg.hi),
        theta_hat=[float(x) for x in est.theta_hat],
        robust_se=[float(x) for x in est.robust_se],
        converged=bool(est.converged),
    )


def run_detect(series: CountSeries, spec: ModelSpec,
               config: ScanConfig) -> Tuple[DetectReport, ScanResult]:
    """Scan the series and package the decision and per-regime estimates."""
    t0 = time.perf_counter()
    result = scan(spec, series, config)
    left, mid, right = result.theta_hats
    gap = float(np.linalg.norm(np.asarray(left.theta_hat) - np.asarray(right.theta_hat)))
    report = DetectReport(
        n=len(series),
        family=spec.family,
        noise=spec.noise,
        r=spec.r,
        u_n=config.u_n,
        v_n=config.v_n,
        stride=config.stride,
        alpha=config.alpha,
        q_n=float(result.q_n),
        c_alpha=float(result.c_alpha),
        reject=bool(result.reject),
        k_hat=result.k_hat,
        regimes=[_regime(left), _regime(mid), _regime(right)],
        baseline_return_gap=gap,
        warnings=list(result.warnings),
        excluded_pairs=len(result.excluded_pairs),
        runtime_s=time.perf_counter() - t0,
    )
    return report, result
