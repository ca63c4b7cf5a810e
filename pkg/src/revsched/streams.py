"""Service-class definitions and reproducible job-trace sampling.

A workload is a set of job streams on a single processor. Stream ``i``
produces jobs by a Poisson process with rate ``arrival_rate``; each job
carries an exponentially distributed execution requirement (mean
``mean_exec``), an exponentially distributed relative deadline (mean
``mean_deadline``), and a fixed per-completion reward.

Sampling is reproducible: every (stream id, quantity kind) pair gets its
own RNG substream derived from the workload seed via
``numpy.random.SeedSequence(seed, spawn_key=(stream_id, kind))``, so adding
or removing a stream never perturbs the samples of the others. Exponential
variates are drawn by inverse CDF, ``-mean * log1p(-u)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

# Substream kinds for the per-stream RNGs.
_KIND_GAP = 0
_KIND_EXEC = 1
_KIND_DEADLINE = 2


@dataclass(frozen=True)
class StreamSpec:
    """Parameters of one service class."""

    id: int
    arrival_rate: float
    mean_exec: float
    mean_deadline: float
    reward: float

    def __post_init__(self):
        if self.id < 0:
            raise ConfigError(f"stream id must be >= 0, got {self.id}")
        for name in ("arrival_rate", "mean_exec", "mean_deadline", "reward"):
            val = getattr(self, name)
            if not (val > 0):
                raise ConfigError(f"stream {self.id}: {name} must be > 0, got {val}")

    @classmethod
    def from_period(cls, id, period, mean_exec, mean_deadline, reward):
        """Alternative constructor taking the mean inter-arrival time."""
        if not (period > 0):
            raise ConfigError(f"stream {id}: period must be > 0, got {period}")
        return cls(id, 1.0 / period, mean_exec, mean_deadline, reward)

    @property
    def service_rate(self) -> float:
        return 1.0 / self.mean_exec

    @property
    def deadline_rate(self) -> float:
        return 1.0 / self.mean_deadline


@dataclass(frozen=True)
class WorkloadSpec:
    """An ordered set of streams plus simulation horizon and base seed."""

    streams: tuple[StreamSpec, ...]
    horizon: float
    seed: int

    def __post_init__(self):
        if not self.streams:
            raise ConfigError("workload needs at least one stream")
        ids = [s.id for s in self.streams]
        if ids != list(range(len(ids))):
            raise ConfigError(f"stream ids must be 0..n-1 without gaps, got {ids}")
        if not (self.horizon > 0):
            raise ConfigError(f"horizon must be > 0, got {self.horizon}")
        if not (0 <= self.seed < 2**64):
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    def with_seed(self, seed: int) -> "WorkloadSpec":
        return replace(self, seed=seed)


@dataclass
class Job:
    """One sampled request."""

    stream: int
    arrival: float
    exec_total: float
    exec_remaining: float
    deadline_abs: float
    reward: float

    def fresh_copy(self) -> "Job":
        """Copy with full execution requirement restored (for reruns)."""
        return Job(self.stream, self.arrival, self.exec_total,
                   self.exec_total, self.deadline_abs, self.reward)


def utilization(spec: WorkloadSpec) -> float:
    """Aggregate offered load sum(mean_exec * arrival_rate)."""
    return sum(s.mean_exec * s.arrival_rate for s in spec.streams)


def is_overloaded(spec: WorkloadSpec) -> bool:
    """Strict overload test; utilization exactly 1.0 counts as not overloaded."""
    return utilization(spec) > 1.0


def _substream(seed: int, stream_id: int, kind: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream_id, kind)))


def _exponential(rng: np.random.Generator, mean: float, n: int) -> np.ndarray:
    # inverse CDF; log1p keeps precision for small u
    return -mean * np.log1p(-rng.random(n))


def sample_trace(spec: WorkloadSpec) -> list[Job]:
    """Sample the merged, arrival-ordered job trace of a workload.

    Only jobs arriving strictly before the horizon are included. Identical
    (spec, seed) pairs always produce identical traces.
    """
    jobs: list[Job] = []
    for s in spec.streams:
        gap_rng = _substream(spec.seed, s.id, _KIND_GAP)
        mean_gap = 1.0 / s.arrival_rate
        arrivals: list[float] = []
        t = 0.0
        chunk = max(16, int(spec.horizon * s.arrival_rate * 1.2) + 16)
        while True:
            gaps = _exponential(gap_rng, mean_gap, chunk)
            times = t + np.cumsum(gaps)
            inside = times[times < spec.horizon]
            arrivals.extend(inside.tolist())
            if len(inside) < len(times):
                break
            t = times[-1]
            chunk = 1024
        n = len(arrivals)
        execs = _exponential(_substream(spec.seed, s.id, _KIND_EXEC), s.mean_exec, n)
        offsets = _exponential(_substream(spec.seed, s.id, _KIND_DEADLINE), s.mean_deadline, n)
        for k in range(n):
            a = arrivals[k]
            jobs.append(Job(s.id, a, float(execs[k]), float(execs[k]),
                            a + float(offsets[k]), s.reward))
    jobs.sort(key=lambda j: (j.arrival, j.stream))
    return jobs


def workload_from_dict(data: dict) -> WorkloadSpec:
    """Build a WorkloadSpec from the JSON file schema.

    Schema: ``{"streams": [{"rate"|"P": ..., "mean_exec": ...,
    "mean_deadline": ..., "value": ...}], "horizon": ..., "seed": ...}``.
    Exactly one of ``rate`` / ``P`` (mean inter-arrival) per stream.
    """
    try:
        raw_streams = data["streams"]
        horizon = data["horizon"]
        seed = data["seed"]
    except KeyError as exc:
        raise ConfigError(f"workload file missing key: {exc}") from exc
    streams = []
    for i, raw in enumerate(raw_streams):
        has_rate = "rate" in raw
        has_period = "P" in raw
        if has_rate == has_period:
            raise ConfigError(f"stream {i}: give exactly one of 'rate' or 'P'")
        try:
            rate = raw["rate"] if has_rate else 1.0 / raw["P"]
            streams.append(StreamSpec(i, rate, raw["mean_exec"],
                                      raw["mean_deadline"], raw["value"]))
        except KeyError as exc:
            raise ConfigError(f"stream {i} missing key: {exc}") from exc
    return WorkloadSpec(tuple(streams), horizon, seed)


def load_workload(path) -> WorkloadSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"workload file not found: {path}")
    with open(path) as fh:
        return workload_from_dict(json.load(fh))
