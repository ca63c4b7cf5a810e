"""Scheduling policies for both engines.

Queue-length policies (CTMC engine): fixed fractional sharing and the
priority-index rule. Trace policies: EDF, robust EDF with a reject queue,
the two-phase overload scheduler of Baruah and Haritsa (exact and
mean-only execution knowledge), weighted round-robin emulation of
fractional sharing, and the priority-index rule over sampled jobs.
"""

from __future__ import annotations

import math

from . import allocation, zindex
from .allocation import AllocationVector
from .errors import ConfigError
from .sim import QueuePolicy, TracePolicy
from .streams import Job


# ---------------------------------------------------------------------------
# queue-length policies (CTMC engine)

class FapQueuePolicy(QueuePolicy):
    """Each nonempty queue is served at its fractional share of the rate."""

    def __init__(self, f: AllocationVector):
        self.f = f

    def bind(self, specs):
        if len(self.f) != len(specs):
            raise ConfigError("allocation length does not match stream count")
        self._rates = [f_i * s.service_rate for f_i, s in zip(self.f.fractions, specs)]

    def service_rates(self, lengths):
        return [r if l > 0 else 0.0 for r, l in zip(self._rates, lengths)]


class ZQueuePolicy(QueuePolicy):
    """Serve the highest-index nonempty queue at the full service rate."""

    def __init__(self, table: zindex.PriorityTable):
        self.table = table

    def bind(self, specs):
        self._full = [s.service_rate for s in specs]

    def service_rates(self, lengths):
        rates = [0.0] * len(lengths)
        j = self.table.select(lengths)
        if j is not None:
            rates[j] = self._full[j]
        return rates


# ---------------------------------------------------------------------------
# trace policies

class EdfPolicy(TracePolicy):
    """Earliest absolute deadline first; ties by arrival, then stream id."""

    def choose(self, now):
        if not self.pending:
            return None
        return min(self.pending, key=_edf_key)


def _edf_key(job: Job):
    return (job.deadline_abs, job.arrival, job.stream)


class RedfPolicy(TracePolicy):
    """EDF plus overload rejection of least-value jobs to a reject queue.

    On every arrival the pending set is checked for EDF feasibility (the
    cumulative remaining demand scanned in deadline order must meet every
    deadline); while it is infeasible the single lowest-reward pending job
    (ties: latest deadline) moves to the reject queue. Completions trigger
    resurrection: unexpired rejected jobs are re-admitted highest reward
    first for as long as the pending set stays feasible.

    By default the feasibility scan estimates each job's remaining demand
    from its stream's mean execution time less the service already
    received (the scheduler observes arrivals and deadlines but not
    execution lengths); ``knowledge="exact"`` switches to the true
    remaining execution, making the overload detector clairvoyant.
    """

    def __init__(self, knowledge: str = "mean"):
        if knowledge not in ("exact", "mean"):
            raise ConfigError(f"knowledge must be 'exact' or 'mean', got {knowledge!r}")
        self.knowledge = knowledge

    def bind(self, specs):
        super().bind(specs)
        self._mean_exec = [s.mean_exec for s in specs]
        self.rejected: list[Job] = []

    def _demand(self, job: Job) -> float:
        if self.knowledge == "exact":
            return job.exec_remaining
        served = job.exec_total - job.exec_remaining
        return max(self._mean_exec[job.stream] - served, 0.0)

    def on_arrival(self, job, now):
        self.pending.append(job)
        self._enforce_feasible(now)

    def on_expiry(self, job, now):
        if job in self.pending:
            self.pending.remove(job)
        elif job in self.rejected:
            self.rejected.remove(job)

    def on_completion(self, job, now):
        super().on_completion(job, now)
        self._resurrect(now)

    def choose(self, now):
        if not self.pending:
            return None
        return min(self.pending, key=_edf_key)

    def _feasible(self, now) -> bool:
        demand = 0.0
        for job in sorted(self.pending, key=_edf_key):
            demand += self._demand(job)
            if now + demand > job.deadline_abs + 1e-9:
                return False
        return True

    def _enforce_feasible(self, now):
        while self.pending and not self._feasible(now):
            victim = min(self.pending, key=lambda j: (j.reward, -j.deadline_abs))
            self.pending.remove(victim)
            self.rejected.append(victim)

    def _resurrect(self, now):
        for job in sorted(self.rejected, key=lambda j: (-j.reward, j.deadline_abs)):
            if job.deadline_abs <= now:
                continue  # expired; the engine sweep will collect it
            self.pending.append(job)
            if self._feasible(now):
                self.rejected.remove(job)
            else:
                self.pending.remove(job)
                break


class RobustPolicy(TracePolicy):
    """Two-phase overload scheduler with a guaranteed slack factor.

    Odd phase: the longest eligible job runs non-preemptively until it
    terminates; the phase length is that job's remaining execution at
    phase start. Even phase: the maximum-length job runs, preempted by any
    longer arrival, for 1/(slack-1) of the preceding odd phase. With
    ``knowledge="mean"`` the stream's mean execution time stands in for
    the true requirement when ranking jobs, testing eligibility, and
    budgeting the even phase (the odd phase still ends when its job
    actually terminates).

    Interpretation choices (the source description leaves them open): a
    job is eligible while its estimated remaining work still fits before
    its deadline, falling back to all pending jobs so the processor never
    idles; an expiry of the odd-phase job ends the phase like a
    termination; when the pending set empties the phase machine resets and
    the next arrival starts a fresh odd phase.
    """

    def __init__(self, slack: float, knowledge: str = "exact"):
        if not (slack > 1):
            raise ConfigError(f"slack factor must be > 1, got {slack}")
        if knowledge not in ("exact", "mean"):
            raise ConfigError(f"knowledge must be 'exact' or 'mean', got {knowledge!r}")
        self.slack = slack
        self.knowledge = knowledge

    def bind(self, specs):
        super().bind(specs)
        self._mean_exec = [s.mean_exec for s in specs]
        self.phase = "idle"
        self.odd_job: Job | None = None
        self.odd_start = 0.0
        self.odd_est = 0.0
        self.even_end: float | None = None

    def _est_remaining(self, job: Job) -> float:
        if self.knowledge == "exact":
            return job.exec_remaining
        served = job.exec_total - job.exec_remaining
        return max(self._mean_exec[job.stream] - served, 0.0)

    def _longest(self, now) -> Job:
        eligible = [j for j in self.pending
                    if self._est_remaining(j) <= j.deadline_abs - now]
        candidates = eligible or self.pending
        return max(candidates,
                   key=lambda j: (self._est_remaining(j), -j.deadline_abs,
                                  -j.arrival, -j.stream))

    def choose(self, now):
        if not self.pending:
            self.phase = "idle"
            self.odd_job = None
            self.even_end = None
            return None
        if self.phase == "idle":
            self.odd_job = self._longest(now)
            self.odd_start = now
            self.odd_est = self._est_remaining(self.odd_job)
            self.phase = "odd"
        if self.phase == "odd":
            return self.odd_job
        return self._longest(now)

    def _end_odd(self, now):
        # the even budget comes from the scheduler's view of the odd phase
        odd_len = self.odd_est if self.knowledge == "mean" else now - self.odd_start
        self.even_end = now + odd_len / (self.slack - 1.0)
        self.phase = "even"
        self.odd_job = None

    def on_completion(self, job, now):
        super().on_completion(job, now)
        if self.phase == "odd" and job is self.odd_job:
            self._end_odd(now)

    def on_expiry(self, job, now):
        super().on_expiry(job, now)
        if self.phase == "odd" and job is self.odd_job:
            self._end_odd(now)

    def next_timer(self, now):
        return self.even_end if self.phase == "even" else None

    def on_timer(self, now):
        if self.phase == "even" and self.even_end is not None and now >= self.even_end:
            self.phase = "idle"
            self.even_end = None


class _PerStreamPolicy(TracePolicy):
    """Trace policy keeping one FIFO-ordered list per stream."""

    def bind(self, specs):
        self.specs = specs
        self.queues: list[list[Job]] = [[] for _ in specs]

    def on_arrival(self, job, now):
        self.queues[job.stream].append(job)

    def on_expiry(self, job, now):
        self.queues[job.stream].remove(job)

    def on_completion(self, job, now):
        self.queues[job.stream].remove(job)

    def has_runnable(self):
        return any(self.queues)


class ZTracePolicy(_PerStreamPolicy):
    """Priority-index stream selection over sampled jobs.

    Within the selected stream the earliest-deadline job runs (the index
    only ranks streams; the intra-stream order is an implementation
    choice).
    """

    def __init__(self, table: zindex.PriorityTable):
        self.table = table

    def choose(self, now):
        lengths = [len(q) for q in self.queues]
        j = self.table.select(lengths)
        if j is None:
            return None
        return min(self.queues[j], key=_edf_key)


class FapRoundRobinPolicy(_PerStreamPolicy):
    """Weighted round-robin emulation of fractional sharing.

    Each cycle of length ``quantum`` is split among the streams that are
    backlogged at cycle start, proportionally to their fractions; a stream
    that empties mid-slot forfeits the rest of its slot (shares of idle
    streams are effectively redistributed, keeping the policy non-idling).
    """

    def __init__(self, f: AllocationVector, quantum: float):
        if not (quantum > 0):
            raise ConfigError(f"quantum must be > 0, got {quantum}")
        self.f = f
        self.quantum = quantum

    def bind(self, specs):
        super().bind(specs)
        if len(self.f) != len(specs):
            raise ConfigError("allocation length does not match stream count")
        self._slots: list[tuple[int, float]] = []
        self._slot_idx = 0
        self._slot_end: float | None = None

    def _start_cycle(self, now):
        active = [i for i, q in enumerate(self.queues) if q and self.f[i] > 0]
        if not active:  # only zero-share streams are backlogged
            active = [i for i, q in enumerate(self.queues) if q]
            weights = [1.0] * len(active)
        else:
            weights = [self.f[i] for i in active]
        total = sum(weights)
        self._slots = [(i, self.quantum * w / total) for i, w in zip(active, weights)]
        self._slot_idx = 0
        self._slot_end = None

    def choose(self, now):
        if not any(self.queues):
            self._slots = []
            self._slot_end = None
            return None
        while True:
            if self._slot_idx >= len(self._slots):
                self._start_cycle(now)
            i, budget = self._slots[self._slot_idx]
            if self.queues[i]:
                if self._slot_end is None:
                    self._slot_end = now + budget
                return min(self.queues[i], key=_edf_key)
            self._slot_idx += 1
            self._slot_end = None

    def next_timer(self, now):
        return self._slot_end

    def on_timer(self, now):
        if self._slot_end is not None and now >= self._slot_end:
            self._slot_idx += 1
            self._slot_end = None


# ---------------------------------------------------------------------------
# construction by name

def default_quantum(specs) -> float:
    return min(s.mean_exec for s in specs) / 100.0


def resolve_allocation(specs, f_param) -> AllocationVector:
    """Turn a policy parameter ("auto" or a list of fractions) into a vector."""
    if f_param is None or f_param == "auto":
        return allocation.optimize(specs).f_star
    return AllocationVector.normalized(list(f_param))


def make_policy(name: str, params: dict, specs, engine: str):
    """Build a policy instance for the requested engine.

    Returns the policy object; raises ConfigError for unknown names,
    invalid parameters, or a policy/engine mismatch.
    """
    params = dict(params or {})
    if engine not in ("ctmc", "trace"):
        raise ConfigError(f"unknown engine {engine!r}")
    if name == "edf":
        _require_trace(name, engine)
        return EdfPolicy()
    if name == "redf":
        _require_trace(name, engine)
        return RedfPolicy(params.get("knowledge", "mean"))
    if name == "robust":
        _require_trace(name, engine)
        return RobustPolicy(params.get("slack", 2.0), params.get("knowledge", "exact"))
    if name == "fap":
        f = resolve_allocation(specs, params.get("f", "auto"))
        if engine == "ctmc":
            return FapQueuePolicy(f)
        return FapRoundRobinPolicy(f, params.get("quantum", default_quantum(specs)))
    if name == "policyz":
        f = resolve_allocation(specs, params.get("f", "auto"))
        table = zindex.build_table(specs, f, params.get("l_max", zindex.DEFAULT_LMAX))
        if engine == "ctmc":
            return ZQueuePolicy(table)
        return ZTracePolicy(table)
    raise ConfigError(f"unknown policy {name!r}")


def _require_trace(name, engine):
    if engine != "trace":
        raise ConfigError(f"policy {name!r} needs the trace engine, got {engine!r}")
