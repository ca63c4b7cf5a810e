"""Average-reward optimal policy for two streams via value iteration.

The two-queue continuous-time decision process (arrivals, per-job deadline
expiries, and a serve-one-queue action) is uniformized at a dominating
rate and solved by relative value iteration with the span seminorm as the
stopping rule. Queue lengths are truncated at a cap; arrivals into a full
queue are lost, and cap adequacy can be checked against the analytic tail
mass and by doubling the cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .queueing import QueueParams, stationary
from .sim import QueuePolicy
from .streams import StreamSpec

DEFAULT_CAP = 150
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 10**6

IDLE, SERVE_1, SERVE_2 = 0, 1, 2


@dataclass(frozen=True)
class SdpModel:
    stream1: StreamSpec
    stream2: StreamSpec
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.cap < 1:
            raise ConfigError(f"cap must be >= 1, got {self.cap}")

    @property
    def uniformization_rate(self) -> float:
        s1, s2 = self.stream1, self.stream2
        return (s1.arrival_rate + s2.arrival_rate
                + max(s1.service_rate, s2.service_rate)
                + self.cap * (s1.deadline_rate + s2.deadline_rate))


@dataclass
class SdpSolution:
    gain: float
    bias: np.ndarray = field(repr=False)
    policy: np.ndarray = field(repr=False)  # action per (l1, l2)
    iterations: int


def tail_mass(stream: StreamSpec, share: float, cap: int) -> float:
    """Stationary probability mass beyond the cap under a fixed share."""
    p = QueueParams(stream.arrival_rate, stream.service_rate * share, stream.deadline_rate)
    head = sum(stationary(p, l) for l in range(cap + 1))
    return max(0.0, 1.0 - head)


def solve(model: SdpModel, tol: float = DEFAULT_TOL,
          max_iters: int = DEFAULT_MAX_ITERS) -> SdpSolution:
    """Relative value iteration on the uniformized chain."""
    if not (tol > 0):
        raise ConfigError(f"tol must be > 0, got {tol}")
    s1, s2 = model.stream1, model.stream2
    L = model.cap
    lam = model.uniformization_rate
    l1 = np.arange(L + 1, dtype=float)[:, None]
    l2 = np.arange(L + 1, dtype=float)[None, :]
    r1, r2 = s1.arrival_rate, s2.arrival_rate
    mu1, mu2 = s1.service_rate, s2.service_rate
    exp1 = l1 * s1.deadline_rate  # per-state expiry rates
    exp2 = l2 * s2.deadline_rate
    reward1 = s1.reward * mu1
    reward2 = s2.reward * mu2
    can1 = np.broadcast_to(l1 > 0, (L + 1, L + 1))
    can2 = np.broadcast_to(l2 > 0, (L + 1, L + 1))
    base_out = r1 + r2 + exp1 + exp2  # blocked arrivals self-loop, kept in rates

    V = np.zeros((L + 1, L + 1))
    up1 = np.empty_like(V)
    up2 = np.empty_like(V)
    dn1 = np.empty_like(V)
    dn2 = np.empty_like(V)
    for it in range(1, max_iters + 1):
        up1[:-1, :] = V[1:, :]
        up1[-1, :] = V[-1, :]  # arrival lost at the cap
        up2[:, :-1] = V[:, 1:]
        up2[:, -1] = V[:, -1]
        dn1[1:, :] = V[:-1, :]
        dn1[0, :] = 0.0  # zero expiry rate there anyway
        dn2[:, 1:] = V[:, :-1]
        dn2[:, 0] = 0.0
        common = r1 * up1 + r2 * up2 + exp1 * dn1 + exp2 * dn2
        q_idle = common + (lam - base_out) * V
        q1 = np.where(can1, common + reward1 + mu1 * dn1 + (lam - base_out - mu1) * V,
                      -np.inf)
        q2 = np.where(can2, common + reward2 + mu2 * dn2 + (lam - base_out - mu2) * V,
                      -np.inf)
        # idle is legal only when both queues are empty (work conservation)
        best = np.maximum(q1, q2)
        best[0, 0] = q_idle[0, 0]
        V_new = best / lam
        diff = V_new - V
        span = diff.max() - diff.min()
        V_new -= V_new[0, 0]
        V = V_new
        if span < tol:
            gain = float(lam * 0.5 * (diff.max() + diff.min()))
            policy = np.where(q1 >= q2, SERVE_1, SERVE_2).astype(np.int8)
            policy[(np.broadcast_to(l1 == 0, policy.shape))
                   & np.broadcast_to(l2 == 0, policy.shape)] = IDLE
            policy[0, 1:] = SERVE_2
            policy[1:, 0] = SERVE_1
            return SdpSolution(gain, V, policy, it)
    raise NumericalError(f"value iteration did not converge in {max_iters} iterations")


def gap_percent(gain: float, revenue_rate: float) -> float:
    """Percentage revenue loss of a policy relative to the optimal gain."""
    if gain <= 0:
        raise ConfigError(f"optimal gain must be > 0, got {gain}")
    return 100.0 * (gain - revenue_rate) / gain


class SdpQueuePolicy(QueuePolicy):
    """CTMC-engine adapter replaying a solved two-queue action table."""

    def __init__(self, solution: SdpSolution):
        self.solution = solution

    def bind(self, specs):
        if len(specs) != 2:
            raise ConfigError("the solved policy covers exactly two streams")
        self._full = [s.service_rate for s in specs]
        self._cap = self.solution.policy.shape[0] - 1

    def service_rates(self, lengths):
        l1 = min(lengths[0], self._cap)
        l2 = min(lengths[1], self._cap)
        action = self.solution.policy[l1, l2]
        rates = [0.0, 0.0]
        if action == SERVE_1 and lengths[0] > 0:
            rates[0] = self._full[0]
        elif action == SERVE_2 and lengths[1] > 0:
            rates[1] = self._full[1]
        elif action == IDLE and (lengths[0] > 0 or lengths[1] > 0):
            # beyond-cap fallback: serve the longer nonempty queue
            j = 0 if lengths[0] >= lengths[1] else 1
            rates[j] = self._full[j]
        return rates
