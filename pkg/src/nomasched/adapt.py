"""Threshold adaptation toward temporal demands.

Two update rules: a harmonic-step stochastic-approximation solver for
equality demands, and a constant-step heuristic that lifts thresholds only
while lower demands are unmet. Single steps carry whatever arithmetic the
state holds (Fractions stay exact); run_adaptation is the compiled float
loop for multi-million-slot runs, plus an optimality verifier for the
operating point it lands on.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from ._engine import algorithm2_chunk, rm_equality_chunk
from .core import TemporalDemands, VirtualUser
from .scheduler import CHUNK, PerturbationConfig, ScheduleTrace

RM_EQUALITY = "rm-equality"
ALGORITHM2 = "algorithm2"
MODES = (RM_EQUALITY, ALGORITHM2)

HARMONIC = "harmonic"
CONSTANT = "constant"

# Share residual above which a finished run is flagged as non-converged.
# Diagnostic only: infeasible demands admit no root, so no threshold vector
# can push the residual to zero.
CONVERGENCE_RESIDUAL = 0.05


def harmonic_steps():
    """Step sizes 1/t from t=1: divergent sum, summable squares."""
    t = 1
    while True:
        yield Fraction(1, t)
        t += 1


@dataclass(frozen=True)
class AdaptState:
    """Threshold vector plus the running shares behind it.

    t is the 1-based index of the next slot, so a fresh state's first
    harmonic update uses step 1/1.
    """

    lam: tuple
    shares: tuple
    t: int = 1
    step_mode: str = HARMONIC
    s: float | None = None

    def __post_init__(self):
        if len(self.shares) != len(self.lam):
            raise ValueError("thresholds and shares must have equal length")
        if self.t < 1:
            raise ValueError("slot counter starts at 1")
        if self.step_mode not in (HARMONIC, CONSTANT):
            raise ValueError(f"unknown step mode {self.step_mode!r}")
        if self.step_mode == CONSTANT and not (self.s is not None and self.s > 0):
            raise ValueError("constant mode needs a positive step size")
        for a in self.shares:
            if not -1e-9 <= a <= 1 + 1e-9:
                raise ValueError("shares must lie in [0, 1]")

    @classmethod
    def fresh(cls, n: int, step_mode: str = HARMONIC, s: float | None = None):
        zero = (Fraction(0),) * n
        return cls(lam=zero, shares=zero, t=1, step_mode=step_mode, s=s)

    def step_size(self):
        return Fraction(1, self.t) if self.step_mode == HARMONIC else self.s


def _updated_shares(state: AdaptState, decision: VirtualUser) -> tuple:
    t = state.t
    return tuple(
        a + Fraction(1, t) * ((1 if (i + 1) in decision else 0) - a)
        for i, a in enumerate(state.shares)
    )


def rm_equality_step(state: AdaptState, decision: VirtualUser, w) -> AdaptState:
    """One root-finding step for equality demands A_i = w_i:
    lambda_i -= s_t * (1{u_i in decision} - w_i)."""
    if len(w) != len(state.lam):
        raise ValueError("demand vector length mismatch")
    shares = _updated_shares(state, decision)
    s = state.step_size()
    lam = tuple(
        l - s * ((1 if (i + 1) in decision else 0) - w[i])
        for i, l in enumerate(state.lam)
    )
    return replace(state, lam=lam, shares=shares, t=state.t + 1)


def algorithm2_step(
    state: AdaptState, decision: VirtualUser, lower, s: float | None = None
) -> AdaptState:
    """One constant-step heuristic update for lower demands.

    Every threshold shrinks toward the current minimum in proportion to its
    scheduling surplus; users sitting at the minimum are lifted while short
    of their demand, and everyone is lifted while the minimum is negative.
    """
    if len(lower) != len(state.lam):
        raise ValueError("demand vector length mismatch")
    s = state.s if s is None else s
    if s is None or s <= 0:
        raise ValueError("constant step size required")
    shares = _updated_shares(state, decision)
    old = state.lam
    lam_min = min(old)
    lam = []
    for i, l in enumerate(old):
        ind = 1 if (i + 1) in decision else 0
        new = l - s * (l - lam_min) * (ind - lower[i])
        if l == lam_min:
            if shares[i] < lower[i]:
                new = new + s * (lower[i] - shares[i])
            if lam_min < 0:
                new = new + s
        lam.append(new)
    return replace(state, lam=tuple(lam), shares=shares, t=state.t + 1)


@dataclass(frozen=True)
class SlacknessEntry:
    """Optimality residuals for one user at an operating point."""

    user: int
    multiplier: float
    share: float
    nonnegativity: float
    slackness: float
    lower_gap: float
    upper_gap: float
    ok: bool


@dataclass(frozen=True)
class SlacknessReport:
    eps: float
    entries: tuple[SlacknessEntry, ...]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def to_text(self) -> str:
        lines = []
        for e in self.entries:
            verdict = "pass" if e.ok else "fail"
            lines.append(
                f"user {e.user}: {verdict} lambda={e.multiplier:.6g} "
                f"A={e.share:.6g} slackness={e.slackness:.3g} "
                f"lower_gap={e.lower_gap:.3g} upper_gap={e.upper_gap:.3g}"
            )
        return "\n".join(lines)


def check_complementary_slackness(
    lam, shares, demands: TemporalDemands, eps: float = 0.01
) -> SlacknessReport:
    """Verify multiplier nonnegativity, slackness |lambda_i (A_i - lower_i)|,
    and the demand box, all to tolerance eps."""
    lo = demands.lower_array()
    hi = demands.upper_array()
    entries = []
    for i, (l, a) in enumerate(zip(lam, shares)):
        l, a = float(l), float(a)
        nonneg = max(0.0, -l)
        slack = abs(l * (a - lo[i]))
        lower_gap = max(0.0, lo[i] - a)
        upper_gap = max(0.0, a - hi[i])
        ok = nonneg <= eps and slack <= eps and lower_gap <= eps and upper_gap <= eps
        entries.append(
            SlacknessEntry(i + 1, l, a, nonneg, slack, lower_gap, upper_gap, ok)
        )
    return SlacknessReport(eps=eps, entries=tuple(entries))


@dataclass(frozen=True)
class ThresholdHistory:
    """Threshold trajectory sampled on the snapshot grid."""

    slots: np.ndarray
    thresholds: np.ndarray
    shares: np.ndarray
    utility: np.ndarray

    def write_csv(self, path) -> None:
        n = self.thresholds.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["t"]
                + [f"lambda_{i + 1}" for i in range(n)]
                + [f"A_{i + 1}" for i in range(n)]
                + ["U_t"]
            )
            for k, t in enumerate(self.slots):
                writer.writerow(
                    [int(t)]
                    + [repr(float(v)) for v in self.thresholds[k]]
                    + [repr(float(v)) for v in self.shares[k]]
                    + [repr(float(self.utility[k]))]
                )


@dataclass(frozen=True)
class AdaptationResult:
    thresholds: np.ndarray
    trace: ScheduleTrace
    history: ThresholdHistory
    share_residual: float
    converged: bool


def run_adaptation(
    source,
    demands: TemporalDemands,
    mode: str,
    slots: int,
    rng: np.random.Generator,
    *,
    s: float = 1e-3,
    sampling_h: float = 0.1,
    perturbation: PerturbationConfig | None = None,
    record_decisions: bool = False,
    record_values: bool = False,
) -> AdaptationResult:
    """Interleave threshold decisions with the chosen update rule.

    Starts from zero thresholds; exact measure ties fall to the lowest
    family index. Decisions see perturbation noise when configured, the
    utility never does. The residual (and convergence flag) compares final
    shares against the demand box.
    """
    if mode not in MODES:
        raise ValueError(f"unknown adaptation mode {mode!r}")
    if slots < 1:
        raise ValueError("need at least one slot")
    if not 0 < sampling_h <= 1:
        raise ValueError("sampling fraction must lie in (0, 1]")
    if s <= 0:
        raise ValueError("step size must be positive")
    family = source.family
    if demands.n != family.n:
        raise ValueError("demand vector length mismatch")
    if mode == RM_EQUALITY and not demands.is_equality:
        raise ValueError("rm-equality needs equality demands")
    if mode == ALGORITHM2 and any(u != 1 for u in demands.upper):
        raise ValueError("algorithm2 handles lower demands only")

    n, m = family.n, family.m
    started = time.perf_counter()
    members = family.membership_matrix().astype(bool)
    membership = family.membership_matrix().astype(np.int64)
    w = demands.lower_array()
    lam = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    decision_counts = np.zeros(m, dtype=np.int64)
    value_sum = 0.0
    log = np.empty(slots, dtype=np.int32) if record_decisions else None
    vlog = np.empty(slots, dtype=np.float32) if record_values else None

    stride = max(1, int(sampling_h * slots))
    snapshots = list(range(stride, slots + 1, stride))
    if snapshots[-1] != slots:
        snapshots.append(slots)
    snap_iter = iter(snapshots)
    next_snap = next(snap_iter)
    sample_slots, utility_series, share_series, threshold_series = [], [], [], []

    perturbed = perturbation is not None and perturbation.enabled
    done = 0
    while done < slots:
        count = min(CHUNK, slots - done)
        values = source.sample_values(rng, count)
        decide_on = values
        if perturbed:
            noise = rng.uniform(
                -1.0 / perturbation.l, 1.0 / perturbation.l, size=values.shape
            )
            decide_on = values + noise
        dec_out = np.empty(count, dtype=np.int32)

        local = 0
        while local < count:
            upto = count
            if next_snap is not None and next_snap - done <= count:
                upto = next_snap - done
            if mode == RM_EQUALITY:
                value_sum += rm_equality_chunk(
                    decide_on[local:upto],
                    values[local:upto],
                    members,
                    w,
                    lam,
                    counts,
                    done + local + 1,
                    True,
                    s,
                    dec_out[local:upto],
                )
            else:
                value_sum += algorithm2_chunk(
                    decide_on[local:upto],
                    values[local:upto],
                    members,
                    w,
                    lam,
                    counts,
                    done + local + 1,
                    s,
                    dec_out[local:upto],
                )
            decision_counts += np.bincount(dec_out[local:upto], minlength=m)
            local = upto
            if next_snap is not None and done + local == next_snap:
                t = done + local
                sample_slots.append(t)
                utility_series.append(value_sum / t)
                share_series.append(counts / t)
                threshold_series.append(lam.copy())
                next_snap = next(snap_iter, None)
        if log is not None:
            log[done : done + count] = dec_out
        if vlog is not None:
            vlog[done : done + count] = values[np.arange(count), dec_out]
        done += count

    shares = counts / slots
    lo, hi = demands.lower_array(), demands.upper_array()
    violations = np.maximum(0.0, np.maximum(lo - shares, shares - hi))
    residual = (
        float(np.abs(shares - w).max())
        if mode == RM_EQUALITY
        else float(violations.max())
    )
    trace = ScheduleTrace(
        slots=slots,
        decision_counts=decision_counts,
        user_counts=counts.copy(),
        shares=shares,
        utility=value_sum / slots,
        sample_slots=np.asarray(sample_slots, dtype=np.int64),
        utility_series=np.asarray(utility_series),
        share_series=np.asarray(share_series),
        violations=violations,
        wall_seconds=time.perf_counter() - started,
        demands=demands,
        threshold_series=np.asarray(threshold_series),
        final_thresholds=lam.copy(),
        decisions=log,
        values=vlog,
    )
    history = ThresholdHistory(
        slots=trace.sample_slots,
        thresholds=trace.threshold_series,
        shares=trace.share_series,
        utility=trace.utility_series,
    )
    return AdaptationResult(
        thresholds=lam,
        trace=trace,
        history=history,
        share_residual=residual,
        converged=residual <= CONVERGENCE_RESIDUAL,
    )
