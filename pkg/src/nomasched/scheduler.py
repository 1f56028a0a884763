"""Scheduling strategies and the per-slot simulation loop.

Strategies are memoryless: a decision depends only on the current performance
sample (threshold-based) or the slot index (round robin). run_strategy drives
T slots in vectorized chunks and accumulates shares from integer activation
counts, so reported shares are exact ratios rather than drifting running means.

Sources are duck-typed: anything with .family, .bound and
.sample_values(rng, count) works; finite-support sources additionally expose
.exact_support(), which switches TBS runs to an exact rational decision table
(per-outcome tie distributions resolved in Fraction arithmetic, floats only at
the sampling step).
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    PerformanceSample,
    TemporalDemands,
    TieBreakRule,
    TIE_ERROR,
    TIE_LOWEST,
    TieError,
    VirtualUser,
    VirtualUserFamily,
    argmax_with_ties,
    as_fraction,
    scheduling_measure,
)

CHUNK = 1 << 17


@dataclass(frozen=True)
class TbsStrategy:
    """Threshold-based scheduling: argmax_j of R_j plus member thresholds."""

    thresholds: tuple
    tie: TieBreakRule = TieBreakRule()

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(self.thresholds))


@dataclass(frozen=True)
class WrrStrategy:
    """Weighted round robin over a periodic pattern of family indices."""

    pattern: tuple

    def __post_init__(self):
        pattern = tuple(int(j) for j in self.pattern)
        if not pattern:
            raise ValueError("WRR pattern must be nonempty")
        if any(j < 0 for j in pattern):
            raise ValueError("WRR pattern entries are family indices")
        object.__setattr__(self, "pattern", pattern)


@dataclass(frozen=True)
class RrStrategy:
    """Plain round robin, cycling users (their singletons) or the family."""

    over_users: bool = True


@dataclass(frozen=True)
class PerturbationConfig:
    """Additive Unif[-1/l, 1/l] noise on the decision inputs only."""

    l: int
    enabled: bool = True

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 1:
            raise ValueError("perturbation scale l must be an integer >= 1")
        object.__setattr__(self, "l", int(self.l))


@dataclass
class ScheduleTrace:
    """Outcome of one run: exact activation counts, sampled series, residuals."""

    slots: int
    decision_counts: np.ndarray
    user_counts: np.ndarray
    shares: np.ndarray
    utility: float
    sample_slots: np.ndarray
    utility_series: np.ndarray
    share_series: np.ndarray
    violations: np.ndarray
    wall_seconds: float
    demands: TemporalDemands | None = None
    threshold_series: np.ndarray | None = None
    final_thresholds: np.ndarray | None = None
    decisions: np.ndarray | None = None
    values: np.ndarray | None = None


def tbs_decide(
    sample: PerformanceSample,
    thresholds,
    family: VirtualUserFamily,
    tie: TieBreakRule = TieBreakRule(),
    rng: np.random.Generator | None = None,
) -> int:
    """Single-slot threshold decision; ties resolved by the given rule."""
    measures = scheduling_measure(sample.values, thresholds, family)
    tied = argmax_with_ties(measures)
    if len(tied) == 1:
        return tied[0]
    dist = tie.resolve(tied)
    if tie.mode == TIE_LOWEST:
        return tied[0]
    if rng is None:
        raise ValueError("stochastic tie-breaking needs an rng")
    probs = np.array([float(q) for q in dist])
    return int(rng.choice(tied, p=probs / probs.sum()))


def wrr_decide(t: int, pattern) -> int:
    """Family index scheduled at slot t (0-based) under the periodic pattern."""
    if not pattern:
        raise ValueError("WRR pattern must be nonempty")
    return pattern[t % len(pattern)]


def perturb(
    sample: PerformanceSample, cfg: PerturbationConfig, rng: np.random.Generator
) -> PerformanceSample:
    """Perturbed copy used for deciding; keep the original for utility."""
    if not cfg.enabled:
        return sample
    noise = rng.uniform(-1.0 / cfg.l, 1.0 / cfg.l, size=len(sample.values))
    values = tuple(float(v) + e for v, e in zip(sample.values, noise))
    bound = None if sample.bound is None else float(sample.bound) + 1.0 / cfg.l
    return PerformanceSample(values, bound)


def _singleton_indices(family: VirtualUserFamily) -> list[int]:
    out = []
    for u in range(1, family.n + 1):
        try:
            out.append(family.index_of(VirtualUser((u,))))
        except ValueError:
            raise ValueError(
                f"round robin over users needs a singleton for user {u}"
            ) from None
    return out


def _pattern_of(strategy, family: VirtualUserFamily) -> np.ndarray:
    if isinstance(strategy, WrrStrategy):
        pattern = strategy.pattern
        if max(pattern) >= family.m:
            raise ValueError("WRR pattern index exceeds the family")
    elif strategy.over_users:
        pattern = _singleton_indices(family)
    else:
        pattern = list(range(family.m))
    return np.asarray(pattern, dtype=np.int64)


class _ExactDecisionTable:
    """Per-outcome decisions for TBS on a finite-support source, resolved in
    exact arithmetic once, then sampled by index."""

    def __init__(self, support, family, thresholds, tie):
        lam = [as_fraction(x) for x in thresholds]
        offsets = family.threshold_offsets(lam)
        self.probs = np.array([float(p) for _, p in support])
        self.probs /= self.probs.sum()
        self.values = np.array(
            [[float(v) for v in values] for values, _ in support]
        )
        self.fixed = np.full(len(support), -1, dtype=np.int64)
        self.tied: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for r, (values, _) in enumerate(support):
            measures = [values[j] + offsets[j] for j in range(family.m)]
            tied = argmax_with_ties(measures)
            dist = tie.resolve(tied)
            if tie.mode == TIE_LOWEST or len(tied) == 1:
                self.fixed[r] = tied[0]
                continue
            cum = np.cumsum([float(q) for q in dist])
            cum[-1] = 1.0
            self.tied[r] = (np.asarray(tied, dtype=np.int64), cum)

    def decide(self, outcome_idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        dec = self.fixed[outcome_idx]
        if self.tied:
            u = rng.random(len(outcome_idx))
            for r, (tied, cum) in self.tied.items():
                mask = outcome_idx == r
                if mask.any():
                    dec[mask] = tied[np.searchsorted(cum, u[mask], side="right")]
        return dec


def _float_tbs_decisions(values, offsets, tie, rng) -> np.ndarray:
    """Vectorized argmax with exact-equality tie handling on float measures."""
    measures = values + offsets
    dec = np.argmax(measures, axis=1)
    if tie.mode != TIE_LOWEST:
        best = np.take_along_axis(measures, dec[:, None], axis=1)
        tie_rows = np.flatnonzero((measures == best).sum(axis=1) > 1)
        for row in tie_rows:
            tied = [int(j) for j in np.flatnonzero(measures[row] == best[row])]
            if tie.mode == TIE_ERROR:
                raise TieError(tied)
            dist = tie.resolve(tied)
            probs = np.array([float(q) for q in dist])
            dec[row] = rng.choice(np.asarray(tied), p=probs / probs.sum())
    return dec


def run_strategy(
    source,
    strategy,
    demands: TemporalDemands | None,
    slots: int,
    rng: np.random.Generator,
    *,
    perturbation: PerturbationConfig | None = None,
    sampling_h: float = 0.1,
    record_decisions: bool = False,
    record_values: bool = False,
) -> ScheduleTrace:
    """Run a fixed strategy for T slots and accumulate the trace.

    Utility is the running mean of the chosen virtual user's ORIGINAL value;
    when a perturbation is configured, only the decisions see the noise.
    """
    if slots < 1:
        raise ValueError("need at least one slot")
    if not 0 < sampling_h <= 1:
        raise ValueError("sampling fraction must lie in (0, 1]")
    family = source.family
    n, m = family.n, family.m
    started = time.perf_counter()

    stride = max(1, int(sampling_h * slots))
    snapshots = list(range(stride, slots + 1, stride))
    if snapshots[-1] != slots:
        snapshots.append(slots)

    perturbed = perturbation is not None and perturbation.enabled
    table = None
    if (
        isinstance(strategy, TbsStrategy)
        and not perturbed
        and hasattr(source, "exact_support")
    ):
        table = _ExactDecisionTable(
            source.exact_support(), family, strategy.thresholds, strategy.tie
        )
    pattern = (
        _pattern_of(strategy, family)
        if isinstance(strategy, (WrrStrategy, RrStrategy))
        else None
    )
    if isinstance(strategy, TbsStrategy):
        offsets = np.array(
            [float(o) for o in family.threshold_offsets(strategy.thresholds)]
        )

    membership = family.membership_matrix().astype(np.int64)
    decision_counts = np.zeros(m, dtype=np.int64)
    value_sum = 0.0
    log = np.empty(slots, dtype=np.int32) if record_decisions else None
    vlog = np.empty(slots, dtype=np.float32) if record_values else None
    sample_slots, utility_series, share_series = [], [], []
    snap_iter = iter(snapshots)
    next_snap = next(snap_iter)

    done = 0
    while done < slots:
        count = min(CHUNK, slots - done)
        if table is not None:
            idx = rng.choice(len(table.probs), size=count, p=table.probs)
            dec = table.decide(idx, rng)
            chosen = table.values[idx, dec]
        elif pattern is not None:
            values = source.sample_values(rng, count)
            dec = pattern[(done + np.arange(count)) % len(pattern)]
            chosen = values[np.arange(count), dec]
        else:
            values = source.sample_values(rng, count)
            decide_on = values
            if perturbed:
                noise = rng.uniform(
                    -1.0 / perturbation.l, 1.0 / perturbation.l, size=values.shape
                )
                decide_on = values + noise
            dec = _float_tbs_decisions(decide_on, offsets, strategy.tie, rng)
            chosen = values[np.arange(count), dec]
        if log is not None:
            log[done : done + count] = dec
        if vlog is not None:
            vlog[done : done + count] = chosen

        # Split the chunk at snapshot boundaries so series entries see exact
        # prefix counts.
        local = 0
        while local < count:
            upto = count
            if next_snap is not None and next_snap - done <= count:
                upto = next_snap - done
            decision_counts += np.bincount(dec[local:upto], minlength=m)
            value_sum += float(chosen[local:upto].sum())
            local = upto
            if next_snap is not None and done + local == next_snap:
                t = done + local
                user_counts = membership.T @ decision_counts
                sample_slots.append(t)
                utility_series.append(value_sum / t)
                share_series.append(user_counts / t)
                next_snap = next(snap_iter, None)
        done += count

    user_counts = membership.T @ decision_counts
    shares = user_counts / slots
    if demands is not None:
        lo, hi = demands.lower_array(), demands.upper_array()
        violations = np.maximum(0.0, np.maximum(lo - shares, shares - hi))
    else:
        violations = np.zeros(n)

    return ScheduleTrace(
        slots=slots,
        decision_counts=decision_counts,
        user_counts=user_counts,
        shares=shares,
        utility=value_sum / slots,
        sample_slots=np.asarray(sample_slots, dtype=np.int64),
        utility_series=np.asarray(utility_series),
        share_series=np.asarray(share_series),
        violations=violations,
        wall_seconds=time.perf_counter() - started,
        demands=demands,
        decisions=log,
        values=vlog,
    )
