"""Scenario runner: annulus placement, optional random-walk mobility,
per-slot channel draws with max-min power allocation per virtual user, and
paired benchmark arms on common randomness.

A scenario = placement + channel model + demands + one scheduling or
adaptation mode, plus optional benchmark arms (opportunistic single-user
activation, round robin) that replay the same seeded channel randomness so
utility comparisons are paired.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapt import ALGORITHM2, RM_EQUALITY, run_adaptation
from .channel import (
    ChannelParams,
    RateModel,
    maxmin_pair_sinr,
    maxmin_power_allocation,
    pathloss_db,
    virtual_user_rate,
)
from .core import (
    InfeasibleDemandsError,
    PerformanceSample,
    ResourceLimitError,
    TemporalDemands,
    VirtualUserFamily,
    enumerate_virtual_users,
)
from .feasibility import (
    check_feasibility_box,
    check_feasibility_equality,
    compute_region,
    violated_box_inequality,
    wrr_pattern_from_certificate,
)
from .scheduler import (
    PerturbationConfig,
    RrStrategy,
    ScheduleTrace,
    TbsStrategy,
    WrrStrategy,
    run_strategy,
)

STATIC = "static"
RANDOM_WALK = "random-walk"

TBS = "tbs"
WRR = "wrr"
RR = "rr"
MODES = (TBS, WRR, RR, RM_EQUALITY, ALGORITHM2)
BENCHMARK_ARMS = ("oma", "rr")


@dataclass(frozen=True)
class MobilityConfig:
    """Per-slot two-dimensional random walk, or no motion at all."""

    kind: str = STATIC
    speed_min_mps: float = 1.0
    speed_max_mps: float = 10.0
    slot_duration_s: float = 1e-3

    def __post_init__(self):
        if self.kind not in (STATIC, RANDOM_WALK):
            raise ValueError(f"unknown mobility kind {self.kind!r}")
        if not 0 < self.speed_min_mps <= self.speed_max_mps:
            raise ValueError("need 0 < speed_min <= speed_max")
        if self.slot_duration_s <= 0:
            raise ValueError("slot duration must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    users: int
    demands: TemporalDemands
    n_max: int = 2
    channel: ChannelParams = field(default_factory=ChannelParams)
    rate_model: RateModel = field(default_factory=RateModel)
    slots: int = 5_000_000
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    mode: str = ALGORITHM2
    thresholds: tuple | None = None
    wrr_pattern: tuple | None = None
    perturb_l: int | None = None
    step_size: float = 1e-3
    sampling_h: float = 0.1
    seed: int = 0
    benchmarks: tuple = ()
    shadowing_per_slot: bool = True

    def __post_init__(self):
        if self.users < 1:
            raise ValueError("need at least one user")
        if not 1 <= self.n_max <= self.users:
            raise ValueError("n_max must lie in [1, users]")
        if self.demands.n != self.users:
            raise ValueError("demand vector length must match the user count")
        if self.slots < 1:
            raise ValueError("need at least one slot")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.thresholds is not None and len(self.thresholds) != self.users:
            raise ValueError("thresholds must have one entry per user")
        for arm in self.benchmarks:
            if arm not in BENCHMARK_ARMS:
                raise ValueError(f"unknown benchmark arm {arm!r}")
        if len(set(self.benchmarks)) != len(self.benchmarks):
            raise ValueError("duplicate benchmark arm")
        if self.perturb_l is not None and self.perturb_l < 1:
            raise ValueError("perturbation scale must be a positive integer")
        if self.step_size <= 0:
            raise ValueError("step size must be positive")
        if not 0 < self.sampling_h <= 1:
            raise ValueError("sampling fraction must lie in (0, 1]")

    @property
    def annulus(self) -> tuple[float, float]:
        return (self.channel.inner_radius_m, self.channel.outer_radius_m)


def place_users(n: int, annulus, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. positions uniform over the annulus area: the radius CDF is
    proportional to r^2 - inner^2, angles are uniform."""
    inner, outer = annulus
    if not 0 < inner < outer:
        raise ValueError("need 0 < inner < outer")
    r = np.sqrt(inner**2 + rng.uniform(size=n) * (outer**2 - inner**2))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def _fold_radii(r, inner: float, outer: float):
    """Mirror the radius back into [inner, outer]: the repeated-reflection map
    is a triangle wave of period twice the annulus width."""
    width = outer - inner
    y = np.mod(np.asarray(r, dtype=float) - inner, 2.0 * width)
    return inner + np.minimum(y, 2.0 * width - y)


def _reflect(positions: np.ndarray, inner: float, outer: float) -> np.ndarray:
    r = np.hypot(positions[:, 0], positions[:, 1])
    folded = _fold_radii(r, inner, outer)
    scale = np.divide(folded, r, out=np.ones_like(r), where=r > 0)
    return positions * scale[:, None]


def mobility_step(position, speed_range, slot_duration_s: float, annulus, rng):
    """One random-walk step: uniform direction, uniform speed, mirror
    reflection at both annulus radii."""
    theta = rng.uniform(0.0, 2.0 * np.pi)
    speed = rng.uniform(speed_range[0], speed_range[1])
    step = speed * slot_duration_s
    moved = np.asarray(position, dtype=float) + (
        step * math.cos(theta),
        step * math.sin(theta),
    )
    return _reflect(moved[None, :], annulus[0], annulus[1])[0]


class ChannelSource:
    """Scheduler-facing value source: per-slot channel gains mapped to one
    rate per virtual user via max-min power allocation.

    Gain draws depend only on the user count and positions, never on the
    family, so two sources built over different families from the same seed
    see identical channels (paired benchmark arms).
    """

    def __init__(
        self,
        family: VirtualUserFamily,
        positions,
        channel: ChannelParams | None = None,
        rate_model: RateModel | None = None,
        mobility: MobilityConfig | None = None,
        shadowing_per_slot: bool = True,
    ):
        self.family = family
        self.positions = np.array(positions, dtype=float)
        if self.positions.shape != (family.n, 2):
            raise ValueError("need one (x, y) position per user")
        self.channel = channel if channel is not None else ChannelParams()
        self.rate_model = rate_model if rate_model is not None else RateModel()
        self.mobility = (
            mobility if mobility is not None and mobility.kind != STATIC else None
        )
        self.shadowing_per_slot = shadowing_per_slot
        self.p_max_mw = self.channel.tx_power_budget_mw()
        self.noise_mw = self.channel.noise_power_mw()
        self.bound = self.rate_model.vuser_bound(
            max(len(vu) for vu in family.members)
        )
        self._frozen_shadowing = None
        self._singles = [
            (j, vu.members[0] - 1)
            for j, vu in enumerate(family.members)
            if len(vu) == 1
        ]
        self._pairs = [
            (j, vu.members[0] - 1, vu.members[1] - 1)
            for j, vu in enumerate(family.members)
            if len(vu) == 2
        ]
        self._larger = [
            (j, tuple(u - 1 for u in vu.members))
            for j, vu in enumerate(family.members)
            if len(vu) > 2
        ]

    def _advance(self, rng: np.random.Generator, count: int) -> np.ndarray:
        n = self.family.n
        inner, outer = self.channel.inner_radius_m, self.channel.outer_radius_m
        mob = self.mobility
        theta = rng.uniform(0.0, 2.0 * np.pi, size=(count, n))
        speed = rng.uniform(mob.speed_min_mps, mob.speed_max_mps, size=(count, n))
        dx = speed * np.cos(theta) * mob.slot_duration_s
        dy = speed * np.sin(theta) * mob.slot_duration_s
        distances = np.empty((count, n))
        pos = self.positions
        for t in range(count):
            pos = _reflect(pos + np.column_stack((dx[t], dy[t])), inner, outer)
            distances[t] = np.hypot(pos[:, 0], pos[:, 1])
        self.positions = pos
        return distances

    def sample_gains(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """(count, n) linear power gains; mobility advances before the
        channel draws so arm pairing survives any family shape."""
        n = self.family.n
        if self.mobility is not None:
            distances = self._advance(rng, count)
        else:
            base = np.hypot(self.positions[:, 0], self.positions[:, 1])
            distances = np.broadcast_to(base, (count, n))
        pl = pathloss_db(
            distances,
            self.channel.pathloss_intercept_db,
            self.channel.pathloss_slope_db_decade,
        )
        sigma = self.channel.shadowing_sigma_db
        if sigma > 0:
            if self.shadowing_per_slot:
                x = rng.normal(0.0, sigma, size=(count, n))
            else:
                if self._frozen_shadowing is None:
                    self._frozen_shadowing = rng.normal(0.0, sigma, size=n)
                x = self._frozen_shadowing
        else:
            x = 0.0
        f = rng.exponential(1.0, size=(count, n)) if self.channel.fading else 1.0
        return 10.0 ** (-(pl + x) / 10.0) * f

    def rate_matrix(self, gains) -> np.ndarray:
        """(count, m) virtual-user rates for given gains. Pairs use the exact
        equal-SINR closed form; larger groups fall back to bisection."""
        gains = np.atleast_2d(np.asarray(gains, dtype=float))
        out = np.empty((gains.shape[0], self.family.m))
        snr_scale = self.p_max_mw / self.noise_mw
        for j, i in self._singles:
            out[:, j] = self.rate_model(gains[:, i] * snr_scale)
        for j, a, b in self._pairs:
            strong = np.maximum(gains[:, a], gains[:, b])
            weak = np.minimum(gains[:, a], gains[:, b])
            s = maxmin_pair_sinr(strong, weak, self.p_max_mw, self.noise_mw)
            out[:, j] = 2.0 * self.rate_model(s)
        for j, members in self._larger:
            for t in range(gains.shape[0]):
                g = tuple(gains[t, list(members)])
                alloc = maxmin_power_allocation(g, self.p_max_mw, self.noise_mw)
                out[t, j] = virtual_user_rate(
                    alloc.powers, g, self.noise_mw, self.rate_model
                )
        return out

    def sample_values(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.rate_matrix(self.sample_gains(rng, count))


def draw_performance(
    positions, family: VirtualUserFamily, params: ChannelParams, rng, rate_model=None
) -> PerformanceSample:
    """One slot: sample per-user gains, then run max-min power allocation and
    sum member rates for every virtual user."""
    model = rate_model if rate_model is not None else RateModel()
    source = ChannelSource(family, positions, params, model)
    gains = source.sample_gains(rng, 1)[0]
    p_max, noise = source.p_max_mw, source.noise_mw
    values = []
    for vu in family.members:
        g = tuple(gains[u - 1] for u in vu.members)
        alloc = maxmin_power_allocation(g, p_max, noise)
        values.append(virtual_user_rate(alloc.powers, g, noise, model))
    return PerformanceSample(tuple(values), source.bound)


@dataclass(frozen=True)
class ArmResult:
    name: str
    family: VirtualUserFamily
    trace: ScheduleTrace
    thresholds: np.ndarray | None = None
    share_residual: float | None = None
    converged: bool | None = None


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    positions: np.ndarray
    arms: dict

    @property
    def primary(self) -> ArmResult:
        return self.arms["primary"]


def ensure_feasible(family: VirtualUserFamily, demands: TemporalDemands) -> None:
    """Raise InfeasibleDemandsError unless some stationary schedule meets the
    demand box; the message cites a violated region inequality when the region
    is small enough to compute."""
    if check_feasibility_box(family, demands) is not None:
        return
    detail = "no stationary schedule satisfies the demand box"
    diagnostics = None
    try:
        region = compute_region(family)
        diagnostics = violated_box_inequality(region, demands)
        if diagnostics is not None:
            detail = f"violates {diagnostics.render()}"
    except ResourceLimitError:
        pass
    raise InfeasibleDemandsError(
        f"demands infeasible for n={family.n}, n_max={family.n_max}: {detail}",
        diagnostics=diagnostics,
    )


def _run_arm(
    name: str,
    mode: str,
    family: VirtualUserFamily,
    config: ScenarioConfig,
    positions: np.ndarray,
    rng: np.random.Generator,
    record_decisions: bool,
    record_values: bool,
) -> ArmResult:
    source = ChannelSource(
        family,
        positions,
        config.channel,
        config.rate_model,
        config.mobility,
        config.shadowing_per_slot,
    )
    perturbation = (
        PerturbationConfig(config.perturb_l) if config.perturb_l is not None else None
    )
    common = dict(
        sampling_h=config.sampling_h,
        perturbation=perturbation,
        record_decisions=record_decisions,
        record_values=record_values,
    )
    if mode in (RM_EQUALITY, ALGORITHM2):
        result = run_adaptation(
            source, config.demands, mode, config.slots, rng,
            s=config.step_size, **common,
        )
        return ArmResult(
            name,
            family,
            result.trace,
            thresholds=result.thresholds,
            share_residual=result.share_residual,
            converged=result.converged,
        )
    if mode == TBS:
        thresholds = (
            config.thresholds if config.thresholds is not None else (0.0,) * family.n
        )
        strategy = TbsStrategy(tuple(thresholds))
    elif mode == WRR:
        pattern = config.wrr_pattern
        if pattern is None:
            if not config.demands.is_equality:
                raise ValueError(
                    "weighted round robin needs an explicit pattern or "
                    "equality demands to derive one"
                )
            cert = check_feasibility_equality(family, config.demands.lower)
            if cert is None:
                raise InfeasibleDemandsError(
                    "equality demands admit no stationary schedule"
                )
            pattern = wrr_pattern_from_certificate(cert)
        strategy = WrrStrategy(tuple(pattern))
    else:
        strategy = RrStrategy()
    trace = run_strategy(
        source, strategy, config.demands, config.slots, rng, **common
    )
    thresholds = None
    if mode == TBS:
        thresholds = np.array([float(v) for v in strategy.thresholds])
        trace.final_thresholds = thresholds
        trace.threshold_series = np.tile(thresholds, (len(trace.sample_slots), 1))
    return ArmResult(name, family, trace, thresholds=thresholds)


def run_scenario(
    config: ScenarioConfig,
    *,
    record_decisions: bool = False,
    record_values: bool = False,
) -> ScenarioResult:
    """Place users once, then run the configured mode plus any benchmark arms
    on identically seeded channel randomness. Demands are feasibility-checked
    against the primary family before anything runs."""
    family = enumerate_virtual_users(config.users, config.n_max)
    ensure_feasible(family, config.demands)

    placement_ss, arms_ss = np.random.SeedSequence(config.seed).spawn(2)
    positions = place_users(
        config.users, config.annulus, np.random.default_rng(placement_ss)
    )

    arms = {}
    plan = [("primary", config.mode, config.n_max)]
    for bench in config.benchmarks:
        if bench == "oma":
            plan.append(("oma", config.mode, 1))
        else:
            plan.append(("rr", RR, 1))
    for name, mode, n_max in plan:
        arm_family = enumerate_virtual_users(config.users, n_max)
        arms[name] = _run_arm(
            name,
            mode,
            arm_family,
            config,
            positions.copy(),
            np.random.default_rng(arms_ss),
            record_decisions,
            record_values,
        )
    return ScenarioResult(config=config, positions=positions, arms=arms)


def scenario_adaptation(
    config: ScenarioConfig,
    *,
    record_decisions: bool = False,
    record_values: bool = False,
):
    """Run only the threshold adaptation on the scenario's channel.

    Uses the same placement and channel randomness as run_scenario's primary
    arm, so the resulting trace matches it slot for slot; returns the full
    AdaptationResult (threshold history included) instead of a ScheduleTrace.
    """
    if config.mode not in (RM_EQUALITY, ALGORITHM2):
        raise ValueError(f"mode {config.mode!r} is not an adaptation mode")
    family = enumerate_virtual_users(config.users, config.n_max)
    ensure_feasible(family, config.demands)
    placement_ss, arms_ss = np.random.SeedSequence(config.seed).spawn(2)
    positions = place_users(
        config.users, config.annulus, np.random.default_rng(placement_ss)
    )
    source = ChannelSource(
        family,
        positions,
        config.channel,
        config.rate_model,
        config.mobility,
        config.shadowing_per_slot,
    )
    perturbation = (
        PerturbationConfig(config.perturb_l) if config.perturb_l is not None else None
    )
    return run_adaptation(
        source,
        config.demands,
        config.mode,
        config.slots,
        np.random.default_rng(arms_ss),
        s=config.step_size,
        sampling_h=config.sampling_h,
        perturbation=perturbation,
        record_decisions=record_decisions,
        record_values=record_values,
    )


def write_trace_csv(arm: ArmResult, path) -> None:
    """Sampled trajectory: t, decision, U_t, A_1..A_n, lambda_1..lambda_n."""
    trace = arm.trace
    n = arm.family.n
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "decision", "U_t"]
            + [f"A_{i + 1}" for i in range(n)]
            + [f"lambda_{i + 1}" for i in range(n)]
        )
        for k, t in enumerate(trace.sample_slots):
            decision = ""
            if trace.decisions is not None:
                decision = arm.family.members[int(trace.decisions[t - 1])].label()
            lam = [""] * n
            if trace.threshold_series is not None:
                lam = [repr(float(v)) for v in trace.threshold_series[k]]
            writer.writerow(
                [int(t), decision, repr(float(trace.utility_series[k]))]
                + [repr(float(v)) for v in trace.share_series[k]]
                + lam
            )


def write_summary_csv(result: ScenarioResult, path) -> None:
    """One row per arm: final utility, shares, violations, thresholds."""
    n = result.config.users
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["arm", "slots", "utility"]
            + [f"A_{i + 1}" for i in range(n)]
            + [f"violation_{i + 1}" for i in range(n)]
            + [f"lambda_{i + 1}" for i in range(n)]
            + ["share_residual", "converged", "wall_seconds"]
        )
        for name, arm in result.arms.items():
            lam = [""] * n
            if arm.thresholds is not None:
                lam = [repr(float(v)) for v in arm.thresholds]
            writer.writerow(
                [name, arm.trace.slots, repr(float(arm.trace.utility))]
                + [repr(float(v)) for v in arm.trace.shares]
                + [repr(float(v)) for v in arm.trace.violations]
                + lam
                + [
                    "" if arm.share_residual is None else repr(arm.share_residual),
                    "" if arm.converged is None else str(arm.converged).lower(),
                    f"{arm.trace.wall_seconds:.3f}",
                ]
            )


def write_ecdf_csv(values, path, points: int = 1001) -> None:
    """Empirical CDF of per-slot utilities on an evenly spaced quantile grid."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no recorded values to summarize")
    fractions = np.linspace(0.0, 1.0, points)
    quantiles = np.quantile(values, fractions)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cum_fraction", "utility"])
        for q, v in zip(fractions, quantiles):
            writer.writerow([repr(float(q)), repr(float(v))])


def write_scenario_outputs(result: ScenarioResult, out_dir) -> list:
    """Write per-arm trace (and ECDF when values were recorded) plus the
    cross-arm summary; returns the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, arm in result.arms.items():
        trace_path = out / f"{name}_trace.csv"
        write_trace_csv(arm, trace_path)
        written.append(trace_path)
        if arm.trace.values is not None:
            ecdf_path = out / f"{name}_ecdf.csv"
            write_ecdf_csv(arm.trace.values, ecdf_path)
            written.append(ecdf_path)
    summary = out / "summary.csv"
    write_summary_csv(result, summary)
    written.append(summary)
    return written
