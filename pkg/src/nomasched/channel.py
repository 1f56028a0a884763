"""Radio environment: pathloss, shadowing, Rayleigh fading, SIC-ordered SINRs,
rate models, per-virtual-user max-min power allocation, and the link budget.

All gains, powers, and noise are linear (mW for powers) unless a name says dB.
Interference is accumulated exactly as the SINR definition is written: the
interferer term is weighted by the interferer's own channel gain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    """Cell geometry, link budget, and propagation parameters."""

    outer_radius_m: float = 100.0
    inner_radius_m: float = 20.0
    bandwidth_hz: float = 10e6
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 9.0
    shadowing_sigma_db: float = 8.0
    pathloss_intercept_db: float = 128.1
    pathloss_slope_db_decade: float = 37.6
    max_rate_bps_hz: float = 6.0
    target_edge_snr_db: float = 10.0
    tx_power_dbm: float | None = None
    fading: bool = True

    def __post_init__(self):
        if not 0 < self.inner_radius_m < self.outer_radius_m:
            raise ValueError("need 0 < inner radius < outer radius")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        if self.max_rate_bps_hz <= 0:
            raise ValueError("max rate must be positive")

    def noise_power_dbm(self) -> float:
        return self.noise_psd_dbm_hz + 10 * math.log10(self.bandwidth_hz) + self.noise_figure_db

    def noise_power_mw(self) -> float:
        return dbm_to_mw(self.noise_power_dbm())

    def tx_power_budget_dbm(self) -> float:
        if self.tx_power_dbm is not None:
            return self.tx_power_dbm
        return derive_tx_power_budget(self)

    def tx_power_budget_mw(self) -> float:
        return dbm_to_mw(self.tx_power_budget_dbm())


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def pathloss_db(distance_m, intercept_db: float = 128.1, slope_db_decade: float = 37.6):
    """Distance-dependent pathloss; the distance enters in kilometers."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = intercept_db + slope_db_decade * np.log10(d / 1000.0)
    return float(out) if np.isscalar(distance_m) else out


def derive_tx_power_budget(params: ChannelParams) -> float:
    """Transmit power (dBm) making the target average SNR achievable for a lone
    user at the cell boundary, averaging over pathloss only."""
    edge_pl = pathloss_db(
        params.outer_radius_m, params.pathloss_intercept_db, params.pathloss_slope_db_decade
    )
    return params.target_edge_snr_db + params.noise_power_dbm() + edge_pl


def sample_channel_gain(distance_m, params: ChannelParams, rng, size=None):
    """Linear power gain |h|^2 = 10^(-(PL+X)/10) * F with X dB-domain shadowing
    and F unit-mean exponential fading, drawn fresh per call (per slot)."""
    pl = pathloss_db(distance_m, params.pathloss_intercept_db, params.pathloss_slope_db_decade)
    shape = np.shape(distance_m) if size is None else size
    x = (
        rng.normal(0.0, params.shadowing_sigma_db, shape)
        if params.shadowing_sigma_db > 0
        else np.zeros(shape)
    )
    f = rng.exponential(1.0, shape) if params.fading else np.ones(shape)
    gain = 10.0 ** (-(pl + x) / 10.0) * f
    return float(gain) if (size is None and np.isscalar(distance_m)) else gain


def sic_order(gains) -> list[int]:
    """Member indices sorted strongest first; equal gains rank the lower index
    as stronger so the ordering stays deterministic."""
    return sorted(range(len(gains)), key=lambda i: (-gains[i], i))


def sic_interference_sets(gains) -> list[list[int]]:
    """For each member, the members it cannot cancel: those with strictly larger
    gain (lower index wins a tie)."""
    order = sic_order(gains)
    out: list[list[int]] = [[] for _ in gains]
    for pos, i in enumerate(order):
        out[i] = sorted(order[:pos])
    return out


def sinr(i: int, powers, gains, noise_mw: float) -> float:
    """SINR of member i under the given interference structure."""
    if noise_mw <= 0:
        raise ValueError("noise power must be positive")
    interferers = sic_interference_sets(gains)[i]
    denom = sum(powers[l] * gains[l] for l in interferers) + noise_mw
    return powers[i] * gains[i] / denom


@dataclass(frozen=True)
class RateModel:
    """SINR-to-rate mapping: pure Shannon, truncated Shannon, or a staircase
    lookup with linear SINR thresholds (strictly increasing)."""

    kind: str = "truncated"
    gamma_max: float = 6.0
    thresholds: tuple = ()
    rates: tuple = ()

    def __post_init__(self):
        if self.kind not in ("shannon", "truncated", "staircase"):
            raise ValueError(f"unknown rate model {self.kind!r}")
        if self.kind == "staircase":
            if not self.thresholds:
                raise ValueError("staircase table is empty")
            if list(self.thresholds) != sorted(set(self.thresholds)):
                raise ValueError("staircase thresholds must be strictly increasing")
            if len(self.thresholds) != len(self.rates):
                raise ValueError("staircase thresholds and rates differ in length")

    def __call__(self, sinr_linear):
        s = np.asarray(sinr_linear, dtype=float)
        if np.any(s < 0):
            raise ValueError("SINR must be nonnegative")
        if self.kind == "shannon":
            out = np.log2(1.0 + s)
        elif self.kind == "truncated":
            out = np.minimum(np.log2(1.0 + s), self.gamma_max)
        else:
            idx = np.searchsorted(np.asarray(self.thresholds), s, side="right")
            table = np.concatenate(([0.0], np.asarray(self.rates, dtype=float)))
            out = table[idx]
        return float(out) if np.isscalar(sinr_linear) else out

    def vuser_bound(self, n_max: int) -> float | None:
        """Almost-sure bound on a virtual user's sum rate, where one exists."""
        if self.kind == "truncated":
            return n_max * self.gamma_max
        if self.kind == "staircase":
            return n_max * max(self.rates)
        return None


def rate(sinr_linear, model: RateModel):
    """Per-member rate in bits/s/Hz under the given model."""
    return model(sinr_linear)


def load_staircase(path) -> RateModel:
    """Staircase table from a text file of 'SINR-threshold-dB rate' lines."""
    thresholds_db = []
    rates = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'threshold_db rate'")
            thresholds_db.append(float(parts[0]))
            rates.append(float(parts[1]))
    if not thresholds_db:
        raise ValueError(f"{path}: staircase table is empty")
    if thresholds_db != sorted(set(thresholds_db)):
        raise ValueError(f"{path}: thresholds must be strictly increasing")
    linear = tuple(10.0 ** (t / 10.0) for t in thresholds_db)
    return RateModel(kind="staircase", thresholds=linear, rates=tuple(rates))


@dataclass(frozen=True)
class PowerAllocation:
    """Max-min split of the power budget across one virtual user's members."""

    powers: tuple
    common_sinr: float
    common_rate: float


def _required_powers(common_sinr: float, gains, noise_mw: float):
    """Back-substitution strongest-first: each member needs enough power to hit
    the common SINR over the interference of the stronger members."""
    order = sic_order(gains)
    powers = [0.0] * len(gains)
    interference = 0.0
    for i in order:
        powers[i] = common_sinr * (interference + noise_mw) / gains[i]
        interference += powers[i] * gains[i]
    return powers


def maxmin_power_allocation(
    gains, p_max_mw: float, noise_mw: float, tol: float = 1e-9, max_iter: int = 200
) -> PowerAllocation:
    """Equalize member SINRs at the largest feasible value by bisection.

    Required total power is strictly increasing in the common SINR, so the
    feasibility boundary is a single point; tol is absolute on the SINR.
    """
    if p_max_mw <= 0 or noise_mw <= 0 or any(g <= 0 for g in gains):
        raise ValueError("powers, noise, and gains must be positive")
    if len(gains) == 1:
        s = p_max_mw * gains[0] / noise_mw
        return PowerAllocation((p_max_mw,), s, math.log2(1.0 + s))
    lo = 0.0
    hi = p_max_mw * max(gains) / noise_mw  # strongest member alone already needs P_max here
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if sum(_required_powers(mid, gains, noise_mw)) <= p_max_mw:
            lo = mid
        else:
            hi = mid
    powers = _required_powers(lo, gains, noise_mw)
    return PowerAllocation(tuple(powers), lo, math.log2(1.0 + lo))


def maxmin_pair_sinr(g_strong, g_weak, p_max_mw, noise_mw):
    """Closed form for two members: the common SINR solves
    (noise/g_weak) s^2 + noise (1/g_strong + 1/g_weak) s = P_max."""
    a = noise_mw / g_weak
    b = noise_mw * (1.0 / g_strong + 1.0 / g_weak)
    return (-b + np.sqrt(b * b + 4.0 * a * p_max_mw)) / (2.0 * a)


def virtual_user_rate(powers, gains, noise_mw: float, model: RateModel) -> float:
    """Sum of member rates for one activated virtual user."""
    return float(sum(model(sinr(i, powers, gains, noise_mw)) for i in range(len(gains))))
