"""Domain model shared by all modules: users, virtual users, temporal demands,
performance samples, scheduling measures, and temporal-share accounting.

Users are indexed 1..n in all public types and labels; dense arrays indexed
0..n-1 are an internal concern of the numeric helpers.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np


class TieError(RuntimeError):
    """Raised when a scheduling-measure tie occurs under an error-on-tie rule."""

    def __init__(self, tied):
        self.tied = tuple(tied)
        super().__init__(f"scheduling measure tie among virtual users {self.tied}")


class ResourceLimitError(RuntimeError):
    """Raised when an exact computation exceeds its configured size cap."""


class InfeasibleDemandsError(RuntimeError):
    """Raised when temporal demands admit no schedule; may carry diagnostics."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics
        super().__init__(message)


def as_fraction(value) -> Fraction:
    """Coerce ints, strings like '3/10' or '0.1', floats, and Fractions to Fraction.

    Floats go through repr so that 0.1 becomes 1/10, not its binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (float, np.floating)):
        return Fraction(repr(float(value)))
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True, order=True)
class VirtualUser:
    """A nonempty subset of users that may be activated together."""

    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(sorted(set(int(u) for u in self.members)))
        if not members:
            raise ValueError("virtual user needs at least one member")
        if members[0] < 1:
            raise ValueError("user indices start at 1")
        if members != tuple(self.members):
            object.__setattr__(self, "members", members)

    def __contains__(self, user) -> bool:
        return user in self.members

    def __len__(self) -> int:
        return len(self.members)

    def label(self) -> str:
        return "{" + ",".join(str(u) for u in self.members) + "}"


def parse_virtual_user(text: str) -> VirtualUser:
    """Parse the canonical textual form '{1,3}' (spaces tolerated)."""
    body = text.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    parts = [p for p in body.replace(",", " ").split() if p]
    if not parts:
        raise ValueError(f"empty virtual user: {text!r}")
    return VirtualUser(tuple(int(p) for p in parts))


@dataclass(frozen=True)
class VirtualUserFamily:
    """Ordered family of virtual users; the order indexes performance vectors."""

    n: int
    members: tuple[VirtualUser, ...]
    n_max: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one user")
        members = tuple(self.members)
        if len(set(members)) != len(members):
            raise ValueError("duplicate virtual users in family")
        covered = set()
        for vu in members:
            if vu.members[-1] > self.n:
                raise ValueError(f"virtual user {vu.label()} exceeds n={self.n}")
            covered.update(vu.members)
        if covered != set(range(1, self.n + 1)):
            missing = sorted(set(range(1, self.n + 1)) - covered)
            raise ValueError(f"users {missing} appear in no virtual user")
        object.__setattr__(self, "members", members)

    @property
    def m(self) -> int:
        return len(self.members)

    def index_of(self, vu: VirtualUser) -> int:
        return self.members.index(vu)

    def labels(self) -> list[str]:
        return [vu.label() for vu in self.members]

    def membership_matrix(self) -> np.ndarray:
        """(m, n) 0/1 matrix; row j marks the members of virtual user j."""
        mat = np.zeros((self.m, self.n))
        for j, vu in enumerate(self.members):
            for u in vu.members:
                mat[j, u - 1] = 1.0
        return mat

    def threshold_offsets(self, lam):
        """Per-virtual-user sums of member thresholds; exact if lam is exact."""
        if len(lam) != self.n:
            raise ValueError(f"expected {self.n} thresholds, got {len(lam)}")
        return [sum(lam[u - 1] for u in vu.members) for vu in self.members]


def enumerate_virtual_users(n: int, n_max: int) -> VirtualUserFamily:
    """All nonempty user subsets of size <= n_max, ordered by size then
    lexicographically. The order is the canonical index of performance vectors."""
    if not 1 <= n_max <= n:
        raise ValueError(f"need 1 <= n_max <= n, got n_max={n_max}, n={n}")
    members = []
    for k in range(1, n_max + 1):
        for combo in combinations(range(1, n + 1), k):
            members.append(VirtualUser(combo))
    return VirtualUserFamily(n=n, members=tuple(members), n_max=n_max)


@dataclass(frozen=True)
class TemporalDemands:
    """Lower and upper temporal share demands, kept exact as Fractions."""

    lower: tuple[Fraction, ...]
    upper: tuple[Fraction, ...]

    def __post_init__(self):
        lower = tuple(as_fraction(x) for x in self.lower)
        upper = tuple(as_fraction(x) for x in self.upper)
        if len(lower) != len(upper):
            raise ValueError("lower and upper demand lengths differ")
        for lo, hi in zip(lower, upper):
            if not (0 <= lo <= hi <= 1):
                raise ValueError(f"need 0 <= lower <= upper <= 1, got [{lo}, {hi}]")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_lower(cls, lower) -> "TemporalDemands":
        lower = tuple(as_fraction(x) for x in lower)
        return cls(lower, tuple(Fraction(1) for _ in lower))

    @classmethod
    def equality(cls, w) -> "TemporalDemands":
        w = tuple(as_fraction(x) for x in w)
        return cls(w, w)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def is_equality(self) -> bool:
        return self.lower == self.upper

    def lower_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.lower])

    def upper_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.upper])


@dataclass(frozen=True)
class PerformanceSample:
    """One realization of the per-virtual-user performance vector R."""

    values: tuple
    bound: float | None = None

    def __post_init__(self):
        values = tuple(self.values)
        for v in values:
            if not np.isfinite(float(v)):
                raise ValueError("performance values must be finite")
            # The almost-sure bound underpins the optimality arguments; treat
            # a violation as a hard modeling error, not a warning.
            if self.bound is not None and abs(float(v)) > float(self.bound) + 1e-12:
                raise ValueError(f"|R|={v} exceeds bound M={self.bound}")
        object.__setattr__(self, "values", values)


TIE_ERROR = "error"
TIE_LOWEST = "lowest-index"
TIE_STOCHASTIC = "stochastic"


@dataclass(frozen=True)
class TieBreakRule:
    """How tbs_decide resolves exact scheduling-measure ties.

    Modes: error raises TieError; lowest-index picks the smallest tied family
    index; stochastic draws from a per-tied-set distribution. The stochastic
    table maps a sorted tuple of tied family indices to a length-m probability
    vector, which is restricted to the tied set and renormalized. Tied sets
    absent from the table fall back to uniform unless strict is set.
    """

    mode: str = TIE_ERROR
    table: dict | None = None
    strict: bool = False

    def __post_init__(self):
        if self.mode not in (TIE_ERROR, TIE_LOWEST, TIE_STOCHASTIC):
            raise ValueError(f"unknown tie mode {self.mode!r}")
        if self.table is not None:
            table = {}
            for key, probs in self.table.items():
                key = tuple(sorted(int(j) for j in key))
                probs = tuple(as_fraction(p) for p in probs)
                if any(p < 0 for p in probs):
                    raise ValueError("tie probabilities must be nonnegative")
                table[key] = probs
            object.__setattr__(self, "table", table)

    def resolve(self, tied) -> tuple[Fraction, ...]:
        """Distribution over the tied indices (exact Fractions summing to 1)."""
        tied = tuple(sorted(tied))
        if len(tied) == 1:
            return (Fraction(1),)
        if self.mode == TIE_ERROR:
            raise TieError(tied)
        if self.mode == TIE_LOWEST:
            return (Fraction(1),) + (Fraction(0),) * (len(tied) - 1)
        entry = None if self.table is None else self.table.get(tied)
        if entry is None:
            if self.strict:
                raise TieError(tied)
            return tuple(Fraction(1, len(tied)) for _ in tied)
        if len(entry) >= max(tied) + 1:
            restricted = [entry[j] for j in tied]
        elif len(entry) == len(tied):
            restricted = list(entry)
        else:
            raise ValueError(
                f"tie distribution for {tied} has length {len(entry)}; expected "
                f"the family size or {len(tied)}"
            )
        total = sum(restricted)
        if total <= 0:
            raise ValueError(f"tie distribution for {tied} has zero mass on the tie")
        return tuple(p / total for p in restricted)


def scheduling_measure(values, lam, family: VirtualUserFamily):
    """S_j = R_j plus the sum of member thresholds, for every virtual user j.

    Works elementwise on whatever arithmetic the inputs carry, so Fractions
    stay exact and floats stay floats.
    """
    if len(values) != family.m:
        raise ValueError(f"expected {family.m} performance values, got {len(values)}")
    offsets = family.threshold_offsets(lam)
    return [values[j] + offsets[j] for j in range(family.m)]


def argmax_with_ties(measures):
    """Indices attaining the exact maximum, in ascending order."""
    best = max(measures)
    return [j for j, s in enumerate(measures) if s == best]


def update_temporal_shares(shares, t: int, decision: VirtualUser, n: int | None = None):
    """One running-mean step: A_{i,t+1} = A_{i,t} + (1{i in decision} - A_{i,t})/(t+1).

    Slots are 0-based, so the first update (t=0) lands exactly on the indicator.
    Exact when shares are Fractions, floating point when they are floats.
    """
    if t < 0:
        raise ValueError("slot index must be nonnegative")
    n = len(shares) if n is None else n
    if isinstance(shares, np.ndarray):
        ind = np.zeros(n)
        for u in decision.members:
            ind[u - 1] = 1.0
        return shares + (ind - shares) / (t + 1)
    step = Fraction(1, t + 1)
    return type(shares)(
        a + step * ((1 if (i + 1) in decision else 0) - a) for i, a in enumerate(shares)
    )


def shares_from_counts(counts, slots: int) -> np.ndarray:
    """Temporal shares as activation counts over elapsed slots (the batch form
    of the running mean; exact where the ratio is representable)."""
    if slots < 1:
        raise ValueError("need at least one slot")
    return np.asarray(counts, dtype=float) / slots
