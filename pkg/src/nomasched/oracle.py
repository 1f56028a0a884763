"""Exact ground truth for finite-support performance sources.

Enumerates joint outcomes with rational probabilities to evaluate a
threshold-based scheduler in closed form, and solves for the optimal
stationary strategy as an exact LP over per-outcome randomized decisions.
Everything returns Fractions so acceptance checks can demand equality.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import prod

import numpy as np

from .core import (
    InfeasibleDemandsError,
    ResourceLimitError,
    TemporalDemands,
    TieBreakRule,
    TIE_STOCHASTIC,
    VirtualUserFamily,
    argmax_with_ties,
    as_fraction,
    enumerate_virtual_users,
    parse_virtual_user,
)
from .feasibility import solve_exact_lp

MAX_OUTCOMES = 10**6


@dataclass(frozen=True)
class FiniteSupportInstance:
    """Discrete performance source: independent per-virtual-user marginals or
    an explicit joint table, with optional demands/thresholds/ties riding
    along from an instance file.

    Doubles as a PerformanceSource for the scheduler: sample_values draws
    i.i.d. float rows, exact_support hands the enumerated outcome table to the
    exact decision path.
    """

    family: VirtualUserFamily
    marginals: tuple | None = None
    joint: tuple | None = None
    demands: TemporalDemands | None = None
    thresholds: tuple | None = None
    tie_rule: TieBreakRule | None = None

    def __post_init__(self):
        if (self.marginals is None) == (self.joint is None):
            raise ValueError("provide exactly one of marginals or joint table")
        if self.marginals is not None:
            if len(self.marginals) != self.family.m:
                raise ValueError(
                    f"expected {self.family.m} marginals, got {len(self.marginals)}"
                )
            cleaned = []
            for j, raw in enumerate(self.marginals):
                support = tuple((as_fraction(v), as_fraction(p)) for v, p in raw)
                if not support:
                    raise ValueError(f"virtual user {j} has empty support")
                if any(p < 0 for _, p in support):
                    raise ValueError("probabilities must be nonnegative")
                if sum(p for _, p in support) != 1:
                    raise ValueError(f"marginal {j} probabilities do not sum to 1")
                cleaned.append(support)
            object.__setattr__(self, "marginals", tuple(cleaned))
        else:
            cleaned = []
            for values, p in self.joint:
                values = tuple(as_fraction(v) for v in values)
                if len(values) != self.family.m:
                    raise ValueError("joint outcome width must equal family size")
                p = as_fraction(p)
                if p < 0:
                    raise ValueError("probabilities must be nonnegative")
                cleaned.append((values, p))
            if sum(p for _, p in cleaned) != 1:
                raise ValueError("joint probabilities do not sum to 1")
            object.__setattr__(self, "joint", tuple(cleaned))
        if self.thresholds is not None:
            object.__setattr__(
                self, "thresholds", tuple(as_fraction(x) for x in self.thresholds)
            )
            if len(self.thresholds) != self.family.n:
                raise ValueError("threshold vector length must equal user count")

    def support_size(self) -> int:
        if self.joint is not None:
            return len(self.joint)
        return prod(len(s) for s in self.marginals)

    @property
    def bound(self) -> float:
        """Almost-sure bound on |R_j|, the Remark-1 constant M."""
        if self.joint is not None:
            vals = [abs(v) for values, _ in self.joint for v in values]
        else:
            vals = [abs(v) for s in self.marginals for v, _ in s]
        return float(max(vals))

    def outcomes(self, max_outcomes: int = MAX_OUTCOMES):
        """Yield (values, probability) over the joint support, exactly."""
        size = self.support_size()
        if size > max_outcomes:
            raise ResourceLimitError(
                f"joint support has {size} outcomes, cap is {max_outcomes}"
            )
        if self.joint is not None:
            for values, p in self.joint:
                if p:
                    yield values, p
            return
        for combo in product(*self.marginals):
            p = prod((pr for _, pr in combo), start=Fraction(1))
            if p:
                yield tuple(v for v, _ in combo), p

    def exact_support(self, max_outcomes: int = MAX_OUTCOMES):
        return list(self.outcomes(max_outcomes))

    def sample_values(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """(count, m) float array of i.i.d. performance rows."""
        m = self.family.m
        out = np.empty((count, m))
        if self.joint is not None:
            probs = np.array([float(p) for _, p in self.joint])
            probs /= probs.sum()
            table = np.array([[float(v) for v in values] for values, _ in self.joint])
            idx = rng.choice(len(table), size=count, p=probs)
            out[:] = table[idx]
            return out
        for j, support in enumerate(self.marginals):
            vals = np.array([float(v) for v, _ in support])
            probs = np.array([float(p) for _, p in support])
            probs /= probs.sum()
            out[:, j] = rng.choice(vals, size=count, p=probs)
        return out


def expected_values(instance: FiniteSupportInstance) -> tuple[Fraction, ...]:
    """E[R_j] for every virtual user, exactly."""
    if instance.marginals is not None:
        return tuple(
            sum(v * p for v, p in support) for support in instance.marginals
        )
    m = instance.family.m
    out = [Fraction(0)] * m
    for values, p in instance.joint:
        for j in range(m):
            out[j] += p * values[j]
    return tuple(out)


def exact_tbs_evaluate(
    instance: FiniteSupportInstance,
    lam,
    tie: TieBreakRule | None = None,
    max_outcomes: int = MAX_OUTCOMES,
):
    """Exact stationary shares and utility of TBS with thresholds lam.

    Enumerates the joint support, applies the measure argmax per outcome, and
    resolves exact ties through the given rule's distribution. Returns
    (shares, utility) as Fractions; with i.i.d. slots these are also the
    almost-sure long-run limits.
    """
    family = instance.family
    lam = [as_fraction(x) for x in lam]
    if tie is None:
        tie = instance.tie_rule or TieBreakRule()
    offsets = family.threshold_offsets(lam)
    shares = [Fraction(0)] * family.n
    utility = Fraction(0)
    for values, p in instance.outcomes(max_outcomes):
        measures = [values[j] + offsets[j] for j in range(family.m)]
        tied = argmax_with_ties(measures)
        dist = tie.resolve(tied)
        for j, q in zip(tied, dist):
            if not q:
                continue
            utility += p * q * values[j]
            for u in family.members[j].members:
                shares[u - 1] += p * q
    return tuple(shares), utility


@dataclass(frozen=True)
class OracleSolution:
    """Optimal randomized stationary strategy for a finite-support instance."""

    utility: Fraction
    outcomes: tuple
    probabilities: tuple
    decisions: tuple
    shares: tuple

    def validate(self, family: VirtualUserFamily, demands: TemporalDemands):
        utility = Fraction(0)
        shares = [Fraction(0)] * family.n
        for values, p, dist in zip(self.outcomes, self.probabilities, self.decisions):
            if any(q < 0 for q in dist):
                raise ValueError("negative decision probability")
            if sum(dist) != 1:
                raise ValueError("per-outcome decision probabilities must sum to 1")
            for j, q in enumerate(dist):
                if not q:
                    continue
                utility += p * q * values[j]
                for u in family.members[j].members:
                    shares[u - 1] += p * q
        if utility != self.utility or tuple(shares) != self.shares:
            raise ValueError("solution aggregates do not match its decisions")
        for i in range(family.n):
            if not demands.lower[i] <= shares[i] <= demands.upper[i]:
                raise ValueError(f"share of user {i + 1} violates the demands")


def lp_optimal_stationary(
    instance: FiniteSupportInstance,
    demands: TemporalDemands,
    max_outcomes: int = MAX_OUTCOMES,
) -> OracleSolution:
    """Maximize expected utility over per-outcome randomized decisions.

    max sum_r P(r) sum_j p_j(r) R_j(r)  s.t.  sum_j p_j(r) = 1, p >= 0,
    lower_i <= sum_r P(r) sum_{j: i in V_j} p_j(r) <= upper_i.

    A randomized stationary optimum exists and is attained by thresholds plus
    tie-breaking, so this LP value is the TBS-achievable optimum; solving over
    decisions sidesteps the threshold/tie search.
    """
    family = instance.family
    if demands.n != family.n:
        raise ValueError("demand length does not match the family")
    table = instance.exact_support(max_outcomes)
    nout, m, n = len(table), family.m, family.n

    bounded = [i for i in range(n) if demands.upper[i] < 1]
    nvars = nout * m + n + len(bounded)
    tpos = {i: nout * m + n + k for k, i in enumerate(bounded)}
    rows, rhs = [], []
    for r in range(nout):
        row = [Fraction(0)] * nvars
        for j in range(m):
            row[r * m + j] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(1))
    for i in range(n):
        row = [Fraction(0)] * nvars
        for r, (_, p) in enumerate(table):
            for j, vu in enumerate(family.members):
                if (i + 1) in vu:
                    row[r * m + j] = p
        row[nout * m + i] = Fraction(-1)
        rows.append(row)
        rhs.append(demands.lower[i])
    for i in bounded:
        row = [Fraction(0)] * nvars
        row[nout * m + i] = Fraction(1)
        row[tpos[i]] = Fraction(1)
        rows.append(row)
        rhs.append(demands.upper[i] - demands.lower[i])

    cost = [Fraction(0)] * nvars
    for r, (values, p) in enumerate(table):
        for j in range(m):
            cost[r * m + j] = p * values[j]
    status, x, value = solve_exact_lp(rows, rhs, cost, maximize=True)
    if status != "optimal":
        raise InfeasibleDemandsError(
            f"demands {tuple(map(str, demands.lower))} are not schedulable "
            f"for this family (LP status: {status})"
        )
    decisions = tuple(
        tuple(x[r * m + j] for j in range(m)) for r in range(nout)
    )
    shares = tuple(demands.lower[i] + x[nout * m + i] for i in range(n))
    solution = OracleSolution(
        utility=value,
        outcomes=tuple(values for values, _ in table),
        probabilities=tuple(p for _, p in table),
        decisions=decisions,
        shares=shares,
    )
    solution.validate(family, demands)
    return solution


@dataclass(frozen=True)
class ConcavityCheck:
    demands_a: TemporalDemands
    demands_b: TemporalDemands
    alpha: Fraction
    mixed_utility: Fraction
    combined_utility: Fraction

    @property
    def ok(self) -> bool:
        return self.mixed_utility >= self.combined_utility


def concavity_probe(instance: FiniteSupportInstance, demand_pairs, alphas):
    """Exact midpoint checks U*(alpha a + (1-alpha) b) >= alpha U*(a) + (1-alpha) U*(b)."""
    results = []
    for da, db in demand_pairs:
        ua = lp_optimal_stationary(instance, da).utility
        ub = lp_optimal_stationary(instance, db).utility
        for alpha in alphas:
            alpha = as_fraction(alpha)
            if not 0 <= alpha <= 1:
                raise ValueError("alpha must lie in [0, 1]")
            mixed = TemporalDemands(
                tuple(alpha * x + (1 - alpha) * y for x, y in zip(da.lower, db.lower)),
                tuple(alpha * x + (1 - alpha) * y for x, y in zip(da.upper, db.upper)),
            )
            um = lp_optimal_stationary(instance, mixed).utility
            results.append(
                ConcavityCheck(da, db, alpha, um, alpha * ua + (1 - alpha) * ub)
            )
    return results


# ---------------------------------------------------------------------------
# Instance files
# ---------------------------------------------------------------------------

def parse_instance(text: str) -> FiniteSupportInstance:
    """Parse the line-oriented instance format (independent marginals only).

    schema 1
    users 2
    nmax 2
    vuser {1}
    1/10 1/2        # value probability
    1/5 1/2
    ...
    demands lower 1/2 1/4
    demands upper 1 1
    lambda 1/10 0
    tie {1} {2} {1,2} : 1/3 2/3 0

    '#' starts a comment; demands/lambda/tie blocks are optional. Tie lines
    name the tied virtual users, then the probabilities (one per named user,
    or one per family member).
    """
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines or lines[0].split() != ["schema", "1"]:
        raise ValueError("instance file must start with 'schema 1'")

    users = n_max = None
    blocks: list[tuple[str, list]] = []
    lower = upper = thresholds = None
    ties = {}
    current = None
    for line in lines[1:]:
        tokens = line.split()
        key = tokens[0]
        if key == "users":
            users = int(tokens[1])
        elif key == "nmax":
            n_max = int(tokens[1])
        elif key == "vuser":
            current = (parse_virtual_user(tokens[1]), [])
            blocks.append(current)
        elif key == "demands":
            if tokens[1] == "lower":
                lower = [as_fraction(t) for t in tokens[2:]]
            elif tokens[1] == "upper":
                upper = [as_fraction(t) for t in tokens[2:]]
            else:
                raise ValueError(f"unknown demands kind {tokens[1]!r}")
        elif key == "lambda":
            thresholds = [as_fraction(t) for t in tokens[1:]]
        elif key == "tie":
            if ":" not in tokens:
                raise ValueError("tie line needs ':' between users and probabilities")
            cut = tokens.index(":")
            tied_labels = tokens[1:cut]
            probs = [as_fraction(t) for t in tokens[cut + 1 :]]
            ties[tuple(tied_labels)] = probs
        elif current is not None and len(tokens) == 2:
            current[1].append((as_fraction(tokens[0]), as_fraction(tokens[1])))
        else:
            raise ValueError(f"unparseable instance line: {line!r}")

    if users is None:
        raise ValueError("instance file is missing a 'users' line")
    if not blocks:
        raise ValueError("instance file defines no virtual users")
    members = tuple(vu for vu, _ in blocks)
    family = VirtualUserFamily(users, members, n_max=n_max)
    if n_max is not None and any(len(vu) > n_max for vu in members):
        raise ValueError("a virtual user exceeds the declared nmax")

    tie_rule = None
    if ties:
        table = {}
        for labels, probs in ties.items():
            key = tuple(
                sorted(family.index_of(parse_virtual_user(lbl)) for lbl in labels)
            )
            table[key] = probs
        tie_rule = TieBreakRule(mode=TIE_STOCHASTIC, table=table)

    demands = None
    if lower is not None:
        demands = (
            TemporalDemands(tuple(lower), tuple(upper))
            if upper is not None
            else TemporalDemands.from_lower(lower)
        )
    elif upper is not None:
        raise ValueError("demands upper given without demands lower")

    return FiniteSupportInstance(
        family=family,
        marginals=tuple(tuple(support) for _, support in blocks),
        demands=demands,
        thresholds=tuple(thresholds) if thresholds is not None else None,
        tie_rule=tie_rule,
    )


def load_instance(path) -> FiniteSupportInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def format_instance(instance: FiniteSupportInstance) -> str:
    """Serialize back to the parse_instance format (marginals only)."""
    if instance.marginals is None:
        raise ValueError("only marginal-form instances serialize to files")
    family = instance.family
    lines = ["schema 1", f"users {family.n}"]
    if family.n_max is not None:
        lines.append(f"nmax {family.n_max}")
    for vu, support in zip(family.members, instance.marginals):
        lines.append(f"vuser {vu.label()}")
        for v, p in support:
            lines.append(f"{v} {p}")
    if instance.demands is not None:
        lines.append("demands lower " + " ".join(str(x) for x in instance.demands.lower))
        lines.append("demands upper " + " ".join(str(x) for x in instance.demands.upper))
    if instance.thresholds is not None:
        lines.append("lambda " + " ".join(str(x) for x in instance.thresholds))
    if instance.tie_rule is not None and instance.tie_rule.table:
        for key, probs in sorted(instance.tie_rule.table.items()):
            labels = " ".join(family.members[j].label() for j in key)
            lines.append(f"tie {labels} : " + " ".join(str(p) for p in probs))
    return "\n".join(lines) + "\n"


def format_solution(solution: OracleSolution, family: VirtualUserFamily) -> str:
    lines = [
        f"utility {solution.utility}",
        "shares " + " ".join(str(a) for a in solution.shares),
        "decisions " + " ".join(family.labels()),
    ]
    for values, p, dist in zip(
        solution.outcomes, solution.probabilities, solution.decisions
    ):
        vals = " ".join(str(v) for v in values)
        probs = " ".join(str(q) for q in dist)
        lines.append(f"outcome {vals} p {p} : {probs}")
    return "\n".join(lines) + "\n"
