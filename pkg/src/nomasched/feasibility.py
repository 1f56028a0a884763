"""Feasibility of temporal demands and the exact feasible-region computation.

Everything here runs on fractions.Fraction: polyhedral predicates are brittle
in floating point, and the acceptance checks demand exact answers. The module
provides a two-phase primal simplex (Bland's rule, so no cycling), the
equality/box feasibility tests with certificates, and the variable-elimination
pipeline that turns a virtual-user family into an inequality description of
the achievable temporal-share region via a Hilbert-basis computation.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import gcd, lcm

from .core import (
    ResourceLimitError,
    TemporalDemands,
    VirtualUserFamily,
    as_fraction,
)

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Exact two-phase simplex
# ---------------------------------------------------------------------------

def _pivot(tableau, basis, row, col):
    piv = tableau[row][col]
    tableau[row] = [v / piv for v in tableau[row]]
    for i, r in enumerate(tableau):
        if i != row and r[col]:
            factor = r[col]
            prow = tableau[row]
            tableau[i] = [v - factor * p for v, p in zip(r, prow)]
    basis[row] = col


def _simplex(tableau, basis, cost):
    """Minimize cost over the tableau in place; Bland's rule both ways."""
    nrows = len(tableau)
    ncols = len(tableau[0]) - 1
    while True:
        enter = -1
        for j in range(ncols):
            rc = cost[j]
            for i in range(nrows):
                tij = tableau[i][j]
                if tij and cost[basis[i]]:
                    rc -= cost[basis[i]] * tij
            if rc < 0:
                enter = j
                break
        if enter < 0:
            return "optimal"
        leave = -1
        best = None
        for i in range(nrows):
            tie = tableau[i][enter]
            if tie > 0:
                ratio = tableau[i][-1] / tie
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return "unbounded"
        _pivot(tableau, basis, leave, enter)


def solve_exact_lp(a_rows, b, cost, maximize=False):
    """Solve min (or max) cost.x subject to a_rows x = b, x >= 0, exactly.

    Returns (status, x, value) with status in {optimal, infeasible, unbounded};
    x and value are None unless optimal.
    """
    nvars = len(cost)
    rows = [[as_fraction(v) for v in row] for row in a_rows]
    rhs = [as_fraction(v) for v in b]
    cost = [as_fraction(c) for c in cost]
    if maximize:
        cost = [-c for c in cost]
    for row in rows:
        if len(row) != nvars:
            raise ValueError("constraint width does not match the cost vector")
    for i in range(len(rows)):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]

    nrows = len(rows)
    tableau = [
        rows[i] + [ONE if j == i else ZERO for j in range(nrows)] + [rhs[i]]
        for i in range(nrows)
    ]
    basis = [nvars + i for i in range(nrows)]
    phase1 = [ZERO] * nvars + [ONE] * nrows
    _simplex(tableau, basis, phase1)
    if sum(tableau[i][-1] for i in range(nrows) if basis[i] >= nvars) > 0:
        return "infeasible", None, None

    # Drive leftover artificials out of the basis; a row with no real pivot
    # column is a redundant constraint and is dropped.
    keep = []
    for i in range(len(tableau)):
        if basis[i] < nvars:
            keep.append(i)
            continue
        col = next((j for j in range(nvars) if tableau[i][j]), None)
        if col is not None:
            _pivot(tableau, basis, i, col)
            keep.append(i)
    tableau = [[tableau[i][j] for j in range(nvars)] + [tableau[i][-1]] for i in keep]
    basis = [basis[i] for i in keep]

    status = _simplex(tableau, basis, cost)
    if status != "optimal":
        return status, None, None
    x = [ZERO] * nvars
    for i, bv in enumerate(basis):
        x[bv] = tableau[i][-1]
    value = sum(c * v for c, v in zip(cost, x))
    return "optimal", x, -value if maximize else value


# ---------------------------------------------------------------------------
# Feasibility tests (certificates)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeasibilityCertificate:
    """Virtual-user time fractions realizing given temporal shares."""

    family: VirtualUserFamily
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.weights) != self.family.m:
            raise ValueError("one weight per virtual user required")
        object.__setattr__(self, "weights", tuple(as_fraction(a) for a in self.weights))

    def shares(self) -> tuple[Fraction, ...]:
        out = [ZERO] * self.family.n
        for vu, a in zip(self.family.members, self.weights):
            for u in vu.members:
                out[u - 1] += a
        return tuple(out)

    def validate(self, w=None):
        if any(a < 0 for a in self.weights):
            raise ValueError("negative virtual-user weight")
        if sum(self.weights) != 1:
            raise ValueError("weights must sum to one")
        if w is not None and self.shares() != tuple(as_fraction(x) for x in w):
            raise ValueError("certificate does not realize the requested shares")

    def to_text(self) -> str:
        lines = [
            f"{vu.label()} {a}" for vu, a in zip(self.family.members, self.weights)
        ]
        return "\n".join(lines) + "\n"


def _coverage_rows(family: VirtualUserFamily):
    rows = []
    for i in range(1, family.n + 1):
        rows.append([ONE if i in vu else ZERO for vu in family.members])
    rows.append([ONE] * family.m)
    return rows


def check_feasibility_equality(family: VirtualUserFamily, w):
    """Certificate for exact shares w, or None when infeasible."""
    w = [as_fraction(x) for x in w]
    if len(w) != family.n:
        raise ValueError(f"expected {family.n} shares, got {len(w)}")
    if any(x < 0 or x > 1 for x in w):
        raise ValueError("shares must lie in [0, 1]")
    rows = _coverage_rows(family)
    status, x, _ = solve_exact_lp(rows, w + [ONE], [ZERO] * family.m)
    if status != "optimal":
        return None
    cert = FeasibilityCertificate(family, tuple(x))
    cert.validate(w)
    return cert


def check_feasibility_box(family: VirtualUserFamily, demands: TemporalDemands):
    """Witness shares w inside [lower, upper] plus a certificate, or None.

    Variables are (a_1..a_m, u_1..u_n, v_1..v_n) with w_i = lower_i + u_i and
    u_i + v_i = upper_i - lower_i.
    """
    if demands.n != family.n:
        raise ValueError("demand length does not match the family")
    n, m = family.n, family.m
    nvars = m + 2 * n
    rows = []
    rhs = []
    coverage = _coverage_rows(family)
    for i in range(n):
        row = list(coverage[i]) + [ZERO] * (2 * n)
        row[m + i] = -ONE
        rows.append(row)
        rhs.append(demands.lower[i])
    for i in range(n):
        row = [ZERO] * nvars
        row[m + i] = ONE
        row[m + n + i] = ONE
        rows.append(row)
        rhs.append(demands.upper[i] - demands.lower[i])
    rows.append([ONE] * m + [ZERO] * (2 * n))
    rhs.append(ONE)
    status, x, _ = solve_exact_lp(rows, rhs, [ZERO] * nvars)
    if status != "optimal":
        return None
    witness = tuple(demands.lower[i] + x[m + i] for i in range(n))
    cert = FeasibilityCertificate(family, tuple(x[:m]))
    cert.validate(witness)
    return witness, cert


# ---------------------------------------------------------------------------
# Variable-elimination pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineExpr:
    """const + coef.w over the share variables w_1..w_n."""

    const: Fraction
    wcoef: tuple[Fraction, ...]

    def __add__(self, other):
        return AffineExpr(
            self.const + other.const,
            tuple(a + b for a, b in zip(self.wcoef, other.wcoef)),
        )

    def __sub__(self, other):
        return AffineExpr(
            self.const - other.const,
            tuple(a - b for a, b in zip(self.wcoef, other.wcoef)),
        )

    def scale(self, factor):
        factor = as_fraction(factor)
        return AffineExpr(self.const * factor, tuple(factor * c for c in self.wcoef))

    def evaluate(self, w) -> Fraction:
        return self.const + sum(c * as_fraction(x) for c, x in zip(self.wcoef, w))

    def is_zero(self) -> bool:
        return self.const == 0 and all(c == 0 for c in self.wcoef)

    def render(self, names=None) -> str:
        names = names or [f"w{i + 1}" for i in range(len(self.wcoef))]
        terms = []
        if self.const:
            terms.append(str(self.const))
        for c, name in zip(self.wcoef, names):
            if c:
                terms.append(f"{'+' if c > 0 else '-'} {abs(c)}*{name}")
        if not terms:
            return "0"
        text = " ".join(terms)
        return text[2:] if text.startswith("+ ") else text


@dataclass(frozen=True)
class EliminationRow:
    """min over parts of (part(w)) + acoef.a_residual >= 0.

    Rows produced by eliminated a-variables that share a residual-coefficient
    vector are merged, which is what gives the min form; residual a >= 0 rows
    stay single-part.
    """

    parts: tuple[AffineExpr, ...]
    acoef: tuple[Fraction, ...]
    origin: str


@dataclass(frozen=True)
class EliminatedSystem:
    """Result of substituting the equality constraints into a >= 0."""

    family: VirtualUserFamily
    residual_indices: tuple[int, ...]
    rows: tuple[EliminationRow, ...]
    equalities: tuple[AffineExpr, ...]

    @property
    def residual_labels(self) -> list[str]:
        return [f"a{self.family.members[j].label()}" for j in self.residual_indices]


def eliminate_equalities(family: VirtualUserFamily) -> EliminatedSystem:
    """Gaussian-eliminate leading a-variables from the share equalities.

    The equality system is coverage(a) = w (one row per user) plus sum(a) = 1.
    Columns are processed in family order, so the first n+1 virtual users are
    eliminated when the system has full rank; leftover all-zero rows become
    pure-w equality constraints (the OMA case). Rows are rescaled so residual
    coefficients are integers with gcd 1.
    """
    n, m = family.n, family.m
    acoefs = _coverage_rows(family)
    rhs = [AffineExpr(ZERO, tuple(ONE if j == i else ZERO for j in range(n))) for i in range(n)]
    rhs.append(AffineExpr(ONE, (ZERO,) * n))

    pivot_of = {}
    used = set()
    for col in range(m):
        row = next(
            (i for i in range(len(acoefs)) if i not in used and acoefs[i][col] != 0),
            None,
        )
        if row is None:
            continue
        piv = acoefs[row][col]
        acoefs[row] = [v / piv for v in acoefs[row]]
        rhs[row] = rhs[row].scale(ONE / piv)
        for i in range(len(acoefs)):
            if i != row and acoefs[i][col]:
                factor = acoefs[i][col]
                acoefs[i] = [v - factor * p for v, p in zip(acoefs[i], acoefs[row])]
                rhs[i] = rhs[i] - rhs[row].scale(factor)
        pivot_of[col] = row
        used.add(row)

    residual = tuple(j for j in range(m) if j not in pivot_of)
    equalities = []
    for i in range(len(acoefs)):
        if i not in used:
            if any(acoefs[i][j] != 0 for j in range(m)):
                raise AssertionError("unpivoted row with live a-coefficients")
            if not rhs[i].is_zero():
                equalities.append(rhs[i])

    # a_pivot = rhs - sum(coef * a_res) >= 0, as part + (-coef).a_res >= 0
    grouped: dict[tuple[Fraction, ...], list[AffineExpr]] = {}
    origins: dict[tuple[Fraction, ...], list[str]] = {}
    for col, row in sorted(pivot_of.items()):
        coef = tuple(-acoefs[row][j] for j in residual)
        coef, parts_scale = _integerize(coef)
        part = rhs[row].scale(parts_scale)
        grouped.setdefault(coef, [])
        if part not in grouped[coef]:
            grouped[coef].append(part)
        origins.setdefault(coef, []).append(f"a{family.members[col].label()}")

    # Rows from eliminated variables first, ordered by descending residual
    # coefficients, then the residual a >= 0 rows; the dual variable x_l is
    # numbered by this position.
    rows = [
        EliminationRow(tuple(grouped[coef]), coef, "+".join(origins[coef]))
        for coef in sorted(grouped, reverse=True)
    ]
    for pos, j in enumerate(residual):
        coef = tuple(ONE if k == pos else ZERO for k in range(len(residual)))
        rows.append(
            EliminationRow(
                (AffineExpr(ZERO, (ZERO,) * n),),
                coef,
                f"a{family.members[j].label()}>=0",
            )
        )
    return EliminatedSystem(family, residual, tuple(rows), tuple(equalities))


def _integerize(coef):
    """Scale a rational vector to integers with gcd 1; returns (vector, factor)."""
    if all(c == 0 for c in coef):
        return coef, ONE
    denom = lcm(*[c.denominator for c in coef]) if coef else 1
    scaled = [c * denom for c in coef]
    g = 0
    for c in scaled:
        g = gcd(g, int(c))
    g = g or 1
    factor = Fraction(denom, g)
    return tuple(c / g for c in scaled), factor


def dual_system(system: EliminatedSystem) -> list[list[int]]:
    """One homogeneous equation per residual a-variable: sum_l c_{l,j} x_l = 0,
    where c_{l,j} is row l's (integer) coefficient of residual j."""
    return [
        [int(row.acoef[pos]) for row in system.rows]
        for pos in range(len(system.residual_indices))
    ]


def hilbert_basis(equations, max_coord: int = 50, max_nodes: int = 100_000):
    """Minimal nonnegative integer solutions of a homogeneous linear system.

    Completion in the Contejean-Devie style: grow from the unit vectors, extend
    t by e_j only while A.t and A.e_j point against each other, prune anything
    dominated by a found solution, and minimize at the end.
    """
    if not equations:
        return []
    k = len(equations[0])
    if k == 0:
        return []
    cols = [tuple(eq[j] for eq in equations) for j in range(k)]

    def dominated(vec, pool):
        return any(all(v >= b for v, b in zip(vec, elem)) for elem in pool)

    basis: list[tuple[int, ...]] = []
    frontier = []
    seen = set()
    for j in range(k):
        unit = tuple(1 if i == j else 0 for i in range(k))
        frontier.append((unit, cols[j]))
        seen.add(unit)
    nodes = len(frontier)
    while frontier:
        nxt = []
        for vec, val in frontier:
            if all(v == 0 for v in val):
                if not dominated(vec, basis):
                    basis.append(vec)
                continue
            for j in range(k):
                if sum(a * b for a, b in zip(val, cols[j])) >= 0:
                    continue
                cand = tuple(v + (1 if i == j else 0) for i, v in enumerate(vec))
                if cand in seen:
                    continue
                if cand[j] > max_coord:
                    raise ResourceLimitError(
                        f"Hilbert completion exceeded coordinate cap {max_coord}"
                    )
                if dominated(cand, basis):
                    continue
                nodes += 1
                if nodes > max_nodes:
                    raise ResourceLimitError(
                        f"Hilbert completion exceeded node cap {max_nodes}"
                    )
                seen.add(cand)
                nxt.append((cand, tuple(a + b for a, b in zip(val, cols[j]))))
        frontier = nxt

    minimal = [
        v
        for v in basis
        if not any(w != v and all(a >= b for a, b in zip(v, w)) for w in basis)
    ]
    return sorted(set(minimal))


def minimal_solutions_brute(equations, bound: int):
    """All minimal nonnegative solutions with coordinates <= bound, by brute
    force; cross-check oracle for hilbert_basis at desk scale."""
    if not equations:
        return []
    k = len(equations[0])
    sols = []
    for vec in product(range(bound + 1), repeat=k):
        if all(v == 0 for v in vec):
            continue
        if all(sum(c * v for c, v in zip(eq, vec)) == 0 for eq in equations):
            sols.append(vec)
    return sorted(
        v
        for v in sols
        if not any(w != v and all(a >= b for a, b in zip(v, w)) for w in sols)
    )


# ---------------------------------------------------------------------------
# Region description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearInequality:
    """coefficients.w >= rhs with primitive integer data."""

    coefficients: tuple[Fraction, ...]
    rhs: Fraction

    def satisfied_by(self, w) -> bool:
        total = sum(c * as_fraction(x) for c, x in zip(self.coefficients, w))
        return total >= self.rhs

    def to_text(self) -> str:
        coefs = " ".join(str(c) for c in self.coefficients)
        return f"{coefs} >= {self.rhs}"

    def render(self) -> str:
        expr = AffineExpr(ZERO, self.coefficients).render()
        return f"{expr} >= {self.rhs}"


def _normalize_inequality(affine: AffineExpr):
    """affine(w) >= 0 in primitive form, or None for a tautology."""
    coef = affine.wcoef
    rhs = -affine.const
    if all(c == 0 for c in coef):
        if rhs > 0:
            raise AssertionError(f"contradictory inequality 0 >= {rhs}")
        return None
    denom = lcm(*[c.denominator for c in coef + (rhs,)])
    ints = [int(c * denom) for c in coef]
    g = 0
    for c in ints + [int(rhs * denom)]:
        g = gcd(g, c)
    g = g or 1
    return LinearInequality(
        tuple(Fraction(c, g) for c in ints), Fraction(int(rhs * denom), g)
    )


@dataclass(frozen=True)
class RegionDescription:
    """Closed convex polytope over w, inside the unit box by construction."""

    n: int
    inequalities: tuple[LinearInequality, ...]

    def contains(self, w) -> bool:
        w = [as_fraction(x) for x in w]
        if len(w) != self.n:
            raise ValueError(f"expected {self.n} coordinates")
        return all(ineq.satisfied_by(w) for ineq in self.inequalities)

    def to_text(self) -> str:
        return "\n".join(ineq.to_text() for ineq in self.inequalities) + "\n"


def region_inequalities(
    system: EliminatedSystem, basis=None, max_coord: int = 50, max_nodes: int = 100_000
) -> RegionDescription:
    """Fold Hilbert-basis weights back through the eliminated system.

    Each basis element gives one inequality per choice of part among its
    weighted rows (residual coefficients cancel by construction); mixed-part
    combinations are convex combinations of these and add nothing. Pure-w
    equality rows and the unit-box bounds are appended at the end.
    """
    n = system.family.n
    out: list[LinearInequality] = []

    def add(affine: AffineExpr):
        ineq = _normalize_inequality(affine)
        if ineq is not None:
            out.append(ineq)

    if system.residual_indices:
        if basis is None:
            basis = hilbert_basis(dual_system(system), max_coord, max_nodes)
        for elem in basis:
            active = [(weight, row) for weight, row in zip(elem, system.rows) if weight]
            cancel = [
                sum(weight * row.acoef[pos] for weight, row in active)
                for pos in range(len(system.residual_indices))
            ]
            if any(c != 0 for c in cancel):
                raise AssertionError(
                    "residual variable failed to cancel; dual system is inconsistent"
                )
            for parts in product(*[row.parts for _, row in active]):
                total = AffineExpr(ZERO, (ZERO,) * n)
                for (weight, _), part in zip(active, parts):
                    total = total + part.scale(weight)
                add(total)
    else:
        for row in system.rows:
            for part in row.parts:
                add(part)

    for eq in system.equalities:
        add(eq)
        add(eq.scale(-1))
    for i in range(n):
        unit = tuple(ONE if j == i else ZERO for j in range(n))
        out.append(LinearInequality(unit, ZERO))
        out.append(LinearInequality(tuple(-c for c in unit), -ONE))

    unique = sorted(set(out), key=lambda q: (q.coefficients, q.rhs))
    return RegionDescription(n, tuple(unique))


def compute_region(family: VirtualUserFamily, **caps) -> RegionDescription:
    """Full pipeline: eliminate, dualize, Hilbert basis, fold back."""
    return region_inequalities(eliminate_equalities(family), **caps)


def violated_box_inequality(region: RegionDescription, demands: TemporalDemands):
    """An inequality the whole demand box violates, if one exists: the box max
    of coef.w falls short of the rhs."""
    for ineq in region.inequalities:
        best = sum(
            c * (hi if c > 0 else lo)
            for c, lo, hi in zip(ineq.coefficients, demands.lower, demands.upper)
        )
        if best < ineq.rhs:
            return ineq
    return None


def wrr_pattern_from_certificate(cert: FeasibilityCertificate) -> list[int]:
    """Periodic family-index pattern whose frequencies equal the certificate
    weights; the period is the LCM of the weight denominators."""
    cert.validate()
    period = lcm(*[a.denominator for a in cert.weights])
    pattern = []
    for j, a in enumerate(cert.weights):
        pattern.extend([j] * int(a * period))
    if len(pattern) != period:
        raise AssertionError("certificate weights do not tile the period")
    return pattern
