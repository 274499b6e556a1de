"""Circuit-independent equilibrium oracles anchored by an exact rational simplex.

Everything here is pure: identical inputs produce identical reports.  The LP
oracle works in Fractions end to end and is the ground truth used by optimality
tests throughout the suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .circuit import Circuit, as_affine, as_fraction, evaluate, evaluate_exact
from .problems import (
    ADMarketSpec,
    CCCSystem,
    CakeSpec,
    GameNF,
    HZSpec,
    StochasticGameSpec,
    split_profile,
)


class SizeLimit(Exception):
    pass


class SingularSystem(Exception):
    pass


MAX_LP_VARS = 12
MAX_LP_ROWS = 40


# ---------------------------------------------------------------------------
# exact rational linear algebra


def exact_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    m = [list(map(as_fraction, r)) for r in rows]
    if not m:
        return 0
    rank, ncols = 0, len(m[0])
    for col in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = 1 / m[rank][col]
        m[rank] = [v * inv for v in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


class InconsistentEqualities(Exception):
    pass


def eliminate_dependent_rows(
    A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]
) -> tuple[list[list[Fraction]], list[Fraction]]:
    """Exact row reduction with partial pivoting by row order.

    Drops rows that are linear combinations of earlier ones; raises if such a
    row is inconsistent (0 = nonzero).
    """
    kept_A: list[list[Fraction]] = []
    kept_b: list[Fraction] = []
    work: list[tuple[list[Fraction], Fraction]] = []
    for row, rhs in zip(A, b):
        r = [as_fraction(v) for v in row]
        t = as_fraction(rhs)
        for wr, wt in work:
            lead = next((j for j, v in enumerate(wr) if v != 0), None)
            if lead is not None and r[lead] != 0:
                f = r[lead] / wr[lead]
                r = [a - f * c for a, c in zip(r, wr)]
                t = t - f * wt
        if all(v == 0 for v in r):
            if t != 0:
                raise InconsistentEqualities("equality system is infeasible")
            continue
        work.append((r, t))
        kept_A.append([as_fraction(v) for v in row])
        kept_b.append(as_fraction(rhs))
    return kept_A, kept_b


# ---------------------------------------------------------------------------
# exact LP oracle


@dataclass(frozen=True)
class LPInstance:
    """maximize c.x  s.t.  A x = b,  C x <= d,  x in [-R, R]^n; all rationals."""

    c: tuple[Fraction, ...]
    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]
    C: tuple[tuple[Fraction, ...], ...]
    d: tuple[Fraction, ...]
    R: Fraction

    def __post_init__(self):
        n = len(self.c)
        if self.R <= 0:
            raise ValueError("R must be positive")
        for row in self.A:
            if len(row) != n:
                raise ValueError("A row length mismatch")
        for row in self.C:
            if len(row) != n:
                raise ValueError("C row length mismatch")
        if len(self.A) != len(self.b) or len(self.C) != len(self.d):
            raise ValueError("rhs length mismatch")

    @staticmethod
    def of(c, A, b, C, d, R) -> "LPInstance":
        fr = as_fraction
        return LPInstance(
            tuple(fr(v) for v in c),
            tuple(tuple(fr(v) for v in row) for row in A),
            tuple(fr(v) for v in b),
            tuple(tuple(fr(v) for v in row) for row in C),
            tuple(fr(v) for v in d),
            fr(R),
        )

    @property
    def n(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible"
    x: Optional[tuple[Fraction, ...]] = None
    value: Optional[Fraction] = None


def _pivot(T, z, basis, row, col):
    piv = T[row][col]
    T[row] = [v / piv for v in T[row]]
    prow = T[row]
    for i in range(len(T)):
        if i != row and T[i][col] != 0:
            f = T[i][col]
            T[i] = [a - f * p for a, p in zip(T[i], prow)]
    if z[col] != 0:
        f = z[col]
        z[:] = [a - f * p for a, p in zip(z, prow)]
    basis[row] = col


def _run_simplex(T, z, basis, allowed):
    """Bland's rule; reduced costs in z, z[-1] = -(current value)."""
    while True:
        col = None
        for j in range(len(z) - 1):
            if allowed[j] and z[j] > 0:
                col = j
                break
        if col is None:
            return True
        best_ratio, best_row = None, None
        for i in range(len(T)):
            if T[i][col] > 0:
                ratio = T[i][-1] / T[i][col]
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[best_row])
                ):
                    best_ratio, best_row = ratio, i
        if best_row is None:
            return False  # unbounded; cannot happen on box-bounded instances
        _pivot(T, z, basis, best_row, col)


def exact_lp_oracle(lp: LPInstance) -> LPResult:
    """Two-phase exact simplex over the box-augmented system."""
    n = lp.n
    m, k = len(lp.A), len(lp.C)
    if n > MAX_LP_VARS or m + k > MAX_LP_ROWS:
        raise SizeLimit(f"LP too large: n={n}, rows={m + k}")

    # shift to y = x + R >= 0, y <= 2R
    R = lp.R
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    kinds: list[str] = []  # "eq" or "le"
    for row, t in zip(lp.A, lp.b):
        rows.append(list(row))
        rhs.append(t + sum(v * R for v in row))
        kinds.append("eq")
    for row, t in zip(lp.C, lp.d):
        rows.append(list(row))
        rhs.append(t + sum(v * R for v in row))
        kinds.append("le")
    for i in range(n):
        row = [Fraction(0)] * n
        row[i] = Fraction(1)
        rows.append(row)
        rhs.append(2 * R)
        kinds.append("le")

    nrows = len(rows)
    n_slack = sum(1 for kd in kinds if kd == "le")
    # columns: y (n), slacks (n_slack), artificials (assigned below)
    slack_of: list[Optional[int]] = []
    at = n
    for kd in kinds:
        if kd == "le":
            slack_of.append(at)
            at += 1
        else:
            slack_of.append(None)
    n_struct = at

    T: list[list[Fraction]] = []
    basis: list[int] = []
    art_cols: list[int] = []
    next_art = n_struct
    for i in range(nrows):
        row = rows[i] + [Fraction(0)] * (n_slack) + [rhs[i]]
        if slack_of[i] is not None:
            row[slack_of[i]] = Fraction(1)
        if row[-1] < 0:
            row = [-v for v in row]
        T.append(row)
        # a slack with coefficient +1 (row not negated) can seed the basis
        if slack_of[i] is not None and T[i][slack_of[i]] == 1:
            basis.append(slack_of[i])
        else:
            basis.append(-1)  # needs artificial
    # append artificial columns where needed
    for i in range(nrows):
        if basis[i] == -1:
            for r in range(nrows):
                T[r].insert(-1, Fraction(1) if r == i else Fraction(0))
            basis[i] = next_art
            art_cols.append(next_art)
            next_art += 1
    n_total = next_art

    # phase 1: maximize -sum(artificials)
    z = [Fraction(0)] * (n_total + 1)
    for c in art_cols:
        z[c] = Fraction(-1)
    for i in range(nrows):
        if basis[i] in art_cols and z[basis[i]] != 0:
            f = z[basis[i]]
            z = [a - f * p for a, p in zip(z, T[i])]
    allowed = [True] * n_total
    _run_simplex(T, z, basis, allowed)
    if -z[-1] != 0:
        return LPResult("infeasible")

    # drive artificials out of the basis / drop redundant rows
    drop: list[int] = []
    for i in range(nrows):
        if basis[i] in art_cols:
            piv_col = next(
                (j for j in range(n_struct) if T[i][j] != 0), None
            )
            if piv_col is None:
                drop.append(i)
            else:
                _pivot(T, z, basis, i, piv_col)
    for i in reversed(drop):
        del T[i], basis[i]

    for c in art_cols:
        allowed[c] = False

    # phase 2: maximize c.y (constant shift -c.R1 restored at the end)
    z = [Fraction(0)] * (n_total + 1)
    for j in range(n):
        z[j] = lp.c[j]
    for i in range(len(T)):
        if z[basis[i]] != 0:
            f = z[basis[i]]
            z = [a - f * p for a, p in zip(z, T[i])]
    _run_simplex(T, z, basis, allowed)

    y = [Fraction(0)] * n_total
    for i, bcol in enumerate(basis):
        y[bcol] = T[i][-1]
    x = tuple(y[j] - R for j in range(n))
    value = sum(cj * xj for cj, xj in zip(lp.c, x))
    return LPResult("optimal", x, value)


def feasible_point(lp: LPInstance) -> Optional[tuple[Fraction, ...]]:
    res = exact_lp_oracle(
        LPInstance(tuple([Fraction(0)] * lp.n), lp.A, lp.b, lp.C, lp.d, lp.R)
    )
    return res.x if res.status == "optimal" else None


def strict_interior_margin(
    A, b, C, d, R, dim: Optional[int] = None
) -> tuple[Fraction, Optional[tuple[Fraction, ...]]]:
    """Maximize the margin t with A x = b, C x + t <= d, |x_i| + t <= R, t <= 1.

    Returns (t*, witness-x).  For affine constraint systems, t* > 0 is exactly
    the strict-interior (Slater) condition.
    """
    fr = as_fraction
    A = [list(map(fr, row)) for row in A]
    b = [fr(v) for v in b]
    C = [list(map(fr, row)) for row in C]
    d = [fr(v) for v in d]
    R = fr(R)
    n = dim
    if n is None:
        n = len(A[0]) if A else (len(C[0]) if C else 0)
    if n == 0:
        raise ValueError("cannot infer dimension of an unconstrained margin LP")
    ext_A = [row + [Fraction(0)] for row in A]
    ext_C = [row + [Fraction(1)] for row in C]
    ext_d = list(d)
    for i in range(n):
        row = [Fraction(0)] * (n + 1)
        row[i], row[n] = Fraction(1), Fraction(1)
        ext_C.append(row)
        ext_d.append(R)
        row2 = [Fraction(0)] * (n + 1)
        row2[i], row2[n] = Fraction(-1), Fraction(1)
        ext_C.append(row2)
        ext_d.append(R)
    cap = [Fraction(0)] * (n + 1)
    cap[n] = Fraction(1)
    ext_C.append(cap)
    ext_d.append(Fraction(1))
    obj = [Fraction(0)] * n + [Fraction(1)]
    lp = LPInstance(
        tuple(obj),
        tuple(tuple(r) for r in ext_A),
        tuple(b),
        tuple(tuple(r) for r in ext_C),
        tuple(ext_d),
        R + 2,
    )
    res = exact_lp_oracle(lp)
    if res.status != "optimal":
        return Fraction(-1), None
    return res.x[n], res.x[:n]


# ---------------------------------------------------------------------------
# verification reports


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    violations: dict[str, float] = field(default_factory=dict)
    witness: Optional[object] = None
    notes: tuple[str, ...] = ()

    def worst(self) -> float:
        return max(self.violations.values(), default=0.0)


def _report(tol: float, violations: dict[str, float], witness=None, notes=()) -> VerificationReport:
    passed = all(v <= tol for v in violations.values())
    return VerificationReport(passed, violations, None if passed else witness, tuple(notes))


# ---------------------------------------------------------------------------
# Nash


def check_nash(game: GameNF, profile: Sequence[float], eps: float) -> VerificationReport:
    """Best pure deviation per player; vertices suffice for the deviation LP."""
    rows = split_profile(game.actions, profile)
    worst, witness = 0.0, None
    for i in range(game.n_players):
        current = game.expected_payoff(i, rows)
        for a in range(game.actions[i]):
            gap = game.expected_payoff_pure(i, a, rows) - current
            if gap > worst:
                worst, witness = gap, (i, a)
    return _report(eps, {"deviation_gap": worst}, witness)


# ---------------------------------------------------------------------------
# cake


def _perfect_matching(adj: list[list[int]], n_left: int, n_right: int) -> Optional[list[int]]:
    """Augmenting-path matching; returns right-match per left node or None."""
    match_r = [-1] * n_right

    def try_augment(u: int, seen: list[bool]) -> bool:
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                if match_r[v] == -1 or try_augment(match_r[v], seen):
                    match_r[v] = u
                    return True
        return False

    for u in range(n_left):
        if not try_augment(u, [False] * n_right):
            return None
    out = [-1] * n_left
    for v, u in enumerate(match_r):
        if u != -1:
            out[u] = v
    return out


def check_envy_free(cake: CakeSpec, division: Sequence[float], eps: float) -> VerificationReport:
    """Perfect matching in the eps-slack preference graph."""
    n = cake.n
    simplex_err = abs(sum(division) - 1.0)
    box_err = max(0.0, max(-min(division), max(division) - 1.0))
    vals = cake.values_at(division)
    adj = []
    for i in range(n):
        best = max(vals[i])
        adj.append([j for j in range(n) if vals[i][j] >= best - eps])
    matching = _perfect_matching(adj, n, n)
    violations = {
        "simplex": simplex_err,
        "box": box_err,
        "matching": 0.0 if matching is not None else 1.0,
    }
    witness = None
    if matching is None:
        witness = [i for i in range(n) if adj[i]]
    return _report(eps, violations, witness)


# ---------------------------------------------------------------------------
# Hylland-Zeckhauser


def check_hz(
    spec: HZSpec, p: Sequence[float], x: Sequence[Sequence[float]], eps: float
) -> VerificationReport:
    """Full allocation plus per-agent optimality and cheapest-optimum conditions."""
    n = spec.n
    pf = [as_fraction(float(v)) for v in p]
    violations: dict[str, float] = {}
    witness = None

    col_err = 0.0
    for j in range(n):
        col_err = max(col_err, abs(sum(x[i][j] for i in range(n)) - 1.0))
    violations["full_allocation"] = col_err

    simplex_err, price_err = 0.0, 0.0
    for i in range(n):
        simplex_err = max(simplex_err, abs(sum(x[i]) - 1.0), -min(x[i]))
    price_err = max(0.0, -min(p), max(p) - n)
    violations["allocation_simplex"] = simplex_err
    violations["price_range"] = price_err

    util_gap, cost_gap = 0.0, 0.0
    for i in range(n):
        u = spec.utilities[i]
        # z >= 0 as -z_j <= 0, budget p.z <= 1
        C = [tuple(Fraction(-1) if t == j else Fraction(0) for t in range(n)) for j in range(n)]
        d = [Fraction(0)] * n
        C.append(tuple(pf))
        d.append(Fraction(1))
        best = exact_lp_oracle(
            LPInstance(tuple(u), ((Fraction(1),) * n,), (Fraction(1),), tuple(C), tuple(d), Fraction(1))
        )
        if best.status != "optimal":
            violations["utility_lp"] = 1.0
            witness = i
            continue
        got_util = sum(float(u[j]) * x[i][j] for j in range(n))
        gap = float(best.value) - got_util
        if gap > util_gap:
            util_gap, witness = gap, i
        # cheapest among utility maximizers: min p.z with u.z >= best value
        C2 = list(C[:n])  # z >= 0 rows
        d2 = list(d[:n])
        C2.append(tuple(-v for v in u))
        d2.append(-best.value)
        cheapest = exact_lp_oracle(
            LPInstance(
                tuple(-v for v in pf),
                ((Fraction(1),) * n,),
                (Fraction(1),),
                tuple(C2),
                tuple(d2),
                Fraction(1),
            )
        )
        min_cost = -float(cheapest.value)
        got_cost = sum(float(pf[j]) * x[i][j] for j in range(n))
        cgap = got_cost - min_cost
        if cgap > cost_gap:
            cost_gap, witness = cgap, i
    violations["utility_gap"] = util_gap
    violations["cost_gap"] = cost_gap
    return _report(eps, violations, witness)


# ---------------------------------------------------------------------------
# Arrow-Debreu


def _affine_rows(circuits: Sequence[Circuit]) -> Optional[tuple[list, list]]:
    rows, offs = [], []
    for c in circuits:
        aff = as_affine(c)
        if aff is None:
            return None
        rows.append(aff[0][0])
        offs.append(aff[1][0])
    return rows, offs


def check_ad_equilibrium(
    spec: ADMarketSpec,
    x: Sequence[Sequence[float]],
    y: Sequence[Sequence[float]],
    p: Sequence[float],
    eps: float,
) -> VerificationReport:
    """Conditions 1-4 of the market-equilibrium definition, inside [-K, K]^ell.

    Firm and consumer optimality use the exact LP oracle when the constraint
    sets and utility pieces are affine; otherwise a sampled deviation search is
    used and flagged in the notes.
    """
    ell = spec.ell
    K = spec.bound_K()
    notes: list[str] = []
    violations: dict[str, float] = {}
    witness = None
    pf = [as_fraction(float(v)) for v in p]

    violations["price_simplex"] = max(abs(sum(p) - 1.0), max(0.0, -min(p)) if p else 0.0)

    z = [
        sum(x[i][h] for i in range(len(spec.consumers)))
        - sum(y[j][h] for j in range(len(spec.firms)))
        - float(sum(c.endowment[h] for c in spec.consumers))
        for h in range(ell)
    ]
    violations["clearing_sign"] = max((max(0.0, v) for v in z), default=0.0)
    violations["clearing_value"] = abs(sum(pv * zv for pv, zv in zip(p, z)))

    # firm profit maximization
    profit_gap = 0.0
    for j, firm in enumerate(spec.firms):
        aff = _affine_rows(firm.production_set.ineq)
        if aff is None:
            gap = _sampled_gap_max(
                lambda v: sum(pv * vv for pv, vv in zip(p, v)),
                firm.production_set,
                K,
                base=y[j],
            )
            notes.append(f"firm {j}: sampled deviation search (nonlinear constraints)")
        else:
            rows, offs = aff
            lp = LPInstance(
                tuple(pf),
                tuple(tuple(r) for r in firm.production_set.eq_A),
                tuple(firm.production_set.eq_b),
                tuple(tuple(r) for r in rows),
                tuple(-o for o in offs),
                K,
            )
            res = exact_lp_oracle(lp)
            best = float(res.value) if res.status == "optimal" else 0.0
            gap = best - sum(pv * vv for pv, vv in zip(p, y[j]))
        if gap > profit_gap:
            profit_gap, witness = gap, ("firm", j)
    violations["firm_profit_gap"] = profit_gap

    # consumer utility maximization within budget
    util_gap = 0.0
    for i, cons in enumerate(spec.consumers):
        budget = float(sum(pf[h] * cons.endowment[h] for h in range(ell)))
        budget += sum(
            float(cons.shares[j]) * sum(p[h] * y[j][h] for h in range(ell))
            for j in range(len(spec.firms))
        )
        got = cons.utility.value(x[i])
        budget_violation = sum(p[h] * x[i][h] for h in range(ell)) - budget
        violations[f"budget_{i}"] = max(0.0, budget_violation)
        aff_set = _affine_rows(cons.consumption_set.ineq)
        aff_util = _affine_rows([val for val, _ in cons.utility.pieces])
        if aff_set is None or aff_util is None:
            best = _sampled_best_utility(cons, p, budget, K)
            notes.append(f"consumer {i}: sampled deviation search (nonlinear structure)")
        else:
            best = _plc_utility_optimum(cons, pf, as_fraction(budget), K, aff_set, aff_util)
        gap = best - got
        if gap > util_gap:
            util_gap, witness = gap, ("consumer", i)
    violations["consumer_utility_gap"] = util_gap
    return _report(eps, violations, witness, notes)


def _plc_utility_optimum(cons, pf, budget, K, aff_set, aff_util) -> float:
    """Exact epigraph LP for a min-of-affine-pieces utility under a budget."""
    ell = cons.utility.dim
    # variables (v, tau): maximize tau
    rows, offs = aff_set
    urows, uoffs = aff_util
    C: list[tuple[Fraction, ...]] = []
    d: list[Fraction] = []
    for r, o in zip(rows, offs):  # consumption set h(v) <= 0
        C.append(tuple(r) + (Fraction(0),))
        d.append(-o)
    for r, o in zip(urows, uoffs):  # tau <= a.v + b
        C.append(tuple(-v for v in r) + (Fraction(1),))
        d.append(o)
    C.append(tuple(pf) + (Fraction(0),))  # budget
    d.append(budget)
    A = tuple(tuple(row) + (Fraction(0),) for row in cons.consumption_set.eq_A)
    b = tuple(cons.consumption_set.eq_b)
    # tau is bounded by the box through the affine pieces; give it slack room
    bound = K * (1 + max(sum(abs(v) for v in r) + abs(o) for r, o in zip(urows, uoffs)))
    obj = tuple([Fraction(0)] * ell + [Fraction(1)])
    res = exact_lp_oracle(LPInstance(obj, A, b, tuple(C), tuple(d), bound))
    if res.status != "optimal":
        return float("-inf")
    return float(res.value)


def _feasible_in_set(cs, v) -> bool:
    for row, rhs in zip(cs.eq_A, cs.eq_b):
        if abs(sum(float(a) * t for a, t in zip(row, v)) - float(rhs)) > 1e-9:
            return False
    return all(evaluate(c, v)[0] <= 1e-9 for c in cs.ineq)


def _sampled_gap_max(objective, cs, K, base, samples: int = 10_000) -> float:
    import random

    rng = random.Random(0)
    Kf = float(K)
    best = objective(base)
    got = best
    dim = cs.dim
    for _ in range(samples):
        v = [rng.uniform(-Kf, Kf) for _ in range(dim)]
        if _feasible_in_set(cs, v):
            val = objective(v)
            if val > best:
                best = val
    return best - got


def _sampled_best_utility(cons, p, budget, K, samples: int = 10_000) -> float:
    import random

    rng = random.Random(0)
    Kf = float(K)
    best = float("-inf")
    for _ in range(samples):
        v = [rng.uniform(-Kf, Kf) for _ in range(cons.utility.dim)]
        if sum(pv * vv for pv, vv in zip(p, v)) > budget + 1e-12:
            continue
        if _feasible_in_set(cons.consumption_set, v):
            best = max(best, cons.utility.value(v))
    return best


# ---------------------------------------------------------------------------
# K-K-M


def check_kkm(spec, x: Sequence[float], eps: float) -> VerificationReport:
    """Either all F_i vanish, or every supported coordinate has F_i > 0."""
    vals = [evaluate(c, x)[0] for c in spec.fns]
    cond1 = max(abs(v) for v in vals)
    cond2 = 0.0
    for xi, fi in zip(x, vals):
        if xi > eps and fi <= eps:
            cond2 = max(cond2, xi)
    violations = {"condition": min(cond1, cond2)}
    simplex_err = abs(sum(x) - 1.0) + max(0.0, -min(x))
    violations["simplex"] = simplex_err
    return _report(eps, violations, witness=vals)


# ---------------------------------------------------------------------------
# epsilon-proper equilibria


def check_eps_proper(
    game: GameNF, profile: Sequence[float], eps: Fraction, tol: float
) -> VerificationReport:
    """Every fired payoff comparison forces x_ik <= eps * x_il (+ tol)."""
    rows = split_profile(game.actions, profile)
    epsf = float(eps)
    worst, witness = 0.0, None
    mixed_err = 0.0
    for i in range(game.n_players):
        eta = float(eps) ** game.actions[i] / game.actions[i]
        mixed_err = max(mixed_err, abs(sum(rows[i]) - 1.0))
        for j in range(game.actions[i]):
            mixed_err = max(mixed_err, eta - rows[i][j])
        payoff = [game.expected_payoff_pure(i, a, rows) for a in range(game.actions[i])]
        for k in range(game.actions[i]):
            for l in range(game.actions[i]):
                if payoff[k] < payoff[l] - tol:
                    excess = rows[i][k] - epsf * rows[i][l]
                    if excess > worst:
                        worst, witness = excess, (i, k, l)
    return _report(tol, {"properness": worst, "perturbed_simplex": mixed_err}, witness)


# ---------------------------------------------------------------------------
# stochastic games


def policy_values(spec: StochasticGameSpec, strategy) -> list[list[float]]:
    """Exact discounted values of a stationary profile via linear solves."""
    import numpy as np

    if spec.lam == 0:
        raise SingularSystem("discount factor 0 is outside the model")
    S, n = spec.n_states, spec.n_players
    lam = float(spec.lam)
    out = []
    # P[s][s'] under the profile, shared across players
    P = np.zeros((S, S))
    stage = np.zeros((n, S))
    for s in range(S):
        game = spec.stage_game(s)
        for idx, prof in enumerate(game.profiles()):
            w = 1.0
            for l, a in enumerate(prof):
                w *= strategy[l][s][a]
            for s2 in range(S):
                P[s, s2] += w * float(spec.transitions[s][idx][s2])
            for i in range(n):
                stage[i, s] += w * float(spec.payoffs[i][s][idx])
    M = np.eye(S) - (1.0 - lam) * P
    for i in range(n):
        v = np.linalg.solve(M, lam * stage[i])
        out.append([float(t) for t in v])
    return out


def check_stochastic_stationary(
    spec: StochasticGameSpec, v, strategy, tol: float
) -> VerificationReport:
    """Reported values must match policy evaluation; no one-shot deviation helps."""
    gamma = policy_values(spec, strategy)
    value_err, witness = 0.0, None
    for i in range(spec.n_players):
        for s in range(spec.n_states):
            err = abs(v[i][s] - gamma[i][s])
            if err > value_err:
                value_err, witness = err, ("value", i, s)
    dev_gap = 0.0
    for s in range(spec.n_states):
        game = spec.stage_game(s, values_next=gamma)
        rows = [strategy[l][s] for l in range(spec.n_players)]
        for i in range(spec.n_players):
            current = game.expected_payoff(i, rows)
            for a in range(spec.actions[i]):
                gap = game.expected_payoff_pure(i, a, rows) - current
                if gap > dev_gap:
                    dev_gap, witness = gap, ("deviation", i, s, a)
    return _report(tol, {"value_mismatch": value_err, "one_shot_gap": dev_gap}, witness)


# ---------------------------------------------------------------------------
# conditional convex constraint systems


def check_ccc(system: CCCSystem, x: Sequence[float], tol: float) -> VerificationReport:
    """x satisfies all fired constraints, or the fired system is certified empty."""
    R = float(system.radius)
    box_err = max(0.0, max((abs(v) for v in x), default=0.0) - R)
    eq_err = 0.0
    for row, rhs in zip(system.eq_A, system.eq_b):
        eq_err = max(eq_err, abs(sum(float(a) * t for a, t in zip(row, x)) - float(rhs)))
    dom_err = max((evaluate(c, x)[0] for c in system.domain_ineq), default=0.0)
    fired = [pair for pair in system.constraints if evaluate(pair.f, x)[0] > tol]
    cons_err, witness = 0.0, None
    for pair in fired:
        v = evaluate(pair.g, x)[0]
        if v > cons_err:
            cons_err, witness = v, pair
    violations = {
        "box": box_err,
        "equalities": eq_err,
        "domain": max(0.0, dom_err),
        "fired_constraints": cons_err,
    }
    if all(v <= tol for v in violations.values()):
        return VerificationReport(True, violations)
    # try to certify emptiness of the fired system (affine pieces only)
    notes = []
    aff_dom = _affine_rows(system.domain_ineq)
    aff_fired = _affine_rows([pair.g for pair in fired])
    if aff_dom is not None and aff_fired is not None:
        rows = aff_dom[0] + aff_fired[0]
        offs = aff_dom[1] + aff_fired[1]
        lp = LPInstance(
            tuple([Fraction(0)] * system.n),
            tuple(tuple(r) for r in system.eq_A),
            tuple(system.eq_b),
            tuple(tuple(r) for r in rows),
            tuple(-o for o in offs),
            system.radius,
        )
        if exact_lp_oracle(lp).status == "infeasible":
            notes.append("fired system certified empty by the exact oracle")
            return VerificationReport(True, violations, None, tuple(notes))
    else:
        notes.append("emptiness not certifiable: nonlinear fired constraints")
    return VerificationReport(False, violations, witness, tuple(notes))
