"""The OPT-gate: a pseudogate whose fixed points solve parameterized convex programs.

Given circuits for the inequality constraints and pseudogates for the
subgradients, build_opt_gate emits a gate with parameter inputs (w, A, b, R)
and n + k + m + t(k+1) auxiliary wires.  At an auxiliary fixed point the
primary output is feasible whenever the program is feasible, and optimal
whenever the explicit Slater condition holds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from .circuit import (
    Circuit,
    CircuitBuilder,
    CircuitError,
    as_affine,
    as_fraction,
    evaluate_exact,
)
from .pseudogate import Pseudogate, heaviside, make_pseudogate, pad_aux
from . import verify


class SlaterViolation(Exception):
    pass


@dataclass(frozen=True)
class ConvexProgramSpec:
    """minimize f(x; w) s.t. A x = b, g_i(x; w) <= 0, x in [-R, R]^n.

    g[i] are circuits of arity n + s; grad_f and grad_g[i] are pseudogates with
    n + s primary inputs and n outputs.  All gradient gates must share an aux
    count t; use normalize() to pad them.
    """

    n: int
    m: int
    k: int
    s: int
    g: tuple[Circuit, ...]
    grad_f: Pseudogate
    grad_g: tuple[Pseudogate, ...]

    def __post_init__(self):
        if self.n < 1 or min(self.m, self.k, self.s) < 0:
            raise CircuitError("bad convex program dimensions")
        if len(self.g) != self.k or len(self.grad_g) != self.k:
            raise CircuitError("need k constraint circuits and k gradient gates")
        for c in self.g:
            if c.input_arity != self.n + self.s or len(c.outputs) != 1:
                raise CircuitError("constraint circuit must map (x, w) to a scalar")
        for gate in (self.grad_f, *self.grad_g):
            if gate.n_in != self.n + self.s or gate.n_out != self.n:
                raise CircuitError("gradient gate must map (x, w) to n outputs")
        t = self.grad_f.ell
        if any(gate.ell != t for gate in self.grad_g):
            raise CircuitError("gradient gates must share an aux count; use normalize()")

    @staticmethod
    def normalize(n, m, k, s, g, grad_f, grad_g) -> "ConvexProgramSpec":
        t = max([grad_f.ell] + [gg.ell for gg in grad_g])
        return ConvexProgramSpec(
            n,
            m,
            k,
            s,
            tuple(g),
            pad_aux(grad_f, t),
            tuple(pad_aux(gg, t) for gg in grad_g),
        )

    @property
    def t(self) -> int:
        return self.grad_f.ell

    @property
    def ell(self) -> int:
        return self.n + self.k + self.m + self.t * (self.k + 1)

    @property
    def n_params(self) -> int:
        return self.s + self.m * self.n + self.m + 1


@dataclass(frozen=True)
class CPParams:
    """One concrete parameter point (w, A, b, R) for a convex program."""

    w: tuple[Fraction, ...]
    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]
    R: Fraction

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be strictly positive")
        if len(self.A) != len(self.b):
            raise ValueError("A/b length mismatch")

    @staticmethod
    def of(w, A, b, R) -> "CPParams":
        fr = as_fraction
        return CPParams(
            tuple(fr(v) for v in w),
            tuple(tuple(fr(v) for v in row) for row in A),
            tuple(fr(v) for v in b),
            fr(R),
        )

    def flat(self) -> list[Fraction]:
        out = list(self.w)
        for row in self.A:
            out.extend(row)
        out.extend(self.b)
        out.append(self.R)
        return out


@dataclass(frozen=True)
class OptGateInternals:
    """Node references of the intermediate gate quantities, for tests."""

    x: tuple[int, ...]
    mu: tuple[int, ...]
    lam: tuple[int, ...]
    mu0: int
    v0: tuple[int, ...]
    v: tuple[tuple[int, ...], ...]
    z: tuple[int, ...]
    ybar: tuple[int, ...]


_INTERNALS: dict[int, OptGateInternals] = {}


def internals_of(gate: Pseudogate) -> Optional[OptGateInternals]:
    return _INTERNALS.get(id(gate.body))


def build_opt_gate(spec: ConvexProgramSpec) -> Pseudogate:
    """Assemble the gate; parameter inputs are flattened (w, A, b, R)."""
    n, m, k, s = spec.n, spec.m, spec.k, spec.s
    b = CircuitBuilder(spec.n_params)
    w_in = b.inputs[0:s]
    A_in = [b.inputs[s + j * n : s + (j + 1) * n] for j in range(m)]
    b_in = b.inputs[s + m * n : s + m * n + m]
    R_in = b.inputs[s + m * n + m]
    GH = heaviside()

    # scaled point x := 2Ry - R, one aux wire per coordinate
    y_slots, x_nodes = [], []
    two = b.const(2)
    for r in range(n):
        slot, y_node = b.new_aux_slot()
        y_slots.append(slot)
        x_nodes.append(b.sub(b.mul(two, b.mul(R_in, y_node)), R_in))

    # mu_i in H(g_i(x; w))
    mu = []
    for i in range(k):
        gval = b.splice(spec.g[i], x_nodes + w_in)[0]
        mu.append(b.lift(GH, [gval])[0])

    # lam_j in 2 H(a_j . x - b_j) - 1
    lam = []
    for j in range(m):
        resid = b.sub(b.dot(A_in[j], x_nodes), b_in[j])
        h = b.lift(GH, [resid])[0]
        lam.append(b.sub(b.mul(two, h), b.const(1)))

    # subgradients via the supplied pseudogates
    v0 = b.lift(spec.grad_f, x_nodes + w_in)
    v_rows = [b.lift(gg, x_nodes + w_in) for gg in spec.grad_g]

    # mu_0 := 1 - max(mu_1..mu_k, |lam_1|..|lam_m|)
    if k + m > 0:
        mu0 = b.sub(b.const(1), b.fold_max(mu + [b.abs_(l) for l in lam]))
    else:
        mu0 = b.const(1)

    # z := Pi_R(x - mu_0 v_0 - sum mu_i v_i - sum lam_j a_j)
    negR = b.neg(R_in)
    z_nodes = []
    for r in range(n):
        acc = b.sub(x_nodes[r], b.mul(mu0, v0[r]))
        for i in range(k):
            acc = b.sub(acc, b.mul(mu[i], v_rows[i][r]))
        for j in range(m):
            acc = b.sub(acc, b.mul(lam[j], A_in[j][r]))
        z_nodes.append(b.clamp(acc, negR, R_in))

    # ybar := (z + R) / 2R, clamped back into [0,1] syntactically
    ybar_nodes = []
    for r in range(n):
        ybar = b.clamp01(b.div(b.add(z_nodes[r], R_in), b.mul(two, R_in)))
        b.set_aux_output(y_slots[r], ybar)
        ybar_nodes.append(ybar)

    gate = make_pseudogate(b, z_nodes)
    if gate.ell != spec.ell:
        raise CircuitError(f"aux accounting broke: {gate.ell} != {spec.ell}")
    _INTERNALS[id(gate.body)] = OptGateInternals(
        x=tuple(x_nodes),
        mu=tuple(mu),
        lam=tuple(lam),
        mu0=mu0,
        v0=tuple(v0),
        v=tuple(tuple(row) for row in v_rows),
        z=tuple(z_nodes),
        ybar=tuple(ybar_nodes),
    )
    return gate


def constant_gradient_gate(n: int, s: int, rows: Sequence[Sequence]) -> Pseudogate:
    """Aux-free pseudogate emitting an affine function of (x, w).

    rows[r] has n + s + 1 entries: coefficients over (x, w) plus an offset.
    """
    b = CircuitBuilder(n + s)
    outs = []
    for row in rows:
        lin = b.dot_const(row[:-1], b.inputs)
        offset = as_fraction(row[-1])
        outs.append(b.add(lin, b.const(offset)) if offset != 0 else lin)
    return make_pseudogate(b, outs)


def _unit_row(length: int, idx: int, sign: int = 1) -> list[Fraction]:
    row = [Fraction(0)] * (length + 1)
    row[idx] = Fraction(sign)
    return row


@lru_cache(maxsize=None)
def build_lp_opt_gate(n: int, m: int, k: int) -> Pseudogate:
    """OPT-gate for the LP family: maximize c.x s.t. Ax=b, Cx<=d, x in [-R,R]^n.

    Lowered to the convex form with w = (c, C, d), f(x;w) = -c.x and
    g_i(x;w) = C_i.x - d_i; all gradients are constant circuits (t = 0).
    Parameter layout: (c, C, d) then A, b, R.
    """
    if n < 1:
        raise CircuitError("LP needs at least one variable")
    s = n + k * n + k
    grad_f = constant_gradient_gate(n, s, [_unit_row(n + s, n + r, -1) for r in range(n)])
    g_circuits, grad_g = [], []
    for i in range(k):
        gb = CircuitBuilder(n + s)
        x_nodes = gb.inputs[:n]
        Ci = gb.inputs[2 * n + i * n : 2 * n + (i + 1) * n]
        di = gb.inputs[2 * n + k * n + i]
        out = gb.sub(gb.dot(Ci, x_nodes), di)
        g_circuits.append(Circuit(n + s, tuple(gb._nodes), (out,)))
        grad_g.append(
            constant_gradient_gate(
                n, s, [_unit_row(n + s, 2 * n + i * n + r) for r in range(n)]
            )
        )
    spec = ConvexProgramSpec(n, m, k, s, tuple(g_circuits), grad_f, tuple(grad_g))
    return build_opt_gate(spec)


def lp_cp_params(c, A, b, C, d, R) -> CPParams:
    """CPParams for the LP lowering: w = (c, C row-major, d)."""
    fr = as_fraction
    w = [fr(v) for v in c]
    for row in C:
        w.extend(fr(v) for v in row)
    w.extend(fr(v) for v in d)
    return CPParams.of(w, A, b, R)


def pdc_supergradient(pieces: Sequence[tuple[Circuit, Circuit]]) -> Pseudogate:
    """Superdifferential pseudogate for f = min_j g_j over differentiable pieces.

    The gate evaluates every piece and its gradient, solves the simplex-weight
    LP (minimize sum v_j g_j(x)) with the LP OPT-gate, and emits the convex
    combination sum w_j grad g_j(x).
    """
    if not pieces:
        raise CircuitError("need at least one piece")
    dim = pieces[0][0].input_arity
    for val, grad in pieces:
        if val.input_arity != dim or len(val.outputs) != 1:
            raise CircuitError("piece value circuit shape mismatch")
        if grad.input_arity != dim or len(grad.outputs) != dim:
            raise CircuitError("piece gradient circuit shape mismatch")
    q = len(pieces)
    lp = build_lp_opt_gate(q, 1, q)

    b = CircuitBuilder(dim)
    x_nodes = b.inputs[:]
    gvals = [b.splice(val, x_nodes)[0] for val, _ in pieces]
    grads = [b.splice(grad, x_nodes) for _, grad in pieces]

    one, zero = b.const(1), b.const(0)
    wires: list[int] = []
    wires.extend(b.neg(g) for g in gvals)  # c = -g(x): minimize sum v_j g_j
    for i in range(q):  # C = -I (v_j >= 0)
        for j in range(q):
            wires.append(b.const(-1) if i == j else zero)
    wires.extend(zero for _ in range(q))  # d = 0
    wires.extend(one for _ in range(q))  # A = (1 .. 1)
    wires.append(one)  # b = 1
    wires.append(one)  # R = 1
    weights = b.lift(lp, wires)
    outs = [b.sum_([b.mul(weights[j], grads[j][r]) for j in range(q)]) for r in range(dim)]
    return make_pseudogate(b, outs)


# ---------------------------------------------------------------------------
# explicit Slater checking


@dataclass(frozen=True)
class SlaterVerdict:
    kind: str  # "holds" | "unknown" | "fails_linear_independence"
    witness: Optional[tuple[Fraction, ...]] = None

    @property
    def holds(self) -> bool:
        return self.kind == "holds"


def check_explicit_slater(
    A, b, g_circuits: Sequence[Circuit], R, dim: Optional[int] = None
) -> SlaterVerdict:
    """Rank-test the equality rows, then hunt for a strict interior point.

    Affine inequality circuits get an exact margin-LP answer; general circuits
    get a deterministic sampled search over the equality-constrained slice of
    the box, which can only return Holds or Unknown.
    """
    fr = as_fraction
    A = [list(map(fr, row)) for row in A]
    b = [fr(v) for v in b]
    R = fr(R)
    if R <= 0:
        return SlaterVerdict("unknown")
    if A and verify.exact_rank(A) < len(A):
        return SlaterVerdict("fails_linear_independence")
    n = dim
    if n is None:
        n = len(A[0]) if A else (g_circuits[0].input_arity if g_circuits else None)
    if n is None:
        raise ValueError("cannot infer dimension: pass dim explicitly")

    affine = verify._affine_rows(g_circuits) if g_circuits else ([], [])
    if affine is not None:
        rows, offs = affine
        margin, witness = verify.strict_interior_margin(
            A, b, rows, [-o for o in offs], R, dim=n
        )
        if margin > 0 and witness is not None:
            return SlaterVerdict("holds", witness)
        return SlaterVerdict("unknown")

    # nonlinear constraints: sample the affine slice {Ax=b} inside the box
    particular, basis = _affine_slice(A, b, n)
    if particular is None:
        return SlaterVerdict("unknown")
    candidates = [particular]
    import random

    rng = random.Random(0)
    for _ in range(200):
        pt = list(particular)
        for vec in basis:
            coef = Fraction(rng.randint(-64, 64), 64) * R
            pt = [p + coef * v for p, v in zip(pt, vec)]
        candidates.append(pt)
    for pt in candidates:
        if all(-R < v < R for v in pt) and all(
            evaluate_exact(c, pt)[0] < 0 for c in g_circuits
        ):
            return SlaterVerdict("holds", tuple(pt))
    return SlaterVerdict("unknown")


def _affine_slice(A, b, n):
    """Particular solution of Ax=b near the box center plus a null-space basis."""
    if not A:
        return [Fraction(0)] * n, [
            [Fraction(1) if j == i else Fraction(0) for j in range(n)] for i in range(n)
        ]
    try:
        A2, b2 = verify.eliminate_dependent_rows(A, b)
    except verify.InconsistentEqualities:
        return None, []
    # gaussian elimination to reduced row echelon form
    m = [row + [rhs] for row, rhs in zip(A2, b2)]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][col]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * c for a, c in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
    particular = [Fraction(0)] * n
    for row_i, col in enumerate(pivots):
        particular[col] = m[row_i][n]
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fcol in free:
        vec = [Fraction(0)] * n
        vec[fcol] = Fraction(1)
        for row_i, col in enumerate(pivots):
            vec[col] = -m[row_i][fcol]
        basis.append(vec)
    return particular, basis
