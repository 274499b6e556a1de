"""The acceptance suite: one callable per criterion, with independent oracles.

Each criterion returns (passed, detail).  run_all prints one pass/fail line per
criterion; the pytest wrapper in tests/test_acceptance.py asserts each one.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import verify
from .circuit import Box, Circuit, CircuitBuilder, check_well_defined
from .compilers import (
    ADConsumer,
    ADFirm,
    ADMarketSpec,
    BapatSpec,
    CakeSpec,
    ConvexSet,
    GameNF,
    HZSpec,
    KKMSpec,
    PDCFunction,
    StochasticGameSpec,
    bapat_to_cake,
    compile_ad_market,
    compile_cake,
    compile_eps_proper,
    compile_hz,
    compile_kkm,
    compile_lp,
    compile_nash,
    compile_stochastic,
    eta_weights,
)
from .optgate import ConvexProgramSpec, build_opt_gate, constant_gradient_gate
from .pipeline import check_bapat
from .pseudogate import Pseudogate, fixed_aux_solutions_1d, heaviside, make_pseudogate
from .solver import SolverConfig, eval_batch, lower, multistart, _residual_batch
from .verify import LPInstance, exact_lp_oracle


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float


# ---------------------------------------------------------------------------
# shared fixture builders


def affine_circuit(n: int, coeffs, offset=0) -> Circuit:
    b = CircuitBuilder(n)
    out = b.add(b.dot_const(coeffs, b.inputs), b.const(offset))
    return Circuit(n, tuple(b._nodes), (out,))


def const_vector_circuit(n: int, values) -> Circuit:
    b = CircuitBuilder(n)
    outs = [b.const(v) for v in values]
    return Circuit(n, tuple(b._nodes), tuple(outs))


def matching_pennies() -> GameNF:
    return GameNF.from_nested([2, 2], [[[1, -1], [-1, 1]], [[-1, 1], [1, -1]]])


def rock_paper_scissors() -> GameNF:
    a = [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]
    b = [[-v for v in row] for row in a]
    return GameNF.from_nested([3, 3], [a, b])


def linear_cake(weights) -> CakeSpec:
    """u_ij(x) = w_ij * x_j; positive weights keep the agents hungry."""
    n = len(weights)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            b = CircuitBuilder(n)
            out = b.scale(weights[i][j], b.inputs[j])
            row.append(Circuit(n, tuple(b._nodes), (out,)))
        rows.append(tuple(row))
    return CakeSpec(n, tuple(rows))


def support_enumeration_2x2(game: GameNF) -> Optional[list[list[Fraction]]]:
    """All equilibria of a 2x2 game in exact arithmetic; None if degenerate."""
    A = [[game.u(0, (i, j)) for j in range(2)] for i in range(2)]
    B = [[game.u(1, (i, j)) for j in range(2)] for i in range(2)]
    eqs: list[list[Fraction]] = []
    for i in range(2):
        for j in range(2):
            if A[i][j] >= A[1 - i][j] and B[i][j] >= B[i][1 - j]:
                if A[i][j] == A[1 - i][j] or B[i][j] == B[i][1 - j]:
                    return None  # weakly dominated tie: continuum risk
                prof = [Fraction(0)] * 4
                prof[i] = Fraction(1)
                prof[2 + j] = Fraction(1)
                eqs.append(prof)
    db = B[0][0] - B[0][1] - B[1][0] + B[1][1]
    da = A[0][0] - A[0][1] - A[1][0] + A[1][1]
    if db != 0 and da != 0:
        p = (B[1][1] - B[1][0]) / db
        q = (A[1][1] - A[0][1]) / da
        if 0 < p < 1 and 0 < q < 1:
            eqs.append([p, 1 - p, q, 1 - q])
    if not eqs:
        return None
    return eqs


def nonneg_orthant(ell: int, lower=Fraction(0)) -> ConvexSet:
    ineq, grads = [], []
    for r in range(ell):
        b = CircuitBuilder(ell)
        out = b.sub(b.const(lower), b.inputs[r])
        ineq.append(Circuit(ell, tuple(b._nodes), (out,)))
        rows = [[Fraction(0)] * ell + [Fraction(-1) if o == r else Fraction(0)] for o in range(ell)]
        grads.append(constant_gradient_gate(ell, 0, rows))
    return ConvexSet(ell, (), (), tuple(ineq), tuple(grads))


def linear_utility(coeffs) -> PDCFunction:
    n = len(coeffs)
    return PDCFunction(((affine_circuit(n, coeffs), const_vector_circuit(n, coeffs)),))


def ad_autarky() -> ADMarketSpec:
    cons = ADConsumer(
        endowment=(Fraction(1), Fraction(1)),
        lower_bound=(Fraction(0), Fraction(0)),
        shares=(),
        utility=linear_utility([Fraction(1), Fraction(2)]),
        consumption_set=nonneg_orthant(2),
        interior_witness=(Fraction(1, 2), Fraction(1, 2)),
    )
    return ADMarketSpec(2, (cons,), (), Fraction(0))


def ad_exchange() -> ADMarketSpec:
    lb = Fraction(-1)
    c1 = ADConsumer(
        (Fraction(1), Fraction(0)), (lb, lb), (),
        linear_utility([Fraction(0), Fraction(1)]),
        nonneg_orthant(2, lower=lb), (Fraction(1, 2), Fraction(-1, 2)),
    )
    c2 = ADConsumer(
        (Fraction(0), Fraction(1)), (lb, lb), (),
        linear_utility([Fraction(1), Fraction(0)]),
        nonneg_orthant(2, lower=lb), (Fraction(-1, 2), Fraction(1, 2)),
    )
    return ADMarketSpec(2, (c1, c2), (), Fraction(0))


def random_lp(rng: random.Random, zero_objective=False) -> LPInstance:
    n = rng.randint(1, 4)
    m = rng.randint(0, 2)
    k = rng.randint(0, 4)
    rat = lambda: Fraction(rng.randint(-9, 9), rng.randint(1, 9))
    c = [Fraction(0)] * n if zero_objective else [rat() for _ in range(n)]
    A = [[rat() for _ in range(n)] for _ in range(m)]
    b = [rat() for _ in range(m)]
    C = [[rat() for _ in range(n)] for _ in range(k)]
    d = [rat() for _ in range(k)]
    return LPInstance.of(c, A, b, C, d, 10)


def lp_feasibility_error(lp: LPInstance, sol) -> float:
    err = max((abs(s) for s in sol), default=0.0) - float(lp.R)
    for row, rhs in zip(lp.A, lp.b):
        err = max(err, abs(sum(float(a) * s for a, s in zip(row, sol)) - float(rhs)))
    for row, rhs in zip(lp.C, lp.d):
        err = max(err, sum(float(a) * s for a, s in zip(row, sol)) - float(rhs))
    return max(0.0, err)


def _lp_slater_holds(lp: LPInstance) -> bool:
    if lp.A and verify.exact_rank(lp.A) < len(lp.A):
        return False
    margin, _ = verify.strict_interior_margin(lp.A, lp.b, lp.C, lp.d, lp.R, dim=lp.n)
    return margin > 0


# ---------------------------------------------------------------------------
# criteria


def criterion_1() -> tuple[bool, str]:
    """Heaviside semantics, exhaustively over x in [-1, 1]."""
    gate = heaviside()
    body = gate.body.with_outputs([gate.body.outputs[1]])
    xs = np.concatenate([np.linspace(-1.0, 1.0, 10_000), [0.0]])
    ys = np.linspace(0.0, 1.0, 129)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    out = eval_batch(body, pts)[:, 0].reshape(len(xs), len(ys))
    resid = np.abs(out - Y)
    ok = True
    for i, x in enumerate(xs):
        sol = resid[i] <= 1e-12
        if x > 0:
            ok &= bool(sol[-1]) and resid[i, -1] == 0.0 and not sol[:-1].any()
        elif x < 0:
            ok &= bool(sol[0]) and resid[i, 0] == 0.0 and not sol[1:].any()
        else:
            ok &= bool(sol.all()) and float(resid[i].max()) == 0.0
        if not ok:
            return False, f"aux fixed points escape H(x) at x={x}"
    for x, want in ((1.0, (1.0, 1.0)), (-1.0, (0.0, 0.0)), (0.25, (1.0, 1.0))):
        sols = fixed_aux_solutions_1d(gate, x)
        if len(sols) != 1 or abs(sols[0][0] - want[0]) > 1e-9 or abs(sols[0][1] - want[1]) > 1e-9:
            return False, f"interval oracle disagrees at x={x}: {sols}"
    sols = fixed_aux_solutions_1d(gate, 0.0)
    if sols != [(0.0, 1.0)]:
        return False, f"x=0 should give the full interval, got {sols}"
    return True, f"{len(xs)} grid points, all aux fixed points inside H(x)"


def criterion_2() -> tuple[bool, str]:
    """OPT-gate vs the exact oracle on 100 Slater-filtered random LPs."""
    rng = random.Random(20_240_201)
    config = SolverConfig()
    n_converged = 0
    checked = 0
    failures = []
    instances = 0
    while instances < 100:
        lp = random_lp(rng)
        if not _lp_slater_holds(lp):
            continue
        instances += 1
        compiled = compile_lp(lp)
        report = multistart(compiled.circuit, compiled.box, config)
        if not report.converged:
            failures.append(f"LP#{instances} did not converge (res {report.residual:.1e})")
            continue
        n_converged += 1
        sol = compiled.slice_of(report.point, "solution")
        feas = lp_feasibility_error(lp, sol)
        opt = exact_lp_oracle(lp)
        gap = abs(float(opt.value) - sum(float(c) * s for c, s in zip(lp.c, sol)))
        checked += 1
        if feas > 1e-6 or gap > 1e-6:
            return False, f"LP#{instances}: feasibility {feas:.2e}, gap {gap:.2e}"
    if n_converged < 90:
        return False, f"only {n_converged}/100 converged under default multistart"
    detail = f"{n_converged}/100 converged, all feasible and optimal vs the oracle"
    if failures:
        detail += "; non-converged: " + "; ".join(failures)
    return True, detail


def criterion_3() -> tuple[bool, str]:
    """Feasibility-only guarantee for c = 0 LPs with nonempty region."""
    rng = random.Random(77)
    config = SolverConfig()
    n_converged = 0
    instances = 0
    while instances < 50:
        lp = random_lp(rng, zero_objective=True)
        if lp.A and verify.exact_rank(lp.A) < len(lp.A):
            continue
        if verify.feasible_point(lp) is None:
            continue
        instances += 1
        compiled = compile_lp(lp)
        report = multistart(compiled.circuit, compiled.box, config)
        if not report.converged:
            continue
        n_converged += 1
        sol = compiled.slice_of(report.point, "solution")
        feas = lp_feasibility_error(lp, sol)
        if feas > 1e-6:
            return False, f"LP#{instances}: converged point infeasible by {feas:.2e}"
    if n_converged < 25:
        return False, f"only {n_converged}/50 converged; too few to be meaningful"
    return True, f"{n_converged}/50 converged, every converged point feasible"


def criterion_4() -> tuple[bool, str]:
    """Nash end to end: matching pennies, RPS, and 20 random 2x2 games."""
    config = SolverConfig()
    mp = matching_pennies()
    compiled = compile_nash(mp)
    report = multistart(compiled.circuit, compiled.box, config)
    prof = compiled.slice_of(report.point, "profile")
    if not report.converged or max(abs(v - 0.5) for v in prof) > 1e-6:
        return False, f"matching pennies: converged={report.converged}, profile={prof}"

    rps = rock_paper_scissors()
    uniform = [1 / 3] * 6
    if not verify.check_nash(rps, uniform, 1e-9).passed:
        return False, "RPS uniform profile fails check_nash at 1e-9"

    rng = random.Random(424242)
    games = 0
    while games < 20:
        payoffs = [
            [[Fraction(rng.randint(-9, 9)) for _ in range(2)] for _ in range(2)]
            for _ in range(2)
        ]
        game = GameNF.from_nested([2, 2], payoffs)
        eqs = support_enumeration_2x2(game)
        if eqs is None:
            continue
        games += 1
        cg = compile_nash(game)
        rep = multistart(cg.circuit, cg.box, config)
        if not rep.converged:
            return False, f"random game #{games} did not converge"
        prof = cg.slice_of(rep.point, "profile")
        if not verify.check_nash(game, prof, 1e-6).passed:
            return False, f"random game #{games}: check_nash fails at {prof}"
        dist = min(
            max(abs(float(e) - p) for e, p in zip(eq, prof)) for eq in eqs
        )
        if dist > 1e-4:
            return False, f"random game #{games}: {dist:.2e} from the oracle set"
    return True, "matching pennies uniform, RPS verified, 20/20 random games match the oracle"


def criterion_5() -> tuple[bool, str]:
    """Cake fixtures plus random hungry linear instances are envy-free."""
    config = SolverConfig(restarts=8)
    fixtures: list[CakeSpec] = []
    fixtures.append(linear_cake([[Fraction(1), Fraction(1)], [Fraction(1), Fraction(1)]]))
    fixtures.append(
        linear_cake([[Fraction(w)] * 3 for w in (1, 2, 3)])
    )
    # agent 1 values only piece 1 (with a bonus), agent 2 symmetric
    def bonus_cake() -> CakeSpec:
        rows = []
        for i in range(2):
            row = []
            for j in range(2):
                b = CircuitBuilder(2)
                out = b.inputs[j]
                if i == j:
                    out = b.add(b.const(1), out)
                row.append(Circuit(2, tuple(b._nodes), (out,)))
            rows.append(tuple(row))
        return CakeSpec(2, tuple(rows))

    fixtures.append(bonus_cake())
    rng = random.Random(5150)
    for _ in range(10):
        n = rng.choice([2, 3])
        weights = [[Fraction(rng.randint(1, 5)) for _ in range(n)] for _ in range(n)]
        fixtures.append(linear_cake(weights))

    for idx, cake in enumerate(fixtures):
        compiled = compile_cake(cake, hungriness_samples=2000)
        report = multistart(compiled.circuit, compiled.box, config)
        if not report.converged:
            return False, f"cake #{idx} did not converge (res {report.residual:.1e})"
        division = compiled.slice_of(report.point, "division")
        check = verify.check_envy_free(cake, division, 1e-5)
        if not check.passed:
            return False, f"cake #{idx}: division {division} not envy-free"
    return True, f"{len(fixtures)}/13 instances converged to envy-free divisions"


def criterion_6() -> tuple[bool, str]:
    """HZ equilibria plus the dummy-good property at fixed points."""
    config = SolverConfig(restarts=8)
    instances: list[HZSpec] = [HZSpec(((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))))]
    rng = random.Random(66)
    for _ in range(10):
        n = rng.choice([2, 3])
        instances.append(
            HZSpec(tuple(tuple(Fraction(rng.randint(0, 9)) for _ in range(n)) for _ in range(n)))
        )
    for idx, spec in enumerate(instances):
        n = spec.n
        compiled = compile_hz(spec)
        report = multistart(compiled.circuit, compiled.box, config)
        if not report.converged:
            return False, f"hz #{idx} did not converge (res {report.residual:.1e})"
        p = compiled.slice_of(report.point, "prices")
        flat = compiled.slice_of(report.point, "allocation")
        x = [flat[i * n : (i + 1) * n] for i in range(n)]
        if not verify.check_hz(spec, p, x, 1e-6).passed:
            return False, f"hz #{idx}: check_hz fails at p={p}"
        probe = compiled.circuit.with_outputs(compiled.meta["probe_dummy"])
        dummy = eval_batch(probe, report.point.reshape(1, -1))[0]
        if max(dummy) > 1e-8:
            return False, f"hz #{idx}: dummy good bought: {dummy}"
    return True, f"{len(instances)}/11 instances pass check_hz; dummy coordinates <= 1e-8"


def criterion_7() -> tuple[bool, str]:
    """K-K-M fixed points and the Bapat round trip."""
    config = SolverConfig(restarts=8)
    rng = random.Random(700)
    fixtures: list[KKMSpec] = []
    for n in (2, 3):
        fixtures.append(KKMSpec.of([const_vector_circuit(n, [0]) for _ in range(n)]))
    for _ in range(4):
        n = rng.choice([2, 3])
        raw = [rng.randint(1, 9) for _ in range(n)]
        c = [Fraction(v, sum(raw)) for v in raw]
        fns = []
        for i in range(n):
            b = CircuitBuilder(n)
            out = b.max_(b.sub(b.const(c[i]), b.inputs[i]), b.const(0))
            fns.append(Circuit(n, tuple(b._nodes), (out,)))
        fixtures.append(KKMSpec.of(fns))
    for _ in range(4):
        n = rng.choice([2, 3])
        raw = [rng.randint(1, 9) for _ in range(n)]
        c = [Fraction(v, sum(raw)) for v in raw]
        t = Fraction(1, 2)
        fns = []
        for i in range(n):
            b = CircuitBuilder(n)
            # G(x)_i - x_i with G = (1-t) x + t c, a Brouwer contraction
            gi = b.add(b.scale(1 - t, b.inputs[i]), b.const(t * c[i]))
            out = b.max_(b.sub(gi, b.inputs[i]), b.const(0))
            fns.append(Circuit(n, tuple(b._nodes), (out,)))
        fixtures.append(KKMSpec.of(fns))

    for idx, spec in enumerate(fixtures):
        compiled = compile_kkm(spec)
        report = multistart(compiled.circuit, compiled.box, config)
        if not report.converged:
            return False, f"kkm #{idx} did not converge"
        point = compiled.slice_of(report.point, "point")
        if not verify.check_kkm(spec, point, 1e-6).passed:
            return False, f"kkm #{idx}: check_kkm fails at {point}"

    # Bapat round trip on constant maps with every coordinate >= 1/(2n)
    for n in (2, 3):
        maps = []
        for _ in range(n):
            raw = [rng.randint(1, 9) + 7 for _ in range(n)]  # (1+7)/(9+7) >= 1/2
            row = [Fraction(v, sum(raw)) for v in raw]
            maps.append(const_vector_circuit(n, row))
        spec = BapatSpec(tuple(maps))
        cake, recover = bapat_to_cake(spec)
        compiled = compile_cake(cake, hungriness_samples=0)
        report = multistart(compiled.circuit, compiled.box, config)
        if not report.converged:
            return False, f"bapat n={n} cake did not converge"
        division = compiled.slice_of(report.point, "division")
        if not check_bapat(spec, recover, division, 1e-5).passed:
            return False, f"bapat n={n}: no permutation satisfies the inequality"
    return True, "10/10 K-K-M fixtures verified; Bapat round trips satisfy the inequality"


def criterion_8() -> tuple[bool, str]:
    """Single-state stochastic games match the Nash compiler; chain value is 1."""
    config = SolverConfig(restarts=8)
    rng = random.Random(8080)
    done = 0
    while done < 10:
        payoffs = [
            [[Fraction(rng.randint(-9, 9)) for _ in range(2)] for _ in range(2)]
            for _ in range(2)
        ]
        game = GameNF.from_nested([2, 2], payoffs)
        eqs = support_enumeration_2x2(game)
        if eqs is None or len(eqs) != 1:
            continue
        done += 1
        spec = StochasticGameSpec(
            n_states=1,
            actions=(2, 2),
            payoffs=tuple((tuple(game.payoffs[i]),) for i in range(2)),
            transitions=(((Fraction(1),),) * 4,),
            lam=Fraction(1),
        )
        cs = compile_stochastic(spec)
        cn = compile_nash(game)
        rs = multistart(cs.circuit, cs.box, config)
        rn = multistart(cn.circuit, cn.box, config)
        if not (rs.converged and rn.converged):
            return False, f"game #{done}: convergence failed (stoch={rs.converged}, nash={rn.converged})"
        strat = cs.slice_of(rs.point, "strategy")
        prof = cn.slice_of(rn.point, "profile")
        if max(abs(a - b) for a, b in zip(strat, prof)) > 1e-6:
            return False, f"game #{done}: projections differ: {strat} vs {prof}"
        values = cs.slice_of(rs.point, "values")
        v = [[values[0]], [values[1]]]
        x = [[strat[0:2]], [strat[2:4]]]
        if not verify.check_stochastic_stationary(spec, v, x, 1e-5).passed:
            return False, f"game #{done}: stationary check fails"

    chain = StochasticGameSpec(
        n_states=2,
        actions=(1,),
        payoffs=(((Fraction(1),), (Fraction(1),)),),
        transitions=(((Fraction(0), Fraction(1)),), ((Fraction(0), Fraction(1)),)),
        lam=Fraction(1, 2),
    )
    cc = compile_stochastic(chain)
    rep = multistart(cc.circuit, cc.box, SolverConfig(restarts=4))
    values = cc.slice_of(rep.point, "values")
    if not rep.converged or max(abs(v - 1.0) for v in values) > 1e-9:
        return False, f"constant-reward chain: values {values}"
    return True, "10/10 single-state games match compile_nash; chain value = 1"


def criterion_9() -> tuple[bool, str]:
    """epsilon-proper fixture; includes the spec's pinned-point clause."""
    eps = Fraction(1, 2)
    game = GameNF.from_nested([2], [[1, 0]])
    if eta_weights(GameNF.from_nested([3], [[0, 0, 0]]), eps)[0] != Fraction(1, 24):
        return False, "eta arithmetic: eps=1/2, m=3 should give 1/24"
    if eta_weights(game, eps)[0] != Fraction(1, 8):
        return False, "eta arithmetic: eps=1/2, m=2 should give 1/8"

    reference = [Fraction(7, 8), Fraction(1, 8)]
    if not verify.check_eps_proper(game, [float(v) for v in reference], eps, 1e-9).passed:
        return False, "reference point (7/8, 1/8) fails the properness check"

    compiled = compile_eps_proper(game, eps)
    report = multistart(compiled.circuit, compiled.box, SolverConfig())
    if not report.converged:
        return False, "fixture did not converge"
    prof = compiled.slice_of(report.point, "profile")
    if not verify.check_eps_proper(game, prof, eps, 1e-6).passed:
        return False, f"solved point {prof} fails check_eps_proper"
    dist = max(abs(p - float(r)) for p, r in zip(prof, reference))
    if dist > 1e-6:
        return False, (
            f"solved point {prof} is {dist:.2e} from (7/8, 1/8); the lowered system"
            " has a continuum of solutions, so the pinned value is not reachable"
        )
    return True, f"fixture converged to (7/8, 1/8) and passes check_eps_proper"


def criterion_10() -> tuple[bool, str]:
    """Arrow-Debreu fixtures and the K-bound arithmetic."""
    config = SolverConfig(restarts=8)
    for name, spec in (("autarky", ad_autarky()), ("exchange", ad_exchange())):
        compiled = compile_ad_market(spec)
        report = multistart(compiled.circuit, compiled.box, config)
        if not report.converged:
            return False, f"{name} did not converge (res {report.residual:.1e})"
        ell, m, nf = compiled.meta["ell"], compiled.meta["m"], compiled.meta["firms"]
        flat_x = compiled.slice_of(report.point, "consumption")
        x = [flat_x[i * ell : (i + 1) * ell] for i in range(m)]
        flat_y = compiled.slice_of(report.point, "production")
        y = [flat_y[j * ell : (j + 1) * ell] for j in range(nf)]
        p = compiled.slice_of(report.point, "prices")
        check = verify.check_ad_equilibrium(spec, x, y, p, 1e-5)
        if not check.passed:
            return False, f"{name}: check fails with {check.violations}"
        z = [
            sum(x[i][h] for i in range(m))
            - sum(y[j][h] for j in range(nf))
            - float(sum(c.endowment[h] for c in spec.consumers))
            for h in range(ell)
        ]
        if max(z) > 1e-5 or abs(sum(pv * zv for pv, zv in zip(p, z))) > 1e-5:
            return False, f"{name}: clearing violated, z={z}"

    # K-bound arithmetic: ell=2, one firm, one consumer, C=3, |zeta|=1, |xi|=2
    firm = ADFirm(nonneg_orthant(2, lower=Fraction(-3)))
    cons = ADConsumer(
        endowment=(Fraction(1), Fraction(1)),
        lower_bound=(Fraction(-2), Fraction(2)),
        shares=(Fraction(1),),
        utility=linear_utility([Fraction(1), Fraction(1)]),
        consumption_set=nonneg_orthant(2, lower=Fraction(-2)),
        interior_witness=(Fraction(1, 2), Fraction(1, 2)),
    )
    spec = ADMarketSpec(2, (cons,), (firm,), Fraction(3))
    if spec.bound_K() != Fraction(7):
        return False, f"K-bound arithmetic gives {spec.bound_K()}, expected 7"
    return True, "autarky and exchange verified at 1e-5; K = 7 exactly"


def criterion_11() -> tuple[bool, str]:
    """Aux accounting, gradient consistency, box invariance, well-definedness."""
    rng = random.Random(11_11)
    # aux accounting on 50 random convex program specs
    for trial in range(50):
        n = rng.randint(1, 3)
        m = rng.randint(0, 2)
        k = rng.randint(0, 3)
        s = rng.randint(0, 2)
        t = rng.randint(0, 2)

        def noisy_gate() -> Pseudogate:
            b = CircuitBuilder(n + s)
            for _ in range(t):
                slot, node = b.new_aux_slot()
                b.set_aux_output(slot, b.clamp01(node))
            outs = [b.const(Fraction(rng.randint(-3, 3))) for _ in range(n)]
            return make_pseudogate(b, outs)

        g = [affine_circuit(n + s, [Fraction(rng.randint(-3, 3)) for _ in range(n + s)]) for _ in range(k)]
        spec = ConvexProgramSpec(n, m, k, s, tuple(g), noisy_gate(), tuple(noisy_gate() for _ in range(k)))
        gate = build_opt_gate(spec)
        want = n + k + m + t * (k + 1)
        if gate.ell != want:
            return False, f"trial {trial}: ell={gate.ell}, expected {want}"

    # gradient pseudogates vs central finite differences
    for trial in range(10):
        n = rng.randint(1, 3)
        qs = [Fraction(rng.randint(1, 4)) for _ in range(n)]
        ls = [Fraction(rng.randint(-3, 3)) for _ in range(n)]
        gb = CircuitBuilder(n)
        terms = []
        for r in range(n):
            tsq = gb.mul(gb.inputs[r], gb.inputs[r])
            terms.append(gb.add(gb.scale(qs[r], tsq), gb.scale(ls[r], gb.inputs[r])))
        gcirc = Circuit(n, tuple(gb._nodes), (gb.sum_(terms),))
        db = CircuitBuilder(n)
        gouts = [db.add(db.scale(2 * qs[r], db.inputs[r]), db.const(ls[r])) for r in range(n)]
        dcirc = Circuit(n, tuple(db._nodes), tuple(gouts))
        from .circuit import evaluate

        for _ in range(10):
            x = [rng.uniform(-1, 1) for _ in range(n)]
            grad = evaluate(dcirc, x)
            h = 1e-5
            for r in range(n):
                xp = list(x)
                xm = list(x)
                xp[r] += h
                xm[r] -= h
                fd = (evaluate(gcirc, xp)[0] - evaluate(gcirc, xm)[0]) / (2 * h)
                if abs(fd - grad[r]) > 1e-4:
                    return False, f"gradient mismatch: {fd} vs {grad[r]}"

    # box invariance and well-definedness across one compiled instance per family
    compiled_set = [
        compile_nash(matching_pennies()),
        compile_cake(linear_cake([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(1)]]), hungriness_samples=0),
        compile_hz(HZSpec(((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))))),
        compile_ad_market(ad_autarky()),
        compile_eps_proper(GameNF.from_nested([2], [[1, 0]]), Fraction(1, 2)),
        compile_lp(LPInstance.of([2, 1], [[1, 1]], [1], [[-1, 0], [0, -1]], [0, 0], 1)),
        compile_kkm(KKMSpec.of([const_vector_circuit(2, [0])] * 2)),
        compile_stochastic(
            StochasticGameSpec(
                1, (2, 2),
                tuple((tuple(matching_pennies().payoffs[i]),) for i in range(2)),
                (((Fraction(1),),) * 4,),
                Fraction(1),
            )
        ),
    ]
    rng_np = np.random.default_rng(0)
    for compiled in compiled_set:
        lo = np.array([float(v) for v in compiled.box.lo])
        hi = np.array([float(v) for v in compiled.box.hi])
        pts = rng_np.uniform(0, 1, size=(1000, compiled.box.dim)) * (hi - lo) + lo
        outs = eval_batch(compiled.circuit, pts)
        if np.isnan(outs).any():
            return False, f"{compiled.kind}: NaN during box sampling"
        if (outs < lo - 0.0).any() or (outs > hi + 0.0).any():
            return False, f"{compiled.kind}: output escapes the box"
        verdict = check_well_defined(compiled.circuit, compiled.box)
        if not verdict.safe:
            return False, f"{compiled.kind}: possible division by zero at node {verdict.node}"
    return True, "aux accounting, gradients, box invariance, and well-definedness all hold"


CRITERIA: dict[int, tuple[str, Callable[[], tuple[bool, str]]]] = {
    1: ("heaviside semantics", criterion_1),
    2: ("opt-gate vs exact LP oracle", criterion_2),
    3: ("feasibility-only guarantee", criterion_3),
    4: ("nash end-to-end", criterion_4),
    5: ("cake end-to-end", criterion_5),
    6: ("hylland-zeckhauser end-to-end", criterion_6),
    7: ("k-k-m and bapat", criterion_7),
    8: ("stochastic single-state reduction", criterion_8),
    9: ("epsilon-proper", criterion_9),
    10: ("arrow-debreu", criterion_10),
    11: ("structural and numeric invariants", criterion_11),
}


def run_all(selection=None) -> list[CriterionResult]:
    results = []
    for number in sorted(CRITERIA):
        if selection and number not in selection:
            continue
        name, fn = CRITERIA[number]
        t0 = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as e:  # surfaced, never swallowed into a pass
            passed, detail = False, f"exception: {e!r}"
        dt = time.perf_counter() - t0
        results.append(CriterionResult(number, name, passed, detail, dt))
        status = "PASS" if passed else "FAIL"
        print(f"criterion {number:2d} [{name}]: {status} ({dt:.1f}s) {detail}")
    return results
