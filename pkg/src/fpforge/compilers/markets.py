"""Market compilers: Arrow-Debreu exchange/production and the HZ pseudomarket."""

from __future__ import annotations

from fractions import Fraction

from .. import verify
from ..circuit import Box, CircuitBuilder, evaluate_exact
from ..optgate import (
    ConvexProgramSpec,
    SlaterViolation,
    build_opt_gate,
    check_explicit_slater,
    constant_gradient_gate,
    pdc_supergradient,
)
from ..problems import ADMarketSpec, ConvexSet, HZSpec
from .base import (
    Compiled,
    CompileError,
    clamp_outputs,
    const_nodes,
    finish_compiled,
    lift_lp,
    pad_circuit,
    remap_pseudogate,
)


class MissingWitness(CompileError):
    pass


def _prep_set(cs: ConvexSet, K: Fraction, label: str):
    try:
        A, b = verify.eliminate_dependent_rows(cs.eq_A, cs.eq_b)
    except verify.InconsistentEqualities as e:
        raise SlaterViolation(f"{label}: {e}") from None
    verdict = check_explicit_slater(A, b, cs.ineq, K, dim=cs.dim)
    if not verdict.holds:
        raise SlaterViolation(f"{label}: explicit Slater {verdict.kind}")
    return A, b


def compile_ad_market(spec: ADMarketSpec) -> Compiled:
    """Firm profit gates, consumer utility gates, and the price LP of the market map.

    The domain is ([-K,K]^l)^m x ([-K,K]^l)^n x [0,1]^l with K from the
    production bound; fixed points are market equilibria.
    """
    ell = spec.ell
    m, nf = len(spec.consumers), len(spec.firms)
    K = spec.bound_K()

    for i, cons in enumerate(spec.consumers):
        if cons.interior_witness is None:
            raise MissingWitness(f"consumer {i} lacks the interior witness x < endowment")
        if any(w >= z for w, z in zip(cons.interior_witness, cons.endowment)):
            raise MissingWitness(f"consumer {i}: witness is not strictly below the endowment")
        for row, rhs in zip(cons.consumption_set.eq_A, cons.consumption_set.eq_b):
            if sum(a * w for a, w in zip(row, cons.interior_witness)) != rhs:
                raise MissingWitness(f"consumer {i}: witness violates an equality")
        for h in cons.consumption_set.ineq:
            if evaluate_exact(h, cons.interior_witness)[0] > 0:
                raise MissingWitness(f"consumer {i}: witness is outside the consumption set")

    own = list(range(ell))

    firm_gates = []
    for j, firm in enumerate(spec.firms):
        A, b_rhs = _prep_set(firm.production_set, K, f"firm {j}")
        s = ell  # w = p
        rows = []
        for r in range(ell):
            row = [Fraction(0)] * (2 * ell + 1)
            row[ell + r] = Fraction(-1)  # grad of -p.v is -p
            rows.append(row)
        cp = ConvexProgramSpec.normalize(
            ell,
            len(A),
            len(firm.production_set.ineq),
            s,
            [pad_circuit(c, s) for c in firm.production_set.ineq],
            constant_gradient_gate(ell, s, rows),
            [remap_pseudogate(g, ell + s, own) for g in firm.production_set.ineq_grad],
        )
        firm_gates.append((build_opt_gate(cp), A, b_rhs))

    consumer_gates = []
    for i, cons in enumerate(spec.consumers):
        A, b_rhs = _prep_set(cons.consumption_set, K, f"consumer {i}")
        s = ell + 1  # w = (p, budget)
        grad_util = pdc_supergradient(cons.utility.pieces)
        grad_f = remap_pseudogate(grad_util, ell + s, own, negate=True)
        # budget constraint p.v - B <= 0
        bb = CircuitBuilder(ell + s)
        budget = bb.sub(
            bb.dot(bb.inputs[:ell], bb.inputs[ell : 2 * ell]), bb.inputs[2 * ell]
        )
        from ..circuit import Circuit

        budget_circuit = Circuit(ell + s, tuple(bb._nodes), (budget,))
        rows = []
        for r in range(ell):
            row = [Fraction(0)] * (ell + s + 1)
            row[ell + r] = Fraction(1)  # grad of p.v is p
            rows.append(row)
        cp = ConvexProgramSpec.normalize(
            ell,
            len(A),
            len(cons.consumption_set.ineq) + 1,
            s,
            [pad_circuit(c, s) for c in cons.consumption_set.ineq] + [budget_circuit],
            grad_f,
            [remap_pseudogate(g, ell + s, own) for g in cons.consumption_set.ineq_grad]
            + [constant_gradient_gate(ell, s, rows)],
        )
        consumer_gates.append((build_opt_gate(cp), A, b_rhs))

    host = CircuitBuilder(m * ell + nf * ell + ell)
    x_nodes = [host.inputs[i * ell : (i + 1) * ell] for i in range(m)]
    y_nodes = [
        host.inputs[m * ell + j * ell : m * ell + (j + 1) * ell] for j in range(nf)
    ]
    p_nodes = host.inputs[(m + nf) * ell :]
    K_node = host.const(K)

    def set_wires(w_nodes, A, b_rhs):
        wires = list(w_nodes)
        for row in A:
            wires.extend(const_nodes(host, row))
        wires.extend(const_nodes(host, b_rhs))
        wires.append(K_node)
        return wires

    ybar: list[int] = []
    for j, (gate, A, b_rhs) in enumerate(firm_gates):
        ybar.extend(host.lift(gate, set_wires(p_nodes, A, b_rhs)))

    xbar: list[int] = []
    for i, (gate, A, b_rhs) in enumerate(consumer_gates):
        cons = spec.consumers[i]
        budget = host.dot_const(cons.endowment, p_nodes)
        for j in range(nf):
            if cons.shares[j] != 0:
                profit = host.dot(p_nodes, y_nodes[j])
                budget = host.add(budget, host.scale(cons.shares[j], profit))
        xbar.extend(host.lift(gate, set_wires(list(p_nodes) + [budget], A, b_rhs)))

    # price LP: maximize v.z over the price simplex
    z_nodes = []
    for h in range(ell):
        acc = host.sum_([x_nodes[i][h] for i in range(m)])
        for j in range(nf):
            acc = host.sub(acc, y_nodes[j][h])
        total_endow = sum(c.endowment[h] for c in spec.consumers)
        z_nodes.append(host.sub(acc, host.const(total_endow)))
    one, zero = host.const(1), host.const(0)
    neg_eye = [
        [host.const(-1) if a == b2 else zero for b2 in range(ell)] for a in range(ell)
    ]
    pbar = lift_lp(host, z_nodes, neg_eye, [zero] * ell, [[one] * ell], [one], one)

    box = Box.cube((m + nf) * ell, -K, K).product(Box.cube(ell, 0, 1))
    outs = clamp_outputs(host, xbar + ybar + pbar, box)
    layout = {
        "consumption": (0, m * ell),
        "production": (m * ell, (m + nf) * ell),
        "prices": ((m + nf) * ell, (m + nf) * ell + ell),
    }
    return finish_compiled(
        host, outs, box, "ad_market", layout, {"ell": ell, "m": m, "firms": nf, "K": K}
    )


def compile_hz(spec: HZSpec) -> Compiled:
    """Utility-max LP, cost-min LP over n+1 goods with a dummy, and the price LP."""
    n = spec.n
    dummy_utils, dummy_price = spec.dummy_constants()
    b = CircuitBuilder(n + n * n)
    p_nodes = b.inputs[:n]
    x_rows = [b.inputs[n + i * n : n + (i + 1) * n] for i in range(n)]
    one, zero = b.const(1), b.const(0)

    # positive constant rescalings keep every LP's optimum set unchanged while
    # holding the gate's internal steps at box scale
    y_rows = []
    probe_dummy = []
    inv_n = Fraction(1, n)
    for i in range(n):
        u = spec.utilities[i]
        u_scale = 1 / max(Fraction(1), max(abs(v) for v in u))
        # LP (utility max): maximize u.z, sum z = 1, p.z <= 1, z >= 0
        c = const_nodes(b, [v * u_scale for v in u])
        C = [[b.const(-1) if a == t else zero for t in range(n)] for a in range(n)]
        d = [zero] * n
        C.append([b.scale(inv_n, p) for p in p_nodes])
        d.append(b.const(inv_n))
        xprime = lift_lp(b, c, C, d, [[one] * n], [one], one)
        target = b.dot(const_nodes(b, u), xprime)

        # LP (cheapest at least as good), over n+1 goods including the dummy
        q = n + 1
        ext_u = list(u) + [dummy_utils[i]]
        ext_scale = 1 / max(Fraction(1), max(abs(v) for v in ext_u))
        price_scale = 1 / dummy_price
        cost = [b.scale(-price_scale, p) for p in p_nodes] + [b.const(-1)]
        C2 = [[b.const(-1) if a == t else zero for t in range(q)] for a in range(q)]
        d2 = [zero] * q
        C2.append([b.const(-v * ext_scale) for v in ext_u])
        d2.append(b.scale(-ext_scale, target))
        y_i = lift_lp(b, cost, C2, d2, [[one] * q], [one], one)
        y_rows.append(y_i)
        probe_dummy.append(y_i[n])

    # price LP: maximize sum_j q_j (col_j - 1) with 0 <= q_j <= n
    coeffs = []
    for j in range(n):
        col = b.sum_([y_rows[i][j] for i in range(n)])
        coeffs.append(b.scale(inv_n, b.sub(col, one)))
    C3 = [[b.const(Fraction(-1, n)) if a == t else zero for t in range(n)] for a in range(n)]
    pstar = lift_lp(b, coeffs, C3, [zero] * n, [], [], b.const(n))
    pmin = b.fold_min(pstar)
    pbar = [b.sub(p, pmin) for p in pstar]

    outs = list(pbar)
    for i in range(n):
        outs.extend(y_rows[i][:n])
    box = Box.cube(n, 0, n).product(Box.cube(n * n, 0, 1))
    return finish_compiled(
        b,
        clamp_outputs(b, outs, box),
        box,
        "hz",
        {"prices": (0, n), "allocation": (n, n + n * n)},
        {
            "n": n,
            "probe_dummy": probe_dummy,
            "dummy_utils": dummy_utils,
            "dummy_price": dummy_price,
        },
    )
