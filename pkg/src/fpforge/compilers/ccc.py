"""Conditional convex constraint systems lowered to two chained OPT-gates."""

from __future__ import annotations

from fractions import Fraction

from .. import verify
from ..circuit import Box, Circuit, CircuitBuilder
from ..optgate import (
    ConvexProgramSpec,
    SlaterViolation,
    build_opt_gate,
    check_explicit_slater,
    constant_gradient_gate,
)
from ..problems import CCCSystem
from .base import Compiled, clamp_outputs, const_nodes, finish_compiled, remap_pseudogate, pad_circuit


def _conditional_circuit(f: Circuit, g: Circuit, n: int) -> Circuit:
    """max(0, f(w)) * g(z) over inputs (z, w), each of length n."""
    b = CircuitBuilder(2 * n)
    fval = b.splice(f, b.inputs[n:])[0]
    gval = b.splice(g, b.inputs[:n])[0]
    out = b.mul(b.max_(fval, b.const(0)), gval)
    return Circuit(2 * n, tuple(b._nodes), (out,))


def compile_ccc(system: CCCSystem) -> Compiled:
    """Fixed points (x, y) satisfy x in F(x), or certify that F(x) is empty.

    One OPT-gate solves the conditionally-activated feasibility program for y;
    a second one projects y back onto the domain to produce x.
    """
    n = int(system.n)
    R = system.radius
    try:
        A, b_rhs = verify.eliminate_dependent_rows(system.eq_A, system.eq_b)
    except verify.InconsistentEqualities as e:
        raise SlaterViolation(str(e)) from None
    verdict = check_explicit_slater(A, b_rhs, system.domain_ineq, R, dim=n)
    if not verdict.holds:
        raise SlaterViolation(f"domain constraints: {verdict.kind}")
    m = len(A)

    kh = len(system.domain_ineq)
    kc = len(system.constraints)
    own = list(range(n))

    # feasibility program in z, parameterized by w = x
    g_feas = [pad_circuit(c, n) for c in system.domain_ineq]
    grads_feas = [remap_pseudogate(g, 2 * n, own) for g in system.domain_ineq_grad]
    for pair in system.constraints:
        g_feas.append(_conditional_circuit(pair.f, pair.g, n))

        def factor(b, f_circ=pair.f):
            val = b.splice(f_circ, [b.inputs[n + i] for i in range(n)])[0]
            return b.max_(val, b.const(0))

        grads_feas.append(
            remap_pseudogate(pair.grad_g, 2 * n, own, scale_node_builder=factor)
        )
    zero_grad = constant_gradient_gate(n, n, [[Fraction(0)] * (2 * n + 1)] * n)
    feas_spec = ConvexProgramSpec.normalize(
        n, m, kh + kc, n, g_feas, zero_grad, grads_feas
    )
    feas_gate = build_opt_gate(feas_spec)

    # projection of w = y onto the domain: minimize ||z - w||^2
    proj_rows = []
    for r in range(n):
        row = [Fraction(0)] * (2 * n + 1)
        row[r] = Fraction(2)
        row[n + r] = Fraction(-2)
        proj_rows.append(row)
    proj_spec = ConvexProgramSpec.normalize(
        n,
        m,
        kh,
        n,
        [pad_circuit(c, n) for c in system.domain_ineq],
        constant_gradient_gate(n, n, proj_rows),
        [remap_pseudogate(g, 2 * n, own) for g in system.domain_ineq_grad],
    )
    proj_gate = build_opt_gate(proj_spec)

    host = CircuitBuilder(2 * n)
    x_nodes = host.inputs[:n]
    y_nodes = host.inputs[n:]
    A_nodes = [const_nodes(host, row) for row in A]
    b_nodes = const_nodes(host, b_rhs)
    R_node = host.const(R)

    def param_wires(w_nodes):
        wires = list(w_nodes)
        for row in A_nodes:
            wires.extend(row)
        wires.extend(b_nodes)
        wires.append(R_node)
        return wires

    ybar = host.lift(feas_gate, param_wires(x_nodes))
    xbar = host.lift(proj_gate, param_wires(y_nodes))

    box = Box.cube(2 * n, -R, R)
    outs = clamp_outputs(host, list(xbar) + list(ybar), box)
    return finish_compiled(
        host,
        outs,
        box,
        "ccc",
        {"solution": (0, n), "feasibility": (n, 2 * n)},
        {"n": n},
    )
