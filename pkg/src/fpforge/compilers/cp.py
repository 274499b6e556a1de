"""Pinned convex programs and LPs as standalone fixed-point instances."""

from __future__ import annotations

from .. import verify
from ..circuit import Box, CircuitBuilder
from ..optgate import (
    ConvexProgramSpec,
    CPParams,
    build_lp_opt_gate,
    build_opt_gate,
    lp_cp_params,
)
from ..pseudogate import Pseudogate
from .base import Compiled, CompileError, clamp_outputs, const_nodes, finish_compiled


def _pin(gate: Pseudogate, params: CPParams, n: int, kind: str, meta: dict) -> Compiled:
    """Host a parameter-pinned OPT-gate; the primary block mirrors the solution."""
    R = params.R
    b = CircuitBuilder(n)
    wires = const_nodes(b, params.flat())
    if len(wires) != gate.n_in:
        raise CompileError(
            f"parameter count {len(wires)} != gate inputs {gate.n_in}"
        )
    z = b.lift(gate, wires)
    box = Box.cube(n, -R, R)
    return finish_compiled(
        b, clamp_outputs(b, z, box), box, kind, {"solution": (0, n)}, meta
    )


def compile_cp(spec: ConvexProgramSpec, params: CPParams) -> Compiled:
    if len(params.w) != spec.s or len(params.A) != spec.m:
        raise CompileError("parameter shape does not match the program spec")
    return _pin(build_opt_gate(spec), params, spec.n, "cp", {"spec": spec, "params": params})


def equilibrate(lp: verify.LPInstance) -> verify.LPInstance:
    """Scale the objective and each constraint row to unit sup-norm.

    Positive row scaling leaves the feasible and optimal sets untouched but
    keeps the gate's subgradient steps at the scale of the box.
    """

    def row_scaled(row, rhs):
        m = max((abs(v) for v in row), default=0)
        if m == 0:
            return row, rhs
        return tuple(v / m for v in row), rhs / m

    cm = max((abs(v) for v in lp.c), default=0)
    c = tuple(v / cm for v in lp.c) if cm else lp.c
    A, b, C, d = [], [], [], []
    for row, rhs in zip(lp.A, lp.b):
        r2, rhs2 = row_scaled(row, rhs)
        A.append(r2)
        b.append(rhs2)
    for row, rhs in zip(lp.C, lp.d):
        r2, rhs2 = row_scaled(row, rhs)
        C.append(r2)
        d.append(rhs2)
    return verify.LPInstance(c, tuple(A), tuple(b), tuple(C), tuple(d), lp.R)


def compile_lp(lp: verify.LPInstance) -> Compiled:
    """Pin the LP OPT-gate at one instance; rejects dependent equality rows.

    The pinned parameters are the row-equilibrated instance, which shares the
    original's feasible and optimal sets exactly.
    """
    if lp.A and verify.exact_rank(lp.A) < len(lp.A):
        raise CompileError("linearly dependent equality rows; pre-eliminate them")
    scaled = equilibrate(lp)
    gate = build_lp_opt_gate(lp.n, len(lp.A), len(lp.C))
    params = lp_cp_params(scaled.c, scaled.A, scaled.b, scaled.C, scaled.d, scaled.R)
    return _pin(gate, params, lp.n, "lp", {"lp": lp})
