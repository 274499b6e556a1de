"""Instance -> circuit -> fixed point -> verification, as one dispatchable flow."""

from __future__ import annotations

import time
from dataclasses import asdict
from fractions import Fraction
from typing import Optional

import numpy as np

from . import verify
from .circuit import Box, Circuit
from .compilers import (
    Compiled,
    bapat_to_cake,
    compile_ad_market,
    compile_cake,
    compile_ccc,
    compile_concave,
    compile_cp,
    compile_eps_proper,
    compile_hz,
    compile_kkm,
    compile_lp,
    compile_nash,
    compile_stochastic,
)
from .io import InstanceFile, RunReport
from .solver import FixedPointReport, SolverConfig, multistart
from .verify import VerificationReport

#: default verification tolerances per kind (one order above solver tol, except
#: cake whose matching slack is stated at 1e-5)
DEFAULT_EPS = {"cake": 1e-5, "bapat": 1e-5, "ad_market": 1e-5}
FALLBACK_EPS = 1e-6


def compile_instance(instance: InstanceFile) -> Compiled:
    kind, spec = instance.kind, instance.spec
    if kind == "nash":
        return compile_nash(spec)
    if kind == "concave":
        return compile_concave(spec)
    if kind == "ccc":
        return compile_ccc(spec)
    if kind == "eps_proper":
        game, eps = spec
        return compile_eps_proper(game, eps)
    if kind == "stochastic":
        return compile_stochastic(spec)
    if kind == "cake":
        return compile_cake(spec)
    if kind == "kkm":
        return compile_kkm(spec)
    if kind == "bapat":
        cake, recover = bapat_to_cake(spec)
        if spec.n == 1:
            # the whole cake is the single piece; the division is identically (1)
            from .circuit import CircuitBuilder

            b = CircuitBuilder(1)
            one = b.const(1)
            circ = Circuit(1, tuple(b._nodes), (one,))
            lowered = Compiled(circ, Box.cube(1, 0, 1), "bapat", {"division": (0, 1)}, {"n": 1})
        else:
            lowered = compile_cake(cake)
        return Compiled(
            lowered.circuit,
            lowered.box,
            "bapat",
            lowered.layout,
            {**lowered.meta, "bapat": spec, "cake": cake, "recover": recover},
        )
    if kind == "ad_market":
        return compile_ad_market(spec)
    if kind == "hz":
        return compile_hz(spec)
    if kind == "cp":
        cp_spec, params = spec
        return compile_cp(cp_spec, params)
    if kind == "lp":
        return compile_lp(spec)
    if kind == "raw_circuit":
        box = instance.box
        if box is None:
            raise ValueError("raw_circuit instances need a BOX line or box field")
        return Compiled(spec, box, "raw_circuit", {"point": (0, box.dim)}, {})
    raise ValueError(f"cannot compile kind {kind!r}")


def _rows(flat, n_rows, width) -> list[list[float]]:
    return [list(map(float, flat[i * width : (i + 1) * width])) for i in range(n_rows)]


def check_bapat(spec, recover, division, eps: float) -> VerificationReport:
    """z_{pi(i)} >= f_{i,pi(i)}(z) - eps for some permutation, via matching."""
    from .circuit import evaluate
    from .verify import _perfect_matching

    z = recover(division)
    n = spec.n
    adj = []
    for i in range(n):
        f_i = evaluate(spec.maps[i], z)
        adj.append([j for j in range(n) if z[j] >= f_i[j] - eps])
    matching = _perfect_matching(adj, n, n)
    ok = matching is not None
    return VerificationReport(ok, {"permutation": 0.0 if ok else 1.0}, None if ok else z)


def verify_solution(
    instance: InstanceFile, compiled: Compiled, point, eps: Optional[float] = None
) -> Optional[VerificationReport]:
    kind, spec = instance.kind, instance.spec
    eps = eps if eps is not None else DEFAULT_EPS.get(kind, FALLBACK_EPS)
    pt = [float(v) for v in point]
    if kind == "nash":
        return verify.check_nash(spec, compiled.slice_of(pt, "profile"), eps)
    if kind == "eps_proper":
        game, eps_param = spec
        return verify.check_eps_proper(
            game, compiled.slice_of(pt, "profile"), eps_param, eps
        )
    if kind == "stochastic":
        S = compiled.meta["states"]
        actions = compiled.meta["actions"]
        values = compiled.slice_of(pt, "values")
        v = _rows(values, len(actions), S)
        strat_flat = compiled.slice_of(pt, "strategy")
        strategy, at = [], 0
        for m in actions:
            per_state = []
            for s in range(S):
                per_state.append(strat_flat[at : at + m])
                at += m
            strategy.append(per_state)
        return verify.check_stochastic_stationary(spec, v, strategy, eps)
    if kind == "cake":
        return verify.check_envy_free(spec, compiled.slice_of(pt, "division"), eps)
    if kind == "kkm":
        return verify.check_kkm(spec, compiled.slice_of(pt, "point"), eps)
    if kind == "bapat":
        division = compiled.slice_of(pt, "division")
        ef = verify.check_envy_free(compiled.meta["cake"], division, eps)
        bp = check_bapat(spec, compiled.meta["recover"], division, eps)
        merged = dict(ef.violations)
        merged.update(bp.violations)
        return VerificationReport(ef.passed and bp.passed, merged, bp.witness, ef.notes)
    if kind == "hz":
        n = compiled.meta["n"]
        p = compiled.slice_of(pt, "prices")
        x = _rows(compiled.slice_of(pt, "allocation"), n, n)
        return verify.check_hz(spec, p, x, eps)
    if kind == "ad_market":
        ell, m, nf = compiled.meta["ell"], compiled.meta["m"], compiled.meta["firms"]
        x = _rows(compiled.slice_of(pt, "consumption"), m, ell)
        y = _rows(compiled.slice_of(pt, "production"), nf, ell)
        p = compiled.slice_of(pt, "prices")
        return verify.check_ad_equilibrium(spec, x, y, p, eps)
    if kind == "ccc":
        return verify.check_ccc(spec, compiled.slice_of(pt, "solution"), eps)
    if kind == "lp":
        lp = compiled.meta["lp"]
        sol = compiled.slice_of(pt, "solution")
        return check_lp_solution(lp, sol, eps)
    return None


def check_lp_solution(lp: verify.LPInstance, sol, eps: float) -> VerificationReport:
    """Feasibility within eps plus objective gap against the exact oracle."""
    feas_err = 0.0
    for row, rhs in zip(lp.A, lp.b):
        feas_err = max(feas_err, abs(sum(float(a) * s for a, s in zip(row, sol)) - float(rhs)))
    for row, rhs in zip(lp.C, lp.d):
        feas_err = max(
            feas_err, sum(float(a) * s for a, s in zip(row, sol)) - float(rhs)
        )
    feas_err = max(feas_err, max((abs(s) for s in sol), default=0.0) - float(lp.R))
    res = verify.exact_lp_oracle(lp)
    if res.status != "optimal":
        return VerificationReport(False, {"feasibility": feas_err, "oracle": 1.0})
    got = sum(float(c) * s for c, s in zip(lp.c, sol))
    gap = abs(float(res.value) - got)
    violations = {"feasibility": max(0.0, feas_err), "objective_gap": gap}
    return VerificationReport(all(v <= eps for v in violations.values()), violations)


def solve_compiled(
    compiled: Compiled, config: SolverConfig = SolverConfig()
) -> FixedPointReport:
    return multistart(compiled.circuit, compiled.box, config)


def run_instance(
    instance: InstanceFile,
    config: SolverConfig = SolverConfig(),
    instance_bytes: Optional[bytes] = None,
    eps: Optional[float] = None,
) -> tuple[RunReport, FixedPointReport, Optional[VerificationReport], Compiled]:
    """Compile, solve, verify; returns the full report bundle."""
    from .io import digest, serialize_instance

    t0 = time.perf_counter()
    compiled = compile_instance(instance)
    report = solve_compiled(compiled, config)
    verification = None
    if report.converged:
        verification = verify_solution(instance, compiled, report.point, eps)
    elapsed = time.perf_counter() - t0
    data = instance_bytes if instance_bytes is not None else serialize_instance(instance)
    run = RunReport(
        instance_digest=digest(data),
        config=asdict(config),
        fixed_point={
            "point": [float(v) for v in report.point],
            "residual": report.residual,
            "iterations": report.iterations,
            "converged": report.converged,
            "restart_index": report.restart_index,
            "trace": list(report.trace),
        },
        verification=(
            None
            if verification is None
            else {
                "passed": verification.passed,
                "violations": verification.violations,
                "notes": list(verification.notes),
            }
        ),
        timing_s=elapsed,
    )
    return run, report, verification, compiled
