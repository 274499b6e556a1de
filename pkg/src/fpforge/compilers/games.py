"""Game-family compilers: normal-form, concave, epsilon-proper, stochastic."""

from __future__ import annotations

import math
from fractions import Fraction

from .. import verify
from ..circuit import Box, Circuit, CircuitBuilder, as_fraction
from ..optgate import (
    ConvexProgramSpec,
    SlaterViolation,
    build_opt_gate,
    check_explicit_slater,
    constant_gradient_gate,
)
from ..problems import (
    CCCSystem,
    ConcaveGameSpec,
    ConditionalConstraint,
    GameNF,
    StochasticGameSpec,
    split_profile,
)
from .base import (
    Compiled,
    CompileError,
    MAX_TENSOR_ENTRIES,
    clamp_outputs,
    const_nodes,
    expected_coeff_nodes,
    finish_compiled,
    lift_simplex_lp,
    pad_circuit,
    remap_pseudogate,
)
from .ccc import compile_ccc


def _player_slices(actions) -> list[tuple[int, int]]:
    out, at = [], 0
    for m in actions:
        out.append((at, at + m))
        at += m
    return out


def _payoff_scale(game: GameNF, player: int) -> Fraction:
    """1 / max(1, max |payoff|); scaling the LP objective is equilibrium-neutral."""
    peak = max((abs(v) for v in game.payoffs[player]), default=Fraction(0))
    return 1 / max(Fraction(1), peak)


def compile_nash(game: GameNF) -> Compiled:
    """One simplex LP OPT-gate per player, fed by expected-payoff subcircuits."""
    if math.prod(game.actions) > MAX_TENSOR_ENTRIES:
        raise CompileError("payoff tensor exceeds the expansion cap")
    slices = _player_slices(game.actions)
    total = slices[-1][1]
    b = CircuitBuilder(total)
    strategy_nodes = [b.inputs[s:e] for s, e in slices]
    outs = []
    for i in range(game.n_players):
        coeffs = expected_coeff_nodes(b, game, i, strategy_nodes)
        outs.extend(lift_simplex_lp(b, coeffs, scale=_payoff_scale(game, i)))
    box = Box.cube(total, 0, 1)
    return finish_compiled(
        b,
        clamp_outputs(b, outs, box),
        box,
        "nash",
        {"profile": (0, total)},
        {"actions": list(game.actions), "slices": slices},
    )


def compile_concave(game: ConcaveGameSpec) -> Compiled:
    """Per-player convex OPT-gate on the best-response program."""
    sizes = [p.m for p in game.players]
    slices = _player_slices(sizes)
    total = slices[-1][1]
    gates = []
    for i, player in enumerate(game.players):
        try:
            A, b_rhs = verify.eliminate_dependent_rows(player.eq_A, player.eq_b)
        except verify.InconsistentEqualities as e:
            raise SlaterViolation(f"player {i}: {e}") from None
        verdict = check_explicit_slater(A, b_rhs, player.ineq, player.radius, dim=player.m)
        if not verdict.holds:
            raise SlaterViolation(f"player {i}: explicit Slater {verdict.kind}")
        s = total - player.m
        # profile order: own coordinates first in the gate, others appended
        input_map = []
        lo, hi = slices[i]
        at = player.m
        for pos in range(total):
            if lo <= pos < hi:
                input_map.append(pos - lo)
            else:
                input_map.append(at)
                at += 1
        # old profile coordinate p maps to gate input input_map[p]
        grad_f = remap_pseudogate(
            player.util_supergrad, player.m + s, input_map, negate=True
        )
        spec = ConvexProgramSpec.normalize(
            player.m,
            len(A),
            len(player.ineq),
            s,
            [pad_circuit(c, s) for c in player.ineq],
            grad_f,
            [remap_pseudogate(g, player.m + s, list(range(player.m))) for g in player.ineq_grad],
        )
        gates.append((build_opt_gate(spec), A, b_rhs))

    host = CircuitBuilder(total)
    outs = []
    for i, player in enumerate(game.players):
        gate, A, b_rhs = gates[i]
        lo, hi = slices[i]
        others = [host.inputs[p] for p in range(total) if not lo <= p < hi]
        wires = list(others)
        for row in A:
            wires.extend(const_nodes(host, row))
        wires.extend(const_nodes(host, b_rhs))
        wires.append(host.const(player.radius))
        outs.extend(host.lift(gate, wires))
    box = Box.of(
        [(-p.radius, p.radius) for p in game.players for _ in range(p.m)]
    )
    return finish_compiled(
        host,
        clamp_outputs(host, outs, box),
        box,
        "concave",
        {"profile": (0, total)},
        {"slices": slices},
    )


def _affine_unit_circuit(n: int, terms, offset=0) -> Circuit:
    """Standalone circuit sum(coef * x_idx) + offset over n inputs."""
    b = CircuitBuilder(n)
    acc = b.const(offset)
    for idx, coef in terms:
        acc = b.add(acc, b.scale(coef, b.inputs[idx]))
    return Circuit(n, tuple(b._nodes), (acc,))


def _payoff_diff_circuit(
    game: GameNF, player: int, better: int, worse: int, scale: Fraction = Fraction(1)
) -> Circuit:
    """scale * (u_player(better, x_-i) - u_player(worse, x_-i)) over the profile."""
    slices = _player_slices(game.actions)
    total = slices[-1][1]
    b = CircuitBuilder(total)
    strategy_nodes = [b.inputs[s:e] for s, e in slices]
    coeffs = expected_coeff_nodes(b, game, player, strategy_nodes)
    out = b.sub(coeffs[better], coeffs[worse])
    if scale != 1:
        out = b.scale(scale, out)
    return Circuit(total, tuple(b._nodes), (out,))


def eta_weights(game: GameNF, eps: Fraction) -> list[Fraction]:
    """eta_i = eps^{m_i} / m_i, computed exactly."""
    return [eps ** m / m for m in game.actions]


def compile_eps_proper(game: GameNF, eps) -> Compiled:
    """Myerson's correspondence on the perturbed simplex, via the CCC lowering."""
    eps = as_fraction(eps)
    if not 0 < eps < 1:
        raise CompileError("epsilon must lie in (0, 1)")
    slices = _player_slices(game.actions)
    total = slices[-1][1]
    etas = eta_weights(game, eps)

    eq_A, eq_b = [], []
    for lo, hi in slices:
        row = [Fraction(0)] * total
        for p in range(lo, hi):
            row[p] = Fraction(1)
        eq_A.append(tuple(row))
        eq_b.append(Fraction(1))

    domain_ineq, domain_grad = [], []
    for i, (lo, hi) in enumerate(slices):
        for p in range(lo, hi):
            domain_ineq.append(_affine_unit_circuit(total, [(p, Fraction(-1))], etas[i]))
            rows = [[Fraction(0)] * (total + 1) for _ in range(total)]
            rows[p][-1] = Fraction(-1)
            domain_grad.append(constant_gradient_gate(total, 0, rows))

    constraints = []
    for i, (lo, hi) in enumerate(slices):
        m_i = game.actions[i]
        for k in range(m_i):
            for l in range(m_i):
                if k == l:
                    continue
                # scaling f by a positive constant keeps sign(f) and hence the
                # correspondence unchanged, but tames the gate's step sizes
                f = _payoff_diff_circuit(game, i, l, k, scale=_payoff_scale(game, i))
                g = _affine_unit_circuit(
                    total, [(lo + k, Fraction(1)), (lo + l, -eps)]
                )
                rows = [[Fraction(0)] * (total + 1) for _ in range(total)]
                rows[lo + k][-1] = Fraction(1)
                rows[lo + l][-1] = -eps
                constraints.append(
                    ConditionalConstraint(f, g, constant_gradient_gate(total, 0, rows))
                )

    system = CCCSystem(
        n=total,
        radius=Fraction(1),
        eq_A=tuple(eq_A),
        eq_b=tuple(eq_b),
        domain_ineq=tuple(domain_ineq),
        domain_ineq_grad=tuple(domain_grad),
        constraints=tuple(constraints),
    )
    lowered = compile_ccc(system)
    return Compiled(
        lowered.circuit,
        lowered.box,
        "eps_proper",
        {"profile": (0, total), **lowered.layout},
        {
            "actions": list(game.actions),
            "slices": slices,
            "eps": eps,
            "eta": etas,
            "system": system,
        },
    )


def myerson_witness(game: GameNF, eps, profile) -> list[list[Fraction]]:
    """The existence witness y_ik = eps^rho_i(k) / sum_l eps^rho_i(l)."""
    eps = as_fraction(eps)
    rows = split_profile(game.actions, profile)
    out = []
    for i in range(game.n_players):
        payoff = [game.expected_payoff_pure(i, a, rows) for a in range(game.actions[i])]
        rho = [
            sum(1 for l in range(game.actions[i]) if payoff[k] < payoff[l])
            for k in range(game.actions[i])
        ]
        weights = [eps ** r for r in rho]
        tot = sum(weights)
        out.append([w / tot for w in weights])
    return out


def compile_stochastic(spec: StochasticGameSpec) -> Compiled:
    """Per-state best-reply LPs plus discounted value updates, F'(v, x) = (vbar, xbar)."""
    S, n = spec.n_states, spec.n_players
    M = spec.payoff_bound
    lam = spec.lam
    strat_sizes = [m * S for m in spec.actions]
    n_values = n * S
    total = n_values + sum(strat_sizes)

    b = CircuitBuilder(total)
    v_nodes = [[b.inputs[i * S + s] for s in range(S)] for i in range(n)]
    strat_nodes: list[list[list[int]]] = []  # [player][state][action]
    at = n_values
    for i in range(n):
        per_state = []
        for s in range(S):
            per_state.append(b.inputs[at : at + spec.actions[i]])
            at += spec.actions[i]
        strat_nodes.append(per_state)

    def stage_node(i: int, s: int, prof_idx: int) -> int:
        base = lam * spec.payoffs[i][s][prof_idx]
        acc = b.const(base)
        for s2 in range(S):
            coef = (1 - lam) * spec.transitions[s][prof_idx][s2]
            if coef != 0:
                acc = b.add(acc, b.scale(coef, v_nodes[i][s2]))
        return acc

    def profiles():
        def rec(prefix, rest):
            if not rest:
                yield tuple(prefix)
                return
            for j in range(rest[0]):
                yield from rec(prefix + [j], rest[1:])

        yield from rec([], list(spec.actions))

    all_profiles = list(profiles())
    value_scale = 1 / max(Fraction(1), M)
    vbar: list[list[int]] = [[0] * S for _ in range(n)]
    replies: list[list[list[int]]] = [[[] for _ in range(S)] for _ in range(n)]
    for i in range(n):
        for s in range(S):
            coeffs = []
            for j in range(spec.actions[i]):
                terms = []
                for idx, prof in enumerate(all_profiles):
                    if prof[i] != j:
                        continue
                    node = stage_node(i, s, idx)
                    for l, a in enumerate(prof):
                        if l != i:
                            node = b.mul(node, strat_nodes[l][s][a])
                    terms.append(node)
                coeffs.append(b.sum_(terms))
            reply = lift_simplex_lp(b, coeffs, scale=value_scale)
            vbar[i][s] = b.dot(reply, coeffs)
            replies[i][s] = reply

    outs: list[int] = []
    for i in range(n):
        for s in range(S):
            outs.append(vbar[i][s])
    for i in range(n):
        for s in range(S):
            outs.extend(replies[i][s])

    box = Box.cube(n_values, -M, M).product(Box.cube(total - n_values, 0, 1))
    strat_slices = {}
    at = n_values
    for i in range(n):
        for s in range(S):
            strat_slices[(i, s)] = (at, at + spec.actions[i])
            at += spec.actions[i]
    return finish_compiled(
        b,
        clamp_outputs(b, outs, box),
        box,
        "stochastic",
        {"values": (0, n_values), "strategy": (n_values, total)},
        {"actions": list(spec.actions), "states": S, "strat_slices": strat_slices},
    )
