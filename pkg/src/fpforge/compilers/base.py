"""Shared machinery for lowering problem instances to fixed-point circuits."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from ..circuit import Box, Circuit, CircuitBuilder, as_fraction
from ..optgate import build_lp_opt_gate
from ..pseudogate import Pseudogate, make_pseudogate
from ..problems import GameNF


class CompileError(Exception):
    pass


MAX_TENSOR_ENTRIES = 10**6


@dataclass(frozen=True)
class Compiled:
    """A problem lowered to (circuit, box) plus extraction metadata.

    layout maps slice names to (start, stop) over the primary coordinates;
    meta carries problem-specific extras (probe node refs, dimensions, ...).
    Unpacks as (circuit, box).
    """

    circuit: Circuit
    box: Box
    kind: str
    layout: dict[str, tuple[int, int]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.circuit
        yield self.box

    def slice_of(self, point, name: str):
        start, stop = self.layout[name]
        return [float(v) for v in point[start:stop]]


def finish_compiled(
    builder: CircuitBuilder,
    primary_outputs: Sequence[int],
    primary_box: Box,
    kind: str,
    layout: dict,
    meta: Optional[dict] = None,
) -> Compiled:
    circuit = builder.finish(list(primary_outputs))
    box = primary_box.product(Box.cube(builder.n_aux, 0, 1)) if builder.n_aux else primary_box
    return Compiled(circuit, box, kind, dict(layout), dict(meta or {}))


def clamp_outputs(builder: CircuitBuilder, refs: Sequence[int], box: Box) -> list[int]:
    """Clamp primary outputs into their box coordinates (exact box invariance)."""
    return [
        builder.clamp_const(r, lo, hi) for r, lo, hi in zip(refs, box.lo, box.hi)
    ]


def const_nodes(builder: CircuitBuilder, values) -> list[int]:
    return [builder.const(v) for v in values]


def lift_lp(
    builder: CircuitBuilder,
    c: Sequence[int],
    C: Sequence[Sequence[int]],
    d: Sequence[int],
    A: Sequence[Sequence[int]],
    b: Sequence[int],
    R: int,
) -> list[int]:
    """Lift the LP OPT-gate with node-valued parameters; returns the solution refs.

    Layout matches build_lp_opt_gate: w = (c, C row-major, d), then A, b, R.
    All parameters are node references (use builder.const for fixed entries).
    """
    n, k, m = len(c), len(C), len(A)
    gate = build_lp_opt_gate(n, m, k)
    wires = list(c)
    for row in C:
        if len(row) != n:
            raise CompileError("C row length mismatch")
        wires.extend(row)
    wires.extend(d)
    for row in A:
        if len(row) != n:
            raise CompileError("A row length mismatch")
        wires.extend(row)
    wires.extend(b)
    wires.append(R)
    return builder.lift(gate, wires)


def lift_simplex_lp(
    builder: CircuitBuilder, c: Sequence[int], scale: Optional[Fraction] = None
) -> list[int]:
    """maximize c.y over the unit simplex (sum y = 1, y >= 0, R = 1).

    An optional positive scale multiplies the objective wires; scaling leaves
    the optimum set unchanged but keeps the gate's internal steps at box scale.
    """
    q = len(c)
    if scale is not None and scale != 1:
        if scale <= 0:
            raise CompileError("objective scale must be positive")
        c = [builder.scale(scale, node) for node in c]
    one, zero = builder.const(1), builder.const(0)
    neg_eye = [
        [builder.const(-1) if i == j else zero for j in range(q)] for i in range(q)
    ]
    return lift_lp(
        builder,
        c,
        neg_eye,
        [zero] * q,
        [[one] * q],
        [one],
        one,
    )


def expected_coeff_nodes(
    builder: CircuitBuilder,
    game: GameNF,
    player: int,
    strategy_nodes: Sequence[Sequence[int]],
) -> list[int]:
    """Nodes computing E[u_player | own pure action j] against the mixed others.

    Expands the full product-form sum over opponent profiles.
    """
    import math

    if math.prod(game.actions) > MAX_TENSOR_ENTRIES:
        raise CompileError("payoff tensor exceeds the expansion cap")
    others = [l for l in range(game.n_players) if l != player]

    def opponent_profiles(idx: int, prefix: list[int]):
        if idx == len(others):
            yield list(prefix)
            return
        for a in range(game.actions[others[idx]]):
            yield from opponent_profiles(idx + 1, prefix + [a])

    coeffs = []
    for j in range(game.actions[player]):
        terms = []
        for opp in opponent_profiles(0, []):
            profile = [0] * game.n_players
            profile[player] = j
            for l, a in zip(others, opp):
                profile[l] = a
            u = game.u(player, profile)
            if u == 0:
                continue
            prod = builder.const(u)
            for l, a in zip(others, opp):
                prod = builder.mul(prod, strategy_nodes[l][a])
            terms.append(prod)
        coeffs.append(builder.sum_(terms))
    return coeffs


def simplex_retract(builder: CircuitBuilder, x_nodes: Sequence[int]) -> list[int]:
    """Continuous box -> simplex map that is the identity on the simplex.

    s(x) = (x + max(0, 1 - sum x)/n) / max(sum x, 1).  Composing a simplex
    self-map with s extends it to the whole box without adding fixed points
    off the simplex (x = F(s(x)) lands on the simplex, forcing s(x) = x).
    """
    n = len(x_nodes)
    total = builder.sum_(x_nodes)
    one = builder.const(1)
    deficit = builder.max_(builder.const(0), builder.sub(one, total))
    bump = builder.scale(Fraction(1, n), deficit)
    denom = builder.max_(total, one)
    return [builder.div(builder.add(x, bump), denom) for x in x_nodes]


def pad_circuit(circ: Circuit, extra: int) -> Circuit:
    """Widen a circuit's arity by `extra` trailing ignored inputs."""
    b = CircuitBuilder(circ.input_arity + extra)
    refs = b.splice(circ, b.inputs[: circ.input_arity])
    return Circuit(circ.input_arity + extra, tuple(b._nodes), tuple(refs))


def remap_pseudogate(
    gate: Pseudogate,
    n_new: int,
    input_map: Sequence[int],
    negate: bool = False,
    scale_node_builder: Optional[Callable[[CircuitBuilder], int]] = None,
) -> Pseudogate:
    """Rewire a pseudogate's primary inputs onto a wider input space.

    input_map[i] is the new input index feeding old primary input i.  Outputs
    are optionally negated or multiplied by a scale node computed from the new
    inputs (used for conditionally-scaled subgradients).
    """
    if len(input_map) != gate.n_in:
        raise CompileError("input map length mismatch")
    b = CircuitBuilder(n_new)
    aux_nodes = []
    for _ in range(gate.ell):
        _, node = b.new_aux_slot()
        aux_nodes.append(node)
    wiring = [b.inputs[i] for i in input_map] + aux_nodes
    refs = b.splice(gate.body, wiring)
    prim = refs[: gate.n_out]
    if scale_node_builder is not None:
        s = scale_node_builder(b)
        prim = [b.mul(s, r) for r in prim]
    if negate:
        prim = [b.neg(r) for r in prim]
    for slot in range(gate.ell):
        b.set_aux_output(slot, refs[gate.n_out + slot])
    return make_pseudogate(b, prim)
