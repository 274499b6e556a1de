"""Pseudogates: circuits with paired auxiliary wires in [0,1]^ell.

A pseudogate computes a correspondence only at fixed points of its auxiliary
coordinates.  Lifting a pseudogate into an enclosing circuit appends its aux
wires to that circuit's domain; once every lifted aux coordinate is fixed, the
gate's primary output lands inside the target correspondence.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuit import Circuit, CircuitBuilder, CircuitError, evaluate


@dataclass(frozen=True)
class Pseudogate:
    """body maps (primary n_in, aux ell) -> (primary n_out, aux ell)."""

    body: Circuit
    n_in: int
    n_out: int
    ell: int

    def __post_init__(self):
        if self.body.input_arity != self.n_in + self.ell:
            raise CircuitError("pseudogate body arity mismatch")
        if len(self.body.outputs) != self.n_out + self.ell:
            raise CircuitError("pseudogate body output count mismatch")
        if len(self.body.aux_pairs) != self.ell:
            raise CircuitError("pseudogate aux ledger size mismatch")


def make_pseudogate(builder: CircuitBuilder, primary_outputs: list[int]) -> Pseudogate:
    """Seal a builder whose aux slots are the gate's own auxiliary wires."""
    body = builder.finish(primary_outputs)
    return Pseudogate(
        body=body,
        n_in=builder._n_primary,
        n_out=len(primary_outputs),
        ell=builder.n_aux,
    )


def heaviside() -> Pseudogate:
    """The one-aux gate (x, y) -> (y, min(1, max(0, x + y))).

    At aux fixed points the primary output is 1 for x > 0, 0 for x < 0, and
    anything in [0,1] at x = 0.
    """
    b = CircuitBuilder(1)
    _, y = b.new_aux_slot()
    out = b.min_(b.const(1), b.max_(b.const(0), b.add(b.inputs[0], y)))
    b.set_aux_output(0, out)
    return make_pseudogate(b, [y])


def pad_aux(gate: Pseudogate, t: int) -> Pseudogate:
    """Grow a gate to t aux wires with pass-through pairs; same correspondence."""
    if t < gate.ell:
        raise CircuitError(f"cannot shrink aux count {gate.ell} -> {t}")
    if t == gate.ell:
        return gate
    b = CircuitBuilder(gate.n_in)
    aux_nodes = []
    for _ in range(gate.ell):
        _, node = b.new_aux_slot()
        aux_nodes.append(node)
    refs = b.splice(gate.body, [b.inputs[i] for i in range(gate.n_in)] + aux_nodes)
    for slot in range(gate.ell):
        b.set_aux_output(slot, refs[gate.n_out + slot])
    for _ in range(t - gate.ell):
        slot, node = b.new_aux_slot()
        b.set_aux_output(slot, b.clamp01(node))
    return make_pseudogate(b, refs[: gate.n_out])


def aux_output_1d(gate: Pseudogate, x: float, y: float) -> float:
    assert gate.ell == 1 and gate.n_in == 1
    vals = evaluate(gate.body, [x, y])
    return vals[gate.n_out]


def fixed_aux_solutions_1d(
    gate: Pseudogate, x: float, grid: int = 257, tol: float = 1e-12
) -> list[tuple[float, float]]:
    """All y in [0,1] with |aux_out(x, y) - y| <= tol, as merged intervals.

    Grid sweep followed by refinement: sign changes of aux_out(x, y) - y are
    bisected down to a point; plateaus of exact fixedness are reported as one
    interval.  A point solution comes back as (y, y).
    """
    if gate.ell != 1 or gate.n_in != 1:
        raise CircuitError("fixed_aux_solutions_1d needs a 1-in/1-aux gate")
    ys = [i / (grid - 1) for i in range(grid)]
    g = [aux_output_1d(gate, x, y) - y for y in ys]

    def bisect(lo: float, hi: float, flo: float) -> float:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = aux_output_1d(gate, x, mid) - mid
            if fm == 0.0:
                return mid
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
        return 0.5 * (lo + hi)

    hits: list[tuple[float, float]] = []
    i = 0
    while i < grid:
        if abs(g[i]) <= tol:
            j = i
            while j + 1 < grid and abs(g[j + 1]) <= tol:
                j += 1
            hits.append((ys[i], ys[j]))
            i = j + 1
            continue
        if i + 1 < grid and abs(g[i + 1]) > tol and (g[i] > 0) != (g[i + 1] > 0):
            root = bisect(ys[i], ys[i + 1], g[i])
            if abs(aux_output_1d(gate, x, root) - root) <= tol:
                hits.append((root, root))
        i += 1

    merged: list[tuple[float, float]] = []
    for lo, hi in hits:
        if merged and lo <= merged[-1][1] + 2.0 / (grid - 1):
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged
