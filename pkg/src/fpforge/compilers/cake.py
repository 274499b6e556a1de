"""Envy-free cake division and the Bapat / K-K-M constructions."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..circuit import Box, Circuit, CircuitBuilder, interval_range
from ..problems import BapatSpec, CakeSpec, KKMSpec
from ..solver import eval_batch
from .base import (
    Compiled,
    CompileError,
    clamp_outputs,
    finish_compiled,
    lift_lp,
    lift_simplex_lp,
    simplex_retract,
)


def check_hungry(cake: CakeSpec, samples: int = 10_000, seed: int = 0) -> bool:
    """Sampled hungriness audit: no agent's best piece may be an empty piece.

    Draws simplex points, zeroes one coordinate, and rejects the instance if
    some agent strictly prefers every empty piece to all non-empty ones.
    """
    n = cake.n
    rng = np.random.default_rng(seed)
    raw = rng.exponential(size=(samples, n))
    zero_at = rng.integers(0, n, size=samples)
    raw[np.arange(samples), zero_at] = 0.0
    pts = raw / raw.sum(axis=1, keepdims=True)
    values = np.stack(
        [
            np.stack([eval_batch(c, pts)[:, 0] for c in row], axis=1)
            for row in cake.valuations
        ],
        axis=1,
    )  # (samples, agent, piece)
    empty = pts <= 0.0
    for p in range(samples):
        for i in range(n):
            best_empty = values[p, i, empty[p]].max() if empty[p].any() else -np.inf
            nonempty = ~empty[p]
            best_live = values[p, i, nonempty].max() if nonempty.any() else -np.inf
            if best_empty > best_live:
                return False
    return True


def compile_cake(cake: CakeSpec, hungriness_samples: int = 10_000) -> Compiled:
    """Capacity LPs, one flow LP, residual uplift, and normalization.

    The division map lives on the simplex; composing with the box-to-simplex
    retraction extends it to [0,1]^n without creating fixed points off the
    simplex.  Set hungriness_samples=0 to skip the sampled hungriness audit.
    """
    n = cake.n
    if n < 2:
        raise CompileError("cake instances need at least two agents")
    if hungriness_samples and not check_hungry(cake, hungriness_samples):
        raise CompileError("sampled hungriness audit failed: an agent prefers an empty piece")
    slack = Fraction(1, n**3)

    b = CircuitBuilder(n)
    x_nodes = simplex_retract(b, b.inputs[:])
    one, zero = b.const(1), b.const(0)

    # per-agent capacities: maximize sum_j z_j u_ij(x) over the simplex;
    # the objective is scaled down to the interval bound of the valuations
    caps = []
    box01 = Box.cube(n, 0, 1)
    for i in range(n):
        peak = Fraction(1)
        for j in range(n):
            rng = interval_range(cake.valuations[i][j], box01)
            if rng is not None:
                peak = max(peak, abs(rng[0][0]), abs(rng[0][1]))
        util_nodes = [b.splice(cake.valuations[i][j], x_nodes)[0] for j in range(n)]
        caps.append(lift_simplex_lp(b, util_nodes, scale=1 / peak))

    # flow LP over z in R^{n*n}, row-major (i, j)
    q = n * n
    c = [one] * q
    C_rows: list[list[int]] = []
    d: list[int] = []
    for i in range(n):
        for j in range(n):
            row = [zero] * q
            row[i * n + j] = b.const(-1)
            C_rows.append(row)
            d.append(zero)
    slack_nodes = [
        b.add(caps[i][j], b.const(slack)) for i in range(n) for j in range(n)
    ]
    for i in range(n):
        for j in range(n):
            row = [zero] * q
            row[i * n + j] = one
            C_rows.append(row)
            d.append(slack_nodes[i * n + j])
    for j in range(n):  # column sums <= 1
        row = [zero] * q
        for i in range(n):
            row[i * n + j] = one
        C_rows.append(row)
        d.append(one)
    for i in range(n):  # row sums <= 1
        row = [zero] * q
        for j in range(n):
            row[i * n + j] = one
        C_rows.append(row)
        d.append(one)
    flow = lift_lp(b, c, C_rows, d, [], [], one)

    # residuals and the normalized update
    res_nodes = []
    for k in range(n):
        col = b.sum_([flow[i * n + k] for i in range(n)])
        res_nodes.append(b.max_(zero, b.sub(one, col)))
    denom = b.add(one, b.sum_(res_nodes))
    outs = [b.div(b.add(x_nodes[j], res_nodes[j]), denom) for j in range(n)]

    box = Box.cube(n, 0, 1)
    return finish_compiled(
        b,
        clamp_outputs(b, outs, box),
        box,
        "cake",
        {"division": (0, n)},
        {"n": n},
    )


def _sorted_desc(b: CircuitBuilder, refs: Sequence[int]) -> list[int]:
    """Bubble compare-exchange network; returns refs in descending order."""
    vals = list(refs)
    for _ in range(len(vals)):
        for j in range(len(vals) - 1):
            hi = b.max_(vals[j], vals[j + 1])
            lo = b.min_(vals[j], vals[j + 1])
            vals[j], vals[j + 1] = hi, lo
    return vals


def _threshold_node(b: CircuitBuilder, x_nodes: Sequence[int], n: int) -> int:
    """t >= 0 with sum_i max(x_i - t, 1/(2n)) = 1, via the sorting network.

    With s the descending sort, t = max(0, max_k (prefix_k + (n-k)/(2n) - 1)/k).
    """
    c = Fraction(1, 2 * n)
    s = _sorted_desc(b, x_nodes)
    candidates = []
    prefix = None
    for k in range(1, n + 1):
        prefix = s[k - 1] if prefix is None else b.add(prefix, s[k - 1])
        offset = b.const((n - k) * c - 1)
        candidates.append(b.scale(Fraction(1, k), b.add(prefix, offset)))
    return b.max_(b.const(0), b.fold_max(candidates))


def bapat_to_cake(spec: BapatSpec) -> tuple[CakeSpec, Callable]:
    """Lower a Bapat instance to cake valuations; returns (cake, recover).

    Preprocessing rescales the maps so every coordinate stays >= 1/(2n), which
    makes the derived valuations hungry; recover() maps an envy-free division
    back to a Bapat solution.
    """
    n = spec.n
    c = Fraction(1, 2 * n)
    valuations = []
    for i in range(n):
        row = []
        for j in range(n):
            b = CircuitBuilder(n)
            x_nodes = b.inputs[:]
            t = _threshold_node(b, x_nodes, n)
            pi = [b.max_(b.sub(x, t), b.const(c)) for x in x_nodes]
            rescaled = [b.scale(2, b.sub(p, b.const(c))) for p in pi]
            f_out = b.splice(spec.maps[i], rescaled)[j]
            g_ij = b.add(b.scale(Fraction(1, 2), f_out), b.const(c))
            out = b.max_(b.const(0), b.sub(x_nodes[j], g_ij))
            row.append(Circuit(n, tuple(b._nodes), (out,)))
        valuations.append(tuple(row))
    cake = CakeSpec(n, tuple(valuations))

    def recover(division) -> list[float]:
        return [2.0 * (float(x) - float(c)) for x in division]

    return cake, recover


def compile_kkm(spec: KKMSpec) -> Compiled:
    """Direct circuit G(x)_i = (x_i + F_i(x)) / (1 + sum_j F_j(x)).

    Precomposed with the box-to-simplex retraction so box fixed points are
    exactly the simplex fixed points of G.
    """
    n = spec.n
    b = CircuitBuilder(n)
    x_nodes = simplex_retract(b, b.inputs[:])
    fvals = [b.splice(c, x_nodes)[0] for c in spec.fns]
    denom = b.add(b.const(1), b.sum_(fvals))
    outs = [b.div(b.add(x_nodes[i], fvals[i]), denom) for i in range(n)]
    box = Box.cube(n, 0, 1)
    return finish_compiled(
        b,
        clamp_outputs(b, outs, box),
        box,
        "kkm",
        {"point": (0, n)},
        {"n": n},
    )
