"""Problem-family instance types: games, constraint systems, cakes, markets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .circuit import (
    Box,
    Circuit,
    CircuitBuilder,
    Rational,
    as_fraction,
    evaluate,
)
from .pseudogate import Pseudogate


class InstanceError(Exception):
    pass


def _strides(actions: Sequence[int]) -> list[int]:
    s = [1] * len(actions)
    for i in range(len(actions) - 2, -1, -1):
        s[i] = s[i + 1] * actions[i + 1]
    return s


def flatten_tensor(nested, shape: Sequence[int]) -> tuple[Fraction, ...]:
    """Row-major flatten of a nested payoff array, validating the shape."""
    out: list[Fraction] = []

    def rec(node, dims):
        if not dims:
            out.append(as_fraction(node))
            return
        if not isinstance(node, (list, tuple)) or len(node) != dims[0]:
            raise InstanceError(f"payoff tensor shape mismatch at depth {len(shape)-len(dims)}")
        for sub in node:
            rec(sub, dims[1:])

    rec(nested, list(shape))
    return tuple(out)


@dataclass(frozen=True)
class GameNF:
    """Normal-form game; payoffs[i] is player i's tensor, flattened row-major."""

    actions: tuple[int, ...]
    payoffs: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        total = math.prod(self.actions)
        if len(self.payoffs) != len(self.actions):
            raise InstanceError("one payoff tensor per player required")
        for t in self.payoffs:
            if len(t) != total:
                raise InstanceError("payoff tensor size mismatch")

    @staticmethod
    def from_nested(actions: Sequence[int], nested_payoffs: Sequence) -> "GameNF":
        actions = tuple(int(a) for a in actions)
        return GameNF(
            actions,
            tuple(flatten_tensor(p, actions) for p in nested_payoffs),
        )

    @property
    def n_players(self) -> int:
        return len(self.actions)

    def u(self, i: int, profile: Sequence[int]) -> Fraction:
        idx = 0
        for j, s in zip(profile, _strides(self.actions)):
            idx += j * s
        return self.payoffs[i][idx]

    def profiles(self):
        def rec(prefix, rest):
            if not rest:
                yield tuple(prefix)
                return
            for j in range(rest[0]):
                yield from rec(prefix + [j], rest[1:])

        yield from rec([], list(self.actions))

    def expected_payoff(self, i: int, strategy_rows: Sequence[Sequence[float]]) -> float:
        total = 0.0
        for prof in self.profiles():
            p = 1.0
            for l, j in enumerate(prof):
                p *= strategy_rows[l][j]
            total += p * float(self.payoffs[i][self._index(prof)])
        return total

    def expected_payoff_pure(
        self, i: int, action: int, strategy_rows: Sequence[Sequence[float]]
    ) -> float:
        total = 0.0
        for prof in self.profiles():
            if prof[i] != action:
                continue
            p = 1.0
            for l, j in enumerate(prof):
                if l != i:
                    p *= strategy_rows[l][j]
            total += p * float(self.payoffs[i][self._index(prof)])
        return total

    def _index(self, profile: Sequence[int]) -> int:
        idx = 0
        for j, s in zip(profile, _strides(self.actions)):
            idx += j * s
        return idx


def split_profile(actions: Sequence[int], flat: Sequence[float]) -> list[list[float]]:
    rows, at = [], 0
    for m in actions:
        rows.append([float(v) for v in flat[at : at + m]])
        at += m
    return rows


@dataclass(frozen=True)
class ConcavePlayer:
    """One player's strategy set [-R,R]^m ∩ {Ay=b} ∩ {g_j(y)<=0} and utility access.

    util_supergrad takes the full profile (all players' coordinates) and emits a
    supergradient of this player's utility with respect to its own coordinates.
    """

    m: int
    radius: Fraction
    eq_A: tuple[tuple[Fraction, ...], ...]
    eq_b: tuple[Fraction, ...]
    ineq: tuple[Circuit, ...]
    ineq_grad: tuple[Pseudogate, ...]
    util_supergrad: Pseudogate

    def __post_init__(self):
        if self.radius <= 0:
            raise InstanceError("player radius must be positive")
        for row in self.eq_A:
            if len(row) != self.m:
                raise InstanceError("equality row length mismatch")
        if len(self.eq_A) != len(self.eq_b):
            raise InstanceError("equality rhs length mismatch")
        if len(self.ineq) != len(self.ineq_grad):
            raise InstanceError("one gradient pseudogate per inequality required")
        for c in self.ineq:
            if c.input_arity != self.m:
                raise InstanceError("inequality circuit arity mismatch")


@dataclass(frozen=True)
class ConcaveGameSpec:
    players: tuple[ConcavePlayer, ...]

    @property
    def total_dim(self) -> int:
        return sum(p.m for p in self.players)


@dataclass(frozen=True)
class ConditionalConstraint:
    """f(x) > 0 forces g(x) <= 0; grad_g is a subgradient pseudogate for g."""

    f: Circuit
    g: Circuit
    grad_g: Pseudogate


@dataclass(frozen=True)
class CCCSystem:
    n: int
    radius: Fraction
    eq_A: tuple[tuple[Fraction, ...], ...]
    eq_b: tuple[Fraction, ...]
    domain_ineq: tuple[Circuit, ...]
    domain_ineq_grad: tuple[Pseudogate, ...]
    constraints: tuple[ConditionalConstraint, ...]

    def __post_init__(self):
        if self.radius <= 0:
            raise InstanceError("CCC radius must be positive")
        for c in self.domain_ineq:
            if c.input_arity != self.n:
                raise InstanceError("domain inequality arity mismatch")
        for pair in self.constraints:
            if pair.f.input_arity != self.n or pair.g.input_arity != self.n:
                raise InstanceError("conditional constraint arity mismatch")


@dataclass(frozen=True)
class StochasticGameSpec:
    """Finite discounted stochastic game; transitions are row-stochastic."""

    n_states: int
    actions: tuple[int, ...]
    payoffs: tuple[tuple[tuple[Fraction, ...], ...], ...]  # [player][state][profile]
    transitions: tuple[tuple[tuple[Fraction, ...], ...], ...]  # [state][profile][next]
    lam: Fraction

    def __post_init__(self):
        total = math.prod(self.actions)
        if not 0 < self.lam <= 1:
            raise InstanceError("discount factor must lie in (0, 1]")
        if len(self.payoffs) != len(self.actions):
            raise InstanceError("one payoff table per player required")
        for table in self.payoffs:
            if len(table) != self.n_states or any(len(row) != total for row in table):
                raise InstanceError("payoff table shape mismatch")
        if len(self.transitions) != self.n_states:
            raise InstanceError("transition table shape mismatch")
        for per_state in self.transitions:
            if len(per_state) != total:
                raise InstanceError("transition table shape mismatch")
            for row in per_state:
                if len(row) != self.n_states:
                    raise InstanceError("transition row length mismatch")
                if sum(row) != 1:
                    raise InstanceError("transition row does not sum to 1")
                if any(p < 0 for p in row):
                    raise InstanceError("negative transition probability")

    @property
    def n_players(self) -> int:
        return len(self.actions)

    @property
    def payoff_bound(self) -> Fraction:
        best = Fraction(0)
        for table in self.payoffs:
            for row in table:
                for v in row:
                    best = max(best, abs(v))
        return best

    def stage_game(self, state: int, values_next=None) -> GameNF:
        """The one-shot game at `state`, optionally mixing in continuation values.

        values_next[i][s'] are the continuation values; payoffs become
        lam*u + (1-lam) * sum_s' q(s'|s,a) v_i(s').
        """
        tensors = []
        total = math.prod(self.actions)
        for i in range(self.n_players):
            flat = []
            for idx in range(total):
                v = self.lam * self.payoffs[i][state][idx]
                if values_next is not None:
                    cont = sum(
                        self.transitions[state][idx][s2] * as_fraction(values_next[i][s2])
                        for s2 in range(self.n_states)
                    )
                    v += (1 - self.lam) * cont
                flat.append(v)
            tensors.append(tuple(flat))
        return GameNF(self.actions, tuple(tensors))


@dataclass(frozen=True)
class CakeSpec:
    """n agents, valuation circuit u[i][j] over whole divisions (arity n each)."""

    n: int
    valuations: tuple[tuple[Circuit, ...], ...]

    def __post_init__(self):
        if len(self.valuations) != self.n:
            raise InstanceError("one valuation row per agent required")
        for row in self.valuations:
            if len(row) != self.n:
                raise InstanceError("one valuation per piece required")
            for c in row:
                if c.input_arity != self.n or len(c.outputs) != 1:
                    raise InstanceError("valuation circuit must map divisions to a scalar")

    def values_at(self, division: Sequence[float]) -> list[list[float]]:
        return [
            [evaluate(c, division)[0] for c in row] for row in self.valuations
        ]


def wrap_nonneg(circ: Circuit) -> Circuit:
    """max(·, 0) wrapper; makes nonnegativity syntactic."""
    b = CircuitBuilder(circ.input_arity)
    refs = b.splice(circ, b.inputs)
    out = b.max_(refs[0], b.const(0))
    return Circuit(circ.input_arity, tuple(b._nodes), (out,))


@dataclass(frozen=True)
class KKMSpec:
    """n nonnegative functions on the simplex; wrapped max(·,0) at construction."""

    fns: tuple[Circuit, ...]

    def __post_init__(self):
        for c in self.fns:
            if c.input_arity != len(self.fns) or len(c.outputs) != 1:
                raise InstanceError("K-K-M circuit arity mismatch")

    @staticmethod
    def of(fns: Sequence[Circuit]) -> "KKMSpec":
        return KKMSpec(tuple(wrap_nonneg(c) for c in fns))

    @property
    def n(self) -> int:
        return len(self.fns)


@dataclass(frozen=True)
class BapatSpec:
    """n continuous self-maps of the simplex, each given as one n-output circuit."""

    maps: tuple[Circuit, ...]

    def __post_init__(self):
        n = len(self.maps)
        for c in self.maps:
            if c.input_arity != n or len(c.outputs) != n:
                raise InstanceError("Bapat map must be simplex -> simplex (n in, n out)")

    @property
    def n(self) -> int:
        return len(self.maps)


@dataclass(frozen=True)
class PDCFunction:
    """Lower envelope min_j g_j of differentiable concave pieces.

    Each piece is (value circuit, gradient circuit); the gradient circuit has one
    output per input coordinate.
    """

    pieces: tuple[tuple[Circuit, Circuit], ...]

    def __post_init__(self):
        if not self.pieces:
            raise InstanceError("PDC function needs at least one piece")
        d = self.pieces[0][0].input_arity
        for val, grad in self.pieces:
            if val.input_arity != d or len(val.outputs) != 1:
                raise InstanceError("PDC piece value circuit shape mismatch")
            if grad.input_arity != d or len(grad.outputs) != d:
                raise InstanceError("PDC piece gradient circuit shape mismatch")

    @property
    def dim(self) -> int:
        return self.pieces[0][0].input_arity

    def value(self, x: Sequence[float]) -> float:
        return min(evaluate(val, x)[0] for val, _ in self.pieces)


@dataclass(frozen=True)
class ConvexSet:
    """{x in R^dim : A x = b, h_i(x) <= 0} with subgradient pseudogates for h_i."""

    dim: int
    eq_A: tuple[tuple[Fraction, ...], ...]
    eq_b: tuple[Fraction, ...]
    ineq: tuple[Circuit, ...]
    ineq_grad: tuple[Pseudogate, ...]

    def __post_init__(self):
        for row in self.eq_A:
            if len(row) != self.dim:
                raise InstanceError("equality row length mismatch")
        if len(self.eq_A) != len(self.eq_b):
            raise InstanceError("equality rhs length mismatch")
        if len(self.ineq) != len(self.ineq_grad):
            raise InstanceError("one subgradient pseudogate per inequality required")
        for c in self.ineq:
            if c.input_arity != self.dim or len(c.outputs) != 1:
                raise InstanceError("inequality circuit shape mismatch")


@dataclass(frozen=True)
class ADConsumer:
    endowment: tuple[Fraction, ...]
    lower_bound: tuple[Fraction, ...]
    shares: tuple[Fraction, ...]
    utility: PDCFunction
    consumption_set: ConvexSet
    interior_witness: Optional[tuple[Fraction, ...]] = None


@dataclass(frozen=True)
class ADFirm:
    production_set: ConvexSet


@dataclass(frozen=True)
class ADMarketSpec:
    ell: int
    consumers: tuple[ADConsumer, ...]
    firms: tuple[ADFirm, ...]
    production_bound: Fraction

    def __post_init__(self):
        for c in self.consumers:
            if len(c.endowment) != self.ell or len(c.lower_bound) != self.ell:
                raise InstanceError("endowment/lower bound length mismatch")
            if len(c.shares) != len(self.firms):
                raise InstanceError("one profit share per firm required")
            if any(a < 0 for a in c.shares):
                raise InstanceError("profit shares must be nonnegative")
            if c.utility.dim != self.ell or c.consumption_set.dim != self.ell:
                raise InstanceError("consumer dimensions mismatch")
        for f in self.firms:
            if f.production_set.dim != self.ell:
                raise InstanceError("firm dimensions mismatch")
        for j in range(len(self.firms)):
            if sum(c.shares[j] for c in self.consumers) != 1:
                raise InstanceError("profit shares of each firm must sum to 1")
        if self.firms and self.production_bound < 0:
            raise InstanceError("production bound must be nonnegative")

    def bound_K(self) -> Fraction:
        """K = C' + 1 with C' = n*C + m*max|zeta| + m*max|xi| (sup norms)."""
        norm = lambda v: max((abs(t) for t in v), default=Fraction(0))
        m = len(self.consumers)
        cprime = (
            len(self.firms) * self.production_bound
            + m * max((norm(c.endowment) for c in self.consumers), default=Fraction(0))
            + m * max((norm(c.lower_bound) for c in self.consumers), default=Fraction(0))
        )
        return cprime + 1


@dataclass(frozen=True)
class HZSpec:
    """Pseudomarket with n agents and n goods; utilities[i][j] rational."""

    utilities: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        n = len(self.utilities)
        for row in self.utilities:
            if len(row) != n:
                raise InstanceError("utility matrix must be square")

    @property
    def n(self) -> int:
        return len(self.utilities)

    def dummy_constants(self) -> tuple[list[Fraction], Fraction]:
        """Per-agent dummy-good utility u_max + delta and the dummy price 3n."""
        out = []
        for row in self.utilities:
            umax = max(row)
            below = [v for v in row if v < umax]
            delta = (umax - max(below)) if below else Fraction(1)
            out.append(umax + delta)
        return out, Fraction(3 * self.n)
