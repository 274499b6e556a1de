"""Algebraic-circuit IR: gates over rationals, evaluation, composition, analysis.

A circuit is a DAG of {const, input, +, -, *, /, max, min} gates in topological
order with a nonempty list of output node references.  Circuits are immutable
after construction; use CircuitBuilder to assemble them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

#: ops that take two operand node references
BINARY_OPS = ("ADD", "SUB", "MUL", "DIV", "MAX", "MIN")

#: numeric-mode guard: |denominator| below this counts as division by zero
MACHINE_ZERO = 1e-300

Rational = Union[Fraction, int, str]


class CircuitError(Exception):
    pass


class DivisionByZero(CircuitError):
    """A DIV gate saw a (near-)zero denominator."""

    def __init__(self, node: int):
        super().__init__(f"division by zero at node #{node}")
        self.node = node


class InvalidWiring(CircuitError):
    pass


class FormatError(CircuitError):
    """Raised on malformed circuit text."""


def as_fraction(value: Rational) -> Fraction:
    f = Fraction(value)
    return f


def format_fraction(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


@dataclass(frozen=True)
class Gate:
    """One circuit node.

    op is one of CONST, INPUT, ADD, SUB, MUL, DIV, MAX, MIN.  Binary gates use
    (a, b) as operand node references; CONST carries value; INPUT carries index.
    """

    op: str
    a: int = -1
    b: int = -1
    value: Optional[Fraction] = None
    index: int = -1


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with rational endpoints, the only domain shape we use."""

    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box endpoint lengths differ")
        for l, h in zip(self.lo, self.hi):
            if l > h:
                raise ValueError(f"box has lo > hi: {l} > {h}")

    @staticmethod
    def of(intervals: Iterable[tuple[Rational, Rational]]) -> "Box":
        los, his = [], []
        for l, h in intervals:
            los.append(as_fraction(l))
            his.append(as_fraction(h))
        return Box(tuple(los), tuple(his))

    @staticmethod
    def cube(dim: int, lo: Rational, hi: Rational) -> "Box":
        return Box((as_fraction(lo),) * dim, (as_fraction(hi),) * dim)

    def product(self, other: "Box") -> "Box":
        return Box(self.lo + other.lo, self.hi + other.hi)

    @property
    def dim(self) -> int:
        return len(self.lo)


@dataclass(frozen=True)
class Circuit:
    """Immutable gate list in topological order plus output references.

    aux_pairs records (input slot, output node) pairs for circuits that carry
    pseudogate bookkeeping; it is empty for plain circuits.
    """

    input_arity: int
    nodes: tuple[Gate, ...]
    outputs: tuple[int, ...]
    aux_pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not self.outputs:
            raise CircuitError("circuit has no outputs")
        for k, g in enumerate(self.nodes):
            if g.op == "CONST":
                if g.value is None or g.value.denominator == 0:
                    raise CircuitError(f"bad constant at node #{k}")
            elif g.op == "INPUT":
                if not 0 <= g.index < self.input_arity:
                    raise CircuitError(f"input index out of range at node #{k}")
            elif g.op in BINARY_OPS:
                if not (0 <= g.a < k and 0 <= g.b < k):
                    raise CircuitError(f"operand of node #{k} is not an earlier node")
            else:
                raise CircuitError(f"unknown op {g.op!r} at node #{k}")
        for o in self.outputs:
            if not 0 <= o < len(self.nodes):
                raise CircuitError(f"output reference #{o} out of range")
        for slot, node in self.aux_pairs:
            if not 0 <= slot < self.input_arity or not 0 <= node < len(self.nodes):
                raise CircuitError("aux pair reference out of range")

    def size(self) -> int:
        """Node count plus bit-length of the rational constants."""
        bits = 0
        for g in self.nodes:
            if g.op == "CONST":
                bits += g.value.numerator.bit_length() + g.value.denominator.bit_length()
        return len(self.nodes) + bits

    def with_outputs(self, outputs: Sequence[int]) -> "Circuit":
        return Circuit(self.input_arity, self.nodes, tuple(outputs), self.aux_pairs)


def evaluate(circuit: Circuit, point: Sequence[float]) -> list[float]:
    """Gate-by-gate numeric evaluation in binary64."""
    if len(point) != circuit.input_arity:
        raise InvalidWiring(
            f"expected {circuit.input_arity} inputs, got {len(point)}"
        )
    vals = [0.0] * len(circuit.nodes)
    for k, g in enumerate(circuit.nodes):
        op = g.op
        if op == "CONST":
            vals[k] = g.value.numerator / g.value.denominator
        elif op == "INPUT":
            vals[k] = float(point[g.index])
        elif op == "ADD":
            vals[k] = vals[g.a] + vals[g.b]
        elif op == "SUB":
            vals[k] = vals[g.a] - vals[g.b]
        elif op == "MUL":
            vals[k] = vals[g.a] * vals[g.b]
        elif op == "DIV":
            den = vals[g.b]
            if -MACHINE_ZERO < den < MACHINE_ZERO:
                raise DivisionByZero(k)
            vals[k] = vals[g.a] / den
        elif op == "MAX":
            vals[k] = vals[g.a] if vals[g.a] >= vals[g.b] else vals[g.b]
        else:  # MIN
            vals[k] = vals[g.a] if vals[g.a] <= vals[g.b] else vals[g.b]
    return [vals[o] for o in circuit.outputs]


def evaluate_exact(circuit: Circuit, point: Sequence[Rational]) -> list[Fraction]:
    """Exact rational evaluation; used by oracles and tests."""
    if len(point) != circuit.input_arity:
        raise InvalidWiring(
            f"expected {circuit.input_arity} inputs, got {len(point)}"
        )
    pt = [as_fraction(p) for p in point]
    vals: list[Fraction] = [Fraction(0)] * len(circuit.nodes)
    for k, g in enumerate(circuit.nodes):
        op = g.op
        if op == "CONST":
            vals[k] = g.value
        elif op == "INPUT":
            vals[k] = pt[g.index]
        elif op == "ADD":
            vals[k] = vals[g.a] + vals[g.b]
        elif op == "SUB":
            vals[k] = vals[g.a] - vals[g.b]
        elif op == "MUL":
            vals[k] = vals[g.a] * vals[g.b]
        elif op == "DIV":
            if vals[g.b] == 0:
                raise DivisionByZero(k)
            vals[k] = vals[g.a] / vals[g.b]
        elif op == "MAX":
            vals[k] = max(vals[g.a], vals[g.b])
        else:
            vals[k] = min(vals[g.a], vals[g.b])
    return [vals[o] for o in circuit.outputs]


def inline(host: Circuit, guest: Circuit, input_wiring: Sequence[int]) -> Circuit:
    """Splice guest into host, feeding guest's inputs from host nodes.

    The result keeps host's inputs and nodes, appends guest's nodes with its
    input references replaced by the wired host nodes, and exposes guest's
    outputs, so evaluation equals functional composition.
    """
    if len(input_wiring) != guest.input_arity:
        raise InvalidWiring(
            f"wiring length {len(input_wiring)} != guest arity {guest.input_arity}"
        )
    for w in input_wiring:
        if not 0 <= w < len(host.nodes):
            raise InvalidWiring(f"wiring reference #{w} not a host node")
    b = CircuitBuilder.from_circuit(host)
    out_refs = b.splice(guest, list(input_wiring))
    return Circuit(host.input_arity, tuple(b._nodes), tuple(out_refs), host.aux_pairs)


@dataclass(frozen=True)
class WellDefinedness:
    safe: bool
    node: Optional[int] = None  # first DIV whose denominator interval covers 0

    def __bool__(self) -> bool:
        return self.safe


def check_well_defined(circuit: Circuit, domain: Box) -> WellDefinedness:
    """Interval-arithmetic sweep over the domain box.

    Safe is sound (no division by zero can occur on the box); the other verdict
    is conservative.  Intervals are exact rationals, so no rounding slack is
    needed.
    """
    if domain.dim != circuit.input_arity:
        raise InvalidWiring("domain dimension != input arity")
    lo: list[Fraction] = [Fraction(0)] * len(circuit.nodes)
    hi: list[Fraction] = [Fraction(0)] * len(circuit.nodes)
    for k, g in enumerate(circuit.nodes):
        op = g.op
        if op == "CONST":
            lo[k] = hi[k] = g.value
        elif op == "INPUT":
            lo[k], hi[k] = domain.lo[g.index], domain.hi[g.index]
        elif op == "ADD":
            lo[k], hi[k] = lo[g.a] + lo[g.b], hi[g.a] + hi[g.b]
        elif op == "SUB":
            lo[k], hi[k] = lo[g.a] - hi[g.b], hi[g.a] - lo[g.b]
        elif op == "MUL":
            prods = (
                lo[g.a] * lo[g.b],
                lo[g.a] * hi[g.b],
                hi[g.a] * lo[g.b],
                hi[g.a] * hi[g.b],
            )
            lo[k], hi[k] = min(prods), max(prods)
        elif op == "DIV":
            if lo[g.b] <= 0 <= hi[g.b]:
                return WellDefinedness(False, k)
            quots = (
                lo[g.a] / lo[g.b],
                lo[g.a] / hi[g.b],
                hi[g.a] / lo[g.b],
                hi[g.a] / hi[g.b],
            )
            lo[k], hi[k] = min(quots), max(quots)
        elif op == "MAX":
            lo[k], hi[k] = max(lo[g.a], lo[g.b]), max(hi[g.a], hi[g.b])
        else:
            lo[k], hi[k] = min(lo[g.a], lo[g.b]), min(hi[g.a], hi[g.b])
    return WellDefinedness(True)


def interval_range(
    circuit: Circuit, domain: Box
) -> Optional[list[tuple[Fraction, Fraction]]]:
    """Exact interval bounds of each output over the box; None when a DIV gate's
    denominator interval covers zero."""
    if domain.dim != circuit.input_arity:
        raise InvalidWiring("domain dimension != input arity")
    lo: list[Fraction] = [Fraction(0)] * len(circuit.nodes)
    hi: list[Fraction] = [Fraction(0)] * len(circuit.nodes)
    for k, g in enumerate(circuit.nodes):
        op = g.op
        if op == "CONST":
            lo[k] = hi[k] = g.value
        elif op == "INPUT":
            lo[k], hi[k] = domain.lo[g.index], domain.hi[g.index]
        elif op == "ADD":
            lo[k], hi[k] = lo[g.a] + lo[g.b], hi[g.a] + hi[g.b]
        elif op == "SUB":
            lo[k], hi[k] = lo[g.a] - hi[g.b], hi[g.a] - lo[g.b]
        elif op == "MUL":
            prods = (
                lo[g.a] * lo[g.b],
                lo[g.a] * hi[g.b],
                hi[g.a] * lo[g.b],
                hi[g.a] * hi[g.b],
            )
            lo[k], hi[k] = min(prods), max(prods)
        elif op == "DIV":
            if lo[g.b] <= 0 <= hi[g.b]:
                return None
            quots = (
                lo[g.a] / lo[g.b],
                lo[g.a] / hi[g.b],
                hi[g.a] / lo[g.b],
                hi[g.a] / hi[g.b],
            )
            lo[k], hi[k] = min(quots), max(quots)
        elif op == "MAX":
            lo[k], hi[k] = max(lo[g.a], lo[g.b]), max(hi[g.a], hi[g.b])
        else:
            lo[k], hi[k] = min(lo[g.a], lo[g.b]), min(hi[g.a], hi[g.b])
    return [(lo[o], hi[o]) for o in circuit.outputs]


def as_affine(circuit: Circuit) -> Optional[tuple[list[list[Fraction]], list[Fraction]]]:
    """Return (M, c) with output = M @ x + c when the circuit is affine, else None.

    MUL with two non-constant operands, any MAX/MIN of non-equal forms, and DIV
    by a non-constant all defeat extraction.
    """
    n = circuit.input_arity
    coefs: list[Optional[list[Fraction]]] = []
    consts: list[Fraction] = []
    zero = [Fraction(0)] * n
    for g in circuit.nodes:
        if g.op == "CONST":
            coefs.append(list(zero))
            consts.append(g.value)
        elif g.op == "INPUT":
            row = list(zero)
            row[g.index] = Fraction(1)
            coefs.append(row)
            consts.append(Fraction(0))
        else:
            ca, cb = coefs[g.a], coefs[g.b]
            if ca is None or cb is None:
                coefs.append(None)
                consts.append(Fraction(0))
                continue
            ka, kb = consts[g.a], consts[g.b]
            if g.op == "ADD":
                coefs.append([x + y for x, y in zip(ca, cb)])
                consts.append(ka + kb)
            elif g.op == "SUB":
                coefs.append([x - y for x, y in zip(ca, cb)])
                consts.append(ka - kb)
            elif g.op == "MUL":
                if all(x == 0 for x in ca):
                    coefs.append([ka * y for y in cb])
                    consts.append(ka * kb)
                elif all(y == 0 for y in cb):
                    coefs.append([kb * x for x in ca])
                    consts.append(ka * kb)
                else:
                    coefs.append(None)
                    consts.append(Fraction(0))
            elif g.op == "DIV":
                if all(y == 0 for y in cb) and kb != 0:
                    coefs.append([x / kb for x in ca])
                    consts.append(ka / kb)
                else:
                    coefs.append(None)
                    consts.append(Fraction(0))
            else:  # MAX/MIN: affine only when both sides are identical forms
                if ca == cb and ka == kb:
                    coefs.append(list(ca))
                    consts.append(ka)
                else:
                    coefs.append(None)
                    consts.append(Fraction(0))
    rows, offs = [], []
    for o in circuit.outputs:
        if coefs[o] is None:
            return None
        rows.append(list(coefs[o]))
        offs.append(consts[o])
    return rows, offs


class CircuitBuilder:
    """Mutable assembler for circuits and pseudogate bodies.

    Primary inputs are fixed at construction; auxiliary input slots may be
    appended later and must each be paired with a clamped output node before
    finish().  Nodes are deduplicated structurally (naive sharing only).
    """

    def __init__(self, n_inputs: int):
        self._nodes: list[Gate] = []
        self._dedup: dict[tuple, int] = {}
        self._n_primary = n_inputs
        self._aux_slots: list[int] = []      # input indices, in allocation order
        self._aux_inputs: list[int] = []     # node refs of the aux INPUT gates
        self._aux_outputs: list[Optional[int]] = []
        self.last_slots: list[int] = []      # aux slots allocated by the last lift
        self.inputs = [self._raw(Gate("INPUT", index=i)) for i in range(n_inputs)]

    @staticmethod
    def from_circuit(circuit: Circuit) -> "CircuitBuilder":
        b = CircuitBuilder.__new__(CircuitBuilder)
        b._nodes = list(circuit.nodes)
        b._dedup = {}
        b._n_primary = circuit.input_arity
        b._aux_slots = []
        b._aux_inputs = []
        b._aux_outputs = []
        b.last_slots = []
        b.inputs = [-1] * circuit.input_arity
        for k, g in enumerate(circuit.nodes):
            if g.op == "INPUT" and b.inputs[g.index] == -1:
                b.inputs[g.index] = k
        return b

    # -- node constructors -------------------------------------------------

    def _raw(self, gate: Gate) -> int:
        key = (gate.op, gate.a, gate.b, gate.value, gate.index)
        ref = self._dedup.get(key)
        if ref is not None:
            return ref
        self._nodes.append(gate)
        ref = len(self._nodes) - 1
        self._dedup[key] = ref
        return ref

    def const(self, value: Rational) -> int:
        return self._raw(Gate("CONST", value=as_fraction(value)))

    def add(self, a: int, b: int) -> int:
        return self._raw(Gate("ADD", a=a, b=b))

    def sub(self, a: int, b: int) -> int:
        return self._raw(Gate("SUB", a=a, b=b))

    def mul(self, a: int, b: int) -> int:
        return self._raw(Gate("MUL", a=a, b=b))

    def div(self, a: int, b: int) -> int:
        return self._raw(Gate("DIV", a=a, b=b))

    def max_(self, a: int, b: int) -> int:
        return self._raw(Gate("MAX", a=a, b=b))

    def min_(self, a: int, b: int) -> int:
        return self._raw(Gate("MIN", a=a, b=b))

    # -- composite helpers --------------------------------------------------

    def neg(self, a: int) -> int:
        return self.sub(self.const(0), a)

    def abs_(self, a: int) -> int:
        return self.max_(a, self.neg(a))

    def scale(self, value: Rational, a: int) -> int:
        return self.mul(self.const(value), a)

    def sum_(self, refs: Sequence[int]) -> int:
        if not refs:
            return self.const(0)
        acc = refs[0]
        for r in refs[1:]:
            acc = self.add(acc, r)
        return acc

    def dot_const(self, coeffs: Sequence[Rational], refs: Sequence[int]) -> int:
        terms = [self.scale(c, r) for c, r in zip(coeffs, refs) if as_fraction(c) != 0]
        return self.sum_(terms)

    def dot(self, xs: Sequence[int], ys: Sequence[int]) -> int:
        return self.sum_([self.mul(x, y) for x, y in zip(xs, ys)])

    def fold_max(self, refs: Sequence[int]) -> int:
        if not refs:
            raise InvalidWiring("fold_max of nothing")
        acc = refs[0]
        for r in refs[1:]:
            acc = self.max_(acc, r)
        return acc

    def fold_min(self, refs: Sequence[int]) -> int:
        if not refs:
            raise InvalidWiring("fold_min of nothing")
        acc = refs[0]
        for r in refs[1:]:
            acc = self.min_(acc, r)
        return acc

    def clamp(self, a: int, lo: int, hi: int) -> int:
        return self.max_(lo, self.min_(hi, a))

    def clamp01(self, a: int) -> int:
        return self.min_(self.const(1), self.max_(self.const(0), a))

    def clamp_const(self, a: int, lo: Rational, hi: Rational) -> int:
        return self.max_(self.const(lo), self.min_(self.const(hi), a))

    # -- auxiliary slots and splicing ----------------------------------------

    @property
    def n_aux(self) -> int:
        return len(self._aux_slots)

    def new_aux_slot(self) -> tuple[int, int]:
        """Append a fresh aux input; returns (slot id, input node ref)."""
        index = self._n_primary + len(self._aux_slots)
        node = self._raw(Gate("INPUT", index=index))
        slot = len(self._aux_slots)
        self._aux_slots.append(index)
        self._aux_inputs.append(node)
        self._aux_outputs.append(None)
        return slot, node

    def set_aux_output(self, slot: int, node: int) -> None:
        if self._aux_outputs[slot] is not None:
            raise InvalidWiring(f"aux slot {slot} already has an output")
        self._aux_outputs[slot] = node

    def splice(self, guest: Circuit, wiring: Sequence[int]) -> list[int]:
        """Append guest's nodes with inputs remapped; returns its output refs."""
        if len(wiring) != guest.input_arity:
            raise InvalidWiring(
                f"wiring length {len(wiring)} != guest arity {guest.input_arity}"
            )
        mapping: list[int] = []
        for g in guest.nodes:
            if g.op == "INPUT":
                mapping.append(wiring[g.index])
            elif g.op == "CONST":
                mapping.append(self.const(g.value))
            else:
                mapping.append(self._raw(Gate(g.op, a=mapping[g.a], b=mapping[g.b])))
        return [mapping[o] for o in guest.outputs]

    def lift(self, gate, primary_inputs: Sequence[int]) -> list[int]:
        """Splice a pseudogate body, allocating its aux slots in this circuit.

        Registers the (aux input slot, aux output node) pairs in the ledger and
        returns the gate's primary output refs.  `gate` needs .body/.n_in/
        .n_out/.ell, so any Pseudogate-shaped object works.
        """
        if len(primary_inputs) != gate.n_in:
            raise InvalidWiring(
                f"lift got {len(primary_inputs)} primary inputs, gate wants {gate.n_in}"
            )
        slots, aux_nodes = [], []
        for _ in range(gate.ell):
            slot, node = self.new_aux_slot()
            slots.append(slot)
            aux_nodes.append(node)
        refs = self.splice(gate.body, list(primary_inputs) + aux_nodes)
        for slot, out_ref in zip(slots, refs[gate.n_out:]):
            self.set_aux_output(slot, out_ref)
        self.last_slots = slots
        return refs[: gate.n_out]

    def _is_clamped(self, ref: int) -> bool:
        g = self._nodes[ref]
        if g.op != "MIN":
            return False
        one = lambda r: self._nodes[r].op == "CONST" and self._nodes[r].value == 1
        zero = lambda r: self._nodes[r].op == "CONST" and self._nodes[r].value == 0
        for c, m in ((g.a, g.b), (g.b, g.a)):
            inner = self._nodes[m]
            if one(c) and inner.op == "MAX" and (zero(inner.a) or zero(inner.b)):
                return True
        return False

    def finish(self, primary_outputs: Sequence[int]) -> Circuit:
        """Seal the circuit: outputs are primaries followed by ledger aux outs."""
        pairs = []
        for slot, (index, out) in enumerate(zip(self._aux_slots, self._aux_outputs)):
            if out is None:
                raise InvalidWiring(f"aux slot {slot} has no output")
            if not self._is_clamped(out):
                raise InvalidWiring(f"aux output of slot {slot} is not clamped to [0,1]")
            pairs.append((index, out))
        outputs = tuple(primary_outputs) + tuple(p[1] for p in pairs)
        return Circuit(
            input_arity=self._n_primary + len(self._aux_slots),
            nodes=tuple(self._nodes),
            outputs=outputs,
            aux_pairs=tuple(pairs),
        )


# -- serialization -----------------------------------------------------------

FORMAT_HEADER = "FPCIRC 1"


def to_text(circuit: Circuit, box: Optional[Box] = None) -> str:
    lines = [FORMAT_HEADER, f"IN {circuit.input_arity}"]
    for k, g in enumerate(circuit.nodes):
        if g.op == "CONST":
            lines.append(f"#{k} = CONST {format_fraction(g.value)}")
        elif g.op == "INPUT":
            lines.append(f"#{k} = INPUT {g.index}")
        else:
            lines.append(f"#{k} = {g.op}(#{g.a}, #{g.b})")
    lines.append("OUT " + " ".join(f"#{o}" for o in circuit.outputs))
    for slot, node in circuit.aux_pairs:
        lines.append(f"AUX {slot} #{node}")
    if box is not None:
        parts = []
        for l, h in zip(box.lo, box.hi):
            parts.append(format_fraction(l))
            parts.append(format_fraction(h))
        lines.append("BOX " + " ".join(parts))
    return "\n".join(lines) + "\n"


def _parse_ref(tok: str, line_no: int) -> int:
    if not tok.startswith("#"):
        raise FormatError(f"line {line_no}: expected node reference, got {tok!r}")
    try:
        return int(tok[1:])
    except ValueError:
        raise FormatError(f"line {line_no}: bad node reference {tok!r}") from None


def _parse_rational(tok: str, line_no: int) -> Fraction:
    try:
        f = Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"line {line_no}: bad rational {tok!r}") from None
    return f


def from_text(text: str) -> tuple[Circuit, Optional[Box]]:
    """Parse the one-node-per-line text format; whitespace-insensitive."""
    raw_lines = [ln.strip() for ln in text.splitlines()]
    lines = [(i + 1, ln) for i, ln in enumerate(raw_lines) if ln and not ln.startswith("//")]
    if not lines or lines[0][1].split() != FORMAT_HEADER.split():
        raise FormatError("missing FPCIRC 1 header")
    arity = None
    nodes: list[Gate] = []
    outputs: list[int] = []
    aux: list[tuple[int, int]] = []
    box = None
    for line_no, ln in lines[1:]:
        toks = ln.replace("(", " ").replace(")", " ").replace(",", " ").replace("=", " ").split()
        head = toks[0].upper() if toks else ""
        if head == "IN":
            arity = int(toks[1])
        elif head.startswith("#"):
            k = _parse_ref(toks[0], line_no)
            if k != len(nodes):
                raise FormatError(f"line {line_no}: node #{k} out of order")
            op = toks[1].upper()
            if op == "CONST":
                nodes.append(Gate("CONST", value=_parse_rational(toks[2], line_no)))
            elif op == "INPUT":
                nodes.append(Gate("INPUT", index=int(toks[2])))
            elif op in BINARY_OPS:
                a = _parse_ref(toks[2], line_no)
                b = _parse_ref(toks[3], line_no)
                nodes.append(Gate(op, a=a, b=b))
            else:
                raise FormatError(f"line {line_no}: unknown op {op!r}")
        elif head == "OUT":
            outputs = [_parse_ref(t, line_no) for t in toks[1:]]
        elif head == "AUX":
            aux.append((int(toks[1]), _parse_ref(toks[2], line_no)))
        elif head == "BOX":
            vals = [_parse_rational(t, line_no) for t in toks[1:]]
            if len(vals) % 2:
                raise FormatError(f"line {line_no}: BOX needs an even count of rationals")
            box = Box(tuple(vals[0::2]), tuple(vals[1::2]))
        else:
            raise FormatError(f"line {line_no}: unrecognized line {ln!r}")
    if arity is None:
        raise FormatError("missing IN line")
    if not outputs:
        raise FormatError("missing OUT line")
    try:
        circ = Circuit(arity, tuple(nodes), tuple(outputs), tuple(aux))
    except CircuitError as e:
        raise FormatError(str(e)) from None
    if box is not None and box.dim != arity:
        raise FormatError("BOX dimension != input arity")
    return circ, box


def identity_circuit(dim: int = 1) -> Circuit:
    b = CircuitBuilder(dim)
    return Circuit(dim, tuple(b._nodes), tuple(b.inputs))
