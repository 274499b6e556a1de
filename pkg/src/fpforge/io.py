"""Instance/report file formats.

Instances are strict JSON with rationals as "p/q" strings and circuits embedded
in the standalone text format.  Unknown fields are rejected so that files stay
canonical; serialize(parse(x)) is byte-identical for canonical input.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .circuit import Box, Circuit, CircuitBuilder, FormatError, from_text, to_text
from .pseudogate import Pseudogate, make_pseudogate
from .problems import (
    ADConsumer,
    ADFirm,
    ADMarketSpec,
    BapatSpec,
    CCCSystem,
    CakeSpec,
    ConcaveGameSpec,
    ConcavePlayer,
    ConditionalConstraint,
    ConvexSet,
    GameNF,
    HZSpec,
    KKMSpec,
    PDCFunction,
    StochasticGameSpec,
)
from .optgate import ConvexProgramSpec, CPParams
from .verify import LPInstance

FORMAT_VERSION = 1

KINDS = (
    "nash",
    "concave",
    "ccc",
    "eps_proper",
    "stochastic",
    "cake",
    "kkm",
    "bapat",
    "ad_market",
    "hz",
    "cp",
    "lp",
    "raw_circuit",
)


class ParseError(Exception):
    def __init__(self, msg, line=None, col=None):
        if line is not None:
            msg = f"{msg} (line {line}, column {col})"
        super().__init__(msg)
        self.line, self.col = line, col


class SchemaError(Exception):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass(frozen=True)
class InstanceFile:
    version: int
    kind: str
    spec: object
    raw: dict
    box: Optional[Box] = None  # only for raw_circuit
    extra: dict = field(default_factory=dict)


def _check_keys(d: dict, required, optional, path: str):
    if not isinstance(d, dict):
        raise SchemaError(path, "expected an object")
    for k in d:
        if k not in required and k not in optional:
            raise SchemaError(f"{path}.{k}", "unknown field")
    for k in required:
        if k not in d:
            raise SchemaError(f"{path}.{k}", "missing field")


def _rat(v, path: str) -> Fraction:
    if not isinstance(v, str):
        raise SchemaError(path, "rationals must be 'p/q' strings")
    try:
        return Fraction(v)
    except (ValueError, ZeroDivisionError):
        raise SchemaError(path, f"bad rational {v!r}") from None


def _rat_list(v, path: str) -> tuple[Fraction, ...]:
    if not isinstance(v, list):
        raise SchemaError(path, "expected a list")
    return tuple(_rat(x, f"{path}[{i}]") for i, x in enumerate(v))


def _rat_matrix(v, path: str) -> tuple[tuple[Fraction, ...], ...]:
    if not isinstance(v, list):
        raise SchemaError(path, "expected a list of rows")
    return tuple(_rat_list(row, f"{path}[{i}]") for i, row in enumerate(v))


def _int(v, path: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool):
        raise SchemaError(path, "expected an integer")
    return v


def _circuit(v, path: str, arity=None, outputs=None) -> Circuit:
    if not isinstance(v, str):
        raise SchemaError(path, "circuits are embedded as text-format strings")
    try:
        circ, _ = from_text(v)
    except FormatError as e:
        raise SchemaError(path, f"bad circuit: {e}") from None
    if arity is not None and circ.input_arity != arity:
        raise SchemaError(path, f"circuit arity {circ.input_arity}, expected {arity}")
    if outputs is not None and len(circ.outputs) != outputs:
        raise SchemaError(path, f"circuit outputs {len(circ.outputs)}, expected {outputs}")
    return circ


def circuit_as_pseudogate(circ: Circuit) -> Pseudogate:
    """Wrap a plain circuit as an aux-free pseudogate."""
    b = CircuitBuilder(circ.input_arity)
    refs = b.splice(circ, b.inputs)
    return make_pseudogate(b, refs)


def _nested_rats(v, path: str):
    if isinstance(v, list):
        return [_nested_rats(x, f"{path}[{i}]") for i, x in enumerate(v)]
    return _rat(v, path)


# -- per-kind parsers ---------------------------------------------------------


def _parse_nash(d: dict, path: str) -> GameNF:
    _check_keys(d, ("actions", "payoffs"), (), path)
    actions = [_int(a, f"{path}.actions[{i}]") for i, a in enumerate(d["actions"])]
    if not actions or any(a < 1 for a in actions):
        raise SchemaError(f"{path}.actions", "need positive action counts")
    payoffs = _nested_rats(d["payoffs"], f"{path}.payoffs")
    try:
        return GameNF.from_nested(actions, payoffs)
    except Exception as e:
        raise SchemaError(f"{path}.payoffs", str(e)) from None


def _parse_convex_set(d: dict, dim: int, path: str) -> ConvexSet:
    _check_keys(d, (), ("eq_A", "eq_b", "inequalities"), path)
    eq_A = _rat_matrix(d.get("eq_A", []), f"{path}.eq_A")
    eq_b = _rat_list(d.get("eq_b", []), f"{path}.eq_b")
    ineq, grads = [], []
    for i, entry in enumerate(d.get("inequalities", [])):
        p = f"{path}.inequalities[{i}]"
        _check_keys(entry, ("value", "gradient"), (), p)
        ineq.append(_circuit(entry["value"], f"{p}.value", arity=dim, outputs=1))
        grads.append(
            circuit_as_pseudogate(
                _circuit(entry["gradient"], f"{p}.gradient", arity=dim, outputs=dim)
            )
        )
    return ConvexSet(dim, eq_A, eq_b, tuple(ineq), tuple(grads))


def _parse_pdc(d: dict, dim: int, path: str) -> PDCFunction:
    _check_keys(d, ("pieces",), (), path)
    pieces = []
    for i, entry in enumerate(d["pieces"]):
        p = f"{path}.pieces[{i}]"
        _check_keys(entry, ("value", "gradient"), (), p)
        pieces.append(
            (
                _circuit(entry["value"], f"{p}.value", arity=dim, outputs=1),
                _circuit(entry["gradient"], f"{p}.gradient", arity=dim, outputs=dim),
            )
        )
    return PDCFunction(tuple(pieces))


def _parse_payload(kind: str, d: dict, path: str):
    if kind in ("nash",):
        return _parse_nash(d, path)
    if kind == "eps_proper":
        _check_keys(d, ("actions", "payoffs", "epsilon"), (), path)
        game = _parse_nash({"actions": d["actions"], "payoffs": d["payoffs"]}, path)
        eps = _rat(d["epsilon"], f"{path}.epsilon")
        if not 0 < eps < 1:
            raise SchemaError(f"{path}.epsilon", "must lie in (0, 1)")
        return (game, eps)
    if kind == "stochastic":
        _check_keys(d, ("states", "actions", "discount", "payoffs", "transitions"), (), path)
        S = _int(d["states"], f"{path}.states")
        actions = tuple(_int(a, f"{path}.actions[{i}]") for i, a in enumerate(d["actions"]))
        lam = _rat(d["discount"], f"{path}.discount")
        import math

        total = math.prod(actions)
        payoffs = []
        for i, per_player in enumerate(d["payoffs"]):
            tables = []
            for s, tensor in enumerate(per_player):
                from .problems import flatten_tensor

                tables.append(flatten_tensor(_nested_rats(tensor, f"{path}.payoffs[{i}][{s}]"), actions))
            payoffs.append(tuple(tables))
        transitions = []
        for s, tensor in enumerate(d["transitions"]):
            flat = _nested_rats(tensor, f"{path}.transitions[{s}]")
            from .problems import flatten_tensor

            rows = flatten_tensor(flat, tuple(actions) + (S,))
            per_profile = tuple(
                tuple(rows[p * S : (p + 1) * S]) for p in range(total)
            )
            transitions.append(per_profile)
        try:
            return StochasticGameSpec(S, actions, tuple(payoffs), tuple(transitions), lam)
        except Exception as e:
            raise SchemaError(path, str(e)) from None
    if kind == "cake":
        _check_keys(d, ("agents", "valuations"), (), path)
        n = _int(d["agents"], f"{path}.agents")
        rows = []
        for i, row in enumerate(d["valuations"]):
            rows.append(
                tuple(
                    _circuit(c, f"{path}.valuations[{i}][{j}]", arity=n, outputs=1)
                    for j, c in enumerate(row)
                )
            )
        try:
            return CakeSpec(n, tuple(rows))
        except Exception as e:
            raise SchemaError(f"{path}.valuations", str(e)) from None
    if kind == "kkm":
        _check_keys(d, ("functions",), (), path)
        fns = [
            _circuit(c, f"{path}.functions[{i}]", arity=len(d["functions"]), outputs=1)
            for i, c in enumerate(d["functions"])
        ]
        return KKMSpec.of(fns)
    if kind == "bapat":
        _check_keys(d, ("maps",), (), path)
        n = len(d["maps"])
        maps = [
            _circuit(c, f"{path}.maps[{i}]", arity=n, outputs=n)
            for i, c in enumerate(d["maps"])
        ]
        return BapatSpec(tuple(maps))
    if kind == "hz":
        _check_keys(d, ("utilities",), (), path)
        return HZSpec(_rat_matrix(d["utilities"], f"{path}.utilities"))
    if kind == "ad_market":
        _check_keys(
            d, ("commodities", "production_bound", "consumers", "firms"), (), path
        )
        ell = _int(d["commodities"], f"{path}.commodities")
        consumers = []
        for i, cd in enumerate(d["consumers"]):
            p = f"{path}.consumers[{i}]"
            _check_keys(
                cd,
                ("endowment", "lower_bound", "shares", "utility", "constraints"),
                ("witness",),
                p,
            )
            consumers.append(
                ADConsumer(
                    endowment=_rat_list(cd["endowment"], f"{p}.endowment"),
                    lower_bound=_rat_list(cd["lower_bound"], f"{p}.lower_bound"),
                    shares=_rat_list(cd["shares"], f"{p}.shares"),
                    utility=_parse_pdc(cd["utility"], ell, f"{p}.utility"),
                    consumption_set=_parse_convex_set(cd["constraints"], ell, f"{p}.constraints"),
                    interior_witness=(
                        _rat_list(cd["witness"], f"{p}.witness") if "witness" in cd else None
                    ),
                )
            )
        firms = []
        for j, fd in enumerate(d["firms"]):
            p = f"{path}.firms[{j}]"
            _check_keys(fd, ("constraints",), (), p)
            firms.append(ADFirm(_parse_convex_set(fd["constraints"], ell, f"{p}.constraints")))
        try:
            return ADMarketSpec(
                ell,
                tuple(consumers),
                tuple(firms),
                _rat(d["production_bound"], f"{path}.production_bound"),
            )
        except Exception as e:
            raise SchemaError(path, str(e)) from None
    if kind == "concave":
        _check_keys(d, ("players",), (), path)
        dims = []
        for i, pd in enumerate(d["players"]):
            if not isinstance(pd, dict) or "dim" not in pd:
                raise SchemaError(f"{path}.players[{i}].dim", "missing field")
            dims.append(_int(pd["dim"], f"{path}.players[{i}].dim"))
        total = sum(dims)
        players = []
        for i, pd in enumerate(d["players"]):
            p = f"{path}.players[{i}]"
            _check_keys(
                pd,
                ("dim", "radius", "utility_supergradient"),
                ("eq_A", "eq_b", "inequalities"),
                p,
            )
            m_i = dims[i]
            ineq, grads = [], []
            for j, entry in enumerate(pd.get("inequalities", [])):
                pe = f"{p}.inequalities[{j}]"
                _check_keys(entry, ("value", "gradient"), (), pe)
                ineq.append(_circuit(entry["value"], f"{pe}.value", arity=m_i, outputs=1))
                grads.append(
                    circuit_as_pseudogate(
                        _circuit(entry["gradient"], f"{pe}.gradient", arity=m_i, outputs=m_i)
                    )
                )
            players.append(
                ConcavePlayer(
                    m=m_i,
                    radius=_rat(pd["radius"], f"{p}.radius"),
                    eq_A=_rat_matrix(pd.get("eq_A", []), f"{p}.eq_A"),
                    eq_b=_rat_list(pd.get("eq_b", []), f"{p}.eq_b"),
                    ineq=tuple(ineq),
                    ineq_grad=tuple(grads),
                    util_supergrad=circuit_as_pseudogate(
                        _circuit(
                            pd["utility_supergradient"],
                            f"{p}.utility_supergradient",
                            arity=total,
                            outputs=m_i,
                        )
                    ),
                )
            )
        return ConcaveGameSpec(tuple(players))
    if kind == "ccc":
        _check_keys(d, ("variables", "radius", "domain", "constraints"), (), path)
        n = _int(d["variables"], f"{path}.variables")
        dom = _parse_convex_set(d["domain"], n, f"{path}.domain")
        pairs = []
        for i, entry in enumerate(d["constraints"]):
            p = f"{path}.constraints[{i}]"
            _check_keys(entry, ("condition", "value", "gradient"), (), p)
            pairs.append(
                ConditionalConstraint(
                    _circuit(entry["condition"], f"{p}.condition", arity=n, outputs=1),
                    _circuit(entry["value"], f"{p}.value", arity=n, outputs=1),
                    circuit_as_pseudogate(
                        _circuit(entry["gradient"], f"{p}.gradient", arity=n, outputs=n)
                    ),
                )
            )
        return CCCSystem(
            n,
            _rat(d["radius"], f"{path}.radius"),
            dom.eq_A,
            dom.eq_b,
            dom.ineq,
            dom.ineq_grad,
            tuple(pairs),
        )
    if kind == "cp":
        _check_keys(
            d, ("variables", "g", "grad_f", "grad_g", "w", "A", "b", "R"), (), path
        )
        n = _int(d["variables"], f"{path}.variables")
        w = _rat_list(d["w"], f"{path}.w")
        A = _rat_matrix(d["A"], f"{path}.A")
        b = _rat_list(d["b"], f"{path}.b")
        s = len(w)
        g = [
            _circuit(c, f"{path}.g[{i}]", arity=n + s, outputs=1)
            for i, c in enumerate(d["g"])
        ]
        grad_f = circuit_as_pseudogate(
            _circuit(d["grad_f"], f"{path}.grad_f", arity=n + s, outputs=n)
        )
        grad_g = [
            circuit_as_pseudogate(_circuit(c, f"{path}.grad_g[{i}]", arity=n + s, outputs=n))
            for i, c in enumerate(d["grad_g"])
        ]
        spec = ConvexProgramSpec.normalize(n, len(A), len(g), s, g, grad_f, grad_g)
        params = CPParams(w, A, b, _rat(d["R"], f"{path}.R"))
        return (spec, params)
    if kind == "lp":
        _check_keys(d, ("c", "A", "b", "C", "d", "R"), (), path)
        return LPInstance(
            _rat_list(d["c"], f"{path}.c"),
            _rat_matrix(d["A"], f"{path}.A"),
            _rat_list(d["b"], f"{path}.b"),
            _rat_matrix(d["C"], f"{path}.C"),
            _rat_list(d["d"], f"{path}.d"),
            _rat(d["R"], f"{path}.R"),
        )
    if kind == "raw_circuit":
        _check_keys(d, ("circuit",), ("box",), path)
        try:
            circ, embedded_box = from_text(d["circuit"])
        except FormatError as e:
            raise SchemaError(f"{path}.circuit", str(e)) from None
        box = embedded_box
        if "box" in d:
            pairs = _rat_matrix(d["box"], f"{path}.box")
            if any(len(p) != 2 for p in pairs):
                raise SchemaError(f"{path}.box", "expected [lo, hi] pairs")
            box = Box(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))
        return (circ, box)
    raise SchemaError(path, f"unsupported kind {kind!r}")


def parse_instance(data) -> InstanceFile:
    """Strict parse: unknown fields are rejected, rationals must be strings."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    if not isinstance(raw, dict):
        raise SchemaError("$", "top level must be an object")
    if "version" not in raw or "kind" not in raw:
        raise SchemaError("$", "missing version/kind")
    version = _int(raw["version"], "$.version")
    if version != FORMAT_VERSION:
        raise SchemaError("$.version", f"unrecognized version {version}")
    kind = raw["kind"]
    if kind not in KINDS:
        raise SchemaError("$.kind", f"unknown kind {kind!r}")
    payload = {k: v for k, v in raw.items() if k not in ("version", "kind")}
    spec = _parse_payload(kind, payload, "$")
    box = None
    if kind == "raw_circuit":
        spec, box = spec
    return InstanceFile(version, kind, spec, raw, box)


def serialize_instance(instance: InstanceFile) -> bytes:
    return canonical_json(instance.raw)


def canonical_json(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# -- run reports ---------------------------------------------------------------


@dataclass(frozen=True)
class RunReport:
    instance_digest: str
    config: dict
    fixed_point: dict
    verification: Optional[dict]
    timing_s: float

    def to_json(self) -> bytes:
        return canonical_json(
            {
                "instance_digest": self.instance_digest,
                "config": self.config,
                "fixed_point": self.fixed_point,
                "verification": self.verification,
                "timing_s": self.timing_s,
            }
        )

    @staticmethod
    def from_json(data) -> "RunReport":
        raw = json.loads(data)
        return RunReport(
            raw["instance_digest"],
            raw["config"],
            raw["fixed_point"],
            raw.get("verification"),
            raw.get("timing_s", 0.0),
        )


def parse_point_file(text: str) -> list[float]:
    """Whitespace-separated decimals or p/q rationals."""
    out = []
    for tok in text.split():
        try:
            out.append(float(Fraction(tok)) if "/" in tok else float(tok))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad number {tok!r}") from None
    return out
