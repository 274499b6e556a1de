"""Best-effort fixed-point location on box domains.

Damped iteration with safeguarded Anderson acceleration plus multistart, and an
exhaustive grid oracle for systems of total dimension <= 3.  The paper-side
objects only promise that fixed points exist; non-convergence here is a
reported outcome, not an error.

Circuits are lowered to a flat tape that a numba-jitted kernel interprets; the
pure-Python fallback has identical semantics.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .circuit import Box, Circuit, DivisionByZero

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        return deco if not (args and callable(args[0])) else args[0]


class DivergedToNaN(Exception):
    pass


class DimensionTooLarge(Exception):
    pass


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.5
    tol: float = 1e-9
    max_iters: int = 200_000
    restarts: int = 16
    seed: int = 0
    anderson_memory: int = 5
    grid_resolution: int = 101

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.anderson_memory < 0 or self.restarts < 1:
            raise ValueError("bad solver configuration")


@dataclass(frozen=True)
class FixedPointReport:
    point: np.ndarray
    residual: float
    iterations: int
    converged: bool
    restart_index: int = 0
    trace: tuple[float, ...] = ()


# -- circuit lowering ---------------------------------------------------------

OP_CONST, OP_INPUT, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_MAX, OP_MIN = range(8)
_OPCODE = {
    "CONST": OP_CONST,
    "INPUT": OP_INPUT,
    "ADD": OP_ADD,
    "SUB": OP_SUB,
    "MUL": OP_MUL,
    "DIV": OP_DIV,
    "MAX": OP_MAX,
    "MIN": OP_MIN,
}


@dataclass(frozen=True)
class Tape:
    ops: np.ndarray
    a: np.ndarray
    b: np.ndarray
    consts: np.ndarray
    out: np.ndarray
    arity: int


def lower(circuit: Circuit) -> Tape:
    n = len(circuit.nodes)
    ops = np.zeros(n, dtype=np.int64)
    a = np.zeros(n, dtype=np.int64)
    b = np.zeros(n, dtype=np.int64)
    consts = np.zeros(n, dtype=np.float64)
    for k, g in enumerate(circuit.nodes):
        ops[k] = _OPCODE[g.op]
        if g.op == "CONST":
            consts[k] = g.value.numerator / g.value.denominator
        elif g.op == "INPUT":
            a[k] = g.index
        else:
            a[k], b[k] = g.a, g.b
    out = np.asarray(circuit.outputs, dtype=np.int64)
    return Tape(ops, a, b, consts, out, circuit.input_arity)


def _box_arrays(box: Box) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([float(v) for v in box.lo])
    hi = np.array([float(v) for v in box.hi])
    return lo, hi


# -- kernels (numba-jitted when available) ------------------------------------


def _apply_py(ops, ia, ib, cv, out, x, vals, y):
    n = ops.shape[0]
    for j in range(n):
        op = ops[j]
        if op == 0:
            vals[j] = cv[j]
        elif op == 1:
            vals[j] = x[ia[j]]
        elif op == 2:
            vals[j] = vals[ia[j]] + vals[ib[j]]
        elif op == 3:
            vals[j] = vals[ia[j]] - vals[ib[j]]
        elif op == 4:
            vals[j] = vals[ia[j]] * vals[ib[j]]
        elif op == 5:
            den = vals[ib[j]]
            if -1e-300 < den < 1e-300:
                return j
            vals[j] = vals[ia[j]] / den
        elif op == 6:
            va, vb = vals[ia[j]], vals[ib[j]]
            vals[j] = va if va >= vb else vb
        else:
            va, vb = vals[ia[j]], vals[ib[j]]
            vals[j] = va if va <= vb else vb
    for t in range(out.shape[0]):
        y[t] = vals[out[t]]
    return -1


def _iterate_py(
    ops, ia, ib, cv, out, lo, hi, x0, alpha, tol, max_iters, mem, stride, aa_restart
):
    d = x0.shape[0]
    x = x0.copy()
    for r in range(d):
        if x[r] < lo[r]:
            x[r] = lo[r]
        elif x[r] > hi[r]:
            x[r] = hi[r]
    vals = np.empty(ops.shape[0])
    y = np.empty(d)
    f = np.empty(d)
    cand = np.empty(d)
    fc = np.empty(d)
    dX = np.zeros((mem if mem > 0 else 1, d))
    dF = np.zeros((mem if mem > 0 else 1, d))
    x_prev = np.zeros(d)
    f_prev = np.zeros(d)
    hist = 0
    since_restart = 0
    best_res = np.inf
    trace = np.empty(max_iters // stride + 2)
    tcount = 0
    res = np.inf
    status = 1
    it = 0
    while it < max_iters:
        it += 1
        bad = _apply(ops, ia, ib, cv, out, x, vals, y)
        if bad >= 0:
            return x, res, it, 3, trace[:tcount], bad
        res = 0.0
        ok = True
        for r in range(d):
            fr = y[r] - x[r]
            f[r] = fr
            if not np.isfinite(fr):
                ok = False
            else:
                af = fr if fr >= 0 else -fr
                if af > res:
                    res = af
        if not ok:
            status = 2
            break
        if it % stride == 0:
            trace[tcount] = res
            tcount += 1
        if res <= tol:
            status = 0
            break
        if res < 0.9 * best_res:
            best_res = res
            since_restart = 0
        else:
            since_restart += 1
        if aa_restart > 0 and since_restart >= aa_restart:
            # stagnation: drop the acceleration history (restarted Anderson)
            # so a stale local model cannot lock the iteration into a cycle
            hist = 0
            since_restart = 0
            best_res = res
        if it > 1 and mem > 0:
            if hist < mem:
                hist += 1
            for i in range(hist - 1, 0, -1):
                dX[i] = dX[i - 1]
                dF[i] = dF[i - 1]
            dX[0] = x - x_prev
            dF[0] = f - f_prev
        x_prev[:] = x
        f_prev[:] = f
        accepted = False
        if hist > 0:
            h = hist
            G = np.empty((h, h))
            rhs = np.empty(h)
            for i in range(h):
                for j2 in range(i, h):
                    s = 0.0
                    for r in range(d):
                        s += dF[i, r] * dF[j2, r]
                    G[i, j2] = s
                    G[j2, i] = s
                s = 0.0
                for r in range(d):
                    s += dF[i, r] * f[r]
                rhs[i] = s
            tr = 0.0
            for i in range(h):
                tr += G[i, i]
            lam = 1e-12 * (tr if tr > 0 else 1.0)
            for i in range(h):
                G[i, i] += lam
            gam = np.linalg.solve(G, rhs)
            finite = True
            for i in range(h):
                if not np.isfinite(gam[i]):
                    finite = False
            if finite:
                for r in range(d):
                    v = x[r] + alpha * f[r]
                    for i in range(h):
                        v -= (dX[i, r] + alpha * dF[i, r]) * gam[i]
                    if v < lo[r]:
                        v = lo[r]
                    elif v > hi[r]:
                        v = hi[r]
                    cand[r] = v
                bad = _apply(ops, ia, ib, cv, out, cand, vals, fc)
                if bad < 0:
                    rc = 0.0
                    okc = True
                    for r in range(d):
                        fr = fc[r] - cand[r]
                        if not np.isfinite(fr):
                            okc = False
                            break
                        af = fr if fr >= 0 else -fr
                        if af > rc:
                            rc = af
                    if okc and rc < res:
                        for r in range(d):
                            x[r] = cand[r]
                        accepted = True
        if not accepted:
            # rejected AA steps fall back to plain damping; the history is kept
            for r in range(d):
                v = x[r] + alpha * f[r]
                if v < lo[r]:
                    v = lo[r]
                elif v > hi[r]:
                    v = hi[r]
                x[r] = v
    return x, res, it, status, trace[:tcount], -1


def _residual_batch_py(ops, ia, ib, cv, out, pts, res):
    npts = pts.shape[0]
    d = pts.shape[1]
    vals = np.empty(ops.shape[0])
    y = np.empty(d)
    for p in range(npts):
        bad = _apply(ops, ia, ib, cv, out, pts[p], vals, y)
        if bad >= 0:
            res[p] = np.inf
            continue
        m = 0.0
        for r in range(d):
            fr = y[r] - pts[p, r]
            af = fr if fr >= 0 else -fr
            if af > m:
                m = af
        res[p] = m


def _eval_batch_py(ops, ia, ib, cv, out, pts, outs):
    npts = pts.shape[0]
    vals = np.empty(ops.shape[0])
    y = np.empty(out.shape[0])
    for p in range(npts):
        bad = _apply(ops, ia, ib, cv, out, pts[p], vals, y)
        if bad >= 0:
            for t in range(out.shape[0]):
                outs[p, t] = np.nan
            continue
        for t in range(out.shape[0]):
            outs[p, t] = y[t]


if HAVE_NUMBA:
    _apply = njit(cache=True, nogil=True)(_apply_py)
    _iterate_kernel = njit(cache=True, nogil=True)(_iterate_py)
    _residual_batch = njit(cache=True, nogil=True)(_residual_batch_py)
    _eval_batch = njit(cache=True, nogil=True)(_eval_batch_py)
else:  # pragma: no cover
    _apply = _apply_py
    _iterate_kernel = _iterate_py
    _residual_batch = _residual_batch_py
    _eval_batch = _eval_batch_py


def eval_batch(circuit: Circuit, points: np.ndarray) -> np.ndarray:
    """Evaluate the circuit at many points at once; rows of NaN mark div-by-zero."""
    tape = lower(circuit)
    pts = np.ascontiguousarray(points, dtype=np.float64)
    outs = np.empty((pts.shape[0], len(circuit.outputs)))
    _eval_batch(tape.ops, tape.a, tape.b, tape.consts, tape.out, pts, outs)
    return outs


# -- public API ----------------------------------------------------------------


def _self_map_check(circuit: Circuit, domain: Box) -> None:
    if domain.dim != circuit.input_arity:
        raise ValueError("domain dimension != circuit arity")
    if len(circuit.outputs) != circuit.input_arity:
        raise ValueError("circuit is not a self-map: outputs != inputs")


def residual_at(circuit: Circuit, point: Sequence[float]) -> float:
    """Independent recomputation of ||F(x) - x||_inf."""
    tape = lower(circuit)
    pts = np.asarray([point], dtype=np.float64)
    res = np.empty(1)
    _residual_batch(tape.ops, tape.a, tape.b, tape.consts, tape.out, pts, res)
    return float(res[0])


#: restarted-Anderson periods: the history is dropped this often so a stale
#: local model cannot lock the iteration into a limit cycle; restarts cycle
#: through the periods so at least one schedule cracks each cycle
AA_RESTART_PERIODS = (53, 137, 389, 997)


def iterate(
    circuit: Circuit,
    domain: Box,
    config: SolverConfig = SolverConfig(),
    x0: Optional[Sequence[float]] = None,
    restart_index: int = 0,
) -> FixedPointReport:
    """Damped fixed-point iteration, clamped to the box each step."""
    _self_map_check(circuit, domain)
    tape = lower(circuit)
    lo, hi = _box_arrays(domain)
    if x0 is None:
        x0 = 0.5 * (lo + hi)
    x0 = np.asarray(x0, dtype=np.float64)
    stride = max(1, config.max_iters // 256)
    x, res, iters, status, trace, badnode = _iterate_kernel(
        tape.ops,
        tape.a,
        tape.b,
        tape.consts,
        tape.out,
        lo,
        hi,
        x0,
        config.alpha,
        config.tol,
        config.max_iters,
        config.anderson_memory,
        stride,
        AA_RESTART_PERIODS[restart_index % len(AA_RESTART_PERIODS)],
    )
    if status == 2:
        raise DivergedToNaN(f"non-finite value after {iters} iterations")
    if status == 3:
        raise DivisionByZero(int(badnode))
    final = residual_at(circuit, x)
    return FixedPointReport(
        point=x,
        residual=final,
        iterations=int(iters),
        converged=final <= config.tol,
        restart_index=restart_index,
        trace=tuple(float(v) for v in trace),
    )


def _worker_count(restarts: int) -> int:
    workers = min(os.cpu_count() or 1, restarts)
    env = os.environ.get("FPF_THREADS")
    if env is not None:
        try:
            workers = min(workers, max(1, int(env)))
        except ValueError:
            pass
    return workers


def multistart(
    circuit: Circuit, domain: Box, config: SolverConfig = SolverConfig()
) -> FixedPointReport:
    """Seeded uniform restarts; deterministic minimum-residual merge."""
    _self_map_check(circuit, domain)
    lo, hi = _box_arrays(domain)
    rng = np.random.default_rng(config.seed)
    starts = rng.uniform(0.0, 1.0, size=(config.restarts, domain.dim)) * (hi - lo) + lo
    workers = _worker_count(config.restarts)

    def run(i: int) -> FixedPointReport:
        return iterate(circuit, domain, config, x0=starts[i], restart_index=i)

    if workers == 1:
        reports = [run(i) for i in range(config.restarts)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, range(config.restarts)))
    return min(reports, key=lambda r: (r.residual, r.restart_index))


def grid_fixed_points(
    circuit: Circuit,
    domain: Box,
    resolution: Optional[int] = None,
    config: SolverConfig = SolverConfig(),
) -> list[np.ndarray]:
    """Exhaustive oracle: residual sweep plus per-coordinate bisection refinement.

    Only for total dimension <= 3.  Returns all refined local residual minima
    with residual <= 10 * tol.
    """
    _self_map_check(circuit, domain)
    d = domain.dim
    if d > 3:
        raise DimensionTooLarge(f"grid oracle limited to dimension 3, got {d}")
    resolution = resolution or config.grid_resolution
    tape = lower(circuit)
    lo, hi = _box_arrays(domain)
    axes = [np.linspace(lo[i], hi[i], resolution) for i in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    res = np.empty(pts.shape[0])
    _residual_batch(tape.ops, tape.a, tape.b, tape.consts, tape.out, pts, res)
    grid = res.reshape([resolution] * d)

    def neighbors(idx):
        for dim_i in range(d):
            for step in (-1, 1):
                j = list(idx)
                j[dim_i] += step
                if 0 <= j[dim_i] < resolution:
                    yield tuple(j)

    h0 = (hi - lo) / (resolution - 1) if resolution > 1 else (hi - lo)
    out: list[np.ndarray] = []
    it = np.ndindex(*([resolution] * d))
    for idx in it:
        v = grid[idx]
        if not np.isfinite(v):
            continue
        if any(grid[nb] < v for nb in neighbors(idx)):
            continue
        point = np.array([axes[i][idx[i]] for i in range(d)])
        point, value = _refine(tape, point, h0, lo, hi)
        if value <= 10 * config.tol:
            out.append(point)
    return out


def _refine(tape: Tape, point: np.ndarray, h0: np.ndarray, lo, hi, rounds: int = 60):
    """Coordinate bisection: shrink a bracket around the residual minimum."""
    d = point.shape[0]
    x = point.copy()
    h = h0.astype(np.float64).copy()
    buf = np.empty((1, d))
    res = np.empty(1)

    def val(p):
        buf[0] = p
        _residual_batch(tape.ops, tape.a, tape.b, tape.consts, tape.out, buf, res)
        return res[0]

    best = val(x)
    for _ in range(rounds):
        improved = False
        for i in range(d):
            if h[i] == 0.0:
                continue
            for sign in (-1.0, 1.0):
                trial = x.copy()
                trial[i] = min(max(trial[i] + sign * h[i], lo[i]), hi[i])
                v = val(trial)
                if v < best:
                    best, x = v, trial
                    improved = True
        if not improved:
            h *= 0.5
        if max(h) < 1e-15:
            break
    return x, best
