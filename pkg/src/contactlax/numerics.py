"""Numerical check that the linear Lax flows commute on exact solutions.

``chi_y = X_f(chi)`` and ``chi_t = X_g(chi)`` say that chi is constant along
the characteristics of ``d_y - X_f`` and ``d_t - X_g`` in (x, p, z, y, t).
When u solves the derived system those two vector fields commute, so
following the y-flow then the t-flow lands where the opposite order does, up
to integrator error.  For a non-solution the mismatch is O(delta^2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .contact import contact_field
from .jetalg import DIRECTIONS, Jet, PPoly, Substitution, var
from .systemgen import MATRIX_DIRECTIONS, QuasiLinearSystem, example1

# about ten ulps of O(1) fiber coordinates; below this a difference is round-off
DEFECT_FLOOR = 1e-15

_FIRST_ORDER = [tuple(1 if k == d else 0 for k in range(4)) for d in range(4)]


class DomainError(ValueError):
    pass


class FlowError(ArithmeticError):
    """Non-finite state encountered while integrating a flow."""

    def __init__(self, message: str, state: "FlowState"):
        super().__init__(f"{message}: {state}")
        self.state = state


@dataclass(frozen=True)
class FlowState:
    x: float
    p: float
    z: float
    y: float = 0.0
    t: float = 0.0

    def fiber(self) -> np.ndarray:
        return np.array([self.x, self.p, self.z])


class FieldSampler:
    """Numeric field ``u(x, y, z, t)`` with its first derivatives.

    ``fn(x, y, z, t)`` returns ``(values, grads)`` where ``grads[i]`` holds
    ``(u^i_x, u^i_y, u^i_z, u^i_t)``.  The callable must be pure.
    """

    def __init__(self, fn: Callable, n_components: int, name: str = "sampler"):
        self.fn = fn
        self.n_components = n_components
        self.name = name

    def __call__(self, x, y, z, t):
        return self.fn(x, y, z, t)

    def values(self, x, y, z, t) -> np.ndarray:
        return np.asarray(self.fn(x, y, z, t)[0], dtype=float)

    def jet_values(self, x, y, z, t) -> Dict[Jet, float]:
        vals, grads = self.fn(x, y, z, t)
        out = {}
        for i in range(self.n_components):
            out[Jet(i)] = vals[i]
            for d in range(4):
                out[Jet(i, _FIRST_ORDER[d])] = grads[i][d]
        return out

    def derivative_error(self, point: Sequence[float], h: float = 1e-4) -> float:
        """Largest gap between supplied derivatives and centered differences at ``point``."""
        point = np.asarray(point, dtype=float)
        _, grads = self.fn(*point)
        worst = 0.0
        for d in range(4):
            step = np.zeros(4)
            step[d] = h
            fd = (self.values(*(point + step)) - self.values(*(point - step))) / (2 * h)
            for i in range(self.n_components):
                worst = max(worst, abs(fd[i] - grads[i][d]))
        return worst


def simple_wave_sampler(scale: float = 1.0) -> FieldSampler:
    """``u = scale * x / (1 - 3t/2)``, ``v = w = 0``, ``q = 3u/2`` over (u, v, w, q).

    With ``scale == 1`` this solves the four-component system of the
    first example (and ``2 u_t = 3 u u_x``); any other scale does not.
    Defined for ``t < 2/3``.
    """

    def fn(x, y, z, t):
        if t >= 2.0 / 3.0:
            raise DomainError(f"simple wave blows up at t = 2/3 (got t = {t})")
        den = 1.0 - 1.5 * t
        u = scale * x / den
        ux = scale / den
        ut = 1.5 * scale * x / den ** 2
        vals = (u, 0.0, 0.0, 1.5 * u)
        zero = (0.0, 0.0, 0.0, 0.0)
        grads = ((ux, 0.0, 0.0, ut), zero, zero, (1.5 * ux, 0.0, 0.0, 1.5 * ut))
        return vals, grads

    name = "simple-wave" if scale == 1.0 else f"simple-wave*{scale}"
    return FieldSampler(fn, 4, name)


def constant_sampler(values: Sequence[float]) -> FieldSampler:
    vals = tuple(float(v) for v in values)
    grads = tuple((0.0, 0.0, 0.0, 0.0) for _ in vals)
    return FieldSampler(lambda x, y, z, t: (vals, grads), len(vals), "constant")


def reduced_example1():
    """First-example f, g with ``w = 0``, ``q = 3u/2``: ``p^2 + u`` and ``p^3 + (3/2) u p + v``."""
    f, g = example1()
    s = Substitution({2: 0, 3: var(0).scale(Fraction(3, 2))})
    return s(f), s(g)


# -- compiled evaluation ----------------------------------------------------------


def compile_ppoly(h: PPoly) -> Callable[[Dict[Jet, float], float], float]:
    """Float evaluator ``(jet_values, p) -> h`` for repeated use in integrators."""
    terms = []
    for k, c in h.items():
        for mono, coeff in c.terms:
            terms.append((k, float(coeff), tuple(mono)))

    def evaluate(point: Dict[Jet, float], p: float) -> float:
        total = 0.0
        for k, coeff, mono in terms:
            v = coeff * p ** k
            for j, e in mono:
                v *= point[j] ** e
            total += v
        return total

    return evaluate


def _compiled_field(h):
    X = contact_field(h)
    return tuple(compile_ppoly(c) for c in X.components())


# -- flows -----------------------------------------------------------------------


def _flow_rhs(field, sampler, direction):
    cx, cp, cz = field

    def rhs(fiber, base):
        x, p, z = fiber
        y, t = base
        jv = sampler.jet_values(x, y, z, t)
        return -np.array([cx(jv, p), cp(jv, p), cz(jv, p)])

    return rhs


def _integrate(field, sampler, st: FlowState, direction: str, delta: float, steps: int) -> FlowState:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if direction not in ("y", "t"):
        raise ValueError("flows run along y or t")
    rhs = _flow_rhs(field, sampler, direction)
    unit = np.array([1.0, 0.0]) if direction == "y" else np.array([0.0, 1.0])
    w = st.fiber()
    base = np.array([st.y, st.t])
    for _ in range(steps):
        k1 = rhs(w, base)
        k2 = rhs(w + 0.5 * delta * k1, base + 0.5 * delta * unit)
        k3 = rhs(w + 0.5 * delta * k2, base + 0.5 * delta * unit)
        k4 = rhs(w + delta * k3, base + delta * unit)
        w = w + delta / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        base = base + delta * unit
        if not np.all(np.isfinite(w)):
            raise FlowError("non-finite state", FlowState(*w, *base))
    return FlowState(float(w[0]), float(w[1]), float(w[2]), float(base[0]), float(base[1]))


def integrate_flow(h, sampler: FieldSampler, st0: FlowState, direction: str, delta: float,
                   steps: int = 1) -> FlowState:
    """Follow the characteristics of ``d_direction - X_h`` for ``steps`` RK4 steps of size ``delta``.

    The base coordinate advances by ``delta * steps`` while
    ``d(x, p, z)/ds = -(cx, cp, cz)`` with the components of ``X_h``
    evaluated on the sampled field.
    """
    return _integrate(_compiled_field(PPoly.coerce(h)), sampler, st0, direction, delta, steps)


def commutation_defect(f, g, sampler: FieldSampler, st0: FlowState, delta: float) -> float:
    """Distance in (x, p, z) between y-then-t and t-then-y flows of length ``delta``."""
    Xf = _compiled_field(PPoly.coerce(f))
    Xg = _compiled_field(PPoly.coerce(g))
    a = _integrate(Xg, sampler, _integrate(Xf, sampler, st0, "y", delta, 1), "t", delta, 1)
    b = _integrate(Xf, sampler, _integrate(Xg, sampler, st0, "t", delta, 1), "y", delta, 1)
    return float(np.linalg.norm(a.fiber() - b.fiber()))


def convergence_order(deltas: Sequence[float], defects: Sequence[float]) -> float:
    """Least-squares slope of log(defect) against log(delta)."""
    deltas = np.asarray(deltas, dtype=float)
    defects = np.asarray(defects, dtype=float)
    if len(deltas) < 3 or len(deltas) != len(defects):
        raise ValueError("need at least three (delta, defect) pairs")
    if np.any(deltas <= 0) or np.any(defects <= 0):
        raise ValueError("deltas and defects must be positive")
    if np.ptp(np.log(deltas)) == 0:
        raise ValueError("deltas must not all be equal")
    return float(np.polyfit(np.log(deltas), np.log(defects), 1)[0])


def defect_sweep(f, g, sampler: FieldSampler, st0: FlowState, deltas: Sequence[float]) -> List[Tuple[float, float]]:
    """``(delta, defect)`` rows with defects floored at ``DEFECT_FLOOR``."""
    return [(d, max(commutation_defect(f, g, sampler, st0, d), DEFECT_FLOOR)) for d in deltas]


def write_csv(rows: Sequence[Tuple[float, float]], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["delta", "defect"])
    for d, e in rows:
        w.writerow([repr(float(d)), repr(float(e))])


# -- residuals -------------------------------------------------------------------


def residual_eval(system: QuasiLinearSystem, sampler: FieldSampler, point: Sequence[float],
                  h_fd: float = 1e-4) -> List[float]:
    """Row residuals at ``point = (x, y, z, t)`` with centered finite differences."""
    point = np.asarray(point, dtype=float)
    vals = sampler.values(*point)
    at = {Jet(i): float(vals[i]) for i in range(system.N)}
    derivs = {}
    for d in "xyzt":
        step = np.zeros(4)
        step[DIRECTIONS.index(d)] = h_fd
        derivs[d] = (sampler.values(*(point + step)) - sampler.values(*(point - step))) / (2 * h_fd)
    out = []
    for r in range(system.M):
        total = 0.0
        for k, d in enumerate(MATRIX_DIRECTIONS):
            for i in range(system.N):
                a = system.matrices[k][r][i]
                if a:
                    total += float(a.eval_numeric(at)) * derivs[d][i]
        out.append(total)
    return out


def lax_test(deltas: Sequence[float], perturb: float = 1.0,
             st0: FlowState = FlowState(1.0, 0.3, 0.0, 0.0, 0.0)) -> Tuple[List[Tuple[float, float]], float]:
    """Defect sweep for the reduced first example on the (optionally scaled) simple wave."""
    f, g = reduced_example1()
    rows = defect_sweep(f, g, simple_wave_sampler(perturb), st0, deltas)
    return rows, convergence_order([d for d, _ in rows], [e for _, e in rows])
