"""Quasi-linear systems from contact Lax pairs.

The compatibility condition ``f_t - g_y + {f, g}_L = 0`` of the pair
``psi_y = psi_z f(u, p)``, ``psi_t = psi_z g(u, p)`` is split in powers of ``p``;
each coefficient is linear in the first-order jets and gives one row of
``A0 u_t + A1 u_x + A2 u_y + A3 u_z = 0``.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .contact import apply_field, contact_bracket, contact_field
from .jetalg import (
    _mono_mul,
    DIRECTIONS,
    ONE,
    P,
    ZERO,
    DiffPolynomial,
    Jet,
    PPoly,
    Substitution,
    jet,
    var,
)

# matrix index -> direction of the jet it multiplies
MATRIX_DIRECTIONS = ("t", "x", "y", "z")
_MATRIX_OF = {d: k for k, d in enumerate(MATRIX_DIRECTIONS)}


class SystemError_(ValueError):
    pass


class JetOrderError(SystemError_):
    """Input to a construction contains derivative jets where only order 0 is allowed."""


class NotSquare(SystemError_):
    pass


class Singular(SystemError_):
    pass


class ShapeMismatch(SystemError_):
    pass


class NotQuasiLinear(SystemError_):
    """Expression is not linear homogeneous in first-order jets with order-0 coefficients."""


def _require_order0(*hs):
    for h in hs:
        if PPoly.coerce(h).max_order() > 0:
            raise JetOrderError("f and g may contain only order-0 jets (the dependent variables)")


def _infer_variables(n: int) -> Tuple[str, ...]:
    return tuple(f"u{i + 1}" for i in range(n))


# -- system type ---------------------------------------------------------------


def _content(coeffs) -> Fraction:
    """Positive rational c with every coefficient/c an integer and their gcd 1."""
    nums, dens = [], []
    for c in coeffs:
        c = Fraction(c)
        nums.append(abs(c.numerator))
        dens.append(c.denominator)
    g = 0
    for n in nums:
        g = math.gcd(g, n)
    lcm = 1
    for d in dens:
        lcm = lcm * d // math.gcd(lcm, d)
    return Fraction(g, lcm)


def normalize_expression(e: DiffPolynomial) -> DiffPolynomial:
    """Primitive integer form with a positive leading coefficient (printing order)."""
    if e.is_zero():
        return e
    c = _content(c for _, c in e.terms)
    lead = e.terms[0][1]
    if lead < 0:
        c = -c
    return e.scale(1 / c)


@dataclass(frozen=True)
class QuasiLinearSystem:
    """``A0 u_t + A1 u_x + A2 u_y + A3 u_z = 0`` with M rows and N variables.

    ``matrices[k][row][col]`` holds A_k; ``origins[row]`` is the power of p the
    row came from (or an equation index for systems built by hand).
    """

    variables: Tuple[str, ...]
    matrices: Tuple[Tuple[Tuple[DiffPolynomial, ...], ...], ...]
    origins: Tuple[int, ...]
    provenance: Optional[dict] = field(default=None, compare=False)

    @property
    def M(self) -> int:
        return len(self.origins)

    @property
    def N(self) -> int:
        return len(self.variables)

    def matrix(self, direction_or_index) -> List[List[DiffPolynomial]]:
        k = direction_or_index if isinstance(direction_or_index, int) else _MATRIX_OF[direction_or_index]
        return [list(r) for r in self.matrices[k]]

    @property
    def A0(self):
        return self.matrix(0)

    @property
    def A1(self):
        return self.matrix(1)

    @property
    def A2(self):
        return self.matrix(2)

    @property
    def A3(self):
        return self.matrix(3)

    def row_expression(self, row: int) -> DiffPolynomial:
        """Reassemble row ``row`` as a differential polynomial."""
        out = ZERO
        for k, d in enumerate(MATRIX_DIRECTIONS):
            for i in range(self.N):
                a = self.matrices[k][row][i]
                if a:
                    out = out + a * var(i, d)
        return out

    def equations(self) -> List[DiffPolynomial]:
        return [self.row_expression(r) for r in range(self.M)]

    def row_scan(self, row: int):
        """Entries of a row in the fixed column scan A0, A1, A2, A3 by variable."""
        for k in range(4):
            for i in range(self.N):
                yield self.matrices[k][row][i]

    @classmethod
    def from_equations(cls, equations: Sequence[DiffPolynomial], variables: Sequence[str],
                       origins: Optional[Sequence[int]] = None, provenance=None,
                       drop_zero: bool = True) -> "QuasiLinearSystem":
        """Read the coefficient matrices off expressions linear in first-order jets."""
        variables = tuple(variables)
        n = len(variables)
        if origins is None:
            origins = range(len(equations))
        rows, origs = [], []
        for e, o in zip(equations, origins):
            if drop_zero and e.is_zero():
                continue
            mats = [[ZERO] * n for _ in range(4)]
            for mono, c in e.terms:
                first = [(j, x) for j, x in mono if j.order >= 1]
                if (len(first) != 1 or first[0][1] != 1 or first[0][0].order != 1
                        or any(j.order > 1 for j, _ in mono)):
                    raise NotQuasiLinear(f"term {mono!r} is not (order-0 coefficient) x (first-order jet)")
                j = first[0][0]
                if j.component >= n:
                    raise NotQuasiLinear(f"jet {j!r} outside the variable list")
                k = _MATRIX_OF[DIRECTIONS[j.multi_index.index(1)]]
                rest = tuple((jj, x) for jj, x in mono if jj != j)
                mats[k][j.component] = mats[k][j.component] + DiffPolynomial._raw({rest: c})
            rows.append(mats)
            origs.append(o)
        matrices = tuple(
            tuple(tuple(r[k]) for r in rows) for k in range(4)
        )
        return cls(variables, matrices, tuple(origs), provenance)

    def canonical(self) -> "QuasiLinearSystem":
        """Rows sorted by origin; each row primitive with positive first scanned coefficient."""
        eqs = []
        for r in sorted(range(self.M), key=lambda r: self.origins[r]):
            entries = [a for a in self.row_scan(r) if a]
            coeffs = [c for a in entries for _, c in a.terms]
            c = _content(coeffs)
            if entries and entries[0].terms[0][1] < 0:
                c = -c
            eqs.append((self.row_expression(r).scale(1 / c), self.origins[r]))
        return QuasiLinearSystem.from_equations(
            [e for e, _ in eqs], self.variables, [o for _, o in eqs], self.provenance
        )

    def same_as(self, other: "QuasiLinearSystem") -> bool:
        """Exact equality after canonicalization (variables, rows, origins)."""
        a, b = self.canonical(), other.canonical()
        return a.variables == b.variables and a.matrices == b.matrices and a.origins == b.origins

    def drop_column_block(self, direction: str) -> "QuasiLinearSystem":
        """Zero the matrix multiplying ``u_direction`` and drop rows that vanish."""
        eqs = [e.truncate(direction) for e in self.equations()]
        return QuasiLinearSystem.from_equations(eqs, self.variables, self.origins, self.provenance)

    def substitute(self, s: Substitution) -> "QuasiLinearSystem":
        """Apply a substitution rowwise; substituted variables leave the system.

        Images must only involve variables that are not themselves assigned.
        Rows that become ``0 = 0`` are dropped.
        """
        kept = [i for i in range(self.N) if i not in s.assignments]
        mapping = {old: new for new, old in enumerate(kept)}
        eqs = []
        for e in self.equations():
            e = s(e)
            if any(j.component not in mapping for j in e.jets()):
                raise ValueError("substitution images must use only unassigned variables")
            eqs.append(renumber_components(e, mapping))
        return QuasiLinearSystem.from_equations(
            eqs, [self.variables[i] for i in kept], self.origins, self.provenance
        ).canonical()


def renumber_components(e: DiffPolynomial, mapping: dict) -> DiffPolynomial:
    out = {}
    for mono, c in e.terms:
        nm = tuple(sorted((Jet(mapping[j.component], j.multi_index), x) for j, x in mono))
        out[nm] = out.get(nm, 0) + c
    return DiffPolynomial(out)


def renumber_ppoly(h: PPoly, mapping: dict) -> PPoly:
    return PPoly({k: renumber_components(c, mapping) for k, c in h.items()})


@dataclass(frozen=True)
class EvolutionSystem:
    """``u^i_direction = numerator_i / denominator_i`` solved out of a square system."""

    direction: str
    variables: Tuple[str, ...]
    rhs: Tuple[Tuple[DiffPolynomial, DiffPolynomial], ...]

    def residuals(self, system: QuasiLinearSystem) -> List[DiffPolynomial]:
        """Rows of ``system`` after substituting the solution, cleared of denominators."""
        return _back_substitute(system, self.direction, self.rhs)


# -- compatibility and extraction ---------------------------------------------


def compatibility(f, g) -> PPoly:
    """``D_t f - D_y g + {f, g}_L``."""
    f, g = PPoly.coerce(f), PPoly.coerce(g)
    _require_order0(f, g)
    return f.total_derivative("t") - g.total_derivative("y") + contact_bracket(f, g)


def split_in_p(e) -> List[DiffPolynomial]:
    return PPoly.coerce(e).coefficients()


def _n_components(*hs) -> int:
    return max((j.component for h in hs for j in PPoly.coerce(h).jets()), default=-1) + 1


def system_from_ppoly(e: PPoly, variables: Sequence[str], provenance=None) -> QuasiLinearSystem:
    coeffs = split_in_p(e)
    return QuasiLinearSystem.from_equations(coeffs, variables, range(len(coeffs)), provenance).canonical()


def extract_system(f, g, variables: Optional[Sequence[str]] = None) -> QuasiLinearSystem:
    f, g = PPoly.coerce(f), PPoly.coerce(g)
    if variables is None:
        variables = _infer_variables(_n_components(f, g))
    return system_from_ppoly(compatibility(f, g), variables, {"f": f, "g": g})


def reduce_drop_y(f, g, variables: Optional[Sequence[str]] = None) -> QuasiLinearSystem:
    """(2+1)-dimensional reduction with no y-dependence: ``f_t = {g, f}_L``."""
    f, g = PPoly.coerce(f), PPoly.coerce(g)
    if variables is None:
        variables = _infer_variables(_n_components(f, g))
    return system_from_ppoly(compatibility(f, g).truncate("y"), variables, {"f": f, "g": g, "drop": "y"})


def reduce_drop_z(f, g, variables: Optional[Sequence[str]] = None) -> QuasiLinearSystem:
    """(2+1)-dimensional reduction with no z-dependence (canonical Poisson bracket case)."""
    f, g = PPoly.coerce(f), PPoly.coerce(g)
    if variables is None:
        variables = _infer_variables(_n_components(f, g))
    return system_from_ppoly(compatibility(f, g).truncate("z"), variables, {"f": f, "g": g, "drop": "z"})


# -- example families -----------------------------------------------------------

EXAMPLE1_VARIABLES = ("u", "v", "w", "q")


def example1() -> Tuple[PPoly, PPoly]:
    """``f = p^2 + w p + u``, ``g = p^3 + 2 w p^2 + q p + v`` over (u, v, w, q)."""
    u, v, w, q = (var(i) for i in range(4))
    f = P ** 2 + P * w + u
    g = P ** 3 + P ** 2 * (2 * w) + P * q + v
    return f, g


def _check_mn(m: int, n: int):
    if not (isinstance(m, int) and isinstance(n, int)) or n < 1 or m <= n:
        raise ValueError(f"need integers m > n >= 1, got m={m}, n={n}")


def example2_variables(m: int, n: int) -> Tuple[str, ...]:
    _check_mn(m, n)
    return tuple(f"u_{i}" for i in range(n + 1)) + tuple(f"v_{j}" for j in range(m))


def example2(m: int, n: int) -> Tuple[PPoly, PPoly]:
    """``f = p^(n+1) + sum u_i p^i``, ``g = p^(m+1) + (m/n) u_n p^m + sum v_j p^j``.

    Components: u_0..u_n are 0..n, v_0..v_{m-1} are n+1..n+m.
    """
    _check_mn(m, n)
    f = PPoly({n + 1: ONE, **{i: var(i) for i in range(n + 1)}})
    g = PPoly({m + 1: ONE, m: var(n).scale(Fraction(m, n)),
               **{j: var(n + 1 + j) for j in range(m)}})
    return f, g


def gndkp_closed_form(m: int, n: int) -> QuasiLinearSystem:
    """The n+m+1 quadratic equations written out directly, no bracket involved.

    Conventions: u_i = 0 outside 0..n, v_j = 0 outside 0..m, v_m = (m/n) u_n.
    """
    _check_mn(m, n)

    def U(i: int, d: str = "") -> DiffPolynomial:
        return var(i, d) if 0 <= i <= n else ZERO

    def V(j: int, d: str = "") -> DiffPolynomial:
        if 0 <= j < m:
            return var(n + 1 + j, d)
        if j == m:
            return var(n, d).scale(Fraction(m, n))
        return ZERO

    eqs = []
    for k in range(n + m + 1):
        e = (U(k, "t") - V(k, "y")
             + m * U(k - m - 1, "z") - n * V(k - n - 1, "z")
             + (n + 1) * V(k - n, "x") - (m + 1) * U(k - m, "x"))
        for i in range(max(0, k - m), min(n, k) + 1):
            e = e + (k - i - 1) * V(k - i) * U(i, "z") - (i - 1) * U(i) * V(k - i, "z")
        for i in range(max(0, k + 1 - m), min(n, k + 1) + 1):
            e = e - ((k + 1 - i) * V(k + 1 - i) * U(i, "x") - i * U(i) * V(k + 1 - i, "x"))
        eqs.append(e)
    return QuasiLinearSystem.from_equations(
        eqs, example2_variables(m, n), range(n + m + 1), {"closed_form": (m, n)}
    ).canonical()


# -- solving for one direction ----------------------------------------------------


def exact_divide(a: DiffPolynomial, b: DiffPolynomial) -> DiffPolynomial:
    """Quotient ``a / b`` when ``b`` divides ``a`` exactly; ValueError otherwise.

    Multivariate division under lex order of exponent vectors over the jets.
    """
    if b.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if b.is_constant():
        return a.scale(1 / Fraction(b.constant_term()))
    slot = {j: i for i, j in enumerate(sorted(a.jets() | b.jets()))}

    def neg_key(mono):
        vec = [0] * len(slot)
        for j, e in mono:
            vec[slot[j]] = -e
        return tuple(vec)

    b_terms = list(b.terms)
    lead_b, lc_b = min(b_terms, key=lambda mc: neg_key(mc[0]))
    rem = dict(a.terms)
    heap = [(neg_key(m), m) for m in rem]
    heapq.heapify(heap)
    quot = {}
    while heap:
        _, m = heapq.heappop(heap)
        c = rem.pop(m, 0)
        if not c:
            continue
        d = dict(m)
        for j, e in lead_b:
            if d.get(j, 0) < e:
                raise ValueError("polynomial division is not exact")
            d[j] -= e
        qm = tuple(sorted((j, e) for j, e in d.items() if e))
        qc = Fraction(c) / lc_b
        quot[qm] = qc
        for bm, bc in b_terms:
            if bm == lead_b:
                continue
            nm = _mono_mul(qm, bm)
            if nm not in rem:
                heapq.heappush(heap, (neg_key(nm), nm))
            # zero entries stay as placeholders until popped
            rem[nm] = rem.get(nm, 0) - qc * bc
    return DiffPolynomial(quot)


def bareiss_det(mat: List[List[DiffPolynomial]]) -> DiffPolynomial:
    """Fraction-free determinant of a square matrix of polynomials."""
    a = [list(r) for r in mat]
    n = len(a)
    if n == 0:
        return ONE
    sign = 1
    prev = ONE
    for k in range(n - 1):
        if a[k][k].is_zero():
            swap = next((i for i in range(k + 1, n) if not a[i][k].is_zero()), None)
            if swap is None:
                return ZERO
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = exact_divide(a[i][j] * a[k][k] - a[i][k] * a[k][j], prev)
        prev = a[k][k]
    return a[n - 1][n - 1].scale(sign)


def _numeric_det(mat, point) -> Fraction:
    a = [[Fraction(x.eval_numeric(point)) for x in r] for r in mat]
    n = len(a)
    det = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for i in range(k + 1, n):
            fct = a[i][k] / a[k][k]
            for j in range(k, n):
                a[i][j] -= fct * a[k][j]
    return det


def _back_substitute(system: QuasiLinearSystem, direction: str, rhs) -> List[DiffPolynomial]:
    """Rows with ``u^i_direction = num_i / den_i`` substituted, times the product of distinct dens."""
    dens = []
    for _, d in rhs:
        if d not in dens:
            dens.append(d)
    common = ONE
    for d in dens:
        common = common * d
    cleared = [exact_divide(common, d) * num for num, d in rhs]
    slot = DIRECTIONS.index(direction)
    out = []
    for e in system.equations():
        total = ZERO
        for mono, c in e.terms:
            hit = [j for j, _ in mono if j.order == 1 and j.multi_index[slot] == 1]
            if hit:
                j = hit[0]
                rest = DiffPolynomial._raw({tuple((jj, x) for jj, x in mono if jj != j): c})
                total = total + rest * cleared[j.component]
            else:
                total = total + DiffPolynomial._raw({mono: c}) * common
        out.append(total)
    return out


def adjugate(mat: List[List[DiffPolynomial]]) -> Tuple[List[List[DiffPolynomial]], DiffPolynomial]:
    """``(B, d)`` with ``A B = d I`` and ``d = +-det A``, by fraction-free Gauss-Jordan on ``[A | I]``.

    Raises :class:`Singular` when no pivot can be found.
    """
    n = len(mat)
    a = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(mat)]
    prev = ONE
    for k in range(n):
        if a[k][k].is_zero():
            swap = next((i for i in range(k + 1, n) if not a[i][k].is_zero()), None)
            if swap is None:
                raise Singular("coefficient matrix is singular")
            a[k], a[swap] = a[swap], a[k]
        piv = a[k][k]
        for i in range(n):
            if i == k:
                continue
            aik = a[i][k]
            for j in range(2 * n):
                if j == k:
                    continue
                a[i][j] = exact_divide(piv * a[i][j] - aik * a[k][j], prev)
            a[i][k] = ZERO
        prev = piv
    # rows k < n-1 were last scaled at step k; bring them to the final pivot
    d = prev
    out = []
    for i in range(n):
        scale_num, scale_den = d, a[i][i]
        out.append([exact_divide(scale_num * x, scale_den) for x in a[i][n:]])
    return out, d


def solve_for_direction(system: QuasiLinearSystem, direction: str, seed: int = 0) -> EvolutionSystem:
    """Solve a square system for ``u_direction``.

    A random rational evaluation screens for a singular matrix first; a
    symbolic elimination confirms it.  The adjugate comes from fraction-free
    Gauss-Jordan elimination over the order-0 entries, and the solution is
    verified by back-substitution before it is returned.
    """
    if system.M != system.N:
        raise NotSquare(f"system has {system.M} equations in {system.N} unknowns")
    n = system.N
    A = system.matrix(direction)
    rng = random.Random(seed)
    point = {Jet(i): Fraction(rng.randint(-97, 97), rng.randint(1, 13)) for i in range(n)}
    if _numeric_det(A, point) == 0 and bareiss_det(A).is_zero():
        raise Singular(f"coefficient matrix of u_{direction} is singular")
    try:
        adj, det = adjugate(A)
    except Singular:
        raise Singular(f"coefficient matrix of u_{direction} is singular") from None
    # right-hand side b with A u_dir = b
    b = []
    for r in range(n):
        rest = ZERO
        for k, d in enumerate(MATRIX_DIRECTIONS):
            if d == direction:
                continue
            for i in range(n):
                a = system.matrices[k][r][i]
                if a:
                    rest = rest + a * var(i, d)
        b.append(-rest)
    rhs = []
    for i in range(n):
        num = ZERO
        for r in range(n):
            if adj[i][r]:
                num = num + adj[i][r] * b[r]
        rhs.append((num, det))
    evo = EvolutionSystem(direction, system.variables, tuple(rhs))
    if any(not r.is_zero() for r in evo.residuals(system)):
        raise ArithmeticError("back-substitution check failed")
    return evo


# -- the dKP chain -------------------------------------------------------------------


def dkp_eliminate(system: QuasiLinearSystem) -> DiffPolynomial:
    """Eliminate v from ``a v_x + b u_y = 0``, ``alpha u_t + beta(u) u_x + gamma v_y = 0``.

    Returns ``a D_x(E) - gamma D_y(C)`` with C, E sign-normalized, divided by
    its positive content; for the reduced Example 1 this is
    ``4 u_xt - 6 u_x^2 - 6 u u_xx - 3 u_yy``.
    """
    if system.N != 2 or system.M != 2:
        raise ShapeMismatch("expected two equations in two unknowns (u, v)")
    eqs = system.equations()
    has_t = [any(j.multi_index[3] for j in e.jets()) for e in eqs]
    if sorted(has_t) != [False, True]:
        raise ShapeMismatch("expected exactly one evolution row (with u_t) and one constraint row")
    C = eqs[has_t.index(False)]
    E = eqs[has_t.index(True)]
    vx, vy, ut, uy = jet(1, "x"), jet(1, "y"), jet(0, "t"), jet(0, "y")
    allowed_C = {vx, uy}
    if not C.jets() <= allowed_C or not C.partial(vx).is_constant() or not C.partial(uy).is_constant():
        raise ShapeMismatch("constraint row must be a*v_x + b*u_y with constant a, b")
    a = C.partial(vx).constant_term()
    if a == 0:
        raise ShapeMismatch("constraint row has no v_x term")
    if not E.jets() <= {Jet(0), ut, jet(0, "x"), vy} or not E.partial(ut).is_constant() \
            or not E.partial(vy).is_constant():
        raise ShapeMismatch("evolution row must be alpha*u_t + beta(u)*u_x + gamma*v_y")
    alpha = E.partial(ut).constant_term()
    if alpha < 0:
        E = -E
    if a < 0:
        C, a = -C, -a
    gamma = E.partial(vy).constant_term()
    out = E.total_derivative("x").scale(a) - C.total_derivative("y").scale(gamma)
    if any(j.component == 1 for j in out.jets()):
        raise ShapeMismatch("v did not cancel")
    if out.is_zero():
        return out
    return out.scale(1 / _content(c for _, c in out.terms))


def weak_zcr_defect(h, g, f) -> PPoly:
    """``{h_t - g_y + {h, g}_L, f}_L``."""
    _require_order0(f)
    return contact_bracket(compatibility(h, g), f)


# -- conservation-law hierarchy ---------------------------------------------------------


@dataclass(frozen=True)
class HierarchyEquation:
    power: int
    expression: DiffPolynomial


def chi_components(n_vars: int, K: int) -> List[int]:
    return list(range(n_vars, n_vars + K + 1))


def hierarchy_split(f, g, K: int, n_vars: Optional[int] = None) -> List[HierarchyEquation]:
    """Split ``D_t X_f(chi) - D_y X_g(chi)`` in p for ``chi = sum_k chi_k p^k``.

    The chi_k are fresh components numbered from ``n_vars``.  Every equation
    is linear homogeneous in chi-jets; no triviality analysis is attempted.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    f, g = PPoly.coerce(f), PPoly.coerce(g)
    _require_order0(f, g)
    if n_vars is None:
        n_vars = _n_components(f, g)
    chi = PPoly({k: var(c) for k, c in enumerate(chi_components(n_vars, K))})
    e = (apply_field(contact_field(f), chi).total_derivative("t")
         - apply_field(contact_field(g), chi).total_derivative("y"))
    return [HierarchyEquation(k, c) for k, c in e.items()]


def is_linear_homogeneous_in(e: DiffPolynomial, components) -> bool:
    comps = set(components)
    for mono, _ in e.terms:
        if sum(x for j, x in mono if j.component in comps) != 1:
            return False
    return True
