"""Exact differential-polynomial algebra over jet variables.

A :class:`DiffPolynomial` is a polynomial with rational coefficients in the
jet variables ``u^i_{x^a y^b z^c t^d}``.  A :class:`PPoly` is a polynomial in
the spectral variable ``p`` whose coefficients are differential polynomials.
Total derivatives act through the jets by the chain rule; ``p`` is held
constant by them and only ``partial_p`` sees it.

All values are immutable and all arithmetic is exact.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Iterator, Mapping, NamedTuple, Tuple, Union

DIRECTIONS = "xyzt"
_DIR_INDEX = {d: i for i, d in enumerate(DIRECTIONS)}


class MissingAssignmentError(KeyError):
    """Raised by :func:`eval_numeric` when a jet has no value."""

    def __init__(self, jet: "Jet"):
        super().__init__(jet)
        self.jet = jet

    def __str__(self) -> str:
        return f"no value assigned to jet {self.jet!r}"


def direction_index(direction: str) -> int:
    try:
        return _DIR_INDEX[direction]
    except KeyError:
        raise ValueError(f"unknown direction {direction!r}; expected one of x, y, z, t") from None


class Jet(NamedTuple):
    """Dependent variable ``component`` differentiated ``multi_index`` times in (x, y, z, t)."""

    component: int
    multi_index: Tuple[int, int, int, int] = (0, 0, 0, 0)

    @property
    def order(self) -> int:
        return sum(self.multi_index)

    def derive(self, direction: str) -> "Jet":
        k = direction_index(direction)
        mi = list(self.multi_index)
        mi[k] += 1
        return Jet(self.component, tuple(mi))

    def base(self) -> "Jet":
        return Jet(self.component)

    def suffix(self) -> str:
        """Direction letters in x, y, z, t order with repetition, e.g. ``"xxz"``."""
        return "".join(d * n for d, n in zip(DIRECTIONS, self.multi_index))

    def __repr__(self) -> str:
        s = self.suffix()
        return f"u{self.component}" + (f"_{s}" if s else "")


def jet(component: int, derivs: str = "") -> "Jet":
    """Build a jet from a string of direction letters, ``jet(0, "xz")``."""
    mi = [0, 0, 0, 0]
    for d in derivs:
        mi[direction_index(d)] += 1
    return Jet(component, tuple(mi))


# A monomial is a tuple of (Jet, exponent) pairs sorted by jet.
Monomial = Tuple[Tuple[Jet, int], ...]
Scalar = Union[int, Fraction]

_ONE: Monomial = ()


def _check_scalar(c) -> Scalar:
    if isinstance(c, bool) or not isinstance(c, Rational):
        raise TypeError(f"coefficients must be exact rationals, got {type(c).__name__}")
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for j, e in b:
        d[j] = d.get(j, 0) + e
    return tuple(sorted(d.items()))


def monomial_key(mono: Monomial):
    """Sort key of the printing order.

    Non-constant monomials first, compared lexicographically as jet lists in
    which a jet sorts by component and then by *descending* multi-index, so
    ``u_z < w_x < w*w_z < q_z`` for variables ordered (u, v, w, q).
    The constant monomial comes last.
    """
    if not mono:
        return (1,)
    flat = []
    for j, e in sorted(mono, key=lambda je: (je[0].component, tuple(-k for k in je[0].multi_index))):
        flat.extend([(j.component, tuple(-k for k in j.multi_index))] * e)
    return (0, tuple(flat))


class DiffPolynomial:
    """Polynomial in jet variables with exact rational coefficients."""

    __slots__ = ("_terms", "_hash", "_sorted")

    def __init__(self, terms: Mapping[Monomial, Scalar] | None = None):
        clean: Dict[Monomial, Scalar] = {}
        if terms:
            for m, c in terms.items():
                c = _check_scalar(c)
                if c != 0:
                    clean[m] = c
        self._terms = clean
        self._hash = None
        self._sorted = None

    @classmethod
    def _raw(cls, terms: Dict[Monomial, Scalar]) -> "DiffPolynomial":
        # terms already clean: no zero coefficients, integral Fractions allowed
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        obj._sorted = None
        return obj

    @classmethod
    def constant(cls, c: Scalar) -> "DiffPolynomial":
        return cls({_ONE: c})

    @classmethod
    def from_jet(cls, j: Jet) -> "DiffPolynomial":
        return cls._raw({((j, 1),): 1})

    @classmethod
    def coerce(cls, other) -> "DiffPolynomial":
        if isinstance(other, DiffPolynomial):
            return other
        if isinstance(other, Jet):
            return cls.from_jet(other)
        return cls.constant(other)

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> Tuple[Tuple[Monomial, Scalar], ...]:
        """Terms in canonical order."""
        if self._sorted is None:
            self._sorted = tuple(sorted(self._terms.items(), key=lambda mc: monomial_key(mc[0])))
        return self._sorted

    def coefficient(self, mono: Monomial) -> Scalar:
        return self._terms.get(mono, 0)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    def constant_term(self) -> Scalar:
        return self._terms.get(_ONE, 0)

    def jets(self) -> set:
        return {j for m in self._terms for j, _ in m}

    def max_order(self) -> int:
        """Highest derivative order among the jets, -1 for a constant."""
        return max((j.order for j in self.jets()), default=-1)

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self._terms), default=-1)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Tuple[Monomial, Scalar]]:
        return iter(self.terms)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, PPoly):
            return NotImplemented
        other = DiffPolynomial.coerce(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return DiffPolynomial._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return DiffPolynomial._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, PPoly):
            return NotImplemented
        return self + (-DiffPolynomial.coerce(other))

    def __rsub__(self, other):
        return DiffPolynomial.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, PPoly):
            return NotImplemented
        if not isinstance(other, DiffPolynomial):
            other = DiffPolynomial.coerce(other)
        if not self._terms or not other._terms:
            return ZERO
        out: Dict[Monomial, Scalar] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return DiffPolynomial._raw(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def scale(self, c: Scalar) -> "DiffPolynomial":
        c = _check_scalar(c)
        if c == 0:
            return ZERO
        return DiffPolynomial._raw({m: v * c for m, v in self._terms.items()})

    # -- calculus ---------------------------------------------------------

    def partial(self, j: Jet) -> "DiffPolynomial":
        """Partial derivative with respect to a single jet variable."""
        out: Dict[Monomial, Scalar] = {}
        for m, c in self._terms.items():
            for idx, (jj, e) in enumerate(m):
                if jj == j:
                    rest = m[:idx] + (((jj, e - 1),) if e > 1 else ()) + m[idx + 1:]
                    out[rest] = out.get(rest, 0) + c * e
        return DiffPolynomial({k: v for k, v in out.items() if v})

    def total_derivative(self, direction: str) -> "DiffPolynomial":
        k = direction_index(direction)
        out: Dict[Monomial, Scalar] = {}
        for m, c in self._terms.items():
            for idx, (jj, e) in enumerate(m):
                mi = list(jj.multi_index)
                mi[k] += 1
                dj = Jet(jj.component, tuple(mi))
                d = dict(m[:idx] + m[idx + 1:])
                if e > 1:
                    d[jj] = e - 1
                d[dj] = d.get(dj, 0) + 1
                nm = tuple(sorted(d.items()))
                s = out.get(nm, 0) + c * e
                if s:
                    out[nm] = s
                else:
                    out.pop(nm, None)
        return DiffPolynomial._raw(out)

    def truncate(self, direction: str) -> "DiffPolynomial":
        """Drop every monomial containing a jet differentiated in ``direction``."""
        k = direction_index(direction)
        return DiffPolynomial._raw(
            {m: c for m, c in self._terms.items() if all(j.multi_index[k] == 0 for j, _ in m)}
        )

    def substitute(self, s: "Substitution") -> "DiffPolynomial":
        out = ZERO
        for m, c in self._terms.items():
            term = DiffPolynomial.constant(c)
            for j, e in m:
                term = term * (s.image(j) ** e)
            out = out + term
        return out

    def eval_numeric(self, point: Mapping[Jet, Scalar]):
        total = 0
        for m, c in self._terms.items():
            v = c
            for j, e in m:
                try:
                    v = v * point[j] ** e
                except KeyError:
                    raise MissingAssignmentError(j) from None
            total += v
        return total

    # -- comparison -------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, PPoly):
            return other == self
        if isinstance(other, DiffPolynomial):
            return self._terms == other._terms
        if isinstance(other, Rational) and not isinstance(other, bool):
            return self._terms == ({_ONE: other} if other else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "DiffPolynomial(0)"
        parts = []
        for m, c in self.terms:
            factors = [f"{j!r}" + (f"^{e}" if e > 1 else "") for j, e in m]
            parts.append("*".join([str(c)] + factors) if factors else str(c))
        return "DiffPolynomial(" + " + ".join(parts) + ")"


ZERO = DiffPolynomial()
ONE = DiffPolynomial.constant(1)


def var(component: int, derivs: str = "") -> DiffPolynomial:
    """The jet ``u^component`` differentiated along ``derivs``, as a polynomial."""
    return DiffPolynomial.from_jet(jet(component, derivs))


def symbols(n: int) -> list:
    return [var(i) for i in range(n)]


class PPoly:
    """Polynomial in ``p`` with :class:`DiffPolynomial` coefficients."""

    __slots__ = ("_coeffs", "_hash")

    def __init__(self, coeffs: Mapping[int, DiffPolynomial | Scalar] | None = None):
        clean: Dict[int, DiffPolynomial] = {}
        if coeffs:
            for k, c in coeffs.items():
                if not isinstance(k, int) or k < 0:
                    raise ValueError("powers of p must be non-negative integers")
                c = DiffPolynomial.coerce(c)
                if c:
                    clean[k] = c
        self._coeffs = clean
        self._hash = None

    @classmethod
    def _raw(cls, coeffs: Dict[int, DiffPolynomial]) -> "PPoly":
        obj = cls.__new__(cls)
        obj._coeffs = coeffs
        obj._hash = None
        return obj

    @classmethod
    def coerce(cls, other) -> "PPoly":
        if isinstance(other, PPoly):
            return other
        c = DiffPolynomial.coerce(other)
        return cls._raw({0: c} if c else {})

    @classmethod
    def from_coefficients(cls, coeffs: Iterable) -> "PPoly":
        """Build from a list whose entry k is the coefficient of ``p^k``."""
        return cls(dict(enumerate(coeffs)))

    # -- inspection -------------------------------------------------------

    @property
    def degree(self) -> int:
        """Degree in p; -1 for the zero polynomial."""
        return max(self._coeffs, default=-1)

    def coeff(self, k: int) -> DiffPolynomial:
        return self._coeffs.get(k, ZERO)

    def items(self):
        """(power, coefficient) pairs in ascending power."""
        return sorted(self._coeffs.items())

    def coefficients(self) -> list:
        return [self.coeff(k) for k in range(self.degree + 1)]

    def is_zero(self) -> bool:
        return not self._coeffs

    def jets(self) -> set:
        out = set()
        for c in self._coeffs.values():
            out |= c.jets()
        return out

    def max_order(self) -> int:
        return max((c.max_order() for c in self._coeffs.values()), default=-1)

    def _map(self, fn) -> "PPoly":
        out = {}
        for k, c in self._coeffs.items():
            r = fn(c)
            if r:
                out[k] = r
        return PPoly._raw(out)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = PPoly.coerce(other)
        out = dict(self._coeffs)
        for k, c in other._coeffs.items():
            s = out[k] + c if k in out else c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return PPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return PPoly._raw({k: -c for k, c in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-PPoly.coerce(other))

    def __rsub__(self, other):
        return PPoly.coerce(other) - self

    def __mul__(self, other):
        other = PPoly.coerce(other)
        out: Dict[int, DiffPolynomial] = {}
        for k1, c1 in self._coeffs.items():
            for k2, c2 in other._coeffs.items():
                k = k1 + k2
                out[k] = out[k] + c1 * c2 if k in out else c1 * c2
        return PPoly._raw({k: c for k, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = PPoly.coerce(1)
        for _ in range(n):
            result = result * self
        return result

    def shift(self, n: int = 1) -> "PPoly":
        """Multiply by ``p**n``."""
        return PPoly._raw({k + n: c for k, c in self._coeffs.items()})

    # -- calculus ---------------------------------------------------------

    def partial_p(self) -> "PPoly":
        return PPoly._raw({k - 1: c.scale(k) for k, c in self._coeffs.items() if k > 0})

    def total_derivative(self, direction: str) -> "PPoly":
        return self._map(lambda c: c.total_derivative(direction))

    def truncate(self, direction: str) -> "PPoly":
        return self._map(lambda c: c.truncate(direction))

    def substitute(self, s: "Substitution") -> "PPoly":
        return self._map(lambda c: c.substitute(s))

    def eval_numeric(self, point: Mapping[Jet, Scalar], pval: Scalar = 0):
        total = 0
        for k, c in self._coeffs.items():
            total += c.eval_numeric(point) * pval ** k
        return total

    # -- comparison -------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, PPoly):
            return self._coeffs == other._coeffs
        if isinstance(other, (DiffPolynomial, Rational)) and not isinstance(other, bool):
            return self == PPoly.coerce(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._coeffs.items()))
        return self._hash

    def __bool__(self):
        return bool(self._coeffs)

    def __repr__(self) -> str:
        if not self._coeffs:
            return "PPoly(0)"
        return "PPoly(" + ", ".join(f"p^{k}: {c!r}" for k, c in sorted(self._coeffs.items(), reverse=True)) + ")"


P = PPoly._raw({1: ONE})


class Substitution:
    """Ring homomorphism fixed by images of the order-0 variables.

    Derivative jets go to total derivatives of the image, so the map commutes
    with every :func:`total_derivative`.  Unassigned components are fixed.
    """

    def __init__(self, assignments: Mapping[int, DiffPolynomial | Scalar]):
        self.assignments = {int(c): DiffPolynomial.coerce(v) for c, v in assignments.items()}
        self._cache: Dict[Jet, DiffPolynomial] = {}

    def image(self, j: Jet) -> DiffPolynomial:
        if j in self._cache:
            return self._cache[j]
        if j.component not in self.assignments:
            img = DiffPolynomial.from_jet(j)
        elif j.order == 0:
            img = self.assignments[j.component]
        else:
            # peel one derivative off the last non-zero slot and recurse
            k = max(i for i, n in enumerate(j.multi_index) if n)
            mi = list(j.multi_index)
            mi[k] -= 1
            img = self.image(Jet(j.component, tuple(mi))).total_derivative(DIRECTIONS[k])
        self._cache[j] = img
        return img

    def then(self, other: "Substitution") -> "Substitution":
        """The substitution equal to applying ``self`` first and ``other`` second."""
        comps = set(self.assignments) | set(other.assignments)
        return Substitution({c: self.image(Jet(c)).substitute(other) for c in comps})

    def __call__(self, h):
        return h.substitute(self)

    def __repr__(self) -> str:
        return f"Substitution({self.assignments!r})"


# -- functional surface -------------------------------------------------------

Poly = Union[DiffPolynomial, PPoly]


def partial_p(h) -> PPoly:
    return PPoly.coerce(h).partial_p()


def total_derivative(h: Poly, direction: str) -> Poly:
    return h.total_derivative(direction)


def total_derivatives(h: Poly, directions: str) -> Poly:
    for d in directions:
        h = h.total_derivative(d)
    return h


def substitute(h: Poly, s: Substitution | Mapping) -> Poly:
    if not isinstance(s, Substitution):
        s = Substitution(s)
    return h.substitute(s)


def truncate(h: Poly, direction: str) -> Poly:
    return h.truncate(direction)


def eval_numeric(h: Poly, point: Mapping[Jet, Scalar], pval: Scalar = 0):
    """Exact evaluation; raises :class:`MissingAssignmentError` for unassigned jets."""
    if isinstance(h, PPoly):
        return h.eval_numeric(point, pval)
    return h.eval_numeric(point)
