"""Contact (Lagrange) bracket and contact vector fields on (x, p, z).

Every x- and z-derivative below is a total derivative: the arguments depend on
position only through the dependent variables.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .jetalg import P, PPoly, DiffPolynomial, Jet, ZERO


def _pp(h) -> PPoly:
    return PPoly.coerce(h)


def contact_bracket(h1, h2) -> PPoly:
    """``{h1, h2}_L``; skew-symmetric, Jacobi, not Leibniz."""
    h1, h2 = _pp(h1), _pp(h2)
    h1p, h2p = h1.partial_p(), h2.partial_p()
    h1x, h2x = h1.total_derivative("x"), h2.total_derivative("x")
    h1z, h2z = h1.total_derivative("z"), h2.total_derivative("z")
    return (
        h1p * h2x
        - h2p * h1x
        - P * (h1p * h2z - h2p * h1z)
        + h1 * h2z
        - h2 * h1z
    )


@dataclass(frozen=True)
class ContactField:
    """Vector field ``cx*d/dx + cp*d/dp + cz*d/dz`` with PPoly components."""

    cx: PPoly
    cp: PPoly
    cz: PPoly

    def __post_init__(self):
        for name in ("cx", "cp", "cz"):
            object.__setattr__(self, name, _pp(getattr(self, name)))

    def __call__(self, w) -> PPoly:
        return apply_field(self, w)

    def is_zero(self) -> bool:
        return self.cx.is_zero() and self.cp.is_zero() and self.cz.is_zero()

    def components(self):
        return (self.cx, self.cp, self.cz)

    def __sub__(self, other: "ContactField") -> "ContactField":
        return ContactField(self.cx - other.cx, self.cp - other.cp, self.cz - other.cz)


def contact_field(h) -> ContactField:
    """``X_h = h_p d_x + (p h_z - h_x) d_p + (h - p h_p) d_z``."""
    h = _pp(h)
    hp = h.partial_p()
    return ContactField(
        cx=hp,
        cp=P * h.total_derivative("z") - h.total_derivative("x"),
        cz=h - P * hp,
    )


def apply_field(X: ContactField, w) -> PPoly:
    w = _pp(w)
    return X.cx * w.total_derivative("x") + X.cp * w.partial_p() + X.cz * w.total_derivative("z")


def commutator(X1: ContactField, X2: ContactField) -> ContactField:
    """Lie bracket ``[X1, X2]`` of vector fields."""
    return ContactField(
        apply_field(X1, X2.cx) - apply_field(X2, X1.cx),
        apply_field(X1, X2.cp) - apply_field(X2, X1.cp),
        apply_field(X1, X2.cz) - apply_field(X2, X1.cz),
    )


def jacobi_defect(h1, h2, h3) -> PPoly:
    b = contact_bracket
    return b(b(h1, h2), h3) + b(b(h2, h3), h1) + b(b(h3, h1), h2)


def skew_defect(a, b) -> PPoly:
    return contact_bracket(a, b) + contact_bracket(b, a)


def homomorphism_defect(h1, h2) -> ContactField:
    """``X_{h1,h2} - [X_h1, X_h2]``; the zero field when the map h -> X_h is a homomorphism."""
    return contact_field(contact_bracket(h1, h2)) - commutator(contact_field(h1), contact_field(h2))


def leibniz_defect(a, b, c) -> PPoly:
    """``{a, bc} - {a, b} c - b {a, c}``, which equals ``b c D_z a``."""
    a, b, c = _pp(a), _pp(b), _pp(c)
    return contact_bracket(a, b * c) - contact_bracket(a, b) * c - b * contact_bracket(a, c)


# -- randomized identity checks ----------------------------------------------


def random_diffpoly(rng: random.Random, ncomp: int, max_degree: int, max_jet_order: int = 0,
                    nterms: int = 3) -> DiffPolynomial:
    """Sparse random differential polynomial with small rational coefficients."""
    jets = [Jet(c) for c in range(ncomp)]
    if max_jet_order >= 1:
        for c in range(ncomp):
            for k in (0, 2):  # x and z
                mi = [0, 0, 0, 0]
                mi[k] = 1
                jets.append(Jet(c, tuple(mi)))
    out = ZERO
    for _ in range(rng.randint(1, nterms)):
        coeff = Fraction(rng.randint(-5, 5), rng.randint(1, 3))
        term = DiffPolynomial.constant(coeff)
        for _ in range(rng.randint(0, max_degree)):
            term = term * DiffPolynomial.from_jet(rng.choice(jets))
        out = out + term
    return out


def random_ppoly(rng: random.Random, ncomp: int = 3, max_pdeg: int = 3, max_degree: int = 2,
                 max_jet_order: int = 0) -> PPoly:
    deg = rng.randint(0, max_pdeg)
    coeffs = {}
    for k in range(deg + 1):
        if k == deg or rng.random() < 0.6:
            coeffs[k] = random_diffpoly(rng, ncomp, max_degree, max_jet_order)
    return PPoly(coeffs)


def verify_identities(trials: int = 100, seed: int = 0, max_degree: int = 2, ncomp: int = 3,
                      max_pdeg: int = 3, max_jet_order: int = 0) -> dict:
    """Run the bracket identity suite on random inputs.

    Returns a mapping from identity name to the number of failing trials.
    """
    rng = random.Random(seed)
    failures = {"skew": 0, "jacobi": 0, "homomorphism": 0, "leibniz": 0}
    for _ in range(trials):
        a, b, c = (random_ppoly(rng, ncomp, max_pdeg, max_degree, max_jet_order) for _ in range(3))
        if not skew_defect(a, b).is_zero():
            failures["skew"] += 1
        if not jacobi_defect(a, b, c).is_zero():
            failures["jacobi"] += 1
        if not homomorphism_defect(a, b).is_zero():
            failures["homomorphism"] += 1
        if leibniz_defect(a, b, c) != b * c * a.total_derivative("z"):
            failures["leibniz"] += 1
    return failures
