import random
from fractions import Fraction

import pytest
import sympy as sp

from contactlax.contact import contact_bracket, random_ppoly
from contactlax.exprio import parse_diffpoly
from contactlax.jetalg import ONE, P, ZERO, DiffPolynomial, Jet, PPoly, Substitution, jet, var
from contactlax.systemgen import (
    EXAMPLE1_VARIABLES,
    JetOrderError,
    NotSquare,
    QuasiLinearSystem,
    ShapeMismatch,
    Singular,
    compatibility,
    dkp_eliminate,
    example1,
    example2,
    example2_variables,
    exact_divide,
    bareiss_det,
    extract_system,
    gndkp_closed_form,
    hierarchy_split,
    is_linear_homogeneous_in,
    reduce_drop_y,
    reduce_drop_z,
    renumber_components,
    renumber_ppoly,
    solve_for_direction,
    split_in_p,
    weak_zcr_defect,
)

from conftest import T, Y, sympy_bracket, sympy_funcs, to_sympy

u, v, w, q = (var(i) for i in range(4))
V4 = EXAMPLE1_VARIABLES

# the four published equations of the four-component system, in printed order
PRINTED_ROWS = [
    "u_t - v*u_z - q*u_x + u*v_z + w*v_x - v_y",
    "2*u_z + w_x + 2*w*w_z - q_z",
    "2*q_x - 3*u_x - 2*w_y + 2*w*u_z - v_z - 2*w*w_x + 2*u*w_z",
    "w_t - q_y + 2*v_x - 4*w*u_x + w*q_x - q*w_x - v*w_z + u*q_z",
]
# printed row i comes from this power of p
PRINTED_ROW_POWER = [0, 3, 2, 1]


def printed_system():
    eqs = [parse_diffpoly(t, V4) for t in PRINTED_ROWS]
    return QuasiLinearSystem.from_equations(eqs, V4, PRINTED_ROW_POWER).canonical()


def spelled_out_sum(f, g, n):
    """Chain-rule form of the compatibility condition, independent of the bracket code."""
    fp, gp = f.partial_p(), g.partial_p()
    out = PPoly()
    for i in range(n):
        fu = PPoly({k: c.partial(Jet(i)) for k, c in f.items()})
        gu = PPoly({k: c.partial(Jet(i)) for k, c in g.items()})
        out = (out + fu * var(i, "t") - gu * var(i, "y")
               + (fp * gu - gp * fu) * var(i, "x")
               + ((f - P * fp) * gu - (g - P * gp) * fu) * var(i, "z"))
    return out


# -- compatibility -----------------------------------------------------------------


def test_compatibility_equal_args():
    assert compatibility(u, u) == PPoly.coerce(var(0, "t") - var(0, "y"))


def test_compatibility_u_v():
    expected = var(0, "t") - var(1, "y") + u * var(1, "z") - v * var(0, "z")
    assert compatibility(u, v) == PPoly.coerce(expected)


def test_compatibility_example1_top_coefficient():
    f, g = example1()
    assert compatibility(f, g).coeff(3) == parse_diffpoly("2*u_z + w_x + 2*w*w_z - q_z", V4)


def test_compatibility_rejects_jets():
    with pytest.raises(JetOrderError):
        compatibility(var(0, "x"), v)


def test_compatibility_matches_spelled_out_sum():
    rng = random.Random(42)
    for _ in range(25):
        f, g = random_ppoly(rng), random_ppoly(rng)
        assert compatibility(f, g) == spelled_out_sum(f, g, 3)


def test_compatibility_matches_sympy():
    funcs = sympy_funcs(4)
    f, g = example1()
    fs, gs = to_sympy(f, funcs), to_sympy(g, funcs)
    expected = sp.diff(fs, T) - sp.diff(gs, Y) + sympy_bracket(fs, gs)
    assert sp.expand(to_sympy(compatibility(f, g), funcs) - expected) == 0


def test_compatibility_is_first_order_and_linear():
    rng = random.Random(9)
    for _ in range(25):
        e = compatibility(random_ppoly(rng), random_ppoly(rng))
        assert e.max_order() <= 1
        for _, c in e.items():
            for mono, _ in c.terms:
                assert sum(x for j, x in mono if j.order == 1) == 1


# -- split and extract ---------------------------------------------------------------


def test_split_examples():
    assert split_in_p(P ** 2 * var(0, "x") + var(2, "x")) == [var(2, "x"), ZERO, var(0, "x")]
    assert split_in_p(PPoly()) == []
    f, g = example1()
    coeffs = split_in_p(compatibility(f, g))
    assert len(coeffs) == 4 and all(coeffs)


def test_split_reassembles():
    f, g = example1()
    e = compatibility(f, g)
    assert PPoly.from_coefficients(split_in_p(e)) == e


def test_extract_example1_matches_printed_rows():
    f, g = example1()
    assert extract_system(f, g, V4) == printed_system()


def test_extract_u_v():
    s = extract_system(u, v, ("u", "v"))
    assert s.M == 1
    assert s.A0 == [[ONE, ZERO]]
    assert s.A1 == [[ZERO, ZERO]]
    assert s.A2 == [[ZERO, -ONE]]
    assert s.A3 == [[-v, u]]


def test_extract_equal_args():
    s = extract_system(u, u, ("u",))
    assert s.equations() == [var(0, "t") - var(0, "y")]


def test_reassembly_identity():
    rng = random.Random(5)
    for _ in range(15):
        f, g = random_ppoly(rng), random_ppoly(rng)
        e = compatibility(f, g)
        s = QuasiLinearSystem.from_equations(split_in_p(e), ("a", "b", "c"))
        assert PPoly(dict(zip(s.origins, s.equations()))) == e


def test_canonical_is_idempotent_and_signed():
    f, g = example1()
    s = extract_system(f, g, V4)
    assert s.canonical() == s
    for r in range(s.M):
        first = next(a for a in s.row_scan(r) if a)
        assert first.terms[0][1] > 0
    assert list(s.origins) == sorted(s.origins)


# -- example families --------------------------------------------------------------------


def test_example1_degrees():
    f, g = example1()
    assert f.degree == 2 and g.degree == 3
    s = extract_system(f, g, V4)
    assert (s.M, s.N) == (4, 4)


def test_example2_reduces_to_example1():
    f2, g2 = example2(2, 1)
    # u_0 -> u, u_1 -> w, v_0 -> v, v_1 -> q
    rename = {0: 0, 1: 2, 2: 1, 3: 3}
    f1, g1 = example1()
    assert renumber_ppoly(f2, rename) == f1
    assert renumber_ppoly(g2, rename) == g1


def test_example2_coupling_coefficient():
    _, g = example2(3, 2)
    assert g.coeff(3) == var(2).scale(Fraction(3, 2))
    assert g.coeff(4) == ONE


def test_example2_rejects_bad_mn():
    with pytest.raises(ValueError):
        example2(1, 1)
    with pytest.raises(ValueError):
        gndkp_closed_form(2, 3)


def test_closed_form_count():
    assert gndkp_closed_form(4, 2).M == 7


def test_closed_form_2_1_is_printed_system():
    s = gndkp_closed_form(2, 1)
    # closed-form variables (u_0, u_1, v_0, v_1) are (u, w, v, q)
    eqs = [parse_diffpoly(t, V4) for t in PRINTED_ROWS]
    to_closed = {0: 0, 2: 1, 1: 2, 3: 3}
    printed = QuasiLinearSystem.from_equations(
        [renumber_components(e, to_closed) for e in eqs], example2_variables(2, 1), PRINTED_ROW_POWER
    )
    assert s.same_as(printed)


@pytest.mark.parametrize("m,n", [(m, n) for m in range(2, 6) for n in range(1, m)])
def test_closed_form_matches_bracket_route(m, n):
    a = extract_system(*example2(m, n), example2_variables(m, n))
    b = gndkp_closed_form(m, n)
    assert a == b
    assert a.M == a.N == n + m + 1


# -- solving for z ---------------------------------------------------------------------------


def test_exact_divide():
    a = (u + v) * (u * w - 3)
    assert exact_divide(a, u + v) == u * w - 3
    with pytest.raises(ValueError):
        exact_divide(u * u + 1, u + v)


def test_bareiss_matches_sympy_det():
    rng = random.Random(2)
    from contactlax.contact import random_diffpoly

    funcs = sympy_funcs(3)
    for _ in range(5):
        M = [[random_diffpoly(rng, 3, 2) for _ in range(3)] for _ in range(3)]
        mine = to_sympy(bareiss_det(M), funcs)
        ref = sp.Matrix([[to_sympy(x, funcs) for x in row] for row in M]).det()
        assert sp.expand(mine - ref) == 0


def test_solve_example1_for_z():
    f, g = example1()
    s = extract_system(f, g, V4)
    evo = solve_for_direction(s, "z")
    assert all(r.is_zero() for r in evo.residuals(s))
    assert not evo.rhs[0][1].is_zero()
    # numeric oracle: solve A3 y = b at a rational point with plain fractions
    rng = random.Random(17)
    point = {}
    for i in range(4):
        point[Jet(i)] = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
        for d in "xyt":
            point[jet(i, d)] = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
    A = [[Fraction(a.eval_numeric(point)) for a in row] for row in s.A3]
    b = []
    for r in range(4):
        rest = s.row_expression(r).truncate("z")
        b.append(-Fraction(rest.eval_numeric(point)))
    sol = sp.Matrix(A).LUsolve(sp.Matrix(b))
    for i in range(4):
        num, den = evo.rhs[i]
        assert Fraction(num.eval_numeric(point)) / Fraction(den.eval_numeric(point)) == Fraction(str(sol[i]))


def test_solve_not_square():
    with pytest.raises(NotSquare):
        solve_for_direction(extract_system(u, v, ("u", "v")), "t")


def test_solve_singular_after_drop_z():
    f, g = example1()
    with pytest.raises(Singular):
        solve_for_direction(reduce_drop_z(f, g, V4), "z")


@pytest.mark.parametrize("m,n", [(3, 1), (3, 2)])
def test_example2_solvable_for_z(m, n):
    s = extract_system(*example2(m, n), example2_variables(m, n))
    evo = solve_for_direction(s, "z")
    assert all(r.is_zero() for r in evo.residuals(s))


# -- reductions ---------------------------------------------------------------------------------


def test_drop_y_examples():
    s = reduce_drop_y(u, v, ("u", "v"))
    assert s.equations() == [var(0, "t") + u * var(1, "z") - v * var(0, "z")]
    assert reduce_drop_y(u, u, ("u",)).equations() == [var(0, "t")]


def test_drop_y_example1_is_truncation():
    f, g = example1()
    s = reduce_drop_y(f, g, V4)
    assert all(not any(row) for row in s.A2)
    assert s == printed_system().drop_column_block("y").canonical()


def test_drop_z_examples():
    assert reduce_drop_z(u, v, ("u", "v")).equations() == [var(0, "t") - var(1, "y")]
    assert reduce_drop_z(u, u, ("u",)).equations() == [var(0, "t") - var(0, "y")]


@pytest.mark.parametrize("direction,reducer", [("y", reduce_drop_y), ("z", reduce_drop_z)])
def test_reductions_commute_with_extract(direction, reducer):
    rng = random.Random(21)
    for _ in range(10):
        f, g = random_ppoly(rng), random_ppoly(rng)
        names = ("a", "b", "c")
        lhs = reducer(f, g, names)
        rhs = extract_system(f, g, names).drop_column_block(direction).canonical()
        assert lhs == rhs


def rgdkp():
    f, g = example1()
    return reduce_drop_z(f, g, V4).substitute(Substitution({2: 0, 3: u.scale(Fraction(3, 2))}))


def test_drop_z_then_substitute_gives_two_rows():
    s = rgdkp()
    assert s.variables == ("u", "v")
    eqs = set(s.equations())
    assert eqs == {
        parse_diffpoly("4*v_x - 3*u_y", ("u", "v")),
        parse_diffpoly("2*u_t - 3*u*u_x - 2*v_y", ("u", "v")),
    }


def test_dkp_eliminate():
    out = dkp_eliminate(rgdkp())
    assert out == parse_diffpoly("4*u_xt - 6*u_x^2 - 6*u*u_xx - 3*u_yy", ("u", "v"))


def test_dkp_eliminate_constant_u():
    out = dkp_eliminate(rgdkp())
    assert Substitution({0: 5})(out).is_zero()


def test_dkp_eliminate_simple_wave_residual():
    # u = x/(1 - 3t/2) with u_y = 0: substitute jets of the profile at x=2, t=1/5
    out = dkp_eliminate(rgdkp())
    x, t = Fraction(2), Fraction(1, 5)
    den = 1 - Fraction(3, 2) * t
    vals = {
        Jet(0): x / den,
        jet(0, "x"): 1 / den,
        jet(0, "xx"): 0,
        jet(0, "xt"): Fraction(3, 2) / den ** 2,
        jet(0, "yy"): 0,
    }
    assert out.eval_numeric(vals) == 0


def test_dkp_eliminate_shape_mismatch():
    f, g = example1()
    with pytest.raises(ShapeMismatch):
        dkp_eliminate(extract_system(f, g, V4))


def test_naive_promotion_is_overdetermined():
    s = extract_system(P ** 2 + u, P ** 3 + P * u.scale(Fraction(3, 2)) + v, ("u", "v"))
    eqs = s.equations()
    assert var(0, "z") in eqs and var(1, "z") in eqs
    rest = [e.truncate("z") for e in eqs if e not in (var(0, "z"), var(1, "z"))]
    assert set(rest) == set(rgdkp().equations())


# -- weak zero curvature and hierarchy -----------------------------------------------------------


def test_weak_zcr_equal_h_g():
    f, g = example1()
    h = P ** 2 + u
    out = weak_zcr_defect(h, h, f)
    assert out == contact_bracket(compatibility(h, h), f)
    assert not out.is_zero()


def test_weak_zcr_vanishes_for_zero_curvature():
    f, _ = example1()
    assert contact_bracket(PPoly(), f).is_zero()
    h, g = example1()
    assert weak_zcr_defect(h, g, PPoly()).is_zero()


def test_hierarchy_top_equation():
    f, g = example1()
    eqs = hierarchy_split(f, g, 0, 4)
    top = {e.power: e.expression for e in eqs}[3]
    assert top == 2 * var(4, "yz")


def test_hierarchy_u_v():
    eqs = hierarchy_split(u, v, 0, 2)
    expected = (u * var(2, "z")).total_derivative("t") - (v * var(2, "z")).total_derivative("y")
    assert [e.expression for e in eqs] == [expected]


@pytest.mark.parametrize("K", [0, 1, 2])
def test_hierarchy_linear_homogeneous(K):
    f, g = example1()
    for e in hierarchy_split(f, g, K, 4):
        assert is_linear_homogeneous_in(e.expression, range(4, 5 + K))


def test_hierarchy_f_equals_g_antisymmetry():
    # y <-> t swaps D_t X_f(chi) - D_y X_f(chi) into its negative
    f = P ** 2 + u
    for e in hierarchy_split(f, f, 0, 1):
        swapped = {}
        for mono, c in e.expression.terms:
            nm = tuple(sorted((Jet(j.component, (j.multi_index[0], j.multi_index[3], j.multi_index[2],
                                                 j.multi_index[1])), x) for j, x in mono))
            swapped[nm] = c
        assert DiffPolynomial(swapped) == -e.expression
