from fractions import Fraction as F

import pytest

from poisskit import linalg, poisson
from poisskit.expr import RatFunc, chart, parse_expr
from poisskit.multivec import DiffForm, MultiVec, PolyMap, wedge
from poisskit.poisson import (
    NotClosedError,
    PoissonError,
    bracket,
    casimir_check,
    char_fiber,
    cohomology,
    d_pi,
    darboux_basis_at,
    gauge_transform,
    hamiltonian_vf,
    is_poisson,
    is_poisson_map,
    isotropy_bracket_at,
    jacobiator,
    jacobiator_trivector,
    log_degeneracy_check,
    matrix_at,
    modular_vf,
    rank_at,
    sharp_at,
    top_power,
    trivector_on_differentials,
    verify,
)

from conftest import random_poly, rng_for


def coordinate_volume(ch):
    return DiffForm(ch, ch.dim, {tuple(range(ch.dim)): RatFunc.const(ch, 1)})


# -- bracket -----------------------------------------------------------------------


def test_bracket_canonical(chqp, pican_structure):
    p_, q_ = parse_expr("p", chqp), parse_expr("q", chqp)
    assert bracket(pican_structure, p_, q_) == RatFunc.const(chqp, 1)


def test_bracket_antisymmetry_diagonal(ch3, so3_structure):
    f = parse_expr("x*y + z^2", ch3)
    assert bracket(so3_structure, f, f).is_zero


def test_bracket_so3(ch3, so3_structure):
    x, y, z = (parse_expr(v, ch3) for v in "xyz")
    assert bracket(so3_structure, x, y) == z


def test_bracket_equals_dg_of_hamiltonian(ch3, so3_structure):
    rng = rng_for("dgxf")
    for _ in range(10):
        f = random_poly(rng, ch3)
        g = random_poly(rng, ch3)
        xf = hamiltonian_vf(so3_structure, f)
        assert bracket(so3_structure, f, g) == xf.apply_to(g)


# -- hamiltonian_vf -----------------------------------------------------------------


def test_hamiltonian_canonical(chqp, pican_structure):
    assert hamiltonian_vf(pican_structure, parse_expr("p", chqp)) == \
        MultiVec.basis_vector(chqp, 0)


def test_hamiltonian_constant(ch3, so3_structure):
    assert hamiltonian_vf(so3_structure, RatFunc.const(ch3, 5)).is_zero


def test_hamiltonian_casimir_so3(ch3, so3_structure):
    f = parse_expr("(x^2+y^2+z^2)/2", ch3)
    assert hamiltonian_vf(so3_structure, f).is_zero


# -- sharp_at ------------------------------------------------------------------------


def test_sharp_zero_structure(ch2):
    zero = MultiVec.zero(ch2, 2)
    assert sharp_at(zero, [F(1), F(1)], [F(1), F(0)]) == [F(0), F(0)]


def test_sharp_canonical(chqp, pican_structure):
    # covector dp maps to the d/dq direction
    assert sharp_at(pican_structure, [F(0), F(0)], [F(0), F(1)]) == [F(1), F(0)]


def test_sharp_so3(ch3, so3_structure):
    # evaluated by hand from the coefficient matrix at (0,0,1); the value is
    # (0, 1, 0) under the convention sharp_at(p, df|_p) = X_f(p)
    assert sharp_at(so3_structure, [F(0), F(0), F(1)], [F(1), F(0), F(0)]) == \
        [F(0), F(1), F(0)]


def test_sharp_consistent_with_hamiltonian(ch3, so3_structure):
    rng = rng_for("sharp")
    for _ in range(10):
        f = random_poly(rng, ch3)
        pt = [F(rng.randint(-3, 3)) for _ in range(3)]
        df = [f.diff(i).eval(pt) for i in range(3)]
        xf = hamiltonian_vf(so3_structure, f)
        assert sharp_at(so3_structure, pt, df) == [c.eval(pt) for c in xf.components()]


# -- is_poisson -------------------------------------------------------------------------


def test_constant_bivector_poisson():
    ch = chart("a", "b", "c", "d")
    pi = MultiVec(ch, 2, {(0, 1): RatFunc.const(ch, 3), (1, 3): RatFunc.const(ch, -2)})
    ok, cert = is_poisson(pi)
    assert ok and cert is None


def test_any_2d_bivector_poisson(ch2):
    rng = rng_for("2d")
    for _ in range(10):
        pi = MultiVec(ch2, 2, {(0, 1): random_poly(rng, ch2, max_degree=3)})
        assert is_poisson(pi)[0]


def test_s3_bracket_relations_poisson():
    ch = chart("x", "y", "z", "w")
    pi = MultiVec(ch, 2, {
        (0, 1): parse_expr("z^2+w^2", ch),
        (0, 2): parse_expr("-y*z", ch),
        (0, 3): parse_expr("-y*w", ch),
        (1, 2): parse_expr("x*z", ch),
        (1, 3): parse_expr("x*w", ch),
    })
    assert is_poisson(pi)[0]


def test_non_poisson_certificate(ch3):
    bad = MultiVec(ch3, 2, {
        (0, 1): parse_expr("x", ch3),
        (1, 2): parse_expr("y", ch3),
        (0, 2): parse_expr("z", ch3),
    })
    ok, cert = is_poisson(bad)
    assert not ok
    assert cert.degree == 3 and not cert.is_zero


# -- jacobiator ----------------------------------------------------------------------------


def test_jacobiator_vanishes_for_poisson(ch3, so3_structure):
    rng = rng_for("jac0")
    for _ in range(8):
        f, g, h = (random_poly(rng, ch3) for _ in range(3))
        assert jacobiator(so3_structure, f, g, h).is_zero


def test_jacobiator_book_fixture(ch3):
    # b = x dx^dy + y dy^dz + z dz^dx; hand expansion of the cyclic sum on
    # (x,y,z) gives {x,{y,z}} + {z,{x,y}} + {y,{z,x}} = x + z + y
    b = MultiVec(ch3, 2, {
        (0, 1): parse_expr("x", ch3),
        (1, 2): parse_expr("y", ch3),
        (0, 2): parse_expr("-z", ch3),
    })
    x, y, z = (parse_expr(v, ch3) for v in "xyz")
    assert jacobiator(b, x, y, z) == parse_expr("x+y+z", ch3)
    tri = jacobiator_trivector(b)
    assert tri.coeff((0, 1, 2)) == parse_expr("x+y+z", ch3)
    assert trivector_on_differentials(tri, x, y, z) == jacobiator(b, x, y, z)


def test_jacobiator_constant_slot(ch3):
    b = MultiVec(ch3, 2, {(0, 1): parse_expr("x*y", ch3), (1, 2): parse_expr("z", ch3)})
    f, g = parse_expr("x", ch3), parse_expr("y", ch3)
    assert jacobiator(b, f, g, RatFunc.const(ch3, 7)).is_zero


def test_trivector_contraction_random(ch3):
    rng = rng_for("tri")
    b = MultiVec(ch3, 2, {
        (0, 1): random_poly(rng, ch3),
        (1, 2): random_poly(rng, ch3),
        (0, 2): random_poly(rng, ch3),
    })
    tri = jacobiator_trivector(b)
    for _ in range(8):
        f, g, h = (random_poly(rng, ch3) for _ in range(3))
        assert trivector_on_differentials(tri, f, g, h) == jacobiator(b, f, g, h)


# -- rank and fibers ------------------------------------------------------------------------


def test_rank_canonical(ch4, pican4_structure):
    assert rank_at(pican4_structure, [F(0)] * 4) == 4


def test_rank_so3(so3_structure):
    assert rank_at(so3_structure, [F(0), F(0), F(0)]) == 0
    assert rank_at(so3_structure, [F(1), F(0), F(0)]) == 2


def test_rank_book_z_axis(book_structure):
    assert rank_at(book_structure, [F(0), F(0), F(5)]) == 0
    assert rank_at(book_structure, [F(1), F(0), F(0)]) == 2


def test_char_fiber_zero(ch2):
    cf = char_fiber(MultiVec.zero(ch2, 2), [F(0), F(0)])
    assert cf.r_basis == [] and cf.omega_matrix == []


def test_char_fiber_canonical(chqp, pican_structure):
    cf = char_fiber(pican_structure, [F(0), F(0)])
    assert len(cf.r_basis) == 2
    assert cf.reconstruct_matrix() == matrix_at(pican_structure.pi, [F(0), F(0)])
    # Omega is the inverse canonical form: nondegenerate 2x2 antisymmetric
    assert cf.omega_matrix[0][1] == -cf.omega_matrix[1][0] != 0


def test_char_fiber_so3(so3_structure):
    pt = [F(0), F(0), F(1)]
    cf = char_fiber(so3_structure, pt)
    assert linalg.span_eq(cf.r_basis, [[F(1), F(0), F(0)], [F(0), F(1), F(0)]])
    # Omega(pi# dx, pi# dy) = pi(dy, dx) = -1 at this point (3x3 by hand)
    assert cf.omega_matrix == [[F(0), F(-1)], [F(1), F(0)]]
    assert cf.reconstruct_matrix() == matrix_at(so3_structure.pi, pt)


def test_char_fiber_reconstruction_random(ch3):
    rng = rng_for("fiber")
    for _ in range(10):
        pi = MultiVec(ch3, 2, {
            (0, 1): random_poly(rng, ch3, max_degree=1),
            (1, 2): random_poly(rng, ch3, max_degree=1),
        })
        pt = [F(rng.randint(-2, 2)) for _ in range(3)]
        cf = char_fiber(pi, pt)
        assert cf.reconstruct_matrix() == matrix_at(pi, pt)


# -- darboux -------------------------------------------------------------------------------------


def _standard_blocks(k, l):
    n = 2 * k + l
    m = [[F(0)] * n for _ in range(n)]
    for r in range(k):
        m[2 * r][2 * r + 1] = F(1)
        m[2 * r + 1][2 * r] = F(-1)
    return m


def _in_new_basis(p, vectors):
    basis = [list(v) for v in vectors]
    c = linalg.mat_inverse(linalg.transpose(basis))
    return linalg.matmul(linalg.matmul(c, p), linalg.transpose(c))


def test_darboux_canonical(chqp, pican_structure):
    pairs, comp = darboux_basis_at(pican_structure, [F(0), F(0)])
    assert len(pairs) == 2 and comp == []
    p = matrix_at(pican_structure.pi, [F(0), F(0)])
    assert _in_new_basis(p, pairs) == _standard_blocks(1, 0)


def test_darboux_zero(ch3):
    pairs, comp = darboux_basis_at(MultiVec.zero(ch3, 2), [F(0)] * 3)
    assert pairs == [] and len(comp) == 3


def test_darboux_so3(so3_structure):
    pt = [F(0), F(0), F(1)]
    pairs, comp = darboux_basis_at(so3_structure, pt)
    assert len(pairs) == 2 and len(comp) == 1
    p = matrix_at(so3_structure.pi, pt)
    assert _in_new_basis(p, pairs + comp) == _standard_blocks(1, 1)


def test_darboux_random_matrices(ch4):
    rng = rng_for("darboux")
    for _ in range(10):
        coeffs = {}
        for i in range(4):
            for j in range(i + 1, 4):
                coeffs[(i, j)] = RatFunc.const(ch4, rng.randint(-3, 3))
        pi = MultiVec(ch4, 2, coeffs)
        pt = [F(0)] * 4
        pairs, comp = darboux_basis_at(pi, pt)
        p = matrix_at(pi, pt)
        assert rank_at(pi, pt) == len(pairs)  # pairs holds 2k vectors
        assert _in_new_basis(p, pairs + comp) == \
            _standard_blocks(len(pairs) // 2, len(comp))


# -- casimirs --------------------------------------------------------------------------------------


def test_casimir_sl2r(ch3, sl2r_structure):
    assert casimir_check(sl2r_structure, parse_expr("x^2+y^2-z^2", ch3))


def test_casimir_negative(chqp, pican_structure):
    assert not casimir_check(pican_structure, parse_expr("q", chqp))


def test_casimir_zero_structure(ch3):
    zero = verify(MultiVec.zero(ch3, 2))
    rng = rng_for("cas0")
    assert casimir_check(zero, random_poly(rng, ch3))


# -- modular vector field ----------------------------------------------------------------------------


def test_modular_x_structure(ch2, xdxdy_structure):
    assert modular_vf(xdxdy_structure, coordinate_volume(ch2)) == \
        -MultiVec.basis_vector(ch2, 1)


def test_modular_symplectic_unimodular(ch4, pican4_structure):
    assert modular_vf(pican4_structure, coordinate_volume(ch4)).is_zero


def test_modular_volume_change(ch2, xdxdy_structure):
    # eta' = f eta with positive f: X_eta - X_eta' = (1/f) pi#(df)
    f = parse_expr("1 + x^2", ch2)
    eta = coordinate_volume(ch2)
    eta2 = DiffForm(ch2, 2, {(0, 1): f})
    lhs = modular_vf(xdxdy_structure, eta) - modular_vf(xdxdy_structure, eta2)
    expected = hamiltonian_vf(xdxdy_structure, f).scale(RatFunc.const(ch2, 1) / f)
    assert lhs == expected


def test_modular_is_poisson_field(ch2, xdxdy_structure):
    mv = modular_vf(xdxdy_structure, coordinate_volume(ch2))
    assert d_pi(xdxdy_structure, mv).is_zero


def test_modular_rejects_vanishing_volume(ch2, xdxdy_structure):
    with pytest.raises(PoissonError):
        modular_vf(xdxdy_structure, DiffForm.zero(ch2, 2))


# -- d_pi and cohomology -----------------------------------------------------------------------------


def test_d_pi_of_function(ch2, xdxdy_structure):
    f = parse_expr("x*y", ch2)
    assert d_pi(xdxdy_structure, MultiVec.from_scalar(f)) == \
        -hamiltonian_vf(xdxdy_structure, f)


def test_d_pi_of_pi(xdxdy_structure):
    assert d_pi(xdxdy_structure, xdxdy_structure.pi).is_zero


def test_d_pi_poisson_field(ch2, xdxdy_structure):
    assert d_pi(xdxdy_structure, MultiVec.basis_vector(ch2, 1)).is_zero


def test_d_pi_refuses_unverified(ch3):
    bad = MultiVec(ch3, 2, {
        (0, 1): parse_expr("x", ch3),
        (1, 2): parse_expr("y", ch3),
        (0, 2): parse_expr("z", ch3),
    })
    ps = verify(bad)
    assert not ps.verified
    with pytest.raises(PoissonError):
        d_pi(ps, MultiVec.basis_vector(ch3, 0))


def test_d_pi_squared_zero(ch2, xdxdy_structure):
    rng = rng_for("dpisq")
    for _ in range(10):
        x = MultiVec(ch2, 1, {(0,): random_poly(rng, ch2), (1,): random_poly(rng, ch2)})
        assert d_pi(xdxdy_structure, d_pi(xdxdy_structure, x)).is_zero


def test_cohomology_x_structure(xdxdy_structure):
    sums = {0: 0, 1: 0, 2: 0}
    reps = []
    for d in range(7):
        for k in range(3):
            rep = cohomology(xdxdy_structure, k, d)
            assert rep.dim_h == rep.dim_kernel - rep.dim_image
            sums[k] += rep.dim_h
            if k == 1:
                reps.extend(rep.representatives)
    assert sums == {0: 1, 1: 1, 2: 0}
    assert len(reps) == 1
    assert reps[0] == MultiVec.basis_vector(xdxdy_structure.chart, 1)


def test_cohomology_zero_structure(ch2):
    zero = verify(MultiVec.zero(ch2, 2))
    # zero differential: H^k at degree d is the whole space of k-vectors
    rep = cohomology(zero, 1, 2)
    assert rep.dim_h == rep.dim_kernel == 6  # 2 components x 3 monomials
    assert rep.dim_image == 0


def test_cohomology_canonical_no_casimirs(chqp, pican_structure):
    for d in range(1, 5):
        assert cohomology(pican_structure, 0, d).dim_h == 0
    assert cohomology(pican_structure, 0, 0).dim_h == 1


def test_cohomology_h0_matches_casimir_solve(xdxdy_structure):
    # dim H^0 at degree d equals the dimension of degree-d Casimirs
    for d in range(4):
        rep = cohomology(xdxdy_structure, 0, d)
        for r in rep.representatives:
            assert casimir_check(xdxdy_structure, r.scalar())


def test_cohomology_rejects_inhomogeneous(ch2):
    pi = MultiVec(ch2, 2, {(0, 1): parse_expr("1 + x", ch2)})
    with pytest.raises(PoissonError):
        cohomology(verify(pi), 0, 1)


def test_cohomology_report_serializes(xdxdy_structure):
    rep = cohomology(xdxdy_structure, 1, 0)
    text = rep.serialize()
    assert "dim_H=1" in text and "rep: 1 d/dy" in text


# -- gauge transformations ----------------------------------------------------------------------------


def test_gauge_identity(ch3, so3_structure):
    out = gauge_transform(so3_structure, DiffForm.zero(ch3, 2))
    assert out.pi == so3_structure.pi


def test_gauge_constant_2d(chqp, pican_structure):
    # B = c dq^dp with c = 2: pi_B = (1/(1+c)) dp^dq (2x2 inverse by hand)
    b = DiffForm(chqp, 2, {(0, 1): RatFunc.const(chqp, 2)})
    out = gauge_transform(pican_structure, b)
    assert out.verified
    assert out.pi == MultiVec(chqp, 2, {(0, 1): RatFunc.const(chqp, F(-1, 3))})


def test_gauge_involution(ch2, xdxdy_structure):
    b = DiffForm(ch2, 2, {(0, 1): parse_expr("y", ch2)})
    forward = gauge_transform(xdxdy_structure, b)
    assert forward.verified
    back = gauge_transform(forward, DiffForm(ch2, 2, {(0, 1): parse_expr("-y", ch2)}))
    assert back.pi == xdxdy_structure.pi


def test_gauge_rejects_nonclosed():
    ch = chart("x", "y", "z")
    pi = verify(MultiVec(ch, 2, {(0, 1): RatFunc.const(ch, 1)}))
    b = DiffForm(ch, 2, {(0, 1): parse_expr("z", ch)})
    with pytest.raises(NotClosedError):
        gauge_transform(pi, b)


def test_gauge_rejects_singular(ch2):
    # with {x,y} = 1 and B = c dx^dy the matrix I + P W is (1 - c) I, so
    # c = 1 makes it identically singular
    pi = verify(MultiVec(ch2, 2, {(0, 1): RatFunc.const(ch2, 1)}))
    b = DiffForm(ch2, 2, {(0, 1): RatFunc.const(ch2, 1)})
    with pytest.raises(PoissonError):
        gauge_transform(pi, b)


# -- is_poisson_map -------------------------------------------------------------------------------------


def test_projection_is_poisson_map(ch3, so3_structure):
    big = chart("x1", "y1", "z1", "u", "v")
    # product of so3* with the zero structure on R^2
    coeffs = {}
    for (i, j), c in so3_structure.pi.coeffs.items():
        coeffs[(i, j)] = c.subst([RatFunc.var(big, k) for k in range(3)])
    product = verify(MultiVec(big, 2, coeffs))
    proj = PolyMap(big, ch3, tuple(RatFunc.var(big, i) for i in range(3)))
    ok, mode = is_poisson_map(proj, product, so3_structure)
    assert ok and mode == "symbolic"


def test_identity_is_poisson_map(ch3, so3_structure):
    ok, _ = is_poisson_map(PolyMap.identity(ch3), so3_structure, so3_structure)
    assert ok


def test_diagonal_not_poisson_map(ch2, xdxdy_structure):
    big = chart("x1", "y1", "x2", "y2")
    x1 = parse_expr("x1", big)
    x2 = parse_expr("x2", big)
    product = verify(MultiVec(big, 2, {(0, 1): x1, (2, 3): x2}))
    diag = PolyMap(ch2, big, (
        parse_expr("x", ch2), parse_expr("y", ch2),
        parse_expr("x", ch2), parse_expr("y", ch2),
    ))
    ok, _ = is_poisson_map(diag, xdxdy_structure, product)
    assert not ok


def test_sampled_poisson_map_mode(ch2, xdxdy_structure):
    # rational (non-polynomial) map falls back to sample evaluation
    phi = PolyMap(ch2, ch2, (parse_expr("x", ch2), parse_expr("y/(1+x^2)", ch2)))
    samples = [[F(i), F(j)] for i in range(-2, 3) for j in range(-2, 3)]
    ok, mode = is_poisson_map(phi, xdxdy_structure, xdxdy_structure, samples)
    assert mode == "sampled"
    assert not ok


# -- top power and log degeneracy -----------------------------------------------------------------------


def test_top_power_canonical(chqp, pican_structure):
    top = top_power(pican_structure)
    assert top.coeff((0, 1)) == RatFunc.const(chqp, -1)


def test_top_power_odd_dimension(ch3, so3_structure):
    with pytest.raises(PoissonError):
        top_power(so3_structure)


def test_log_degeneracy_log4d():
    ch = chart("y1", "y2", "q", "p")
    pi = verify(MultiVec(ch, 2, {
        (0, 1): parse_expr("y1", ch),
        (2, 3): RatFunc.const(ch, -1),
    }))
    top = top_power(pi)
    coeff = top.coeff((0, 1, 2, 3))
    assert coeff == parse_expr("-2*y1", ch)  # raw wedge, no 1/n!
    samples = [[F(0), F(t), F(1), F(2)] for t in range(3)]
    report = log_degeneracy_check(pi, samples)
    assert report.all_transversal


def test_log_degeneracy_violation(ch2):
    pi = verify(MultiVec(ch2, 2, {(0, 1): parse_expr("x^2", ch2)}))
    report = log_degeneracy_check(pi, [[F(0), F(1)]])
    assert not report.all_transversal
    assert report.violating_points == [[F(0), F(1)]]


def test_log_degeneracy_rejects_off_locus(ch2, xdxdy_structure):
    with pytest.raises(PoissonError):
        log_degeneracy_check(xdxdy_structure, [[F(1), F(0)]])


# -- isotropy Lie algebra ------------------------------------------------------------------------------


def test_isotropy_so3_at_origin(so3_structure):
    g = isotropy_bracket_at(so3_structure, [F(0)] * 3)
    assert g.dim == 3
    assert g.bracket_basis(0, 1) == [F(0), F(0), F(1)]
    assert g.bracket_basis(1, 2) == [F(1), F(0), F(0)]
    assert g.bracket_basis(2, 0) == [F(0), F(1), F(0)]


def test_isotropy_trivial_on_symplectic(pican_structure):
    g = isotropy_bracket_at(pican_structure, [F(2), F(-1)])
    assert g.dim == 0


def test_isotropy_abelian(ch2):
    pi = verify(MultiVec(ch2, 2, {(0, 1): parse_expr("x^2+y^2", ch2)}))
    g = isotropy_bracket_at(pi, [F(0), F(0)])
    assert g.dim == 2
    assert all(
        g.bracket_basis(i, j) == [F(0), F(0)] for i in range(2) for j in range(2)
    )


# -- structural invariants ---------------------------------------------------------------------------------


def test_hamiltonian_fields_bracket_homomorphism(ch3, so3_structure):
    from poisskit.multivec import schouten

    rng = rng_for("brkpres")
    for _ in range(10):
        f = random_poly(rng, ch3)
        g = random_poly(rng, ch3)
        lhs = schouten(
            hamiltonian_vf(so3_structure, f), hamiltonian_vf(so3_structure, g)
        )
        rhs = hamiltonian_vf(so3_structure, bracket(so3_structure, f, g))
        assert lhs == rhs


def test_bracket_leibniz(ch3, sl2r_structure):
    rng = rng_for("leib2")
    for _ in range(10):
        f, g, h = (random_poly(rng, ch3) for _ in range(3))
        assert bracket(sl2r_structure, f, g * h) == \
            bracket(sl2r_structure, f, g) * h + bracket(sl2r_structure, f, h) * g
