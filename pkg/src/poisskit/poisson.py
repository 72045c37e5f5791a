"""Poisson-structure analysis on a chart.

Matrix convention: the matrix of a bivector pi has entry (i,j) equal to
{x_i, x_j}, so pi = sum_{i<j} P[i][j] d/dx_i ^ d/dx_j and

    {f,g} = sum_{i,j} P[i][j] df/dx_i dg/dx_j,
    X_f   = pi#(df),   (pi# alpha)_j = sum_i alpha_i P[i][j].

With these choices {f,g} = dg(X_f) and [pi, f] = -X_f for the Schouten
bracket of ``multivec``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg
from .expr import Chart, ChartMismatchError, ExprError, Poly, RatFunc
from .multivec import (
    DiffForm,
    MultiVec,
    PolyMap,
    contract,
    exterior_derivative,
    pushforward_bivector_at,
    schouten,
    wedge,
)


class PoissonError(ExprError):
    pass


class NotClosedError(PoissonError):
    """Gauge transformation attempted with a non-closed 2-form."""


class NotCosymplecticError(PoissonError):
    """Constraint-bracket matrix is singular."""


@dataclass
class PoissonStructure:
    """A bivector field together with a [pi,pi] = 0 certificate."""

    pi: MultiVec
    verified: bool
    schouten_square: MultiVec = None

    @property
    def chart(self) -> Chart:
        return self.pi.chart

    def __post_init__(self):
        if self.pi.degree != 2:
            raise PoissonError("a Poisson structure needs a degree-2 multivector")


def bivector_matrix(pi: MultiVec) -> list[list[RatFunc]]:
    """Full antisymmetric coefficient matrix, P[i][j] = {x_i, x_j}."""
    n = pi.chart.dim
    zero = RatFunc.zero(pi.chart)
    m = [[zero for _ in range(n)] for _ in range(n)]
    for (i, j), c in pi.coeffs.items():
        m[i][j] = c
        m[j][i] = -c
    return m


def bivector_from_matrix(chart: Chart, m) -> MultiVec:
    coeffs = {}
    for i in range(chart.dim):
        for j in range(i + 1, chart.dim):
            coeffs[(i, j)] = m[i][j]
    return MultiVec(chart, 2, coeffs)


def matrix_at(pi: MultiVec, point) -> list[list[Fraction]]:
    return [[e.eval(point) for e in row] for row in bivector_matrix(pi)]


def _pi_of(obj) -> MultiVec:
    if isinstance(obj, PoissonStructure):
        return obj.pi
    if isinstance(obj, MultiVec) and obj.degree == 2:
        return obj
    raise PoissonError("expected a PoissonStructure or a degree-2 MultiVec")


# -- verification --------------------------------------------------------------


def is_poisson(bivector: MultiVec):
    """(True, None) when [pi,pi] = 0 exactly, else (False, the trivector)."""
    if bivector.degree != 2:
        raise PoissonError("is_poisson needs a degree-2 multivector")
    square = schouten(bivector, bivector)
    if square.is_zero:
        return True, None
    return False, square


def verify(bivector: MultiVec) -> PoissonStructure:
    ok, square = is_poisson(bivector)
    return PoissonStructure(bivector, ok, square)


def require_poisson(bivector: MultiVec) -> PoissonStructure:
    ps = verify(bivector)
    if not ps.verified:
        raise PoissonError(
            f"not a Poisson bivector; [pi,pi] = {ps.schouten_square}"
        )
    return ps


# -- brackets and Hamiltonian fields -------------------------------------------


def bracket(structure, f: RatFunc, g: RatFunc) -> RatFunc:
    """{f,g} = pi(df, dg)."""
    pi = _pi_of(structure)
    if f.chart != pi.chart or g.chart != pi.chart:
        raise ChartMismatchError("bracket arguments live on another chart")
    out = RatFunc.zero(pi.chart)
    for (i, j), c in pi.coeffs.items():
        out = out + c * (f.diff(i) * g.diff(j) - f.diff(j) * g.diff(i))
    return out


def hamiltonian_vf(structure, f: RatFunc) -> MultiVec:
    """X_f = pi#(df)."""
    pi = _pi_of(structure)
    if f.chart != pi.chart:
        raise ChartMismatchError("function lives on another chart")
    comps = {}
    for (i, j), c in pi.coeffs.items():
        # contribution of the term c d/dx_i ^ d/dx_j
        comps[j] = comps.get(j, RatFunc.zero(pi.chart)) + c * f.diff(i)
        comps[i] = comps.get(i, RatFunc.zero(pi.chart)) - c * f.diff(j)
    return MultiVec(pi.chart, 1, {(k,): v for k, v in comps.items()})


def sharp_at(structure, point, covector) -> list[Fraction]:
    """pi#(alpha) at a point: the row vector alpha times the pi matrix.

    Oriented so that sharp_at(pi, p, df|_p) equals X_f(p) exactly.
    """
    pi = _pi_of(structure)
    p = matrix_at(pi, point)
    alpha = [Fraction(a) for a in covector]
    n = pi.chart.dim
    return [sum((alpha[i] * p[i][j] for i in range(n)), Fraction(0)) for j in range(n)]


def casimir_check(structure, f: RatFunc) -> bool:
    return hamiltonian_vf(structure, f).is_zero


# -- jacobiator ---------------------------------------------------------------


def jacobiator(bivector, f: RatFunc, g: RatFunc, h: RatFunc) -> RatFunc:
    """Cyclic sum {f,{g,h}} + {h,{f,g}} + {g,{h,f}}."""
    b = _pi_of(bivector)
    return (
        bracket(b, f, bracket(b, g, h))
        + bracket(b, h, bracket(b, f, g))
        + bracket(b, g, bracket(b, h, f))
    )


def jacobiator_trivector(bivector) -> MultiVec:
    """(1/2) [pi, pi]; contracts against (df,dg,dh) to the scalar jacobiator."""
    b = _pi_of(bivector)
    return schouten(b, b).scale(Fraction(1, 2))


def trivector_on_differentials(t: MultiVec, f: RatFunc, g: RatFunc, h: RatFunc) -> RatFunc:
    """Evaluate a trivector on (df, dg, dh)."""
    if t.degree != 3:
        raise PoissonError("need a degree-3 multivector")
    chart = t.chart
    dfs = [[w.diff(i) for i in range(chart.dim)] for w in (f, g, h)]
    out = RatFunc.zero(chart)
    for (i, j, k), c in t.coeffs.items():
        det = RatFunc.zero(chart)
        for perm, sign in (
            ((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
            ((0, 2, 1), -1), ((1, 0, 2), -1), ((2, 1, 0), -1),
        ):
            a, b_, c_ = perm
            term = dfs[a][i] * dfs[b_][j] * dfs[c_][k]
            det = det + term if sign > 0 else det - term
        out = out + c * det
    return out


# -- pointwise rank and symplectic data ----------------------------------------


def rank_at(structure, point) -> int:
    return linalg.rank(matrix_at(_pi_of(structure), point))


@dataclass
class CharFiber:
    """Pointwise characteristic fiber: a basis of R = im(pi#) and the induced
    nondegenerate form with Omega(pi# a, pi# b) = pi(b, a)."""

    base_point: list[Fraction]
    r_basis: list[list[Fraction]]       # column vectors u_a = pi#(dx_{i_a})
    omega_matrix: list[list[Fraction]]
    covector_indices: list[int]

    def reconstruct_matrix(self) -> list[list[Fraction]]:
        """U Omega^{-1} U^T; must reproduce the evaluated pi matrix."""
        if not self.r_basis:
            n = len(self.base_point)
            return [[Fraction(0)] * n for _ in range(n)]
        u = linalg.transpose(self.r_basis)  # columns are basis vectors
        o_inv = linalg.mat_inverse(self.omega_matrix)
        return linalg.matmul(linalg.matmul(u, o_inv), linalg.transpose(u))


def char_fiber(structure, point) -> CharFiber:
    pi = _pi_of(structure)
    p = matrix_at(pi, point)
    n = pi.chart.dim
    # columns of S = P^T are pi#(dx_i); pick independent ones via rref
    s = linalg.transpose(p)
    _, pivots = linalg.rref(s)
    basis = [[p[i][j] for j in range(n)] for i in pivots]  # row i of P = pi#(dx_i)
    omega = [[p[b][a] for b in pivots] for a in pivots]    # Omega_ab = pi(dx_b, dx_a)
    return CharFiber(list(point), basis, omega, list(pivots))


def darboux_basis_at(structure, point):
    """Tangent basis in which the evaluated matrix is a standard symplectic
    block plus a zero block.

    Returns (symplectic_pairs_basis, complement_basis); the first list holds
    2k vectors ordered in pairs (a_1, b_1, ..., a_k, b_k) with pi(a_r, b_r)=1
    read through the dual covectors.
    """
    pi = _pi_of(structure)
    p = matrix_at(pi, point)
    n = pi.chart.dim

    def omega(u, v):
        return sum(
            (u[i] * p[i][j] * v[j] for i in range(n) for j in range(n)),
            Fraction(0),
        )

    # skew Gram-Schmidt in covector space
    pending = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    pairs = []
    comp = []
    while pending:
        u = pending.pop(0)
        partner = next((w for w in pending if omega(u, w) != 0), None)
        if partner is None:
            comp.append(u)
            continue
        pending.remove(partner)
        c = omega(u, partner)
        v = [x / c for x in partner]
        pairs.append((u, v))
        reduced = []
        for w in pending + comp:
            w2 = [
                wi - omega(u, w) * vi + omega(v, w) * ui
                for wi, ui, vi in zip(w, u, v)
            ]
            reduced.append(w2)
        k = len(pending)
        pending, comp = reduced[:k], reduced[k:]
    covectors = [c for pair in pairs for c in pair] + comp
    basis_matrix = linalg.mat_inverse(covectors)  # columns are the dual vectors
    cols = linalg.transpose(basis_matrix)
    split = 2 * len(pairs)
    return cols[:split], cols[split:]


# -- modular vector field -------------------------------------------------------


def modular_vf(structure, volume: DiffForm) -> MultiVec:
    """The vector field X with L_X f = div_volume(X_f) for all f."""
    pi = _pi_of(structure)
    chart = pi.chart
    n = chart.dim
    if volume.degree != n:
        raise PoissonError("volume form must have top degree")
    rho = volume.coeff(tuple(range(n)))
    if rho.is_zero:
        raise PoissonError("volume coefficient vanishes identically")
    p = bivector_matrix(pi)
    comps = {}
    for j in range(n):
        acc = RatFunc.zero(chart)
        for i in range(n):
            acc = acc + p[j][i].diff(i) + p[j][i] * rho.diff(i) / rho
        comps[(j,)] = acc
    return MultiVec(chart, 1, comps)


# -- Poisson cohomology (polynomial truncation) ---------------------------------


@dataclass
class CohomologyReport:
    degree: int
    poly_degree: int
    dim_kernel: int
    dim_image: int
    dim_h: int
    representatives: list[MultiVec]

    def serialize(self) -> str:
        lines = [
            f"k={self.degree} d={self.poly_degree} "
            f"dim_ker={self.dim_kernel} dim_im={self.dim_image} dim_H={self.dim_h}"
        ]
        for rep in self.representatives:
            lines.append(f"  rep: {rep}")
        return "\n".join(lines)


def d_pi(structure: PoissonStructure, x: MultiVec) -> MultiVec:
    """Lichnerowicz differential [pi, .]; requires a verified structure."""
    if not isinstance(structure, PoissonStructure) or not structure.verified:
        raise PoissonError("d_pi requires a verified Poisson structure")
    return schouten(structure.pi, x)


def _coefficient_degree(pi: MultiVec) -> int:
    degs = set()
    for c in pi.coeffs.values():
        if not c.is_polynomial:
            raise PoissonError("cohomology needs polynomial coefficients")
        poly = c.as_poly()
        degs.update(sum(e) for e in poly.terms)
    if len(degs) > 1:
        raise PoissonError(
            f"unsupported: coefficients not degree-homogeneous (degrees {sorted(degs)})"
        )
    return degs.pop() if degs else 0


def _monomials(chart: Chart, degree: int):
    if degree < 0:
        return []
    out = []
    for combo in itertools.combinations_with_replacement(range(chart.dim), degree):
        e = [0] * chart.dim
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return sorted(out)


def _kvector_basis(chart: Chart, k: int, degree: int):
    idxs = list(itertools.combinations(range(chart.dim), k))
    monos = _monomials(chart, degree)
    return [(idx, m) for idx in idxs for m in monos]


def _basis_element(chart: Chart, idx, mono) -> MultiVec:
    return MultiVec(
        chart, len(idx), {idx: RatFunc.from_poly(Poly(chart, {mono: Fraction(1)}))}
    )


def _vector_of(mv: MultiVec, basis, index_of):
    v = [Fraction(0)] * len(basis)
    for idx, c in mv.coeffs.items():
        poly = c.as_poly()
        for mono, coef in poly.terms.items():
            v[index_of[(idx, mono)]] = coef
    return v


def cohomology(structure: PoissonStructure, k: int, d: int) -> CohomologyReport:
    """Exact H^k of d_pi on k-vectors with degree-d polynomial coefficients.

    Requires pi's coefficients homogeneous of a single polynomial degree so
    d_pi is degree-homogeneous; with delta that degree, the incoming image is
    taken from (k-1)-vectors of degree d - delta + 1.
    """
    pi = _pi_of(structure)
    chart = pi.chart
    if not isinstance(structure, PoissonStructure) or not structure.verified:
        raise PoissonError("cohomology requires a verified Poisson structure")
    if k > chart.dim or k < 0 or d < 0:
        raise PoissonError("invalid (k, d)")
    delta = _coefficient_degree(pi)

    dom = _kvector_basis(chart, k, d)
    cod = _kvector_basis(chart, k + 1, d + delta - 1)
    cod_index = {b: i for i, b in enumerate(cod)}
    # outgoing differential
    cols = []
    for idx, mono in dom:
        image = d_pi(structure, _basis_element(chart, idx, mono))
        cols.append(_vector_of(image, cod, cod_index) if cod else [])
    out_matrix = linalg.transpose(cols) if cod else []
    kernel = (
        linalg.kernel_basis(out_matrix, ncols=len(dom)) if out_matrix else
        [ [Fraction(1 if i == j else 0) for j in range(len(dom))] for i in range(len(dom)) ]
    )
    # incoming image
    dim_image = 0
    image_vectors = []
    if k >= 1 and d - delta + 1 >= 0:
        prev = _kvector_basis(chart, k - 1, d - delta + 1)
        dom_index = {b: i for i, b in enumerate(dom)}
        for idx, mono in prev:
            image = d_pi(structure, _basis_element(chart, idx, mono))
            image_vectors.append(_vector_of(image, dom, dom_index))
        image_vectors = linalg.canonical_span(image_vectors)
        dim_image = len(image_vectors)
    dim_kernel = len(kernel)
    dim_h = dim_kernel - dim_image
    # representatives: kernel vectors extending the image to a kernel basis
    reps = []
    span = list(image_vectors)
    for v in kernel:
        if len(reps) == dim_h:
            break
        extended = linalg.canonical_span(span + [v])
        if len(extended) > len(linalg.canonical_span(span)):
            span.append(v)
            mv = MultiVec.zero(chart, k)
            for coef, (idx, mono) in zip(v, dom):
                if coef:
                    mv = mv + _basis_element(chart, idx, mono).scale(coef)
            reps.append(mv)
    return CohomologyReport(k, d, dim_kernel, dim_image, dim_h, reps)


# -- gauge transformations -------------------------------------------------------


def form_matrix(b_form: DiffForm) -> list[list[RatFunc]]:
    """Full antisymmetric matrix W[i][j] = B(d/dx_i, d/dx_j) of a 2-form."""
    n = b_form.chart.dim
    zero = RatFunc.zero(b_form.chart)
    w = [[zero for _ in range(n)] for _ in range(n)]
    for (i, j), c in b_form.coeffs.items():
        w[i][j] = c
        w[j][i] = -c
    return w


def gauge_matrix(p, w, chart: Chart):
    """(I + P W)^-1 P, or None when I + P W is singular as a RatFunc matrix."""
    n = chart.dim
    one = RatFunc.const(chart, 1)
    zero = RatFunc.zero(chart)
    pw = linalg.matmul(p, w)
    m = [[pw[i][j] + (one if i == j else zero) for j in range(n)] for i in range(n)]
    m_inv = linalg.mat_inverse(m, one=one)
    if m_inv is None:
        return None
    return linalg.matmul(m_inv, p)


def gauge_transform(structure, b_form: DiffForm) -> PoissonStructure:
    """Gauge transformation by a closed 2-form: pi_B# = pi# (Id + B_flat pi#)^-1.

    In matrices (P the pi matrix, W the form matrix) this is
    P_B = (I + P W)^-1 P.
    """
    pi = _pi_of(structure)
    chart = pi.chart
    if b_form.degree != 2 or b_form.chart != chart:
        raise PoissonError("gauge needs a 2-form on the same chart")
    db = exterior_derivative(b_form)
    if not db.is_zero:
        raise NotClosedError(f"2-form is not closed; dB = {db}")
    pb = gauge_matrix(bivector_matrix(pi), form_matrix(b_form), chart)
    if pb is None:
        raise PoissonError("Id + B_flat pi# singular as a rational-function matrix")
    return verify(bivector_from_matrix(chart, pb))


# -- Poisson map check -----------------------------------------------------------


def is_poisson_map(phi: PolyMap, source_structure, target_structure, samples=None):
    """Check pi2# = dphi pi1# (dphi)* along phi.

    Symbolic (exact substitution) whenever everything is polynomial;
    otherwise exact evaluation at the supplied sample points, reported as
    sampled evidence.  Returns (bool, mode).
    """
    pi1 = _pi_of(source_structure)
    pi2 = _pi_of(target_structure)
    if pi1.chart != phi.source or pi2.chart != phi.target:
        raise ChartMismatchError("charts do not match the map")
    p1 = bivector_matrix(pi1)
    p2 = bivector_matrix(pi2)
    jac = phi.jacobian()
    symbolic = phi.is_polynomial and all(
        c.is_polynomial for row in (p1 + p2) for c in row
    )
    if symbolic:
        push = linalg.matmul(linalg.matmul(jac, p1), linalg.transpose(jac))
        comps = list(phi.components)
        for i in range(phi.target.dim):
            for j in range(phi.target.dim):
                lhs = p2[i][j].subst(comps)
                if not (lhs - push[i][j]).is_zero:
                    return False, "symbolic"
        return True, "symbolic"
    if not samples:
        raise PoissonError("non-polynomial data: sample points required")
    for point in samples:
        push = pushforward_bivector_at(phi, matrix_at(pi1, point), point)
        target_point = phi(point)
        tgt = matrix_at(pi2, target_point)
        if push != tgt:
            return False, "sampled"
    return True, "sampled"


# -- top power / log degeneracy ---------------------------------------------------


def top_power(structure) -> MultiVec:
    """Raw n-fold wedge pi^n on a 2n-dimensional chart (no 1/n!)."""
    pi = _pi_of(structure)
    n2 = pi.chart.dim
    if n2 % 2:
        raise PoissonError("top_power needs an even-dimensional chart")
    out = MultiVec.from_scalar(RatFunc.const(pi.chart, 1))
    for _ in range(n2 // 2):
        out = wedge(out, pi)
    return out


@dataclass
class LogDegeneracyReport:
    top_coefficient: RatFunc
    transversal_points: list
    violating_points: list

    @property
    def all_transversal(self) -> bool:
        return not self.violating_points


def log_degeneracy_check(structure, samples) -> LogDegeneracyReport:
    """Check transversality of the vanishing of the top coefficient at the
    given zero-locus samples (gradient nonzero there)."""
    pi = _pi_of(structure)
    n = pi.chart.dim
    top = top_power(structure)
    f = top.coeff(tuple(range(n)))
    good, bad = [], []
    for point in samples:
        if f.eval(point) != 0:
            raise PoissonError(f"sample {point} is not on the zero locus")
        grad = [f.diff(i).eval(point) for i in range(n)]
        (good if any(g != 0 for g in grad) else bad).append(list(point))
    return LogDegeneracyReport(f, good, bad)


# -- isotropy (transverse) Lie algebra --------------------------------------------


def isotropy_bracket_at(structure, point):
    """Transverse Lie algebra at a point, on ker(pi#)* via c_ijk = d(pi_ij)/dx_k.

    Jacobi failure signals an implementation bug (ruled out by theory), so
    the returned algebra is constructed through the verifying constructor.
    """
    from .liealg import lie_from_constants

    pi = _pi_of(structure)
    chart = pi.chart
    n = chart.dim
    p = matrix_at(pi, point)
    # kernel of pi#: covectors alpha with alpha . P = 0
    kernel = linalg.kernel_basis(linalg.transpose(p), ncols=n)
    m = len(kernel)
    if m == 0:
        return lie_from_constants(0, [])
    pmat = bivector_matrix(pi)
    kernel_rows = linalg.canonical_span(kernel)
    triples = []
    for a in range(m):
        for b in range(a + 1, m):
            alpha, beta = kernel_rows[a], kernel_rows[b]
            # d{f,g}|_point for linear f,g with df=alpha, dg=beta
            comps = []
            for k in range(n):
                acc = Fraction(0)
                for i in range(n):
                    for j in range(n):
                        if alpha[i] and beta[j]:
                            acc += alpha[i] * beta[j] * pmat[i][j].diff(k).eval(point)
                comps.append(acc)
            coords = linalg.solve(linalg.transpose(kernel_rows), comps)
            if coords is None:
                raise PoissonError(
                    "transverse bracket left the conormal space (implementation bug)"
                )
            for k, c in enumerate(coords):
                if c:
                    triples.append((a, b, k, c))
    return lie_from_constants(m, triples)
