"""Finite-dimensional Lie algebras by structure constants, the algebraic
Schouten calculus on the exterior algebra, Lie-Poisson structures on the
dual chart, r-matrices, cobrackets, and Lie-algebroid dual charts.

All algebras carry an explicit ordered basis e_0, ..., e_{m-1} with
[e_i, e_j] = sum_k c[i][j][k] e_k; antisymmetry and the Jacobi identity are
verified exactly on construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import poisson
from .expr import Chart, ExprError, Poly, RatFunc, chart as make_chart
from .multivec import MultiVec, PolyMap
from .poisson import PoissonStructure, verify


class LieAlgebraError(ExprError):
    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


@dataclass(frozen=True)
class LieAlgebra:
    dim: int
    constants: tuple  # constants[i][j][k] = coefficient of e_k in [e_i, e_j]

    def c(self, i: int, j: int, k: int) -> Fraction:
        return self.constants[i][j][k]

    def bracket_basis(self, i: int, j: int) -> list[Fraction]:
        return list(self.constants[i][j])

    def bracket(self, u, v) -> list[Fraction]:
        """Bracket of coefficient vectors."""
        out = [Fraction(0)] * self.dim
        for i, ui in enumerate(u):
            if not ui:
                continue
            for j, vj in enumerate(v):
                if not vj:
                    continue
                for k in range(self.dim):
                    out[k] += ui * vj * self.c(i, j, k)
        return out

    def ad_matrix(self, i: int) -> list[list[Fraction]]:
        """Matrix of ad_{e_i}: column j holds [e_i, e_j]."""
        return [[self.c(i, j, k) for j in range(self.dim)] for k in range(self.dim)]


def lie_from_constants(dim: int, triples) -> LieAlgebra:
    """Build and verify a Lie algebra from sparse triples (i, j, k, value).

    Omitted entries are zero; the antisymmetric completion c_jik = -c_ijk is
    applied automatically.  Raises LieAlgebraError with the violating indices
    on antisymmetry or Jacobi failure.
    """
    c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
    for i, j, k, val in triples:
        if i == j and Fraction(val) != 0:
            raise LieAlgebraError(
                f"antisymmetry fails at (i,j,k)=({i},{j},{k}): [e_i,e_i] != 0",
                indices=(i, j, k),
            )
        c[i][j][k] += Fraction(val)
        c[j][i][k] -= Fraction(val)
    for i in range(dim):
        for j in range(dim):
            for k in range(dim):
                if c[i][j][k] != -c[j][i][k]:
                    raise LieAlgebraError(
                        f"antisymmetry fails at (i,j,k)=({i},{j},{k})",
                        indices=(i, j, k),
                    )
    # Jacobi: sum_l c_ijl c_lkm + c_kil c_ljm + c_jkl c_lim = 0
    for i, j, k, m in itertools.product(range(dim), repeat=4):
        total = Fraction(0)
        for l in range(dim):
            total += (
                c[i][j][l] * c[l][k][m]
                + c[k][i][l] * c[l][j][m]
                + c[j][k][l] * c[l][i][m]
            )
        if total != 0:
            raise LieAlgebraError(
                f"Jacobi identity fails at (i,j,k,m)=({i},{j},{k},{m})",
                indices=(i, j, k, m),
            )
    frozen = tuple(tuple(tuple(row) for row in plane) for plane in c)
    return LieAlgebra(dim, frozen)


# -- constant multivectors on the algebra ---------------------------------------


class AlgMultiVec:
    """Element of the exterior algebra of a Lie algebra, in the fixed basis."""

    __slots__ = ("parent", "degree", "coeffs")

    def __init__(self, parent: LieAlgebra, degree: int, coeffs: dict):
        self.parent = parent
        self.degree = degree
        clean = {}
        for idx, c in coeffs.items():
            idx = tuple(idx)
            if len(idx) != degree or any(
                idx[i] >= idx[i + 1] for i in range(len(idx) - 1)
            ):
                raise LieAlgebraError(f"bad index tuple {idx} for degree {degree}")
            c = Fraction(c)
            if c:
                clean[idx] = c
        self.coeffs = clean

    @staticmethod
    def zero(parent: LieAlgebra, degree: int) -> "AlgMultiVec":
        return AlgMultiVec(parent, degree, {})

    @staticmethod
    def basis(parent: LieAlgebra, i: int) -> "AlgMultiVec":
        return AlgMultiVec(parent, 1, {(i,): Fraction(1)})

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def _check(self, other):
        if self.parent is not other.parent and self.parent != other.parent:
            raise LieAlgebraError("parent algebra mismatch")

    def __add__(self, other):
        self._check(other)
        if self.degree != other.degree:
            raise LieAlgebraError("degree mismatch")
        out = dict(self.coeffs)
        for i, c in other.coeffs.items():
            s = out.get(i, Fraction(0)) + c
            if s:
                out[i] = s
            else:
                out.pop(i, None)
        return AlgMultiVec(self.parent, self.degree, out)

    def __neg__(self):
        return self.scale(Fraction(-1))

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "AlgMultiVec":
        c = Fraction(c)
        return AlgMultiVec(
            self.parent, self.degree, {i: c * v for i, v in self.coeffs.items()}
        )

    def __eq__(self, other):
        return (
            isinstance(other, AlgMultiVec)
            and self.parent == other.parent
            and (self.coeffs == other.coeffs if self.degree == other.degree
                 else self.is_zero and other.is_zero)
        )

    __hash__ = None

    def __str__(self):
        if self.is_zero:
            return "0"
        if self.degree == 0:
            return str(self.coeffs[()])
        parts = []
        for idx in sorted(self.coeffs):
            basis = "^".join(f"e{i + 1}" for i in idx)
            c = self.coeffs[idx]
            parts.append(basis if c == 1 else f"{c}*{basis}")
        return " + ".join(parts)

    __repr__ = __str__


def _merge(idx_a, idx_b):
    merged = list(idx_a)
    sign = 1
    for i in idx_b:
        pos = len(merged)
        for j, m in enumerate(merged):
            if i == m:
                return None
            if i < m:
                pos = j
                break
        if (len(merged) - pos) % 2:
            sign = -sign
        merged.insert(pos, i)
    return sign, tuple(merged)


def alg_wedge(a: AlgMultiVec, b: AlgMultiVec) -> AlgMultiVec:
    a._check(b)
    degree = a.degree + b.degree
    if degree > a.parent.dim:
        return AlgMultiVec.zero(a.parent, degree)
    out = {}
    for ia, ca in a.coeffs.items():
        for ib, cb in b.coeffs.items():
            m = _merge(ia, ib)
            if m is None:
                continue
            sign, idx = m
            out[idx] = out.get(idx, Fraction(0)) + sign * ca * cb
    return AlgMultiVec(a.parent, degree, out)


def alg_schouten(g: LieAlgebra, a: AlgMultiVec, b: AlgMultiVec) -> AlgMultiVec:
    """Algebraic Schouten bracket on the exterior algebra:

        [a_1^...^a_k, b_1^...^b_l] =
            sum_{p,q} (-1)^{p+q} [a_p, b_q] ^ a_{\\p} ^ b_{\\q}
    """
    a._check(b)
    k, l = a.degree, b.degree
    degree = k + l - 1
    if k == 0 or l == 0:
        return AlgMultiVec.zero(g, max(degree, 0))
    result = AlgMultiVec.zero(g, degree)
    for ia, ca in a.coeffs.items():
        for ib, cb in b.coeffs.items():
            for p, i in enumerate(ia):
                rest_a = ia[:p] + ia[p + 1 :]
                for q, j in enumerate(ib):
                    rest_b = ib[:q] + ib[q + 1 :]
                    sign = -1 if (p + q) % 2 else 1  # (-1)^{(p+1)+(q+1)}
                    br = g.bracket_basis(i, j)
                    for k_idx, coef in enumerate(br):
                        if not coef:
                            continue
                        piece = AlgMultiVec(g, 1, {(k_idx,): sign * ca * cb * coef})
                        piece = alg_wedge(
                            piece, AlgMultiVec(g, len(rest_a), {rest_a: Fraction(1)})
                        )
                        piece = alg_wedge(
                            piece, AlgMultiVec(g, len(rest_b), {rest_b: Fraction(1)})
                        )
                        result = result + piece
    return result


# -- Lie-Poisson and coadjoint structures -----------------------------------------


def dual_chart(g: LieAlgebra, var_names=None) -> Chart:
    if var_names is None:
        var_names = tuple(f"x{i + 1}" for i in range(g.dim))
    return make_chart(*var_names)


def lie_poisson(g: LieAlgebra, chart: Chart | None = None) -> PoissonStructure:
    """Linear Poisson structure sum_{i<j} (sum_k c_ijk x_k) d/dx_i ^ d/dx_j."""
    ch = chart if chart is not None else dual_chart(g)
    if ch.dim != g.dim:
        raise LieAlgebraError("chart dimension must match the algebra")
    coeffs = {}
    for i in range(g.dim):
        for j in range(i + 1, g.dim):
            acc = RatFunc.zero(ch)
            for k in range(g.dim):
                cijk = g.c(i, j, k)
                if cijk:
                    acc = acc + RatFunc.const(ch, cijk) * RatFunc.var(ch, k)
            if not acc.is_zero:
                coeffs[(i, j)] = acc
    ps = verify(MultiVec(ch, 2, coeffs))
    if not ps.verified:
        raise LieAlgebraError("Lie-Poisson bivector failed [pi,pi]=0 (bug)")
    return ps


def coadjoint_vf(g: LieAlgebra, u, chart: Chart | None = None) -> MultiVec:
    """Linear coadjoint field of u in g: the Hamiltonian field of the linear
    function u on the dual chart."""
    ps = lie_poisson(g, chart)
    ch = ps.chart
    f = RatFunc.zero(ch)
    for i, ui in enumerate(u):
        if ui:
            f = f + RatFunc.const(ch, ui) * RatFunc.var(ch, i)
    return poisson.hamiltonian_vf(ps, f)


# -- cocycles and affine structures ------------------------------------------------


def two_form_value(lam: AlgMultiVec, u, v) -> Fraction:
    """Evaluate lam (viewed in wedge^2 g*) on coefficient vectors u, v."""
    total = Fraction(0)
    for (a, b), c in lam.coeffs.items():
        total += c * (u[a] * v[b] - u[b] * v[a])
    return total


def is_2cocycle(g: LieAlgebra, lam: AlgMultiVec) -> bool:
    """Exact check of lam(u1,[u2,u3]) + lam(u3,[u1,u2]) + lam(u2,[u3,u1]) = 0
    on all basis triples."""
    if lam.degree != 2:
        raise LieAlgebraError("cocycle check needs a degree-2 element")
    basis = [
        [Fraction(1 if i == j else 0) for j in range(g.dim)] for i in range(g.dim)
    ]
    for i, j, k in itertools.combinations(range(g.dim), 3):
        u1, u2, u3 = basis[i], basis[j], basis[k]
        total = (
            two_form_value(lam, u1, g.bracket(u2, u3))
            + two_form_value(lam, u3, g.bracket(u1, u2))
            + two_form_value(lam, u2, g.bracket(u3, u1))
        )
        if total != 0:
            return False
    return True


def affine_poisson(g: LieAlgebra, lam: AlgMultiVec, chart: Chart | None = None) -> PoissonStructure:
    """lie_poisson(g) plus the constant bivector lam; needs lam a 2-cocycle."""
    if not is_2cocycle(g, lam):
        raise LieAlgebraError("not a 2-cocycle; affine structure would fail Jacobi")
    ps = lie_poisson(g, chart)
    ch = ps.chart
    const = MultiVec(
        ch, 2, {idx: RatFunc.const(ch, c) for idx, c in lam.coeffs.items()}
    )
    out = verify(ps.pi + const)
    if not out.verified:
        raise LieAlgebraError("affine structure failed verification (bug)")
    return out


# -- classical Yang-Baxter ----------------------------------------------------------


def cyb_check(g: LieAlgebra, r: AlgMultiVec) -> str:
    """Classify r in wedge^2 g: 'triangular' ([r,r]=0), 'coboundary'
    ([r,r] ad-invariant), else 'neither'."""
    rr = alg_schouten(g, r, r)
    if rr.is_zero:
        return "triangular"
    for i in range(g.dim):
        if not alg_schouten(g, AlgMultiVec.basis(g, i), rr).is_zero:
            return "neither"
    return "coboundary"


# -- cobrackets and Lie bialgebras ---------------------------------------------------


@dataclass
class Cobracket:
    """Linear map g -> wedge^2 g, stored as the image of each basis vector."""

    parent: LieAlgebra
    images: tuple

    def __post_init__(self):
        if len(self.images) != self.parent.dim:
            raise LieAlgebraError("cobracket needs one image per basis vector")
        for img in self.images:
            if img.degree != 2:
                raise LieAlgebraError("cobracket images must have degree 2")

    @staticmethod
    def zero(g: LieAlgebra) -> "Cobracket":
        return Cobracket(g, tuple(AlgMultiVec.zero(g, 2) for _ in range(g.dim)))

    @staticmethod
    def from_dual_algebra(g: LieAlgebra, g_star: LieAlgebra) -> "Cobracket":
        """delta(e_c) = sum_{a<b} c*_abc e_a ^ e_b for the bracket on g*."""
        if g_star.dim != g.dim:
            raise LieAlgebraError("dual algebra dimension mismatch")
        images = []
        for c in range(g.dim):
            coeffs = {}
            for a in range(g.dim):
                for b in range(a + 1, g.dim):
                    val = g_star.c(a, b, c)
                    if val:
                        coeffs[(a, b)] = val
            images.append(AlgMultiVec(g, 2, coeffs))
        return Cobracket(g, tuple(images))

    def of(self, u) -> AlgMultiVec:
        out = AlgMultiVec.zero(self.parent, 2)
        for i, ui in enumerate(u):
            if ui:
                out = out + self.images[i].scale(ui)
        return out

    def dual_constants(self):
        """Structure-constant triples of the would-be bracket on g*."""
        triples = []
        for c in range(self.parent.dim):
            for (a, b), val in self.images[c].coeffs.items():
                triples.append((a, b, c, val))
        return triples


@dataclass
class BialgebraReport:
    dual_jacobi: bool
    compat: bool
    failure: str = ""

    @property
    def ok(self) -> bool:
        return self.dual_jacobi and self.compat


def bialgebra_check(g: LieAlgebra, delta: Cobracket) -> BialgebraReport:
    """Check that (g, delta) is a Lie bialgebra: the transpose of delta is a
    Lie bracket on g*, and delta([u,v]) = ad_u(delta v) - ad_v(delta u)."""
    failure = ""
    try:
        lie_from_constants(g.dim, delta.dual_constants())
        dual_jacobi = True
    except LieAlgebraError as err:
        dual_jacobi = False
        failure = str(err)
    compat = True
    basis = [
        [Fraction(1 if i == j else 0) for j in range(g.dim)] for i in range(g.dim)
    ]
    for i in range(g.dim):
        for j in range(i + 1, g.dim):
            lhs = delta.of(g.bracket(basis[i], basis[j]))
            rhs = alg_schouten(g, AlgMultiVec.basis(g, i), delta.of(basis[j])) - \
                alg_schouten(g, AlgMultiVec.basis(g, j), delta.of(basis[i]))
            if not (lhs - rhs).is_zero:
                compat = False
                failure = failure or f"compatibility fails on basis pair ({i},{j})"
    return BialgebraReport(dual_jacobi, compat, failure)


# -- modular character ----------------------------------------------------------------


def modular_character(g: LieAlgebra) -> list[Fraction]:
    """chi_i = Tr(ad_{e_i})."""
    return [
        sum((g.c(i, k, k) for k in range(g.dim)), Fraction(0)) for i in range(g.dim)
    ]


# -- Lie algebroid dual chart ----------------------------------------------------------


def algebroid_dual_poisson(base: Chart, fiber_names, rho, c_table) -> MultiVec:
    """Candidate linear bivector on the chart (x_1..x_n, xi_1..xi_r):

        pi = sum_{i<j} (sum_k c_ijk(x) xi_k) d/dxi_i ^ d/dxi_j
             - sum_{i,j} rho_ij(x) d/dx_i ^ d/dxi_j

    rho is an n x r matrix of RatFuncs on the base chart; c_table maps
    (i, j, k) to RatFuncs on the base chart with antisymmetric completion.
    Running is_poisson on the result is the executable test of the
    Lie-algebroid axioms for (rho, c).
    """
    n = base.dim
    r = len(fiber_names)
    if len(rho) != n or any(len(row) != r for row in rho):
        raise LieAlgebraError("rho must be an n x r matrix over the base chart")
    total = make_chart(*(base.var_names + tuple(fiber_names)))
    lift = [RatFunc.var(total, i) for i in range(n)]

    def lift_rf(f: RatFunc) -> RatFunc:
        return f.subst(lift)

    c_full = {}
    for (i, j, k), f in c_table.items():
        if i == j:
            raise LieAlgebraError("c_iik must vanish")
        c_full[(i, j, k)] = c_full.get((i, j, k), RatFunc.zero(base)) + f
        c_full[(j, i, k)] = c_full.get((j, i, k), RatFunc.zero(base)) - f
    # fiber-fiber block
    coeffs = {}
    for i in range(r):
        for j in range(i + 1, r):
            acc = RatFunc.zero(total)
            for k in range(r):
                f = c_full.get((i, j, k))
                if f is not None and not f.is_zero:
                    acc = acc + lift_rf(f) * RatFunc.var(total, n + k)
            if not acc.is_zero:
                coeffs[(n + i, n + j)] = acc
    # base-fiber block: -rho_ij d/dx_i ^ d/dxi_j
    for i in range(n):
        for j in range(r):
            f = rho[i][j]
            if not f.is_zero:
                coeffs[(i, n + j)] = -lift_rf(f)
    return MultiVec(total, 2, coeffs)


# -- Lie homomorphisms and dual maps -----------------------------------------------------


def is_lie_hom(g: LieAlgebra, h: LieAlgebra, t) -> bool:
    """Exact check T[u,v] = [Tu, Tv] on basis pairs; T is h.dim x g.dim."""
    for i in range(g.dim):
        for j in range(i + 1, g.dim):
            tu = [t[a][i] for a in range(h.dim)]
            tv = [t[a][j] for a in range(h.dim)]
            lhs = [Fraction(0)] * h.dim
            for k, c in enumerate(g.bracket_basis(i, j)):
                if c:
                    for a in range(h.dim):
                        lhs[a] += c * t[a][k]
            rhs = h.bracket(tu, tv)
            if lhs != rhs:
                return False
    return True


def dual_map(t, h_chart: Chart, g_chart: Chart) -> PolyMap:
    """Transpose of a linear map T: g -> h as a linear PolyMap h* -> g*."""
    matrix = [[t[a][i] for a in range(len(t))] for i in range(len(t[0]) if t else 0)]
    return PolyMap.linear(h_chart, g_chart, matrix)


def is_basis_span_ideal(g: LieAlgebra, indices) -> bool:
    """Is span(e_i : i in indices) an ideal?  Exact, basis subsets only."""
    inside = set(indices)
    for i in range(g.dim):
        for j in indices:
            br = g.bracket_basis(i, j)
            if any(br[k] != 0 for k in range(g.dim) if k not in inside):
                return False
    return True


def is_basis_span_subalgebra(g: LieAlgebra, indices) -> bool:
    inside = set(indices)
    for i in indices:
        for j in indices:
            br = g.bracket_basis(i, j)
            if any(br[k] != 0 for k in range(g.dim) if k not in inside):
                return False
    return True
