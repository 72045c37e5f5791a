"""Dirac geometry: pointwise lagrangian subspaces of V + V*, the
Courant-Dorfman bracket and Courant tensor on chart-level section families,
backward/forward images, gauge action, Dirac brackets on constraint level
sets, and submanifold classification.

Pointwise objects live in Q^(2n) with the vector coordinates first and the
covector coordinates last; the pairing is <(X,a),(Y,b)> = b(X) + a(Y).
Subspaces are compared through their reduced row echelon form, which is
canonical for the fixed column order.

Restriction to a constraint level set N is performed by exact substitution
through a polynomial parametrization when one is supplied, and otherwise by
exact evaluation at user-provided on-level sample points (results are then
labeled "sampled").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from . import linalg, poisson
from .expr import Chart, ChartMismatchError, ExprError, RatFunc
from .multivec import (
    DiffForm,
    MultiVec,
    PolyMap,
    contract,
    exterior_derivative,
    lie_derivative,
    schouten,
)
from .poisson import (
    NotCosymplecticError,
    PoissonStructure,
    bivector_matrix,
    bracket,
    hamiltonian_vf,
    matrix_at,
)


class DiracError(ExprError):
    pass


# -- pointwise lagrangian subspaces ------------------------------------------


def pairing(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    """<(X,a),(Y,b)> = b(X) + a(Y) on 2n-vectors."""
    n = len(u) // 2
    total = Fraction(0)
    for i in range(n):
        total += v[n + i] * u[i] + u[n + i] * v[i]
    return total


def is_lagrangian(basis: Sequence[Sequence[Fraction]]) -> bool:
    if not basis:
        return False
    n2 = len(basis[0])
    if n2 % 2:
        return False
    n = n2 // 2
    if linalg.rank([list(v) for v in basis]) != n or len(basis) != n:
        return False
    return all(
        pairing(basis[a], basis[b]) == 0
        for a in range(n)
        for b in range(a, n)
    )


@dataclass
class LinearLagrangian:
    """Lagrangian subspace of V + V*, dim V = n, spanned by n row vectors."""

    dim: int
    basis: list

    def __post_init__(self):
        self.basis = [[Fraction(x) for x in row] for row in self.basis]
        if any(len(row) != 2 * self.dim for row in self.basis):
            raise DiracError("basis vectors must have length 2n")
        if not is_lagrangian(self.basis):
            raise DiracError("basis does not span a lagrangian subspace")

    def canonical(self):
        return linalg.canonical_span(self.basis)

    def __eq__(self, other):
        return (
            isinstance(other, LinearLagrangian)
            and self.dim == other.dim
            and self.canonical() == other.canonical()
        )

    __hash__ = None

    def __str__(self):
        rows = ["(" + ", ".join(str(x) for x in row) + ")" for row in self.canonical()]
        return "span{" + "; ".join(rows) + "}"


def from_bivector_at(structure, point) -> LinearLagrangian:
    """Graph of pi# at a point: spanned by (pi#(dx_i), dx_i)."""
    pi = structure.pi if isinstance(structure, PoissonStructure) else structure
    p = matrix_at(pi, point)
    n = len(p)
    basis = [list(p[i]) + [Fraction(1 if j == i else 0) for j in range(n)] for i in range(n)]
    return LinearLagrangian(n, basis)


def from_2form_at(omega: DiffForm, point) -> LinearLagrangian:
    """Graph of omega_flat at a point: spanned by (d/dx_i, i_{d/dx_i} omega)."""
    if omega.degree != 2:
        raise DiracError("need a 2-form")
    n = omega.chart.dim
    w = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), c in omega.coeffs.items():
        v = c.eval(point)
        w[i][j] = v
        w[j][i] = -v
    basis = []
    for i in range(n):
        row = [Fraction(1 if j == i else 0) for j in range(n)]
        row += [w[i][j] for j in range(n)]  # (i_X omega)_j = sum_i X_i w_ij
        basis.append(row)
    return LinearLagrangian(n, basis)


def backward_image(lag: LinearLagrangian, a_matrix) -> LinearLagrangian:
    """phi^! L = {(X, A^T b) : (A X, b) in L} for a linear map A: V_src -> V_tgt.

    Pointwise the backward image is always lagrangian of dimension n_src;
    smoothness across points is the business of coregularity_check.
    """
    n_tgt = lag.dim
    n_src = len(a_matrix[0]) if a_matrix else 0
    # unknowns (X, b): condition (A X, b) in span(L)
    span = lag.canonical()
    rows = []
    for i in range(2 * n_tgt):
        row = []
        for s in range(n_src):
            row.append(a_matrix[i][s] if i < n_tgt else Fraction(0))
        for b in range(n_tgt):
            row.append(Fraction(1 if i == n_tgt + b else 0))
        rows.append(row)
    sols = linalg.preimage_span(rows, span, ncols=n_src + n_tgt)
    at = linalg.transpose(a_matrix)
    out = []
    for sol in sols:
        x = sol[:n_src]
        b = sol[n_src:]
        alpha = linalg.matvec(at, b)
        out.append(list(x) + list(alpha))
    basis = linalg.canonical_span(out)
    return LinearLagrangian(n_src, basis)


def forward_image(lag: LinearLagrangian, a_matrix) -> LinearLagrangian:
    """phi_! L = {(A X, b) : (X, A^T b) in L}."""
    n_src = lag.dim
    n_tgt = len(a_matrix)
    span = lag.canonical()
    at = linalg.transpose(a_matrix)
    # unknowns (X, b) in V_src + V_tgt*: require (X, A^T b) in L
    rows = []
    for i in range(2 * n_src):
        row = []
        for s in range(n_src):
            row.append(Fraction(1 if i == s else 0))
        for b in range(n_tgt):
            row.append(at[i - n_src][b] if i >= n_src else Fraction(0))
        rows.append(row)
    sols = linalg.preimage_span(rows, span, ncols=n_src + n_tgt)
    out = []
    for sol in sols:
        x = sol[:n_src]
        b = sol[n_src:]
        out.append(list(linalg.matvec(a_matrix, x)) + list(b))
    basis = linalg.canonical_span(out)
    return LinearLagrangian(n_tgt, basis)


def forward_matches(phi: PolyMap, source_structure, target_structure, samples) -> bool:
    """At each sample, does dphi push the source graph onto the target graph?"""
    for point in samples:
        jac = phi.jacobian_at(point)
        l1 = from_bivector_at(source_structure, point)
        l2 = from_bivector_at(target_structure, phi(point))
        if forward_image(l1, jac) != l2:
            return False
    return True


def gauge_at(lag: LinearLagrangian, b_matrix) -> LinearLagrangian:
    """tau_B(X, a) = (X, a + i_X B) for an antisymmetric matrix B."""
    n = lag.dim
    for i in range(n):
        for j in range(n):
            if b_matrix[i][j] != -b_matrix[j][i]:
                raise DiracError("gauge matrix must be antisymmetric")
    out = []
    for row in lag.basis:
        x, alpha = row[:n], row[n:]
        shift = [
            sum((x[i] * b_matrix[i][j] for i in range(n)), Fraction(0))
            for j in range(n)
        ]
        out.append(list(x) + [a + s for a, s in zip(alpha, shift)])
    return LinearLagrangian(n, out)


@dataclass
class KernelRangeData:
    kernel: list      # basis of ker(L) = L cap (V + 0), projected to V
    range_basis: list  # basis of R = pr_V(L)
    omega: list        # matrix of the induced form on range_basis
    annihilator: list  # basis of Ann(R) = L cap (0 + V*), projected to V*


def kernel_and_range(lag: LinearLagrangian) -> KernelRangeData:
    n = lag.dim
    span = lag.canonical()
    v_only = [[Fraction(1 if j == i else 0) for j in range(2 * n)] for i in range(n)]
    cov_only = [
        [Fraction(1 if j == n + i else 0) for j in range(2 * n)] for i in range(n)
    ]
    ker = [v[:n] for v in linalg.intersect_spans(span, v_only)]
    ann = [v[n:] for v in linalg.intersect_spans(span, cov_only)]
    rng = linalg.canonical_span([row[:n] for row in span])
    omega = []
    for u in rng:
        # find (u, alpha) in L
        sol = linalg.solve(linalg.transpose([row[:n] for row in span]), u)
        if sol is None:
            raise DiracError("range vector not represented (bug)")
        alpha = [
            sum((sol[r] * span[r][n + j] for r in range(len(span))), Fraction(0))
            for j in range(n)
        ]
        omega.append(alpha)
    # Omega(u, v) = alpha_u(v); well-definedness: Ann(R) must kill the range
    for alpha in ann:
        for v in rng:
            if sum((alpha[j] * v[j] for j in range(n)), Fraction(0)) != 0:
                raise DiracError("induced form ill-defined (bug)")
    omega_matrix = [
        [sum((omega[a][j] * rng[b][j] for j in range(n)), Fraction(0)) for b in range(len(rng))]
        for a in range(len(rng))
    ]
    return KernelRangeData(
        linalg.canonical_span(ker), rng, omega_matrix, linalg.canonical_span(ann)
    )


def reconstruct_from_range(data: KernelRangeData, dim: int) -> LinearLagrangian:
    """Rebuild L from (R, Omega, Ann(R)): span of (r_a, alpha_a) plus 0 + Ann(R)."""
    n = dim
    rows = []
    for a, r in enumerate(data.range_basis):
        # any covector alpha with alpha(r_b) = Omega_ab will do
        system = [list(rb) for rb in data.range_basis]
        alpha = linalg.solve(system, list(data.omega[a]))
        if alpha is None:
            raise DiracError("cannot reconstruct covector (bug)")
        rows.append(list(r) + list(alpha))
    for ann in data.annihilator:
        rows.append([Fraction(0)] * n + list(ann))
    return LinearLagrangian(n, linalg.canonical_span(rows))


# -- Courant-Dorfman bracket -----------------------------------------------------


Section = tuple[MultiVec, DiffForm]


def courant_dorfman(e1: Section, e2: Section) -> Section:
    """[[ (X,a), (Y,b) ]] = ([X,Y], L_X b - i_Y da)."""
    x, alpha = e1
    y, beta = e2
    if x.chart != y.chart:
        raise ChartMismatchError("chart mismatch in courant_dorfman")
    vec = schouten(x, y)
    da = exterior_derivative(alpha)
    form = lie_derivative(x, beta) - contract(da, y)
    return vec, form


def section_pairing(e1: Section, e2: Section) -> RatFunc:
    """<e1, e2> = b(X) + a(Y)."""
    x, alpha = e1
    y, beta = e2
    return beta.apply_vector(x) + alpha.apply_vector(y)


@dataclass
class DiracSectionFamily:
    """n spanning sections (vector field, 1-form) with RatFunc coefficients."""

    chart: Chart
    sections: list
    samples: list = field(default_factory=list)
    regular_locus: str = ""

    def __post_init__(self):
        n = self.chart.dim
        if len(self.sections) != n:
            raise DiracError("need exactly n spanning sections")
        for x, alpha in self.sections:
            if x.degree != 1 or alpha.degree != 1:
                raise DiracError("sections must be (vector field, 1-form) pairs")
            if x.chart != self.chart or alpha.chart != self.chart:
                raise ChartMismatchError("section charts mismatch")

    def evaluate_at(self, point) -> LinearLagrangian:
        n = self.chart.dim
        rows = []
        for x, alpha in self.sections:
            row = [x.coeff((i,)).eval(point) for i in range(n)]
            row += [alpha.coeff((i,)).eval(point) for i in range(n)]
            rows.append(row)
        return LinearLagrangian(n, rows)

    @staticmethod
    def graph_of_bivector(pi: MultiVec, samples=None) -> "DiracSectionFamily":
        """Sections (pi#(dx_i), dx_i)."""
        chart = pi.chart
        n = chart.dim
        p = bivector_matrix(pi)
        sections = []
        for i in range(n):
            vec = MultiVec(chart, 1, {(j,): p[i][j] for j in range(n)})
            form = DiffForm.basis_form(chart, i)
            sections.append((vec, form))
        return DiracSectionFamily(chart, sections, samples or [], "entire chart")

    @staticmethod
    def graph_of_2form(omega: DiffForm, samples=None) -> "DiracSectionFamily":
        chart = omega.chart
        n = chart.dim
        sections = []
        for i in range(n):
            vec = MultiVec.basis_vector(chart, i)
            form = contract(omega, vec)
            sections.append((vec, form))
        return DiracSectionFamily(chart, sections, samples or [], "entire chart")


def courant_tensor(family: DiracSectionFamily) -> dict:
    """All (n choose 3) values <[[e_a, e_b]], e_c>; the family is integrable
    iff all vanish identically.  Verifies lagrangianity at the family's
    sample points first."""
    for point in family.samples:
        lag = family.evaluate_at(point)  # raises if not lagrangian
        del lag
    n = family.chart.dim
    out = {}
    for a in range(n):
        for b in range(a + 1, n):
            bracket_ab = courant_dorfman(family.sections[a], family.sections[b])
            for c in range(b + 1, n):
                out[(a, b, c)] = section_pairing(bracket_ab, family.sections[c])
    return out


# -- constraint systems and Dirac brackets ------------------------------------------


@dataclass
class ConstraintSystem:
    structure: PoissonStructure
    constraints: list          # RatFuncs psi_i
    level: list                # Fractions r_i
    samples: list = field(default_factory=list)
    parametrization: PolyMap | None = None

    def __post_init__(self):
        ch = self.structure.chart
        for psi in self.constraints:
            if psi.chart != ch:
                raise ChartMismatchError("constraints live on another chart")
        self.level = [Fraction(r) for r in self.level]
        for point in self.samples:
            for psi, r in zip(self.constraints, self.level):
                if psi.eval(point) != r:
                    raise DiracError(f"sample {point} is not on the level set")
        if self.parametrization is not None:
            if self.parametrization.target != ch:
                raise ChartMismatchError("parametrization must land in the ambient chart")
            comps = list(self.parametrization.components)
            for psi, r in zip(self.constraints, self.level):
                if not (psi.subst(comps) - RatFunc.const(self.parametrization.source, r)).is_zero:
                    raise DiracError("parametrization does not satisfy the constraints")

    def restrict(self, f: RatFunc):
        """Exact substitution through the parametrization, or values at samples."""
        if self.parametrization is not None:
            return f.subst(list(self.parametrization.components))
        if self.samples:
            return [f.eval(p) for p in self.samples]
        raise DiracError("no parametrization and no samples: cannot restrict")

    def restrict_is_zero(self, f: RatFunc) -> bool:
        r = self.restrict(f)
        if isinstance(r, RatFunc):
            return r.is_zero
        return all(v == 0 for v in r)


def constraint_bracket_matrix(cs: ConstraintSystem):
    """Ambient matrix {psi_i, psi_j} as RatFuncs."""
    k = len(cs.constraints)
    return [
        [bracket(cs.structure, cs.constraints[i], cs.constraints[j]) for j in range(k)]
        for i in range(k)
    ]


@dataclass
class DiracBracketData:
    constraint_system: ConstraintSystem
    c_upper: list
    c_lower: list


class DiracBracket:
    """Closure computing {f,g}_N for ambient representatives f, g."""

    def __init__(self, cs: ConstraintSystem):
        if not cs.samples and cs.parametrization is None:
            raise DiracError("no parametrization and no samples")
        c_upper = constraint_bracket_matrix(cs)
        one = RatFunc.const(cs.structure.chart, 1)
        c_lower = linalg.mat_inverse(c_upper, one=one) if c_upper else []
        if c_upper and c_lower is None:
            pretty = "[" + "; ".join(
                ", ".join(str(e) for e in row) for row in c_upper
            ) + "]"
            raise NotCosymplecticError(
                f"constraint matrix is singular (not cosymplectic): c_upper = {pretty}"
            )
        self.cs = cs
        self.data = DiracBracketData(cs, c_upper, c_lower)

    def ambient(self, f: RatFunc, g: RatFunc) -> RatFunc:
        """The unrestricted combination {f,g} - {f,psi_i} c_ij {psi_j,g}."""
        cs = self.cs
        out = bracket(cs.structure, f, g)
        k = len(cs.constraints)
        if k:
            fpsi = [bracket(cs.structure, f, cs.constraints[i]) for i in range(k)]
            psig = [bracket(cs.structure, cs.constraints[j], g) for j in range(k)]
            for i in range(k):
                for j in range(k):
                    out = out - fpsi[i] * self.data.c_lower[i][j] * psig[j]
        return out

    def __call__(self, f: RatFunc, g: RatFunc):
        return self.cs.restrict(self.ambient(f, g))


def dirac_bracket(cs: ConstraintSystem):
    """Returns (bracket closure, DiracBracketData)."""
    db = DiracBracket(cs)
    return db, db.data


# -- submanifold classification -----------------------------------------------------


@dataclass
class SubmanifoldFlags:
    poisson: bool
    coisotropic: bool
    cosymplectic: bool
    mode: str  # "exact" (parametrization) or "sampled"


def classify_submanifold(cs: ConstraintSystem) -> SubmanifoldFlags:
    if cs.parametrization is None and not cs.samples:
        raise DiracError("need a parametrization or samples")
    mode = "exact" if cs.parametrization is not None else "sampled"
    # Poisson: X_psi_i |_N = 0
    is_poisson_sub = True
    for psi in cs.constraints:
        xf = hamiltonian_vf(cs.structure, psi)
        for comp in xf.components():
            if not cs.restrict_is_zero(comp):
                is_poisson_sub = False
                break
        if not is_poisson_sub:
            break
    c_upper = constraint_bracket_matrix(cs)
    coiso = all(cs.restrict_is_zero(e) for row in c_upper for e in row)
    # cosymplectic: restricted constraint matrix invertible
    if not cs.constraints:
        cosym = True
    elif cs.parametrization is not None:
        comps = list(cs.parametrization.components)
        restricted = [[e.subst(comps) for e in row] for row in c_upper]
        d = linalg.det(restricted, one=RatFunc.const(cs.parametrization.source, 1))
        cosym = not d.is_zero
    else:
        cosym = all(
            linalg.det([[e.eval(p) for e in row] for row in c_upper]) != 0
            for p in cs.samples
        )
    return SubmanifoldFlags(is_poisson_sub, coiso, cosym, mode)


# -- co-regularity -------------------------------------------------------------------


@dataclass
class CoregularityReport:
    dims: list
    constant: bool


def coregularity_check(structure, data, samples=None) -> CoregularityReport:
    """Sampled constant-dimension check.

    With a ConstraintSystem: rank of TN^pi = pi#(Ann(TN)) across samples.
    With a PolyMap phi into the structure's chart: dim(Im(dphi) + R) across
    the given samples of the source chart.
    """
    if isinstance(data, ConstraintSystem):
        cs = data
        pts = samples if samples is not None else cs.samples
        if len(pts) < 2:
            raise DiracError("need at least 2 samples")
        dims = []
        for point in pts:
            rows = []
            for psi in cs.constraints:
                dpsi = [psi.diff(i).eval(point) for i in range(cs.structure.chart.dim)]
                rows.append(poisson.sharp_at(cs.structure, point, dpsi))
            dims.append(len(linalg.canonical_span(rows)) if rows else 0)
    elif isinstance(data, PolyMap):
        phi = data
        if samples is None or len(samples) < 2:
            raise DiracError("need at least 2 samples")
        pi = structure.pi if isinstance(structure, PoissonStructure) else structure
        dims = []
        for point in samples:
            jac = phi.jacobian_at(point)
            image = linalg.canonical_span(linalg.transpose(jac))
            target_point = phi(point)
            p = matrix_at(pi, target_point)
            r_span = linalg.canonical_span(p)  # rows of P span R
            dims.append(len(linalg.sum_spans(image, r_span)))
    else:
        raise DiracError("second argument must be a ConstraintSystem or PolyMap")
    return CoregularityReport(dims, len(set(dims)) <= 1)


# -- dual pairs ----------------------------------------------------------------------


def dual_pair_check(omega: DiffForm, phi1: PolyMap, phi2: PolyMap,
                    structure1, structure2, samples) -> bool:
    """dim S = dim M1 + dim M2 and phi1^! L_pi1 = tau_omega(phi2^! L_pi2) at
    every sample."""
    s_chart = omega.chart
    if phi1.source != s_chart or phi2.source != s_chart:
        raise ChartMismatchError("legs must start on the 2-form's chart")
    if s_chart.dim != phi1.target.dim + phi2.target.dim:
        return False
    n = s_chart.dim
    for point in samples:
        w = [[Fraction(0)] * n for _ in range(n)]
        for (i, j), c in omega.coeffs.items():
            v = c.eval(point)
            w[i][j] = v
            w[j][i] = -v
        if linalg.det(w) == 0:
            raise DiracError(f"2-form degenerate at sample {point}")
        j1 = phi1.jacobian_at(point)
        j2 = phi2.jacobian_at(point)
        if linalg.rank(j1) != phi1.target.dim or linalg.rank(j2) != phi2.target.dim:
            raise DiracError(f"a leg is not a submersion at {point}")
        back1 = backward_image(from_bivector_at(structure1, phi1(point)), j1)
        back2 = backward_image(from_bivector_at(structure2, phi2(point)), j2)
        if back1 != gauge_at(back2, w):
            return False
    return True


# -- transverse induced structure ------------------------------------------------------


def transversal_induced_poisson_at(structure, cs: ConstraintSystem, parameter_point):
    """Matrix of the induced Poisson structure at a point of a cosymplectic
    level set, in parametrization coordinates.

    Computed as the backward image of the graph of pi under the inclusion;
    the cosymplectic condition TN + TN^pi = TM with trivial intersection is
    verified at the point first.
    """
    if cs.parametrization is None:
        raise DiracError("needs a parametrization of the level set")
    phi = cs.parametrization
    ambient_point = phi(parameter_point)
    pi = structure.pi if isinstance(structure, PoissonStructure) else structure
    n = pi.chart.dim
    jac = phi.jacobian_at(parameter_point)
    tn = linalg.canonical_span(linalg.transpose(jac))
    tnpi_rows = []
    for psi in cs.constraints:
        dpsi = [psi.diff(i).eval(ambient_point) for i in range(n)]
        tnpi_rows.append(poisson.sharp_at(structure, ambient_point, dpsi))
    tnpi = linalg.canonical_span(tnpi_rows)
    if linalg.intersect_spans(tn, tnpi) or len(linalg.sum_spans(tn, tnpi)) != n:
        raise NotCosymplecticError(
            f"TN (+) TN^pi != TM at {ambient_point}: not cosymplectic there"
        )
    lag = backward_image(from_bivector_at(structure, ambient_point), jac)
    m = phi.source.dim
    span = lag.canonical()
    matrix = []
    for b in range(m):
        target = [Fraction(1 if j == b else 0) for j in range(m)]
        # combination of basis rows whose covector part is e_b
        sys_rows = [[span[r][m + j] for r in range(len(span))] for j in range(m)]
        sol = linalg.solve(sys_rows, target)
        if sol is None:
            raise NotCosymplecticError("induced subspace is not a bivector graph")
        row = [
            sum((sol[r] * span[r][j] for r in range(len(span))), Fraction(0))
            for j in range(m)
        ]
        matrix.append(row)
    for a in range(m):
        for b in range(m):
            if matrix[a][b] != -matrix[b][a]:
                raise DiracError("induced matrix not antisymmetric (bug)")
    return matrix
