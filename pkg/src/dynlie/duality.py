"""Dual structures over a reductive split and the flat chart of the algebroid.

The double of a structure whose cocycle vanishes on the subalgebra and whose
3-tensor has no purely-complement component contains a second lagrangian
subalgebra: the subalgebra together with the annihilator of the subalgebra.
Extracting along it and negating the cocycle yields the dual structure
(dual_qbia); doing it twice returns the original up to the sign involution
that fixes the subalgebra and negates the complement (double_dual_check).

Over the chart where the closed-form field is defined, pairs (subalgebra
part, covector part) form a Lie algebroid: nu_anchor and nu_bracket evaluate
its anchor and bracket on sections.  TrivializationMap straightens that
algebroid onto a trivial product bundle: theta_connection is the flat
horizontal lift, phi_p_iso the fiberwise isomorphism onto the zero fiber,
trivialization_T / t_inverse the bundle map and its inverse.  The
trivializations of a structure and of its dual agree up to explicit signs;
duality_theorem_check measures that identity.  symmetric_dual runs the whole
construction for the complexification double of a semisimple algebra with an
involution.
"""

import numpy as np
import scipy.linalg

from . import dynamics, lie, linalg, qbia

DUAL_TOL = 1e-10
ANCHOR_TOL = 1e-10
ROUNDTRIP_TOL = 1e-10
FLATNESS_TOL = 1e-9
BRACKET_TOL = 1e-8
PSI_TOL = 1e-9
MEMBERSHIP_TOL = 1e-9
SEMISIMPLE_COND_LIMIT = 1e10
CHOP_TOL = 1e-12


class PreconditionFailed(ValueError):
    """The structure fails a hypothesis the construction requires."""


class NotInvolution(ValueError):
    """The supplied map is not an involutive automorphism."""


class NotSemisimple(ValueError):
    """The trace form is singular to working precision."""


def _resolve_decomp(G, decomp):
    if decomp is None:
        decomp = G.decomp
    if decomp is None:
        raise ValueError("no reductive decomposition supplied")
    return decomp


def invariant_three_form(g, quad):
    """Alternating 3-tensor pairing metric duals with the bracket.

    Value on covectors (xi, eta, zeta) is the metric pairing of the raised
    xi with the bracket of the raised eta and zeta.  For an invariant
    nondegenerate quadratic form the result is ad-invariant and alternating;
    it is returned in exactly alternating form.
    """
    binv = np.linalg.inv(np.asarray(quad, dtype=float))
    t = np.einsum("aj,bk,abi->ijk", binv, binv, g.c)
    return linalg.antisymmetrize3(t)


# ---------------------------------------------------------------------------
# the dual structure


def dual_qbia(G, decomp=None, tol=DUAL_TOL, check=True):
    """Dual structure over the subalgebra, read off the double.

    Preconditions: the cocycle vanishes on the subalgebra and the 3-tensor
    has no component supported entirely on the complement.  The dual lives
    on the span of the subalgebra basis followed by the covectors
    annihilating it; when the input is canonically compatible the result is
    certified canonically compatible for the block split (subalgebra slots
    first) and carries that split as its decomposition.
    """
    decomp = _resolve_decomp(G, decomp)
    rep = qbia.check_compatibility(G, decomp, tol=tol)
    failing = []
    if rep["sub_cocycle_residual"] > tol:
        failing.append("cocycle on subalgebra %.3e"
                       % rep["sub_cocycle_residual"])
    if rep["comp_phi_residual"] > tol:
        failing.append("3-tensor on complement %.3e"
                       % rep["comp_phi_residual"])
    if failing:
        raise PreconditionFailed("; ".join(failing))
    n = G.dim
    k = decomp.dim_sub
    sub = [int(i) for i in decomp.sub]
    comp = [int(b) for b in decomp.comp]
    gidx = sub + [n + b for b in comp]
    hidx = [n + z for z in sub] + comp
    names = ([G.g.basis_names[i] for i in sub]
             + [G.g.basis_names[b] + "'" for b in comp])
    dbl = qbia.build_double(G)
    ext = qbia.quasi_triple_extract(dbl, gidx, hidx, basis_names=names)
    star = qbia.invert(ext)
    try:
        star.decomp = lie.ReductiveDecomposition(
            star.g, list(range(k)), list(range(k, n)))
    except ValueError:
        star.decomp = None
    if check and rep["canonical"]:
        if star.decomp is None:
            raise PreconditionFailed("dual of a canonically compatible "
                                     "structure lost its reductive split")
        srep = qbia.check_compatibility(star, star.decomp)
        if not srep["canonical"]:
            raise PreconditionFailed(
                "dual lost canonical compatibility: %s" % srep)
    return star


def _op_map(decomp, n):
    """Sign map fixing the subalgebra and negating the complement, composed
    with the reordering that lists subalgebra slots first."""
    w = np.zeros((n, n))
    for a, i in enumerate(decomp.sub):
        w[a, i] = 1.0
    for j, b in enumerate(decomp.comp):
        w[decomp.dim_sub + j, b] = -1.0
    return w


def double_dual_check(G, decomp=None, tol=DUAL_TOL):
    """Componentwise residual between the twice-dualized structure and the
    push-forward of the original along the subalgebra-fixing sign map."""
    decomp = _resolve_decomp(G, decomp)
    star = dual_qbia(G, decomp, tol=tol)
    if star.decomp is None:
        raise PreconditionFailed("dual carries no reductive split")
    star2 = dual_qbia(star, star.decomp, tol=tol)
    model = qbia.transport(G, _op_map(decomp, G.dim))
    return max(qbia._max_abs(star2.g.c - model.g.c),
               qbia._max_abs(star2.varpi - model.varpi),
               qbia._max_abs(star2.phi - model.phi))


# ---------------------------------------------------------------------------
# sections, anchor, bracket


class AlgebroidSection:
    """Section of a two-component bundle over base points.

    Wraps a value callable returning a pair of vectors and (optionally) a
    directional-derivative callable; without the latter, derivatives fall
    back to a central difference of the value.  degree records the
    polynomial degree when the section is polynomial (None for analytic
    sections, whose evaluation is exact but not polynomial).
    """

    def __init__(self, value_fn, derivative_fn=None, degree=None):
        self._value = value_fn
        self._derivative = derivative_fn
        self.degree = degree

    def value(self, p):
        a, b = self._value(np.asarray(p, dtype=float))
        return np.asarray(a, dtype=float), np.asarray(b, dtype=float)

    def derivative(self, p, beta):
        p = np.asarray(p, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if self._derivative is not None:
            a, b = self._derivative(p, beta)
            return np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        da = linalg.finite_diff(lambda q: self.value(q)[0], p, beta)
        db = linalg.finite_diff(lambda q: self.value(q)[1], p, beta)
        return da, db


def polynomial_section(first, second):
    """Section from two polynomial maps; evaluation and derivatives exact."""
    def val(p):
        return first.value(p), second.value(p)

    def der(p, beta):
        return first.jacobian(p) @ beta, second.jacobian(p) @ beta

    degree = 0
    for m in (first, second):
        if qbia._max_abs(m.c2) > 0.0:
            degree = max(degree, 2)
        elif qbia._max_abs(m.c1) > 0.0:
            degree = max(degree, 1)
    return AlgebroidSection(val, der, degree=degree)


def constant_section(first, second):
    first = np.asarray(first, dtype=float).copy()
    second = np.asarray(second, dtype=float).copy()
    zf = np.zeros_like(first)
    zs = np.zeros_like(second)
    return AlgebroidSection(lambda p: (first, second),
                            lambda p, beta: (zf, zs), degree=0)


def nu_anchor(s, p, field):
    """Base direction moved by an algebroid element over p: the covector
    restricted to the subalgebra, minus the coadjoint action of the
    subalgebra part on the base point.  s is a section or a (z, xi) pair."""
    p = np.asarray(p, dtype=float)
    if isinstance(s, AlgebroidSection):
        z, xi = s.value(p)
    else:
        z, xi = (np.asarray(v, dtype=float) for v in s)
    coad = np.einsum("a,abm,m->b", z, field.sub_c, p)
    return xi[field.sub] - coad


def nu_bracket(s1, s2, field, G=None, check_domain=True):
    """Bracket of two sections of the chart algebroid, as a lazy section.

    First component: derivatives of each subalgebra part along the other's
    anchor image, minus the subalgebra bracket, plus the pairing of the
    covector parts through the field's base derivative.  Second component:
    derivatives of the covector parts plus coadjoint terms of the
    subalgebra parts and of the field images, plus the cocycle pairing.
    Derivatives of the returned section use the central-difference fallback.
    """
    if G is None:
        G = field.G

    def val(p):
        if check_domain:
            field._require_domain(p)
        z1, xi1 = s1.value(p)
        z2, xi2 = s2.value(p)
        a1 = nu_anchor((z1, xi1), p, field)
        a2 = nu_anchor((z2, xi2), p, field)
        dz2, dxi2 = s2.derivative(p, a1)
        dz1, dxi1 = s1.derivative(p, a2)
        k = field.base_dim
        dl = np.stack([field.derivative(p, e) for e in np.eye(k)])
        grad = np.einsum("aij,i,j->a", dl, xi1, xi2)
        zout = (dz2 - dz1
                - np.einsum("a,b,abm->m", z1, z2, field.sub_c) + grad)
        lmat = field.value(p)
        adm = G.g.ad_matrix
        iz1 = field.inj @ z1
        iz2 = field.inj @ z2
        wvec = np.einsum("a,iab,b->i", xi1, G.varpi, xi2)
        xiout = (dxi2 - dxi1
                 + adm(iz1).T @ xi2 - adm(iz2).T @ xi1
                 + wvec
                 + adm(lmat @ xi1).T @ xi2 - adm(lmat @ xi2).T @ xi1)
        return zout, xiout

    return AlgebroidSection(val)


def trivial_bracket(s1, s2, fiber_c):
    """Bracket of the trivial product bundle: vector-field bracket of the
    base parts, base derivatives of the fiber parts plus the fiber algebra
    bracket given by fiber_c."""
    def val(p):
        a1, x1 = s1.value(p)
        a2, x2 = s2.value(p)
        da2, dx2 = s2.derivative(p, a1)
        da1, dx1 = s1.derivative(p, a2)
        return da2 - da1, dx2 - dx1 + np.einsum("i,j,ijm->m", x1, x2, fiber_c)

    return AlgebroidSection(val)


# ---------------------------------------------------------------------------
# the trivialization


class TrivializationMap:
    """Chart straightening of the algebroid onto a trivial product bundle.

    Built on the closed-form field of a canonically compatible pair.  The
    zero fiber is coordinatized by subalgebra coordinates followed by the
    coordinates along covectors annihilating the subalgebra;
    trivialization_T(p, alpha, x0) produces the algebroid element over p and
    t_inverse(p, z, eta) recovers (alpha, x0).  Every evaluator requires the
    base point to lie in the field's domain.
    """

    def __init__(self, G, decomp=None, tol=dynamics.CERT_TOL):
        self.field = dynamics.canonical_field(G, decomp, tol=tol)
        self.G = G
        self.decomp = self.field.decomp
        self.double = self.field.double
        self.n = G.dim
        self.k = self.field.base_dim
        self.sub = self.field.sub
        self.comp = self.field.comp
        self.inj = self.field.inj
        self.compinj = linalg.injection(self.n, self.comp)
        self.fiber_c = dynamics.vertex_dual(np.zeros(self.k), self.field).c

    # -- shared pieces ------------------------------------------------------

    def _sdual(self, alpha):
        return self.double.embed(xi=self.inj @ np.asarray(alpha, dtype=float))

    def _ad_dual(self, alpha):
        return self.double.d.ad_matrix(self._sdual(alpha))

    def _coads(self, p):
        # row a holds the coadjoint action of the a-th subalgebra vector on p
        return np.einsum("abm,m->ab", self.field.sub_c, p)

    # -- horizontal lift ----------------------------------------------------

    def theta_connection(self, p, alpha):
        """Horizontal lift of a base covector direction: the fiber pair over
        p whose anchor is the direction and whose lifts bracket to zero."""
        p = np.asarray(p, dtype=float)
        self.field._require_domain(p)
        a = self._ad_dual(p)
        sa = self._sdual(alpha)
        v1 = linalg.SINH_REM.apply(a) @ sa
        v2 = linalg.SINHC.apply(a) @ sa
        return v1[:self.n][self.sub], v2[self.n:]

    def theta_section(self, alpha):
        alpha = np.asarray(alpha, dtype=float).copy()

        def val(p):
            return self.theta_connection(p, alpha)

        def der(p, beta):
            a = self._ad_dual(np.asarray(p, dtype=float))
            da = self._ad_dual(beta)
            sa = self._sdual(alpha)
            dv1 = linalg.SINH_REM.frechet(a, da) @ sa
            dv2 = linalg.SINHC.frechet(a, da) @ sa
            return dv1[:self.n][self.sub], dv2[self.n:]

        return AlgebroidSection(val, der)

    # -- fiber isomorphism onto the zero fiber ------------------------------

    def _phi_data(self, p, beta=None):
        """Matrix of the fiber isomorphism onto the zero fiber, the leakage
        outside the target block, and optionally the exact derivative."""
        field = self.field
        n, k = self.n, self.k
        p = np.asarray(p, dtype=float)
        lm = field.value(p)
        a = self._ad_dual(p)
        want = beta is not None
        if want:
            beta = np.asarray(beta, dtype=float)
            da = self._ad_dual(beta)
            dlm = field.derivative(p, beta)
        cols = np.zeros((2 * n, n))
        dcols = np.zeros((2 * n, n))
        coads = self._coads(p)
        for idx in range(k):
            xi = self.inj @ coads[idx]
            cols[:, idx] = self.double.embed(x=self.inj[:, idx] + lm @ xi,
                                             xi=xi)
            if want:
                dxi = self.inj @ np.einsum("bm,m->b", field.sub_c[idx], beta)
                dcols[:, idx] = self.double.embed(x=dlm @ xi + lm @ dxi,
                                                  xi=dxi)
        for j, b in enumerate(self.comp):
            xi = np.eye(n)[b]
            cols[:, k + j] = self.double.embed(x=lm @ xi, xi=xi)
            if want:
                dcols[:, k + j] = self.double.embed(x=dlm @ xi)
        em = scipy.linalg.expm(-a)
        flow = em @ cols
        sub_rows = list(self.sub)
        comp_rows = [n + int(b) for b in self.comp]
        mat = np.vstack([flow[sub_rows, :], flow[comp_rows, :]])
        off_rows = ([int(b) for b in self.comp]
                    + [n + int(i) for i in self.sub])
        leak = qbia._max_abs(flow[off_rows, :])
        if not want:
            return mat, leak, None
        dem = scipy.linalg.expm_frechet(-a, -da)[1]
        dflow = dem @ cols + em @ dcols
        dmat = np.vstack([dflow[sub_rows, :], dflow[comp_rows, :]])
        return mat, leak, dmat

    def fiber_element(self, p, v):
        """Algebroid element over p with the given fiber-basis coordinates:
        subalgebra part plus the covector forced by the constraint."""
        v = np.asarray(v, dtype=float)
        z = v[:self.k]
        eta = self.inj @ (z @ self._coads(p)) + self.compinj @ v[self.k:]
        return z, eta

    def vertical_section(self, xmap):
        """Anchor-kernel section whose zero-fiber image is minus the given
        polynomial fiber map."""
        def val(p):
            mat, _, _ = self._phi_data(p)
            return self.fiber_element(p, -np.linalg.solve(mat, xmap.value(p)))

        def der(p, beta):
            mat, _, dmat = self._phi_data(p, beta)
            x = xmap.value(p)
            dx = xmap.jacobian(p) @ beta
            v = -np.linalg.solve(mat, x)
            dv = -np.linalg.solve(mat, dx + dmat @ v)
            coads = self._coads(p)
            dcoads = np.einsum("abm,m->ab", self.field.sub_c, beta)
            deta = (self.inj @ (dv[:self.k] @ coads + v[:self.k] @ dcoads)
                    + self.compinj @ dv[self.k:])
            return dv[:self.k], deta

        return AlgebroidSection(val, der)

    # -- the bundle map and its inverse --------------------------------------

    def trivialization_T(self, p, alpha, x0):
        """Algebroid element over p attached to a base covector direction
        and a zero-fiber value (subalgebra coords then annihilator coords)."""
        z, eta, _ = self._forward(p, alpha, x0)
        return z, eta

    def _forward(self, p, alpha, x0):
        p = np.asarray(p, dtype=float)
        x0 = np.asarray(x0, dtype=float)
        self.field._require_domain(p)
        n = self.n
        a = self._ad_dual(p)
        sa = self._sdual(alpha)
        ze = self.double.embed(x=self.inj @ x0[:self.k])
        xie = self.double.embed(xi=self.compinj @ x0[self.k:])
        v1 = linalg.SINH_REM.apply(a) @ sa - linalg.SINHC.apply(a) @ ze
        v2 = linalg.SINHC.apply(a) @ sa - linalg.SINH.apply(a) @ ze
        flow = scipy.linalg.expm(a) @ xie
        z = v1[:n][self.sub]
        eta = v2[n:] - flow[n:]
        stray = v1.copy()
        stray[list(self.sub)] = 0.0
        leak = max(qbia._max_abs(stray), qbia._max_abs(v2[:n]))
        return z, eta, leak

    def T_inverse(self, p, z, eta):
        """Base covector direction and zero-fiber value reproducing the
        given algebroid element over p.  Inverse of trivialization_T."""
        alpha, x0, _ = self._inverse(p, z, eta)
        return alpha, x0

    def _inverse(self, p, z, eta):
        p = np.asarray(p, dtype=float)
        z = np.asarray(z, dtype=float)
        eta = np.asarray(eta, dtype=float)
        self.field._require_domain(p)
        n = self.n
        a = self._ad_dual(p)
        ahat = eta[self.sub]
        xi = eta.copy()
        xi[list(self.sub)] = 0.0
        alpha = ahat - np.einsum("a,abm,m->b", z, self.field.sub_c, p)
        v = linalg.TRIV_REM.apply(a) @ self._sdual(ahat)
        blk = scipy.linalg.expm(a)[n:, n:]
        if np.linalg.cond(blk) > dynamics.BLOCK_COND_LIMIT:
            raise linalg.SingularBlock(
                "covector block of the flow is singular to working precision")
        w = np.linalg.solve(blk, xi)
        x0 = np.concatenate([v[:n][self.sub] - z, -w[self.comp]])
        stray = v.copy()
        stray[list(self.sub)] = 0.0
        leak = max(qbia._max_abs(stray), qbia._max_abs(w[self.sub]))
        return alpha, x0, leak

    def compose_section(self, section):
        """Push a trivial-bundle section through the map, with exact
        derivatives (the section must provide exact derivatives itself)."""
        def val(p):
            a0, x0 = section.value(p)
            return self.trivialization_T(p, a0, x0)

        def der(p, beta):
            p = np.asarray(p, dtype=float)
            a0, x0 = section.value(p)
            da0, dx0 = section.derivative(p, beta)
            n = self.n
            a = self._ad_dual(p)
            da = self._ad_dual(beta)
            sa = self._sdual(a0)
            dsa = self._sdual(da0)
            ze = self.double.embed(x=self.inj @ x0[:self.k])
            dze = self.double.embed(x=self.inj @ dx0[:self.k])
            xie = self.double.embed(xi=self.compinj @ x0[self.k:])
            dxie = self.double.embed(xi=self.compinj @ dx0[self.k:])
            dv1 = (linalg.SINH_REM.frechet(a, da) @ sa
                   + linalg.SINH_REM.apply(a) @ dsa
                   - linalg.SINHC.frechet(a, da) @ ze
                   - linalg.SINHC.apply(a) @ dze)
            dv2 = (linalg.SINHC.frechet(a, da) @ sa
                   + linalg.SINHC.apply(a) @ dsa
                   - linalg.SINH.frechet(a, da) @ ze
                   - linalg.SINH.apply(a) @ dze)
            em, dem = scipy.linalg.expm_frechet(a, da)
            dflow = dem @ xie + em @ dxie
            return dv1[:n][self.sub], dv2[n:] - dflow[n:]

        return AlgebroidSection(val, der)

    # -- residual services ---------------------------------------------------

    def flatness_residual(self, p):
        """Largest bracket component over all pairs of basis horizontal
        lifts at p (zero for a flat lift)."""
        worst = 0.0
        lifts = [self.theta_section(e) for e in np.eye(self.k)]
        for i in range(self.k):
            for j in range(i + 1, self.k):
                zb, xb = nu_bracket(lifts[i], lifts[j], self.field).value(p)
                worst = max(worst, qbia._max_abs(zb), qbia._max_abs(xb))
        return worst

    def psi_compatibility_residual(self, p, xmap, alpha):
        """Residual of the bracket of a horizontal lift with a vertical
        section against the vertical section of the derivative."""
        p = np.asarray(p, dtype=float)
        alpha = np.asarray(alpha, dtype=float)
        lift = self.theta_section(alpha)
        vert = self.vertical_section(xmap)
        zb, xb = nu_bracket(lift, vert, self.field).value(p)
        mat, _, _ = self._phi_data(p)
        want = self.fiber_element(
            p, -np.linalg.solve(mat, xmap.jacobian(p) @ alpha))
        return max(qbia._max_abs(zb - want[0]), qbia._max_abs(xb - want[1]))

    def bracket_morphism_residual(self, p, s1, s2):
        """Residual of the map as a bracket morphism on a pair of
        trivial-bundle sections."""
        lhs = nu_bracket(self.compose_section(s1), self.compose_section(s2),
                         self.field).value(p)
        base, fiber = trivial_bracket(s1, s2, self.fiber_c).value(p)
        rhs = self.trivialization_T(p, base, fiber)
        return max(qbia._max_abs(lhs[0] - rhs[0]),
                   qbia._max_abs(lhs[1] - rhs[1]))

    def check(self, samples=6, seed=0, scale=0.4, linear_sections=3):
        """Certification sweep over sampled domain points.

        Reports the anchor residuals of lifts and of mapped elements, the
        two round-trip residuals, flatness, the block-membership leakage,
        the bracket-morphism residual over constant plus seeded linear
        sections, and the vertical-compatibility residual.
        """
        n, k = self.n, self.k
        rng = np.random.default_rng(seed)
        pts = dynamics.sample_domain_points(self.field, samples, seed=seed,
                                            scale=scale)
        report = {"anchor_residual": 0.0, "roundtrip_residual": 0.0,
                  "flatness_residual": 0.0, "membership_residual": 0.0,
                  "bracket_residual": 0.0, "psi_residual": 0.0,
                  "points": len(pts)}
        sections = [constant_section(e, np.zeros(n)) for e in np.eye(k)]
        sections += [constant_section(np.zeros(k), e) for e in np.eye(n)]
        for _ in range(linear_sections):
            amap = dynamics.PolynomialMap(
                k, k, coeff1=0.5 * rng.standard_normal((k, k)))
            xmap = dynamics.PolynomialMap(
                k, n, coeff0=rng.standard_normal(n),
                coeff1=0.5 * rng.standard_normal((n, k)))
            sections.append(polynomial_section(amap, xmap))
        for p in pts:
            alpha = rng.standard_normal(k)
            x0 = rng.standard_normal(n)
            z, eta, leak_f = self._forward(p, alpha, x0)
            report["membership_residual"] = max(
                report["membership_residual"], leak_f)
            report["anchor_residual"] = max(
                report["anchor_residual"],
                qbia._max_abs(nu_anchor((z, eta), p, self.field) - alpha))
            zt, xt = self.theta_connection(p, alpha)
            report["anchor_residual"] = max(
                report["anchor_residual"],
                qbia._max_abs(nu_anchor((zt, xt), p, self.field) - alpha))
            back_a, back_x, leak_i = self._inverse(p, z, eta)
            report["membership_residual"] = max(
                report["membership_residual"], leak_i)
            report["roundtrip_residual"] = max(
                report["roundtrip_residual"],
                qbia._max_abs(back_a - alpha), qbia._max_abs(back_x - x0))
            ze = rng.standard_normal(k)
            ee = rng.standard_normal(n)
            fa, fx = self.T_inverse(p, ze, ee)
            z2, eta2 = self.trivialization_T(p, fa, fx)
            report["roundtrip_residual"] = max(
                report["roundtrip_residual"],
                qbia._max_abs(z2 - ze), qbia._max_abs(eta2 - ee))
            report["flatness_residual"] = max(
                report["flatness_residual"], self.flatness_residual(p))
            for i in range(len(sections)):
                for j in range(i + 1, len(sections)):
                    report["bracket_residual"] = max(
                        report["bracket_residual"],
                        self.bracket_morphism_residual(p, sections[i],
                                                       sections[j]))
            const_x = dynamics.PolynomialMap(k, n,
                                             coeff0=rng.standard_normal(n))
            lin_x = dynamics.PolynomialMap(
                k, n, coeff1=rng.standard_normal((n, k)))
            for xmap in (const_x, lin_x):
                report["psi_residual"] = max(
                    report["psi_residual"],
                    self.psi_compatibility_residual(p, xmap, alpha))
        report["passed"] = (report["anchor_residual"] <= ANCHOR_TOL
                            and report["roundtrip_residual"] <= ROUNDTRIP_TOL
                            and report["flatness_residual"] <= FLATNESS_TOL
                            and report["membership_residual"] <= MEMBERSHIP_TOL
                            and report["bracket_residual"] <= BRACKET_TOL
                            and report["psi_residual"] <= PSI_TOL)
        return report


def phi_p_iso(p, triv):
    """Fiber isomorphism onto the zero fiber, certified.

    Returns the matrix in the bases (constrained subalgebra-type elements
    then annihilator covectors over p) -> (zero-fiber coordinates), the
    residual against the closed forms of its two blocks (inverse odd kernel
    on the subalgebra block, inverse covector flow block on the annihilator
    block), the leakage outside the target blocks, and the residual of the
    map as a Lie algebra isomorphism between the two fiber algebras.
    """
    p = np.asarray(p, dtype=float)
    triv.field._require_domain(p)
    n, k = triv.n, triv.k
    mat, leak, _ = triv._phi_data(p)
    a = triv._ad_dual(p)
    closed = np.zeros_like(mat)
    iv = linalg.INV_SINHC.apply(a)
    for idx in range(k):
        w = iv @ triv.double.embed(x=triv.inj[:, idx])
        closed[:k, idx] = w[:n][triv.sub]
        closed[k:, idx] = w[n:][triv.comp]
    blk = scipy.linalg.expm(a)[n:, n:]
    for j, b in enumerate(triv.comp):
        w = np.linalg.solve(blk, np.eye(n)[b])
        closed[:k, k + j] = 0.0
        closed[k:, k + j] = w[triv.comp]
    cp = dynamics.vertex_dual(p, triv.field).c
    inter = qbia._max_abs(
        np.einsum("km,ijm->ijk", mat, cp)
        - np.einsum("ai,bj,abk->ijk", mat, mat, triv.fiber_c))
    return {"matrix": mat,
            "closed_form_residual": qbia._max_abs(mat - closed),
            "membership_residual": leak,
            "intertwining_residual": inter}


# ---------------------------------------------------------------------------
# the duality identity


def duality_theorem_check(G, decomp=None, samples=20, seed=0, scale=0.4):
    """Largest deviation between the sign-twisted trivialization of a
    structure and the trivialization of its dual, over sampled points.

    Both sides are evaluated on matched arguments: a base covector
    direction, a subalgebra element, and a complement element (fed as an
    annihilator coordinate on the dual side); the dual-side output is
    carried back through the plain extraction frame identifying the dual's
    double with the original double (the cocycle flip of the dual structure
    already absorbs the sign of the involution relating the two sides).
    """
    decomp = _resolve_decomp(G, decomp)
    field = dynamics.canonical_field(G, decomp)
    star = dual_qbia(G, decomp)
    if star.decomp is None:
        raise PreconditionFailed("dual carries no reductive split")
    triv_star = TrivializationMap(star, star.decomp)
    dbl = field.double
    n = G.dim
    k = decomp.dim_sub
    inj = decomp.inj_sub
    cinj = decomp.inj_comp
    sub = list(decomp.sub)
    rng = np.random.default_rng(seed)
    worst = 0.0
    used = 0
    for _ in range(4 * samples):
        if used == samples:
            break
        p = scale * rng.standard_normal(k)
        if not dynamics.in_domain(p, field)["in_domain"]:
            continue
        if not dynamics.in_domain(p, triv_star.field)["in_domain"]:
            continue
        alpha = rng.standard_normal(k)
        z = rng.standard_normal(k)
        u = rng.standard_normal(n - k)
        a = dbl.d.ad_matrix(dbl.embed(xi=inj @ p))
        sa = dbl.embed(xi=inj @ alpha)
        ze = dbl.embed(x=inj @ z)
        ue = dbl.embed(x=cinj @ u)
        first = linalg.SINH_REM.apply(a) @ sa - linalg.SINHC.apply(a) @ ze
        second = linalg.SINHC.apply(a) @ sa - linalg.SINH.apply(a) @ ze
        flow = scipy.linalg.expm(-a) @ ue
        lhs_first = first[:n][sub]
        lhs_second = second - dbl.embed(x=flow[:n])
        zs, etas = triv_star.trivialization_T(p, alpha,
                                              np.concatenate([z, u]))
        rhs_second = dbl.embed(x=cinj @ etas[k:], xi=inj @ etas[:k])
        worst = max(worst,
                    qbia._max_abs(lhs_first - zs),
                    qbia._max_abs(lhs_second - rhs_second))
        used += 1
    if used == 0:
        raise dynamics.OutOfDomain(
            "no sample points inside both chart domains")
    return worst


# ---------------------------------------------------------------------------
# derivative identities of the dual-parameter adjoint


def differential_identities(field, p, alpha, beta, power=4):
    """Residuals of three closed-form derivative identities in the double.

    power_rule: the binomial expansion of the derivative of an iterated
    bracket power against the plain product-rule expansion.  odd_kernel /
    even_kernel: the directional derivatives of the odd and even flow
    kernels of the dual-parameter adjoint, antisymmetrized over the two
    directions, against their double-bracket expansions.
    """
    d = field.double.d
    emb = field.double.embed
    inj = field.inj
    sp = emb(xi=inj @ np.asarray(p, dtype=float))
    sa = emb(xi=inj @ np.asarray(alpha, dtype=float))
    sb = emb(xi=inj @ np.asarray(beta, dtype=float))
    adp = d.ad_matrix(sp)
    ada = d.ad_matrix(sa)
    adb = d.ad_matrix(sb)
    r1 = 0.0
    for m in range(1, power + 1):
        lhs = linalg.d_ad_power(sp, sa, sb, m, d)
        rhs = np.zeros_like(lhs)
        for i in range(m):
            w = sb.copy()
            for _ in range(m - 1 - i):
                w = adp @ w
            w = ada @ w
            for _ in range(i):
                w = adp @ w
            rhs = rhs + w
        r1 = max(r1, qbia._max_abs(lhs - rhs))
    sh = linalg.SINHC.apply(adp)
    ch = linalg.EXPM1_OVER.apply(adp) - sh
    sha = linalg.SINHC.frechet(adp, ada)
    shb = linalg.SINHC.frechet(adp, adb)
    lhs2 = sha @ sb - shb @ sa
    rhs2 = d.bracket(ch @ sa, sh @ sb) + d.bracket(sh @ sa, ch @ sb)
    cha = linalg.EXPM1_OVER.frechet(adp, ada) - sha
    chb = linalg.EXPM1_OVER.frechet(adp, adb) - shb
    lhs3 = cha @ sb - chb @ sa
    rhs3 = d.bracket(sh @ sa, sh @ sb) + d.bracket(ch @ sa, ch @ sb)
    return {"power_rule_residual": r1,
            "odd_kernel_residual": qbia._max_abs(lhs2 - rhs2),
            "even_kernel_residual": qbia._max_abs(lhs3 - rhs3)}


# ---------------------------------------------------------------------------
# the semisimple / involution construction


def _signature(mat, tol=1e-8):
    w = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)
    pos = int(np.sum(w > tol * scale))
    neg = int(np.sum(w < -tol * scale))
    return (pos, neg, len(w) - pos - neg)


def symmetric_dual(g, sigma, tol=1e-10):
    """Dual structure of a semisimple algebra with an involution.

    Realifies the complexification as a double with the imaginary part of
    the trace form as pairing, extracts the cocommutative structure carried
    by the real block (certified: zero cocycle, 3-tensor equal to minus the
    invariant three-form of the trace form), and dualizes over the fixed
    subalgebra of the involution.  Reports the trace-form signatures of the
    base and dual algebras, semisimplicity of the dual, a direct model of
    the dual algebra inside the realified double, and the double-dual
    residual.
    """
    sigma = np.asarray(sigma, dtype=float)
    n = g.dim
    if sigma.shape != (n, n):
        raise ValueError("involution candidate must be %d x %d" % (n, n))
    if qbia._max_abs(sigma @ sigma - np.eye(n)) > tol:
        raise NotInvolution("square differs from the identity")
    auto = qbia._max_abs(np.einsum("ai,bj,abm->ijm", sigma, sigma, g.c)
                         - np.einsum("ml,ijl->ijm", sigma, g.c))
    if auto > tol:
        raise NotInvolution("not a bracket automorphism: residual %.3e"
                            % auto)
    b = g.killing_form()
    if not np.all(np.isfinite(b)) or np.linalg.cond(b) > SEMISIMPLE_COND_LIMIT:
        raise NotSemisimple("trace form is singular to working precision")

    # basis adapted to the eigenspaces of the involution
    pp = 0.5 * (np.eye(n) + sigma)
    k = int(round(np.trace(pp)))
    uu, _, _ = np.linalg.svd(pp)
    lb = uu[:, :k]
    uu, _, _ = np.linalg.svd(np.eye(n) - pp)
    mb = uu[:, :n - k]
    pchg = np.hstack([lb, mb])
    pinv = np.linalg.inv(pchg)
    c2 = np.einsum("ai,bj,abm,km->ijk", pchg, pchg, g.c, pinv)
    c2 = 0.5 * (c2 - c2.transpose(1, 0, 2))
    c2[np.abs(c2) < CHOP_TOL] = 0.0
    g2 = lie.LieAlgebraData(c2)
    decomp2 = lie.ReductiveDecomposition(g2, list(range(k)),
                                         list(range(k, n)))
    b2 = g2.killing_form()
    b2 = 0.5 * (b2 + b2.T)

    # realified complexification: basis (e; ie), pairing Im of the trace form
    n2 = 2 * n
    cc = np.zeros((n2, n2, n2))
    cc[:n, :n, :n] = c2
    cc[:n, n:, n:] = c2
    cc[n:, :n, n:] = c2
    cc[n:, n:, :n] = -c2
    names = g2.basis_names + ["i" + nm for nm in g2.basis_names]
    dcplx = lie.LieAlgebraData(cc, basis_names=names)
    q = np.zeros((n2, n2))
    q[:n, n:] = b2
    q[n:, :n] = b2
    split = linalg.BlockSplit(n2, list(range(n)), list(range(n, n2)))
    dd = qbia.DoubleAlgebra(dcplx, split, q)
    gsym = qbia.quasi_triple_extract(dd, list(range(n)), list(range(n, n2)),
                                     basis_names=g2.basis_names)
    gsym.decomp = decomp2

    omega = invariant_three_form(g2, b2)
    star = dual_qbia(gsym, decomp2)

    # direct model: dual basis inside the realified double
    binv = np.linalg.inv(b2)
    fr = np.zeros((n2, n))
    for a in range(k):
        fr[a, a] = 1.0
    for j, bidx in enumerate(decomp2.comp):
        fr[n:, k + j] = binv[:, bidx]
    model = 0.0
    for i in range(n):
        for j in range(n):
            v = dd.d.bracket(fr[:, i], fr[:, j])
            coef, _, _, _ = np.linalg.lstsq(fr, v, rcond=None)
            model = max(model, qbia._max_abs(fr @ coef - v),
                        qbia._max_abs(coef - star.g.c[i, j]))

    bstar = star.g.killing_form()
    dual_ss = bool(np.all(np.isfinite(bstar))
                   and np.linalg.cond(bstar) < SEMISIMPLE_COND_LIMIT)
    return {
        "algebra": g2,
        "basis_change": pchg,
        "structure": gsym,
        "decomp": decomp2,
        "dual": star,
        "double": dd,
        "cocommutative_residual": qbia._max_abs(gsym.varpi),
        "associator_residual": qbia._max_abs(gsym.phi + omega),
        "compatibility": qbia.check_compatibility(gsym, decomp2),
        "dual_model_residual": model,
        "double_dual_residual": double_dual_check(gsym, decomp2),
        "base_signature": _signature(b),
        "dual_signature": _signature(bstar),
        "dual_semisimple": dual_ss,
    }
