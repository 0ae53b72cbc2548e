"""Tests for dynamical fields: the closed-form constructions, the two forms
of the dynamical Yang-Baxter system, base-point duals, and gauge actions."""

import numpy as np
import scipy.linalg
import pytest
from hypothesis import given, settings, strategies as st

from dynlie import dynamics as dyn
from dynlie import lie, linalg, qbia, twist

TOL = 1e-10


def invariant_structure():
    """sl2 with vanishing cocycle and the invariant 3-tensor built from the
    Killing form; cocommutative and valid."""
    g = lie.sl2_data()
    binv = np.linalg.inv(g.killing_form())
    phi = 0.25 * np.einsum("ja,kb,abi->ijk", binv, binv, g.c)
    return qbia.QuasiBialgebra(g, np.zeros((3, 3, 3)),
                               linalg.antisymmetrize3(phi))


def cartan_split(G):
    return lie.ReductiveDecomposition(G.g, [0], [1, 2])


def rskew(n, rng, scale=0.3):
    m = scale * rng.standard_normal((n, n))
    return m - m.T


# -- polynomial jets ---------------------------------------------------------


def test_polynomial_map_against_finite_differences():
    rng = np.random.default_rng(0)
    f = dyn.PolynomialMap(2, 3, coeff0=rng.standard_normal(3),
                          coeff1=rng.standard_normal((3, 2)),
                          coeff2=rng.standard_normal((3, 2, 2)))
    p = rng.standard_normal(2)
    a = rng.standard_normal(2)
    h = 1e-6
    fd_jac = (f.value(p + h * a) - f.value(p - h * a)) / (2 * h)
    err = np.max(np.abs(f.jacobian(p) @ a - fd_jac))
    assert err < 1e-8
    fd_hess = (f.jacobian(p + h * a) - f.jacobian(p - h * a)) / (2 * h)
    err = np.max(np.abs(f.jacobian_derivative(p, a) - fd_hess))
    assert err < 1e-8


# -- elementary field kinds --------------------------------------------------


def test_zero_and_constant_fields():
    G = invariant_structure()
    f0 = dyn.zero_field(G)
    p = np.array([0.1, -0.2, 0.3])
    assert np.max(np.abs(f0.value(p))) == 0.0
    assert np.max(np.abs(f0.derivative(p, p))) == 0.0
    t = rskew(3, np.random.default_rng(1))
    fc = dyn.constant_field(G, t)
    assert np.max(np.abs(fc.value(p) - t)) == 0.0
    with pytest.raises(ValueError):
        dyn.constant_field(G, np.eye(3))


def test_polynomial_field_evaluation_and_derivative():
    G = invariant_structure()
    dec = cartan_split(G)
    rng = np.random.default_rng(2)
    t1 = np.stack([rskew(3, rng)])
    t2 = np.stack([np.stack([rskew(3, rng)])])
    f = dyn.polynomial_field(G, dec, coeff1=t1, coeff2=t2)
    p = np.array([0.4])
    expect = 0.4 * t1[0] + 0.16 * t2[0, 0]
    assert np.max(np.abs(f.value(p) - expect)) < 1e-14
    fd = linalg.finite_diff(f.value, p, np.array([1.0]))
    err = np.max(np.abs(f.derivative(p, np.array([1.0])) - fd))
    assert err < 1e-9


# -- the odd-function field on the full base ---------------------------------


def test_cocom_field_requires_vanishing_cocycle():
    g = lie.LieAlgebraData(np.zeros((2, 2, 2)))
    w = np.zeros((2, 2, 2))
    w[0, 0, 1] = 1.0
    w[0, 1, 0] = -1.0
    G = qbia.QuasiBialgebra(g, w, np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        dyn.cocom_field(G)


def test_cocom_field_solves_system():
    G = invariant_structure()
    f = dyn.cocom_field(G)
    rng = np.random.default_rng(3)
    for _ in range(6):
        p = 0.5 * rng.standard_normal(3)
        rep = dyn.cdybe_residual(f, p)
        assert rep["passed"]
        assert rep["cyclic_residual"] < 1e-12
        assert rep["vector_residual"] < 1e-12
        assert rep["forms_agreement"] < 1e-12
        assert rep["derivative_fd_residual"] < 1e-6


def test_cocom_field_equivariance():
    G = invariant_structure()
    f = dyn.cocom_field(G)
    rng = np.random.default_rng(4)
    p = 0.4 * rng.standard_normal(3)
    for a in range(3):
        err = dyn.equivariance_residual(f, p, np.eye(3)[a])
        assert err < 1e-12


# -- the closed-form field on a reductive split ------------------------------


def test_canonical_field_basics():
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    p = np.array([0.3])
    lmat = f.value(p)
    assert linalg.skew_residual(lmat) < 1e-12
    # annihilator of the complement maps into the subalgebra and vice versa
    err_sub = np.max(np.abs((lmat @ np.array([1.0, 0, 0]))[[1, 2]]))
    err_perp = np.max(np.abs((lmat @ np.array([0, 0.7, -0.2]))[0]))
    assert err_sub < TOL and err_perp < TOL
    rep = dyn.cdybe_residual(f, p)
    assert rep["passed"] and rep["cyclic_residual"] < 1e-12
    err = dyn.equivariance_residual(f, p, np.array([1.0]))
    assert err < 1e-12


def test_canonical_matches_independent_closed_form():
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10):
        p = 0.6 * rng.standard_normal(1)
        worst = max(worst, np.max(np.abs(
            f.value(p) - dyn.compatible_closed_form(G, dec, p))))
    assert worst < TOL


def test_canonical_full_split_matches_cocom():
    G = invariant_structure()
    f_full = dyn.canonical_field(G)
    f = dyn.cocom_field(G)
    rng = np.random.default_rng(6)
    for _ in range(5):
        p = 0.4 * rng.standard_normal(3)
        err = np.max(np.abs(f_full.value(p) - f.value(p)))
        assert err < TOL
        a = rng.standard_normal(3)
        err = np.max(np.abs(f_full.derivative(p, a) - f.derivative(p, a)))
        assert err < TOL


def test_canonical_rejects_incompatible_structure():
    g = lie.sl2_data()
    c4 = np.zeros((4, 4, 4))
    c4[:3, :3, :3] = g.c
    g4 = lie.LieAlgebraData(c4)
    phi4 = np.zeros((4, 4, 4))
    phi4[1, 2, 3] = 1.0
    phi4 = 6.0 * linalg.antisymmetrize3(phi4)
    G4 = qbia.QuasiBialgebra(g4, np.zeros((4, 4, 4)), phi4, check=False)
    dec4 = lie.ReductiveDecomposition(g4, [0], [1, 2, 3])
    with pytest.raises(dyn.NotCanonicalCompatible):
        dyn.canonical_field(G4, dec4)


# -- domain ------------------------------------------------------------------


def test_domain_boundary_and_out_of_domain_error():
    G = invariant_structure()
    f = dyn.cocom_field(G)
    # along this dual direction the flow generator has eigenvalues +-i/4,
    # so the first pole is hit at scale 4*pi
    direction = np.array([0.0, 1.0, -1.0])
    ok = dyn.in_domain(12.0 * direction, f)
    assert ok["in_domain"] and ok["spectral_margin"] > 0.1
    bad = dyn.in_domain(4.0 * np.pi * direction, f)
    assert not bad["in_domain"]
    assert bad["failing"] == "spectral-margin"
    with pytest.raises(dyn.OutOfDomain):
        f.value(4.0 * np.pi * direction)
    assert issubclass(dyn.OutOfDomain, linalg.DomainViolation)


def test_domain_trivial_for_jet_fields():
    G = invariant_structure()
    f = dyn.zero_field(G)
    rep = dyn.in_domain(1e3 * np.ones(3), f)
    assert rep["in_domain"]


def test_sample_domain_points_deterministic():
    G = invariant_structure()
    f = dyn.cocom_field(G)
    a = dyn.sample_domain_points(f, 5, seed=7)
    b = dyn.sample_domain_points(f, 5, seed=7)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert all(dyn.in_domain(p, f)["in_domain"] for p in a)


# -- residual reports --------------------------------------------------------


def test_cdybe_detects_perturbation():
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    bump = np.zeros((3, 3))
    bump[1, 2] = 0.05
    bump[2, 1] = -0.05
    broken = dyn.shifted_field(f, bump)
    rep = dyn.cdybe_residual(broken, np.array([0.3]))
    assert not rep["passed"]
    assert rep["cyclic_residual"] > 1e-4


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_two_system_forms_agree_for_arbitrary_fields(seed):
    # the cyclic-tensor form and the vector form are algebraically equal
    # for every skew field, solution or not
    G = invariant_structure()
    dec = cartan_split(G)
    rng = np.random.default_rng(seed)
    f = dyn.polynomial_field(
        G, dec,
        coeff0=rskew(3, rng),
        coeff1=np.stack([rskew(3, rng)]),
        coeff2=np.stack([np.stack([rskew(3, rng)])]))
    p = 0.5 * rng.standard_normal(1)
    rep = dyn.cdybe_residual(f, p, samples=4, seed=seed % 97)
    assert rep["forms_agreement"] < 1e-9


# -- twist-shift correspondence ----------------------------------------------


def test_twist_shift_correspondence():
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    rng = np.random.default_rng(8)
    for _ in range(5):
        t = rskew(3, rng)
        Gt = twist.apply_twist(G, t)
        shifted = dyn.shifted_field(f, -t, target=Gt)
        rep = dyn.cdybe_residual(shifted, np.array([0.25]), samples=4)
        assert rep["cyclic_residual"] < 1e-9
        assert rep["vector_residual"] < 1e-9


# -- base-point dual algebras -------------------------------------------------


def test_vertex_dual_at_origin_and_generic_point():
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    for q0 in (np.zeros(1), np.array([0.35])):
        out = dyn.vertex_dual(q0, f)
        assert out.dim == 3
        rep = out.report
        assert rep["passed"], rep
        assert rep["jacobi_residual"] < TOL
        assert rep["isotropy_residual"] < TOL
        assert rep["bracket_agreement"] < TOL


def test_vertex_dual_full_base():
    G = invariant_structure()
    f = dyn.cocom_field(G)
    rng = np.random.default_rng(9)
    out = dyn.vertex_dual(0.3 * rng.standard_normal(3), f)
    assert out.report["passed"], out.report


def test_vertex_dual_abelian_with_cocycle():
    g = lie.LieAlgebraData(np.zeros((2, 2, 2)))
    w = np.zeros((2, 2, 2))
    w[0, 0, 1] = 1.0
    w[0, 1, 0] = -1.0
    G = qbia.QuasiBialgebra(g, w, np.zeros((2, 2, 2)))
    out = dyn.vertex_dual(np.array([0.2, -0.4]), dyn.zero_field(G))
    assert out.report["passed"], out.report


# -- gauge action -------------------------------------------------------------


def equivariant_gauge(scale1, scale2):
    """On the rank-one split only the first basis direction centralizes the
    subalgebra, so equivariant gauges take values along it."""
    c1 = np.zeros((3, 1))
    c1[0, 0] = scale1
    c2 = np.zeros((3, 1, 1))
    c2[0, 0, 0] = scale2
    return dyn.PolynomialMap(1, 3, coeff1=c1, coeff2=c2)


def test_gauge_zero_is_identity():
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    fg = dyn.gauge_transform(f, dyn.PolynomialMap(1, 3))
    p = np.array([0.3])
    assert np.max(np.abs(fg.value(p) - f.value(p))) < 1e-14
    assert np.max(np.abs(fg.derivative(p, np.ones(1))
                         - f.derivative(p, np.ones(1)))) < 1e-14


def test_gauge_preserves_system():
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    fg = dyn.gauge_transform(f, equivariant_gauge(0.4, 0.15))
    rep = dyn.cdybe_residual(fg, np.array([0.27]))
    assert rep["passed"]
    assert rep["cyclic_residual"] < 1e-10
    assert rep["derivative_fd_residual"] < 1e-6


def test_gauge_preserves_system_with_exact_cocycle():
    # twisting produces an exact cocycle, which the gauge's group-cocycle
    # term must absorb through the recovered potential
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    t = np.zeros((3, 3))
    t[1, 2] = 0.31
    t[2, 1] = -0.31
    Gt = twist.apply_twist(G, t)
    shifted = dyn.shifted_field(f, -t, target=Gt)
    fg = dyn.gauge_transform(shifted, equivariant_gauge(0.4, 0.15))
    assert np.max(np.abs(fg.potential - t)) < 1e-9
    rep = dyn.cdybe_residual(fg, np.array([0.27]))
    assert rep["passed"]
    assert rep["cyclic_residual"] < 1e-10


def test_gauge_action_law_nested_equals_flat():
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    s1 = equivariant_gauge(0.4, 0.0)
    s2 = equivariant_gauge(0.0, 0.15)
    nested = dyn.gauge_transform(dyn.gauge_transform(f, s1), s2)
    flat = dyn.gauge_transform(f, [s2, s1])
    p = np.array([0.3])
    a = np.ones(1)
    assert np.max(np.abs(nested.value(p) - flat.value(p))) < 1e-12
    assert np.max(np.abs(nested.derivative(p, a)
                         - flat.derivative(p, a))) < 1e-12


def test_gauge_roundtrip_inverse_factor():
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    s = equivariant_gauge(0.4, 0.15)
    sneg = dyn.PolynomialMap(1, 3, coeff1=-s.c1, coeff2=-s.c2)
    back = dyn.gauge_transform(dyn.gauge_transform(f, s), sneg)
    p = np.array([0.3])
    assert np.max(np.abs(back.value(p) - f.value(p))) < 1e-12


def test_gauge_rejects_bad_maps():
    G = invariant_structure()
    dec = cartan_split(G)
    f = dyn.canonical_field(G, dec)
    # value along a root vector does not centralize the subalgebra
    bad = np.zeros((3, 1))
    bad[1, 0] = 0.4
    with pytest.raises(dyn.NonEquivariantSigma):
        dyn.gauge_transform(f, dyn.PolynomialMap(1, 3, coeff1=bad))
    with pytest.raises(ValueError):
        dyn.gauge_transform(f, dyn.PolynomialMap(1, 3, coeff0=np.ones(3)))
    # no potential exists for a non-exact cocycle
    g = lie.LieAlgebraData(np.zeros((2, 2, 2)))
    w = np.zeros((2, 2, 2))
    w[0, 0, 1] = 1.0
    w[0, 1, 0] = -1.0
    Gw = qbia.QuasiBialgebra(g, w, np.zeros((2, 2, 2)))
    with pytest.raises(dyn.UnsupportedCocycle):
        dyn.gauge_transform(dyn.zero_field(Gw),
                            dyn.PolynomialMap(2, 2, coeff1=0.1 * np.eye(2)))


# -- symmetry and transport checks --------------------------------------------


def test_inversion_symmetry():
    G = invariant_structure()
    dec = cartan_split(G)
    err = dyn.inversion_symmetry_check(G, dec, samples=15, seed=10)
    assert err < 1e-9


def test_morphism_transport():
    G = invariant_structure()
    dec = cartan_split(G)
    ident = np.eye(3)
    assert dyn.morphism_transport_check(ident, G, dec, G, dec) < TOL
    # inner automorphism generated by the subalgebra fixes it pointwise
    ups = scipy.linalg.expm(0.6 * G.g.ad_matrix(np.array([1.0, 0.0, 0.0])))
    err = dyn.morphism_transport_check(ups, G, dec, G, dec, samples=8, seed=11)
    assert err < 1e-9
    with pytest.raises(ValueError):
        dyn.morphism_transport_check(np.diag([1.0, 2.0, 3.0]), G, dec, G, dec)


def test_adjoint_flow_transport_identity():
    G = invariant_structure()
    dec = cartan_split(G)
    rng = np.random.default_rng(12)
    for _ in range(5):
        p = 0.6 * rng.standard_normal(1)
        xi = np.zeros(3)
        xi[1:] = rng.standard_normal(2)
        rep = dyn.adjoint_transport_identity(G, dec, p, xi)
        assert rep["membership_residual"] < TOL
        assert rep["identity_residual"] < TOL
        assert rep["offdiag_identity_residual"] < TOL
