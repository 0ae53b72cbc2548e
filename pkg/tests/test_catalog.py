"""Tests for the catalog of verified example structures."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynlie import catalog, dynamics, lie, qbia, twist

RNG_SEED = 20260815


def sl3_from_matrices():
    """Independent rebuild of the rank-2 table from 3x3 commutators."""
    def unit(i, j):
        m = np.zeros((3, 3))
        m[i, j] = 1.0
        return m

    basis = [unit(0, 0) - unit(1, 1), unit(1, 1) - unit(2, 2),
             unit(0, 1), unit(1, 2), unit(0, 2),
             unit(1, 0), unit(2, 1), unit(2, 0)]
    flat = np.array([b.flatten() for b in basis]).T
    c = np.zeros((8, 8, 8))
    for i in range(8):
        for j in range(8):
            comm = basis[i] @ basis[j] - basis[j] @ basis[i]
            sol, _, _, _ = np.linalg.lstsq(flat, comm.flatten(), rcond=None)
            err = np.abs(flat @ sol - comm.flatten()).max()
            assert err < 1e-12
            c[i, j, :] = sol
    assert np.abs(c - np.round(c)).max() < 1e-12
    return np.round(c)


def test_registry_contains_required_entries():
    have = set(catalog.names())
    need = {"abelian", "sl2-cartan", "sl2-involution", "su2-lagrangian",
            "ev-sl2", "ev-sl2-gamma", "ev-sl3", "symmetric-sl2",
            "so3-identity"}
    assert need <= have


def test_every_entry_loads_with_passing_fixtures():
    for name in catalog.names():
        entry = catalog.get(name)
        assert entry.fixtures, name
        for fx in entry.fixtures:
            assert fx["passed"], (name, fx)
        rep = qbia.check_quasi_bialgebra(entry.G)
        assert rep["passed"], name


def test_get_rebuilds_fresh_objects():
    first = catalog.get("abelian")
    first.fixtures.clear()
    second = catalog.get("abelian")
    assert len(second.fixtures) == 3


def test_unknown_entry_raises():
    with pytest.raises(catalog.UnknownEntry):
        catalog.get("definitely-not-registered")
    assert issubclass(catalog.UnknownEntry, KeyError)


def test_sl3_table_matches_defining_representation():
    oracle = sl3_from_matrices()
    frozen = catalog.sl3_chevalley().c
    err = np.abs(frozen - oracle).max()
    assert err == 0.0


def test_sl3_jacobi_residual():
    g = catalog.sl3_chevalley()
    assert g.jacobi_residual() < 1e-13


def test_ev_basis_normalization():
    # Cartan part orthonormal, opposite root vectors pairing to one
    g, decomp, roots, pair, _, _ = catalog._ev_root_data(2)
    B = g.killing_form()
    expected = np.zeros((8, 8))
    expected[0, 0] = expected[1, 1] = 1.0
    for s, t in pair.items():
        expected[s, t] = 1.0
    err = np.abs(B - expected).max()
    assert err < 1e-12
    # root covectors read off against the frozen coordinates
    eye = np.eye(8)
    for s, gamma in roots.items():
        for i in decomp.sub:
            err = abs(g.bracket(eye[i], eye[s])[s] - gamma[i])
            assert err < 1e-12


def test_build_abelian_dimensions():
    entry = catalog.build_abelian(4, 2)
    assert entry.G.dim == 4
    assert entry.decomp.dim_sub == 2
    field = dynamics.canonical_field(entry.G, entry.decomp)
    p = np.array([0.7, -0.4])
    assert np.abs(field.value(p)).max() == 0.0


def test_ev_singular_mu_raises():
    with pytest.raises(catalog.SingularMu):
        catalog.build_EV(1, (0,), mu=[0.0])


def test_ev_gamma_index_out_of_range():
    with pytest.raises(ValueError):
        catalog.build_EV(1, (3,))


def test_ev_cartan_block_must_be_skew():
    with pytest.raises(twist.NotSkew):
        catalog.build_EV(2, (0,), C0=[[0.0, 1.0], [0.0, 0.0]])


def test_ev_nonzero_cartan_block_skips_membership():
    C0 = [[0.0, 0.3], [-0.3, 0.0]]
    entry = catalog.build_EV(2, (0,), C0=C0)
    names = [fx["name"] for fx in entry.fixtures]
    assert "twist-is-canonical" in names
    assert "moduli-membership" not in names
    assert entry.params["C0"] == C0


def test_ev_full_gamma_dual_cocycle_exact():
    for rank, full in ((1, (0,)), (2, (0, 1))):
        entry = catalog.build_EV(rank, full)
        names = [fx["name"] for fx in entry.fixtures]
        assert "dual-cocycle-exact" in names
        assert "dual-cocycle-not-exact" not in names


def test_ev_partial_gamma_dual_cocycle_not_exact():
    for rank, part in ((1, ()), (2, (1,))):
        entry = catalog.build_EV(rank, part)
        fx = {f["name"]: f for f in entry.fixtures}
        assert fx["dual-cocycle-not-exact"]["residual"] > 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(0.4, 3.0))
def test_ev_entry_verifies_along_the_offset_ray(m):
    entry = catalog.build_EV(1, (0,), mu=[m])
    for fx in entry.fixtures:
        assert fx["passed"], fx


def test_ev_shifted_field_solves_untwisted_flow():
    # the canonical field of the twisted structure, translated by the
    # twist itself, satisfies the flow equations of the original
    for name in ("ev-sl2", "ev-sl2-gamma"):
        entry = catalog.get(name)
        rho = np.array(entry.params["rho"])
        base = twist.apply_twist(entry.G, -rho)
        assert np.abs(base.varpi).max() < 1e-14
        field = dynamics.canonical_field(entry.G, entry.decomp)
        shifted = dynamics.shifted_field(field, rho, target=base)
        worst = 0.0
        for p in dynamics.sample_domain_points(shifted, 5, seed=3):
            rep = dynamics.cdybe_residual(shifted, p)
            worst = max(worst, rep["cyclic_residual"],
                        rep["vector_residual"])
        assert worst < 1e-10


def test_entry_verification_rejects_failing_fixture():
    entry = catalog.get("abelian")
    bad = dict(entry.fixtures[0])
    bad.update(residual=1.0, passed=False, name="planted-failure")
    with pytest.raises(catalog.EntryVerificationError) as exc:
        catalog.CatalogEntry("abelian", {}, entry.G, entry.decomp,
                             entry.fixtures + [bad])
    assert "planted-failure" in str(exc.value)


def test_entry_verification_rejects_broken_structure():
    rng = np.random.default_rng(RNG_SEED)
    c = rng.standard_normal((3, 3, 3))
    c = c - c.transpose(1, 0, 2)
    g = lie.LieAlgebraData(c, check=False)
    G = qbia.QuasiBialgebra(g, np.zeros((3, 3, 3)), np.zeros((3, 3, 3)),
                            check=False)
    decomp = lie.ReductiveDecomposition(g, [0], [1, 2], check=False)
    with pytest.raises(catalog.EntryVerificationError):
        catalog.CatalogEntry("broken", {}, G, decomp, [],
                             compatibility=None)


def test_symmetric_entries_record_signature_behaviour():
    flip = catalog.get("symmetric-sl2")
    names = [fx["name"] for fx in flip.fixtures]
    assert "signatures-differ" in names
    same = catalog.get("so3-identity")
    names = [fx["name"] for fx in same.fixtures]
    assert "dual-equals-base" in names
