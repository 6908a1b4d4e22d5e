import itertools

import numpy as np
import pytest

from z2sim import hilbert
from z2sim.errors import EmptySectorError, PhysicsError
from z2sim.hilbert import (SectorConstraint, basis_state, build_operator,
                           convert_link_rep, embed_state, enumerate_basis,
                           gauss_sector, no_constraint, one_boson_per_plaquette,
                           partial_trace_matter)
from z2sim.lattice import chain_of_plaquettes


# ---------------------------------------------------------------------------
# independent dense oracle: explicit Kronecker products over all modes
# ---------------------------------------------------------------------------

def kron_chain(mats):
    out = np.array([[1.0]], dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def dense_mode_op(n_modes, which, mat):
    eye = np.eye(2, dtype=complex)
    return kron_chain([mat if i == which else eye for i in range(n_modes)])


A_DENSE = np.array([[0, 1], [0, 0]], dtype=complex)        # annihilation, 2 levels
TAUZ_IN_Z = np.diag([1.0, -1.0]).astype(complex)
FLIP = np.array([[0, 1], [1, 0]], dtype=complex)


def dense_one_boson_projection(geom, basis, dense_full):
    """Restrict a dense operator on the full 2^(sites+links) space to `basis`."""
    cols = []
    for row in basis.states:
        idx = 0
        for b in row:
            idx = 2 * idx + int(b)
        cols.append(idx)
    return dense_full[np.ix_(cols, cols)]


def test_dimensions():
    geom1 = chain_of_plaquettes(1)
    b1 = enumerate_basis(geom1, one_boson_per_plaquette())
    assert b1.dim == 3 * 2 ** 3 == 24
    geom3 = chain_of_plaquettes(3)
    b3 = enumerate_basis(geom3, one_boson_per_plaquette())
    assert b3.dim == 3 ** 3 * 2 ** 7 == 3456


def test_gauss_sector_dimension_brute_force():
    """Count sector states by enumerating all products independently.

    The three vertex Gauss operators of a single plaquette multiply to
    (-1)^{N_total} = -1, so only two are independent: the sector holds
    24 / 4 = 6 states, not 24 / 8.
    """
    geom = chain_of_plaquettes(1)
    wanted = geom.grown_sector()
    count = 0
    for occ in itertools.product((0, 1), repeat=3):
        if sum(occ) != 1:
            continue
        for bits in itertools.product((0, 1), repeat=3):
            vals = {l.index: 1 - 2 * bits[l.index] for l in geom.links}
            ok = True
            for v in geom.super_sites:
                g = (-1) ** sum(occ[s] for s in v.members)
                for l in v.links:
                    g *= vals[l]
                if g != wanted[v.index]:
                    ok = False
            count += ok
    assert count == 6
    basis = enumerate_basis(geom, gauss_sector(wanted), link_rep="x")
    assert basis.dim == count


def test_gauss_sector_three_plaquettes():
    geom = chain_of_plaquettes(3)
    basis = enumerate_basis(geom, gauss_sector(geom.grown_sector()), link_rep="x")
    # five super-sites, product of all G fixed by total matter parity
    assert basis.dim == 3456 // 2 ** 4


def test_empty_sector_errors():
    geom = chain_of_plaquettes(1)
    allplus = {v.index: 1 for v in geom.super_sites}  # inconsistent with N_tot odd
    with pytest.raises(EmptySectorError):
        enumerate_basis(geom, gauss_sector(allplus), link_rep="x")


def test_index_roundtrip():
    geom = chain_of_plaquettes(2)
    basis = enumerate_basis(geom, one_boson_per_plaquette())
    for k in range(basis.dim):
        assert basis.index(basis.states[k]) == k


def test_taux_is_pauli_x():
    basis = enumerate_basis(None, no_constraint(), matter_dims={}, link_ids=[0])
    op = build_operator(basis, [(1.0, [("taux", 0)])])
    assert np.allclose(op.dense(), FLIP)
    opz = build_operator(basis, [(1.0, [("tauz", 0)])])
    assert np.allclose(opz.dense(), TAUZ_IN_Z)


def test_number_operator_with_cutoff():
    basis = enumerate_basis(None, no_constraint(), matter_dims={7: 3})
    op = build_operator(basis, [(1.0, [("adag", 7), ("a", 7)])])
    assert np.allclose(op.dense(), np.diag([0.0, 1.0, 2.0]))
    # adag on the top level truncates to zero
    adag = build_operator(basis, [(1.0, [("adag", 7)])]).dense()
    assert adag[0, 2] == 0 and np.isclose(adag[2, 1], np.sqrt(2))


def test_hopping_matches_dense_kron_oracle():
    geom = chain_of_plaquettes(1)
    basis = enumerate_basis(geom, one_boson_per_plaquette())
    n_modes = 6  # sites 0,1,2 then links 0,1,2
    a1 = dense_mode_op(n_modes, 1, A_DENSE)
    a2dag = dense_mode_op(n_modes, 2, A_DENSE.conj().T)
    tz0 = dense_mode_op(n_modes, 3 + 0, TAUZ_IN_Z)
    dense = a2dag @ tz0 @ a1
    oracle = dense_one_boson_projection(geom, basis, dense)
    op = build_operator(basis, [(1.0, [("adag", 2), ("tauz", 0), ("a", 1)])])
    assert np.allclose(op.dense(), oracle, atol=1e-14)


def test_sector_operator_is_projection_of_unconstrained():
    geom = chain_of_plaquettes(1)
    constrained = enumerate_basis(geom, one_boson_per_plaquette())
    free = enumerate_basis(geom, no_constraint())
    terms = []
    for p in geom.plaquettes:
        for j in range(3):
            si, sj = p.sites[j], p.sites[(j + 1) % 3]
            l = p.links[j]
            terms.append((-1.0, [("adag", sj), ("tauz", l), ("a", si)]))
            terms.append((-1.0, [("adag", si), ("tauz", l), ("a", sj)]))
    big = build_operator(free, terms).dense()
    cols = [free.index(row) for row in constrained.states]
    small = build_operator(constrained, terms).dense()
    assert np.allclose(small, big[np.ix_(cols, cols)], atol=1e-14)


def test_adjoint_of_term_list():
    rng = np.random.default_rng(11)
    geom = chain_of_plaquettes(1)
    basis = enumerate_basis(geom, one_boson_per_plaquette())
    names = ["a", "adag", "n", "parity", "tauz", "taux"]
    conj = {"a": "adag", "adag": "a", "n": "n", "parity": "parity",
            "tauz": "tauz", "taux": "taux"}
    for _ in range(5):
        factors = []
        for _ in range(rng.integers(1, 4)):
            name = names[rng.integers(len(names))]
            ident = int(rng.integers(3))
            factors.append((name, ident))
        coeff = complex(rng.normal(), rng.normal())
        fwd = build_operator(basis, [(coeff, factors)])
        back = build_operator(
            basis, [(np.conj(coeff), [(conj[n], i) for n, i in reversed(factors)])])
        assert hilbert.max_abs(fwd.matrix.conj().T - back.matrix) < 1e-13


def test_audit_reports_dropped_weight():
    geom = chain_of_plaquettes(1)
    basis = enumerate_basis(geom, one_boson_per_plaquette())
    # bare annihilation leaves the one-boson sector everywhere
    _, dropped = build_operator(basis, [(1.0, [("a", 0)])], audit=True)
    assert dropped > 0
    # gauge-matter hopping conserves it exactly
    _, dropped = build_operator(
        basis, [(1.0, [("adag", 1), ("tauz", 2), ("a", 0)])], audit=True)
    assert dropped == 0


def test_unknown_ids():
    geom = chain_of_plaquettes(1)
    basis = enumerate_basis(geom, one_boson_per_plaquette())
    with pytest.raises(KeyError):
        build_operator(basis, [(1.0, [("a", 99)])])
    with pytest.raises(KeyError):
        build_operator(basis, [(1.0, [("taux", 99)])])


def test_partial_trace_product_state():
    basis = enumerate_basis(None, no_constraint(), matter_dims={0: 2}, link_ids=[0])
    vec = basis_state(basis, {0: 1}, {0: -1})
    rho = partial_trace_matter(vec, basis)
    expect = np.zeros((2, 2))
    expect[1, 1] = 1.0  # link bit 1 = tau value -1
    assert np.allclose(rho, expect)


def test_partial_trace_maximally_entangled():
    basis = enumerate_basis(None, no_constraint(), matter_dims={0: 2}, link_ids=[0])
    vec = (basis_state(basis, {0: 0}, {0: 1}) + basis_state(basis, {0: 1}, {0: -1}))
    vec /= np.linalg.norm(vec)
    rho = partial_trace_matter(vec, basis)
    assert np.allclose(rho, np.eye(2) / 2)
    assert abs(np.trace(rho) - 1) < 1e-12


def test_partial_trace_requires_normalized():
    basis = enumerate_basis(None, no_constraint(), matter_dims={0: 2}, link_ids=[0])
    with pytest.raises(PhysicsError):
        partial_trace_matter(2.0 * basis_state(basis, {0: 0}, {0: 1}), basis)


def test_link_rep_conversion_roundtrip():
    geom = chain_of_plaquettes(1)
    basis = enumerate_basis(geom, one_boson_per_plaquette(), link_rep="z")
    rng = np.random.default_rng(3)
    vec = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    vec /= np.linalg.norm(vec)
    vx, bx = convert_link_rep(vec, basis, "x")
    back, _ = convert_link_rep(vx, bx, "z")
    assert np.allclose(back, vec)
    # tau^x eigenstate in z-rep becomes a product state in x-rep
    onelink = enumerate_basis(None, no_constraint(), matter_dims={0: 2}, link_ids=[5])
    plus = (basis_state(onelink, {0: 0}, {5: 1}) + basis_state(onelink, {0: 0}, {5: -1}))
    plus /= np.sqrt(2)
    px, bx1 = convert_link_rep(plus, onelink, "x")
    assert np.allclose(px, basis_state(bx1, {0: 0}, {5: 1}))


def test_embed_sector_state():
    geom = chain_of_plaquettes(1)
    sector = enumerate_basis(geom, gauss_sector(geom.grown_sector()), link_rep="x")
    full = enumerate_basis(geom, one_boson_per_plaquette(), link_rep="x")
    vec = np.zeros(sector.dim, dtype=complex)
    vec[0] = 1.0
    big = embed_state(vec, sector, full)
    assert np.linalg.norm(big) == 1.0
    assert full.states[np.argmax(np.abs(big))].tobytes() == sector.states[0].tobytes()


def test_constraint_kind_validation():
    with pytest.raises(ValueError):
        SectorConstraint("bogus")
