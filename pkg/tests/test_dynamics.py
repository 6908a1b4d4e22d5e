import numpy as np
import pytest
import scipy.sparse as sp

from z2sim import dynamics
from z2sim.dynamics import (GrowingPlan, HamiltonianAssembler, RampSchedule,
                            energy_variance, evolve, gap_scan,
                            growing_step_gap, growing_step_params,
                            initial_matter_positions, run_growing)
from z2sim.effective import (EffectiveParams, build_lgt_hamiltonian,
                             hamiltonian_pieces, plaquette_operator)
from z2sim.errors import Z2SimError
from z2sim.hilbert import (basis_state, enumerate_basis, gauss_sector,
                           one_boson_per_plaquette)
from z2sim.lattice import chain_of_plaquettes
from z2sim.reduced import reduced_gap, suggested_path


def test_schedule_validation_and_lookup():
    base = {("h", 0): 1.0}
    sched = RampSchedule(base, [(2.0, {("h", 0): (1.0, 0.5)}),
                                (1.0, {("h", 0): (0.5, 0.0)})])
    assert sched.total_duration == 3.0
    assert sched.params_at(0.0)[("h", 0)] == 1.0
    assert sched.params_at(1.0)[("h", 0)] == pytest.approx(0.75)
    assert sched.params_at(3.0)[("h", 0)] == pytest.approx(0.0)
    with pytest.raises(Z2SimError):
        RampSchedule(base, [(1.0, {("h", 0): (0.3, 0.0)})])  # discontinuous
    with pytest.raises(Z2SimError):
        RampSchedule(base, [(0.0, {("h", 0): (1.0, 0.0)})])  # zero duration


def test_evolve_stationary_eigenstate():
    basis = enumerate_basis(chain_of_plaquettes(1), one_boson_per_plaquette())
    H = build_lgt_hamiltonian(basis, EffectiveParams(t=1.0, h=0.3)).matrix
    vals, vecs = np.linalg.eigh(H.toarray())
    psi0 = vecs[:, 0].astype(complex)
    sched = RampSchedule({("x", 0): 0.0}, [(5.0, {})])
    traj = evolve(psi0, lambda values: H, sched, substeps_per_segment=16)
    assert abs(abs(np.vdot(psi0, traj.final_state)) - 1.0) < 1e-12


def test_evolve_plaquette_flux_phases():
    # static H = -t B_P: flux eigenstates pick up exp(+i t T b)
    basis = enumerate_basis(chain_of_plaquettes(1), one_boson_per_plaquette())
    B = plaquette_operator(basis, 0).matrix
    H = (-1.0 * B).tocsr()
    T = 1.3
    sched = RampSchedule({}, [(T, {})])
    for b in (1, -1):
        link_vals = {0: 1, 1: 1, 2: b}  # product of tau^z values = b
        psi0 = basis_state(basis, {0: 1}, link_vals)
        traj = evolve(psi0, lambda values: H, sched, substeps_per_segment=8)
        phase = np.vdot(psi0, traj.final_state)
        assert abs(phase - np.exp(1j * T * b)) < 1e-10


def test_cf4_is_fourth_order_against_ode_oracle():
    """Independent oracle: dense adaptive ODE integration of a driven 2-level."""
    from scipy.integrate import solve_ivp
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)

    def hval(values):
        return values[("a", 0)] * sz + 0.4 * sx

    sched = RampSchedule({("a", 0): 1.0}, [(2.0, {("a", 0): (1.0, -1.0)})])
    psi0 = np.array([1.0, 0.0], dtype=complex)

    def rhs(t, y):
        v = sched.params_at(t)
        return -1j * (hval(v) @ y)

    sol = solve_ivp(rhs, (0, 2.0), psi0, rtol=1e-12, atol=1e-14)
    exact = sol.y[:, -1]
    errs = []
    for n in (4, 8, 16):
        traj = evolve(psi0, lambda v: sp.csr_matrix(hval(v)).toarray(), sched,
                      substeps_per_segment=n)
        errs.append(np.linalg.norm(traj.final_state - exact))
    order1 = np.log2(errs[0] / errs[1])
    order2 = np.log2(errs[1] / errs[2])
    assert order1 > 3.5 and order2 > 3.5


def test_initial_positions_three_plaquettes():
    geom = chain_of_plaquettes(3)
    occ, assignment = initial_matter_positions(geom)
    assert assignment == geom.grown_sector()
    filled = sorted(s for s, o in occ.items() if o)
    # one boson per plaquette, parity matches plaquette counts
    assert [geom.site_plaquette(s) for s in filled] == [0, 1, 2]
    for v in geom.super_sites:
        parity = -1 if sum(occ[s] for s in v.members) % 2 else 1
        assert parity == assignment[v.index]


def test_gauss_sector_is_exactly_conserved_in_full_basis():
    geom = chain_of_plaquettes(2)
    plan = GrowingPlan(geom, segment_duration=3.0)
    res = run_growing(plan, substeps_per_segment=24, basis_mode="full")
    assert res.leakages.max() < 1e-12


def test_sector_and_full_evolution_agree():
    geom = chain_of_plaquettes(2)
    plan = GrowingPlan(geom, segment_duration=4.0)
    a = run_growing(plan, substeps_per_segment=32, basis_mode="sector")
    b = run_growing(plan, substeps_per_segment=32, basis_mode="full")
    assert abs(a.final_fidelity - b.final_fidelity) < 1e-10


def test_growing_two_plaquettes_improves_with_duration():
    geom = chain_of_plaquettes(2)
    fids = []
    for dur in (2.0, 8.0, 24.0):
        res = run_growing(GrowingPlan(geom, segment_duration=dur),
                          substeps_per_segment=64)
        fids.append(res.final_fidelity)
    assert fids[0] < fids[1] < fids[2]
    assert fids[2] > 0.98


def test_single_plaquette_growing_adiabatic_limit():
    geom = chain_of_plaquettes(1)
    fids = []
    for dur in (3.0, 12.0, 36.0):
        res = run_growing(GrowingPlan(geom, segment_duration=dur),
                          substeps_per_segment=48)
        fids.append(res.final_fidelity)
    assert fids[0] < fids[1] < fids[2]
    assert fids[2] > 0.99


def test_energy_variance_shrinks_with_slower_ramp():
    geom = chain_of_plaquettes(2)
    out = []
    for dur, n in ((3.0, 48), (10.0, 48), (30.0, 96)):
        plan = GrowingPlan(geom, segment_duration=dur)
        res = run_growing(plan, substeps_per_segment=n)
        builder = HamiltonianAssembler(res.basis)
        H = builder(plan.schedule().params_at(plan.schedule().total_duration))
        out.append(energy_variance(H, res.final_state))
    assert out[0] > out[1] > out[2]
    assert out[2] < 1e-2


def test_growing_step_params_layout():
    geom = chain_of_plaquettes(3)
    params = growing_step_params(geom, step=1, tt=0.4, h=0.7, t=1.0, h0=0.9)
    grown = set(geom.plaquettes[0].links)
    new = [l for l in geom.plaquettes[1].links if l not in grown]
    future = [l for l in geom.plaquettes[2].links
              if l not in grown and l not in new]
    for l in grown:
        assert params.hopping(l) == 1.0 and params.field(l) == 0.0
    for l in new:
        assert params.hopping(l) == 0.4 and params.field(l) == 0.7
    for l in future:
        assert params.hopping(l) == 0.0 and params.field(l) == 0.9


def test_gap_scan_matches_reduced_on_two_plaquettes():
    geom = chain_of_plaquettes(2)
    tts = np.linspace(0, 1, 4)
    hs = np.linspace(0, 1, 4)
    surface = gap_scan(geom, 1, tts, hs)
    for i, tt in enumerate(tts):
        for j, h in enumerate(hs):
            assert abs(surface[i, j] - reduced_gap(1.0, tt, h)) < 1e-10


def test_full_ed_paths_have_constant_gap():
    geom = chain_of_plaquettes(3)
    _, assignment = initial_matter_positions(geom)
    basis = enumerate_basis(geom, gauss_sector(assignment), link_rep="x")
    pieces = hamiltonian_pieces(basis)
    for step in (1, 2):
        for tt, h in suggested_path(1.0, 1.0, 5):
            gap = growing_step_gap(basis, pieces, geom, step, tt, h)
            assert abs(gap - 1.0) < 1e-8


def test_flipped_link_must_be_boundary():
    geom = chain_of_plaquettes(3)
    shared = geom.double_links()[0]
    with pytest.raises(Z2SimError):
        GrowingPlan(geom, flipped_links=(shared,))
