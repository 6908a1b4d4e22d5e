"""Time evolution under parameter ramps, and the plaquette growing scheme.

Growing protocol on a chain: start from the trivial product state (all links
tau^x = +1, fields h0 pinning every link, all hoppings off; matter positions
fixed by the Gauss laws).  Step n raises the hopping on the new links of
plaquette n from 0 to t, then lowers their fields to 0.  Hoppings of every
bond living on a link switch on together with that link, so when the next
step starts the connection to the bulk is already at full strength.  The
vison variant flips the field sign on a chosen boundary link, which turns
the same product state into an excited eigenstate that the sweep carries
into a localized B_P = -1 state.

The integrator is a fourth-order commutator-free Magnus scheme: two matrix
exponentials per sub-step evaluated at the Gauss-Legendre nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from . import effective
from .effective import (EffectiveParams, assemble, build_gauge_transform,
                        hadamard_links, hamiltonian_pieces,
                        stabilizer_link_state)
from .errors import ConvergenceError, PhysicsError, Z2SimError
from .hilbert import (BasisSet, basis_state, check_normalized,
                      convert_link_rep, embed_state, enumerate_basis,
                      gauss_sector, link_state_overlap, one_boson_per_plaquette,
                      partial_trace_matter)
from .lattice import LatticeGeometry
from .reduced import spectral_gap

step_pieces = hamiltonian_pieces

# fourth-order commutator-free scheme, Gauss-Legendre nodes
_SQRT3 = math.sqrt(3.0)
_C1, _C2 = 0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0
_A1, _A2 = 0.25 - _SQRT3 / 6.0, 0.25 + _SQRT3 / 6.0

_DENSE_LIMIT = 1200  # eigendecomposition below, Krylov above


# ---------------------------------------------------------------------------
# ramp schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RampSegment:
    duration: float
    ramps: dict  # key -> (start_value, end_value), linear


class RampSchedule:
    """Piecewise-linear parameter schedule over named keys."""

    def __init__(self, base: dict, segments):
        self.base = dict(base)
        self.segments = [RampSegment(float(s.duration), dict(s.ramps))
                         if isinstance(s, RampSegment) else
                         RampSegment(float(s[0]), dict(s[1]))
                         for s in segments]
        current = dict(self.base)
        for i, seg in enumerate(self.segments):
            if seg.duration <= 0:
                raise Z2SimError(f"segment {i}: duration must be positive")
            for key, (v0, v1) in seg.ramps.items():
                have = current.get(key)
                if have is not None and abs(have - v0) > 1e-12:
                    raise Z2SimError(
                        f"segment {i}: parameter {key} jumps from {have} to {v0}")
                current[key] = v1
        self._edges = np.cumsum([0.0] + [s.duration for s in self.segments])

    @property
    def total_duration(self) -> float:
        return float(self._edges[-1])

    def segment_values(self, index: int, frac: float) -> dict:
        values = dict(self.base)
        for seg in self.segments[:index]:
            for key, (_, v1) in seg.ramps.items():
                values[key] = v1
        seg = self.segments[index]
        for key, (v0, v1) in seg.ramps.items():
            values[key] = v0 + (v1 - v0) * frac
        return values

    def params_at(self, time: float) -> dict:
        time = min(max(time, 0.0), self.total_duration)
        index = int(np.searchsorted(self._edges[1:], time, side="left"))
        index = min(index, len(self.segments) - 1)
        frac = (time - self._edges[index]) / self.segments[index].duration
        return self.segment_values(index, frac)


def params_to_effective(values: dict) -> EffectiveParams:
    t_links, h_links = {}, {}
    for (kind, link), value in values.items():
        if kind == "t":
            t_links[link] = value
        elif kind == "h":
            h_links[link] = value
        else:
            raise Z2SimError(f"unknown schedule key kind {kind!r}")
    return EffectiveParams(t=0.0, h=0.0, t_links=t_links, h_links=h_links)


# ---------------------------------------------------------------------------
# integrator
# ---------------------------------------------------------------------------

def _expm_apply(H, dt: float, psi: np.ndarray) -> np.ndarray:
    if isinstance(H, np.ndarray):
        return spla.expm_multiply(-1j * dt * H, psi)
    if H.shape[0] <= _DENSE_LIMIT:
        return spla.expm_multiply(-1j * dt * H.toarray(), psi)
    return spla.expm_multiply(-1j * dt * H.tocsc(), psi)


class HamiltonianAssembler:
    """Maps schedule values to H = -sum tt_l hop_l - sum h_l field_l.

    Small problems keep the pieces as one dense stack so reassembly is a
    single matrix-vector product; large ones stay sparse.
    """

    def __init__(self, basis: BasisSet):
        self.basis = basis
        pieces = hamiltonian_pieces(basis)
        self.keys = sorted(pieces)
        self.dense = basis.dim <= _DENSE_LIMIT
        if self.dense:
            self.stack = np.stack([pieces[k].toarray().ravel() for k in self.keys])
        else:
            self.pieces = pieces

    def coefficients(self, values: dict) -> np.ndarray:
        params = params_to_effective(values)
        coeffs = np.empty(len(self.keys))
        for i, (kind, link) in enumerate(self.keys):
            coeffs[i] = -params.hopping(link) if kind == "hop" else -params.field(link)
        return coeffs

    def __call__(self, values: dict):
        if self.dense:
            d = self.basis.dim
            return (self.coefficients(values) @ self.stack).reshape(d, d)
        return assemble(self.basis, self.pieces, params_to_effective(values)).tocsr()


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    final_state: np.ndarray


def evolve(state: np.ndarray, hamiltonian_of, schedule: RampSchedule,
           substeps_per_segment: int, sample_stride: int | None = None,
           method: str = "cf4", norm_tol: float = 1e-10) -> Trajectory:
    """Propagate through the schedule; exact exponentials of frozen Hamiltonians.

    `hamiltonian_of` maps a schedule value dict to a sparse matrix.  Sampled
    states are stored every `sample_stride` sub-steps (always including both
    endpoints).
    """
    check_normalized(state)
    psi = np.array(state, dtype=np.complex128)
    times, states = [0.0], [psi.copy()]
    t0 = 0.0
    for i, seg in enumerate(schedule.segments):
        n = substeps_per_segment
        dt = seg.duration / n
        for k in range(n):
            if method == "cf4":
                H1 = hamiltonian_of(schedule.segment_values(i, (k + _C1) / n))
                H2 = hamiltonian_of(schedule.segment_values(i, (k + _C2) / n))
                psi = _expm_apply(_A2 * H1 + _A1 * H2, dt, psi)
                psi = _expm_apply(_A1 * H1 + _A2 * H2, dt, psi)
            elif method == "midpoint":
                Hm = hamiltonian_of(schedule.segment_values(i, (k + 0.5) / n))
                psi = _expm_apply(Hm, dt, psi)
            else:
                raise Z2SimError(f"unknown method {method!r}")
            tick = t0 + (k + 1) * dt
            if sample_stride and ((k + 1) % sample_stride == 0 or k == n - 1):
                times.append(tick)
                states.append(psi.copy())
        t0 += seg.duration
    if abs(np.linalg.norm(psi) - 1.0) > norm_tol:
        raise PhysicsError("norm drifted during evolution")
    if not sample_stride:
        times.append(schedule.total_duration)
        states.append(psi.copy())
    return Trajectory(np.array(times), states, psi)


# ---------------------------------------------------------------------------
# growing plans
# ---------------------------------------------------------------------------

def initial_matter_positions(geom: LatticeGeometry):
    """Product-state matter placement and its Gauss assignment.

    With all links in tau^x = +1 the Gauss eigenvalue at a super-site is its
    occupation parity; the grown sector needs that parity to match the
    plaquette count.  Returns (occupations, gauss assignment).  If no exact
    match exists (a single isolated triangle) or several do, the
    lexicographically first placement is used and the realized assignment
    returned.
    """
    wanted = geom.grown_sector()
    matches = []
    import itertools
    for slots in itertools.product(range(3), repeat=geom.n_plaquettes):
        occ = {s: 0 for s in geom.matter_sites}
        for p, slot in enumerate(slots):
            occ[3 * p + slot] = 1
        ok = all(
            (-1 if sum(occ[s] for s in v.members) % 2 else 1) == wanted[v.index]
            for v in geom.super_sites)
        if ok:
            matches.append(occ)
    if matches:
        occ = matches[0]
    else:
        occ = {s: 0 for s in geom.matter_sites}
        for p in range(geom.n_plaquettes):
            occ[3 * p] = 1
    assignment = {
        v.index: -1 if sum(occ[s] for s in v.members) % 2 else 1
        for v in geom.super_sites}
    return occ, assignment


@dataclass
class GrowingPlan:
    geom: LatticeGeometry
    t: float = 1.0
    h0: float = 1.0
    segment_duration: float = 25.0
    order: tuple | None = None
    flipped_links: tuple = ()

    def __post_init__(self):
        if self.order is None:
            self.order = tuple(range(self.geom.n_plaquettes))
        for l in self.flipped_links:
            if self.geom.links[l].is_double:
                raise Z2SimError(f"flipped link {l} is shared; flip a boundary link")

    def field_sign(self, link: int) -> float:
        return -1.0 if link in self.flipped_links else 1.0

    def schedule(self) -> RampSchedule:
        base = {}
        for l in range(self.geom.n_links):
            base[("t", l)] = 0.0
            base[("h", l)] = self.field_sign(l) * self.h0
        segments = []
        grown: set[int] = set()
        for p in self.order:
            new = [l for l in self.geom.plaquettes[p].links if l not in grown]
            segments.append((self.segment_duration,
                             {("t", l): (0.0, self.t) for l in new}))
            segments.append((self.segment_duration,
                             {("h", l): (self.field_sign(l) * self.h0, 0.0)
                              for l in new}))
            grown.update(self.geom.plaquettes[p].links)
        return RampSchedule(base, segments)

    def vison_plaquettes(self) -> tuple:
        return tuple(sorted({self.geom.links[l].plaquettes[0]
                             for l in self.flipped_links}))


@dataclass
class GrowingResult:
    times: np.ndarray
    fidelities: np.ndarray
    energies: np.ndarray
    gaps: np.ndarray
    leakages: np.ndarray
    final_state: np.ndarray
    basis: BasisSet
    target_links_z: np.ndarray
    assignment: dict
    final_fidelity: float
    end_of_step_fidelities: list
    substeps_per_segment: int


class FidelityMeter:
    """Overlap of the transformed link state with a target toric link state."""

    def __init__(self, geom, evolution_basis, target_links_z):
        self.geom = geom
        self.evolution_basis = evolution_basis
        self.full_x = enumerate_basis(geom, one_boson_per_plaquette(), link_rep="x")
        self.full_z = self.full_x.with_link_rep("z")
        self.gauge = build_gauge_transform(geom, self.full_z)
        self.target = target_links_z
        if evolution_basis is self.full_x or (
                evolution_basis.constraint.kind == "one_boson_per_plaquette"
                and evolution_basis.link_rep == "x"):
            self._embed = None
        else:
            self._embed = np.array([self.full_x.index(row)
                                    for row in evolution_basis.states])

    def expand(self, psi: np.ndarray) -> np.ndarray:
        if self._embed is None:
            return psi
        out = np.zeros(self.full_x.dim, dtype=np.complex128)
        out[self._embed] = psi
        return out

    def __call__(self, psi: np.ndarray) -> float:
        full = self.expand(psi)
        psi_z, _ = convert_link_rep(full, self.full_x, "z")
        psi_tilde = self.gauge.apply(psi_z)
        rho = partial_trace_matter(psi_tilde, self.full_z)
        return link_state_overlap(rho, self.target)


def growing_target_links(plan: GrowingPlan, assignment: dict) -> np.ndarray:
    """Link-space target in the tau^z basis: toric ground or vison state."""
    geom = plan.geom
    g_tilde = {v.index: (-1) ** v.n_plaquettes * assignment[v.index]
               for v in geom.super_sites}
    b_values = {p: -1 for p in plan.vison_plaquettes()}
    vec_x = stabilizer_link_state(geom, b_values, g_tilde)
    return hadamard_links(vec_x, geom.n_links)


def run_growing(plan: GrowingPlan, substeps_per_segment: int | None = None,
                basis_mode: str = "sector", sample_dt: float = 1.0,
                converge_tol: float = 1e-8, max_refinements: int = 4,
                compute_gaps: bool = False, leakage_tol: float = 1e-8) -> GrowingResult:
    geom = plan.geom
    occupations, assignment = initial_matter_positions(geom)
    if basis_mode == "sector":
        basis = enumerate_basis(geom, gauss_sector(assignment), link_rep="x")
    elif basis_mode == "full":
        basis = enumerate_basis(geom, one_boson_per_plaquette(), link_rep="x")
    else:
        raise Z2SimError(f"unknown basis_mode {basis_mode!r}")
    schedule = plan.schedule()
    psi0 = basis_state(basis, occupations, {l: 1 for l in range(geom.n_links)})
    target_z = growing_target_links(plan, assignment)
    meter = FidelityMeter(geom, basis, target_z)
    builder = HamiltonianAssembler(basis)

    if basis_mode == "full":
        sector_basis = enumerate_basis(geom, gauss_sector(assignment), link_rep="x")
        sector_rows = np.array([basis.index(row) for row in sector_basis.states])
    else:
        sector_rows = None

    def one_run(n):
        stride = max(1, int(round(sample_dt / (plan.segment_duration / n))))
        traj = evolve(psi0, builder, schedule, n, sample_stride=stride)
        return traj

    if substeps_per_segment is None:
        n = 128
        traj = one_run(n)
        fid = meter(traj.final_state)
        for _ in range(max_refinements):
            n2 = 2 * n
            traj2 = one_run(n2)
            fid2 = meter(traj2.final_state)
            if abs(fid2 - fid) < converge_tol:
                n, traj, fid = n2, traj2, fid2
                break
            n, traj, fid = n2, traj2, fid2
        else:
            raise ConvergenceError(
                f"growing fidelity not converged to {converge_tol} at "
                f"{n} substeps per segment")
    else:
        n = substeps_per_segment
        traj = one_run(n)

    times = traj.times
    fids = np.array([meter(s) for s in traj.states])
    energies = np.empty(len(times))
    gaps = np.full(len(times), np.nan)
    leaks = np.zeros(len(times))
    for i, (tm, st) in enumerate(zip(times, traj.states)):
        H = builder(schedule.params_at(tm))
        energies[i] = float(np.real(np.vdot(st, H @ st)))
        if compute_gaps:
            dense = H if isinstance(H, np.ndarray) else H.toarray()
            gaps[i] = spectral_gap(np.linalg.eigvalsh(dense), plan.t)
        if sector_rows is not None:
            leaks[i] = 1.0 - float(np.sum(np.abs(st[sector_rows]) ** 2))
    if np.any(leaks > leakage_tol):
        raise PhysicsError(f"gauge-sector leakage {leaks.max():.3e} exceeds "
                           f"{leakage_tol}; schedule breaks the symmetry")

    edges = np.cumsum([2 * plan.segment_duration] * len(plan.order))
    end_fids = [float(fids[int(np.argmin(np.abs(times - e)))]) for e in edges]
    return GrowingResult(times, fids, energies, gaps, leaks, traj.final_state,
                         basis, target_z, assignment, float(fids[-1]),
                         end_fids, n)


# ---------------------------------------------------------------------------
# gap landscapes
# ---------------------------------------------------------------------------

def growing_step_params(geom: LatticeGeometry, step: int, tt: float, h: float,
                        t: float = 1.0, h0: float = 1.0, order=None,
                        flipped_links=()) -> EffectiveParams:
    """Mid-step Hamiltonian parameters while plaquette `order[step]` grows."""
    order = tuple(order) if order is not None else tuple(range(geom.n_plaquettes))
    sign = lambda l: -1.0 if l in flipped_links else 1.0
    grown: set[int] = set()
    for p in order[:step]:
        grown.update(geom.plaquettes[p].links)
    new = [l for l in geom.plaquettes[order[step]].links if l not in grown]
    t_links, h_links = {}, {}
    for l in range(geom.n_links):
        if l in grown:
            t_links[l], h_links[l] = t, 0.0
        elif l in new:
            t_links[l], h_links[l] = tt, sign(l) * h
        else:
            t_links[l], h_links[l] = 0.0, sign(l) * h0
    return EffectiveParams(t=0.0, h=0.0, t_links=t_links, h_links=h_links)


def growing_step_gap(basis, pieces, geom, step, tt, h, t=1.0, h0=1.0,
                     order=None, flipped_links=()) -> float:
    params = growing_step_params(geom, step, tt, h, t, h0, order, flipped_links)
    H = assemble(basis, pieces, params)
    levels = np.linalg.eigvalsh(H.toarray())
    return spectral_gap(levels, t)


def gap_scan(geom: LatticeGeometry, step_index: int, tt_values, h_values,
             t: float = 1.0, h0: float = 1.0, order=None, flipped_links=(),
             threads: int = 1) -> np.ndarray:
    """Gap surface over the (tt, h) grid for one growing step."""
    _, assignment = initial_matter_positions(geom)
    basis = enumerate_basis(geom, gauss_sector(assignment), link_rep="x")
    pieces = hamiltonian_pieces(basis)

    def one(tt, h):
        return growing_step_gap(basis, pieces, geom, step_index, tt, h, t, h0,
                                order, flipped_links)

    if threads > 1:
        from joblib import Parallel, delayed
        flat = Parallel(n_jobs=threads)(
            delayed(one)(tt, h) for tt in tt_values for h in h_values)
        return np.array(flat).reshape(len(tt_values), len(h_values))
    return np.array([[one(tt, h) for h in h_values] for tt in tt_values])


def energy_variance(H, psi: np.ndarray) -> float:
    hpsi = H @ psi
    e = np.real(np.vdot(psi, hpsi))
    return float(np.real(np.vdot(hpsi, hpsi)) - e ** 2)
