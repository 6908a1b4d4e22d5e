"""Effective Z2 gauge-matter Hamiltonians on plaquette lattices.

The model: per plaquette one boson hopping around the triangle with link
operator-valued amplitudes, plus an electric field on the links,

    H = - sum_p sum_{<ij> in p} tt_l (adag_i tauz_l a_j + h.c.) - sum_l h_l taux_l.

Sign convention: h_l > 0 stabilizes tau^x_l = +1, so the trivial product
state is the field term's ground state.

The diagonal unitary U attaches phases (pi/2)(tauz_next - tauz_prev) to each
matter site, turning the hopping amplitude into the plaquette flux and the
lab-frame Gauss operators G_i = (-1)^{N_i} prod taux into vertex operators
(-1)^{N_i^P} G_V.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import hilbert
from .errors import EmptySectorError, Z2SimError
from .hilbert import BasisSet, SparseOperator, build_operator
from .lattice import LatticeGeometry

TWO_PI_THIRD = 2.0 * math.pi / 3.0
MOMENTA = (0.0, TWO_PI_THIRD, -TWO_PI_THIRD)


@dataclass
class EffectiveParams:
    """Hopping / electric-field strengths; per-link overrides beat defaults."""

    t: float = 1.0
    h: float = 0.0
    t_links: dict[int, float] = field(default_factory=dict)
    h_links: dict[int, float] = field(default_factory=dict)

    def hopping(self, link: int) -> float:
        return self.t_links.get(link, self.t)

    def field(self, link: int) -> float:
        return self.h_links.get(link, self.h)


# ---------------------------------------------------------------------------
# Hamiltonian assembly
# ---------------------------------------------------------------------------

def hopping_terms(geom: LatticeGeometry, link: int, amplitude: float = 1.0):
    """Both directions of every plaquette bond living on `link`."""
    terms = []
    for p in geom.plaquettes:
        for j in range(3):
            if p.links[j] != link:
                continue
            si, sj = p.sites[j], p.sites[(j + 1) % 3]
            terms.append((amplitude, [("adag", sj), ("tauz", link), ("a", si)]))
            terms.append((amplitude, [("adag", si), ("tauz", link), ("a", sj)]))
    return terms


def build_lgt_hamiltonian(basis: BasisSet, params: EffectiveParams) -> SparseOperator:
    geom = basis.geom
    if geom is None:
        raise Z2SimError("basis carries no geometry")
    for l in params.t_links:
        geom.links[l]  # raises IndexError for bad overrides
    for l in params.h_links:
        geom.links[l]
    terms = []
    for link in range(geom.n_links):
        tt = params.hopping(link)
        if tt != 0.0:
            terms.extend(hopping_terms(geom, link, -tt))
        hl = params.field(link)
        if hl != 0.0:
            terms.append((-hl, [("taux", link)]))
    if not terms:
        terms = [(0.0, [])]
    return build_operator(basis, terms)


def hamiltonian_pieces(basis: BasisSet):
    """Coefficient-1 building blocks, H = -sum tt_l hop_l - sum h_l field_l.

    Precomputing them makes time-dependent reassembly cheap.
    """
    geom = basis.geom
    pieces = {}
    for link in range(geom.n_links):
        pieces[("hop", link)] = build_operator(basis, hopping_terms(geom, link)).matrix
        pieces[("field", link)] = build_operator(basis, [(1.0, [("taux", link)])]).matrix
    return pieces


def assemble(basis: BasisSet, pieces, params: EffectiveParams) -> sp.csr_matrix:
    geom = basis.geom
    total = sp.csr_matrix((basis.dim, basis.dim), dtype=np.complex128)
    for link in range(geom.n_links):
        tt = params.hopping(link)
        if tt:
            total = total - tt * pieces[("hop", link)]
        hl = params.field(link)
        if hl:
            total = total - hl * pieces[("field", link)]
    return total


# ---------------------------------------------------------------------------
# stabilizer-type operators
# ---------------------------------------------------------------------------

def plaquette_operator(basis: BasisSet, p: int) -> SparseOperator:
    """B_P: product of tau^z around plaquette p."""
    links = basis.geom.plaquettes[p].links
    return build_operator(basis, [(1.0, [("tauz", l) for l in links])])


def vertex_operator(basis: BasisSet, vertex: int) -> SparseOperator:
    """G_V: product of tau^x on the links at a super-site."""
    links = basis.geom.super_sites[vertex].links
    return build_operator(basis, [(1.0, [("taux", l) for l in links])])


def gauss_operator(basis: BasisSet, vertex: int) -> SparseOperator:
    """Lab-frame symmetry generator G_i = (-1)^{N_i} prod taux."""
    v = basis.geom.super_sites[vertex]
    factors = [("parity", s) for s in v.members] + [("taux", l) for l in v.links]
    return build_operator(basis, [(1.0, factors)])


def link_parity_operator(basis: BasisSet, link: int) -> SparseOperator:
    """(-1)^{Delta n} on the matter sites directly attached to `link`."""
    lk = basis.geom.links[link]
    factors = [("parity", s) for side in lk.attached for s in side]
    return build_operator(basis, [(1.0, factors)])


# ---------------------------------------------------------------------------
# gauge transformation U
# ---------------------------------------------------------------------------

@dataclass
class GaugeTransform:
    """Diagonal unitary exp(i sum theta_j n_j) in the (occupation, tau^z) basis."""

    basis: BasisSet
    phases: np.ndarray  # complex, unit modulus, one entry per basis state

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.phases * vec

    def apply_dagger(self, vec: np.ndarray) -> np.ndarray:
        return np.conj(self.phases) * vec

    def matrix(self) -> sp.csr_matrix:
        return sp.diags(self.phases).tocsr()


def build_gauge_transform(geom: LatticeGeometry, basis: BasisSet) -> GaugeTransform:
    if basis.link_rep != "z":
        raise Z2SimError("gauge transform is diagonal only in link rep 'z'")
    phi = np.zeros(basis.dim)
    for p in geom.plaquettes:
        for j in range(3):
            col = basis.site_column(p.sites[j])
            znext = 1.0 - 2.0 * basis.states[:, basis.link_column(p.links[j])]
            zprev = 1.0 - 2.0 * basis.states[:, basis.link_column(p.links[(j + 2) % 3])]
            theta = 0.5 * math.pi * (znext - zprev)
            phi += theta * basis.states[:, col]
    return GaugeTransform(basis, np.exp(1j * phi))


# ---------------------------------------------------------------------------
# link-space toric-code states (x representation, 2^L vectors)
# ---------------------------------------------------------------------------

def _flip_mask(geom, links):
    n = geom.n_links
    mask = 0
    for l in links:
        mask |= 1 << (n - 1 - l)
    return mask


def link_sector_codes(geom: LatticeGeometry, g_values: dict[int, int] | None = None):
    """x-basis link codes with prod taux = g at every super-site (default +1)."""
    g_values = g_values or {v.index: 1 for v in geom.super_sites}
    n = geom.n_links
    codes = []
    for code in range(2 ** n):
        ok = True
        for v in geom.super_sites:
            prod = 1
            for l in v.links:
                prod *= 1 - 2 * ((code >> (n - 1 - l)) & 1)
            if prod != g_values[v.index]:
                ok = False
                break
        if ok:
            codes.append(code)
    return codes


def toric_code_ground_state(geom: LatticeGeometry, t: float = 1.0):
    """Ground state of -t sum_p B_P in the G_V = +1 link sector.

    Returns (vector over all 2^L x-basis codes, sector codes used).
    """
    if t <= 0:
        raise Z2SimError("need t > 0")
    codes = link_sector_codes(geom)
    if not codes:
        raise EmptySectorError("vertex sector is empty")
    pos = {c: i for i, c in enumerate(codes)}
    dim = len(codes)
    H = np.zeros((dim, dim))
    for p in geom.plaquettes:
        mask = _flip_mask(geom, p.links)
        for c in codes:
            H[pos[c ^ mask], pos[c]] -= t
    vals, vecs = np.linalg.eigh(H)
    ground = vecs[:, 0]
    # fix the overall sign deterministically
    k = int(np.argmax(np.abs(ground)))
    ground = ground * np.sign(ground[k])
    full = np.zeros(2 ** geom.n_links, dtype=np.complex128)
    full[codes] = ground
    return full, codes


def stabilizer_link_state(geom: LatticeGeometry, b_values: dict[int, int] | None = None,
                          g_values: dict[int, int] | None = None):
    """Projective construction of the link state with B_P = b_p, G_V = g_v.

    b_values maps plaquette index to +-1 (default all +1), g_values super-site
    to +-1 (default all +1).  A reference x-basis state in the vertex sector
    is projected onto the requested fluxes; the projectors commute with G_V.
    """
    b_values = b_values or {}
    n = geom.n_links
    vec = np.zeros(2 ** n, dtype=np.complex128)
    if g_values is None:
        ref = 0  # all tau^x = +1
    else:
        codes = link_sector_codes(geom, g_values)
        if not codes:
            raise EmptySectorError("vertex sector is empty")
        ref = codes[0]
    vec[ref] = 1.0
    for p in geom.plaquettes:
        b = b_values.get(p.index, 1)
        mask = _flip_mask(geom, p.links)
        flipped = np.zeros_like(vec)
        idx = np.arange(len(vec))
        flipped[idx ^ mask] = vec
        vec = 0.5 * (vec + b * flipped)
    nrm = np.linalg.norm(vec)
    if nrm < 1e-12:
        raise EmptySectorError("incompatible stabilizer assignment")
    return vec / nrm


def hadamard_links(vec: np.ndarray, n_links: int) -> np.ndarray:
    """Rotate a 2^L link vector between the tau^x and tau^z product bases."""
    had = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    psi = vec.reshape((2,) * n_links)
    for axis in range(n_links):
        psi = np.tensordot(psi, had, axes=([axis], [1]))
        psi = np.moveaxis(psi, -1, axis)
    return psi.reshape(-1)


# ---------------------------------------------------------------------------
# exact lab-frame eigenstates of the h = 0 model
# ---------------------------------------------------------------------------

def lab_eigenstate(basis: BasisSet, vison_plaquettes=(), momenta=None):
    """U^dagger (product of per-plaquette momentum states x stabilizer links).

    `basis` must be the full one-boson basis in link rep "z".  Plaquettes in
    `vison_plaquettes` carry B_P = -1 and matter momentum 2pi/3 (their band
    minimum); the rest sit at k = 0.  Returns an exact eigenstate of the
    h = 0 Hamiltonian.
    """
    geom = basis.geom
    if basis.link_rep != "z":
        raise Z2SimError("lab_eigenstate needs a link-rep 'z' basis")
    b_values = {p: -1 for p in vison_plaquettes}
    if momenta is None:
        momenta = {p.index: (TWO_PI_THIRD if p.index in vison_plaquettes else 0.0)
                   for p in geom.plaquettes}
    links_x = stabilizer_link_state(geom, b_values)
    links_z = hadamard_links(links_x, geom.n_links)

    amp = np.ones(basis.dim, dtype=np.complex128) / math.sqrt(3.0) ** geom.n_plaquettes
    for p in geom.plaquettes:
        k = momenta[p.index]
        slot_phase = np.zeros(basis.dim, dtype=np.complex128)
        for j in range(3):
            occ = basis.states[:, basis.site_column(p.sites[j])].astype(float)
            slot_phase += occ * np.exp(1j * k * j)
        amp *= slot_phase
    vec = amp * links_z[basis._link_codes]
    U = build_gauge_transform(geom, basis)
    vec = U.apply_dagger(vec)
    nrm = np.linalg.norm(vec)
    return vec / nrm


def single_triangle_spectrum(t: float, b_sector: int):
    """Eigenvalues -2t cos(k + Phi) of one plaquette at h = 0."""
    if t <= 0:
        raise Z2SimError("need t > 0")
    if b_sector not in (-1, 1):
        raise Z2SimError("b_sector must be +-1")
    phi = 0.0 if b_sector == 1 else math.pi
    return sorted(-2.0 * t * math.cos(k + phi) for k in MOMENTA)
