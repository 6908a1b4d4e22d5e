"""Product bases of bosonic matter and spin-1/2 links, and sparse operators.

A basis state is (matter occupations, link bits).  Link bits live in one of
two representations:
  rep "z": bit b encodes the tau^z eigenvalue 1 - 2b,
  rep "x": bit b encodes the tau^x eigenvalue 1 - 2b.
Gauss-law constraints are diagonal in rep "x", so constrained sector bases
are enumerated there; time evolution and gauge transformations that need
tau^z-diagonal phases use rep "z".

Operators are built from term lists: a term is (coefficient, factors) with
factors like ("adag", site) or ("tauz", link), written left to right and
applied right to left.  Matrix elements that land outside the basis (sector
constraint) are dropped, i.e. the operator is the projector sandwich P A P;
`audit=True` reports the weight removed this way.  Raising above a mode's
occupation cutoff truncates to zero amplitude, as usual for a finite Fock
space.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import EmptySectorError, PhysicsError, Z2SimError
from .lattice import LatticeGeometry

SQRT_HALF = 1.0 / math.sqrt(2.0)


# ---------------------------------------------------------------------------
# sector constraints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SectorConstraint:
    kind: str = "none"
    total: int | None = None
    assignments: tuple[tuple[int, int], ...] = ()

    KINDS = ("none", "one_boson_per_plaquette", "total_excitation_number", "gauss_sector")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")


def no_constraint() -> SectorConstraint:
    return SectorConstraint("none")


def one_boson_per_plaquette() -> SectorConstraint:
    return SectorConstraint("one_boson_per_plaquette")


def total_excitation_number(n: int) -> SectorConstraint:
    return SectorConstraint("total_excitation_number", total=int(n))


def gauss_sector(assignments: dict[int, int]) -> SectorConstraint:
    """Fix G_i = (-1)^{N_i} prod tau^x on every super-site.

    Implies one boson per plaquette; the basis must use link rep "x" where
    these operators are diagonal.
    """
    items = tuple(sorted((int(v), int(g)) for v, g in assignments.items()))
    if any(g not in (-1, 1) for _, g in items):
        raise ValueError("gauss assignments must be +-1")
    return SectorConstraint("gauss_sector", assignments=items)


# ---------------------------------------------------------------------------
# basis enumeration
# ---------------------------------------------------------------------------

class BasisSet:
    """Ordered, constraint-filtered product basis."""

    def __init__(self, matter_sites, matter_dims, link_ids, link_rep, states,
                 constraint, geom=None):
        if link_rep not in ("z", "x"):
            raise ValueError(f"link_rep must be 'z' or 'x', got {link_rep!r}")
        self.matter_sites = list(matter_sites)
        self.matter_dims = list(matter_dims)
        self.link_ids = list(link_ids)
        self.link_rep = link_rep
        self.constraint = constraint
        self.geom = geom
        self.states = np.asarray(states, dtype=np.uint8)
        if self.states.ndim != 2 or self.states.shape[1] != self.n_matter + self.n_links:
            raise ValueError("state array has wrong shape")
        self._site_col = {s: i for i, s in enumerate(self.matter_sites)}
        self._link_col = {l: self.n_matter + i for i, l in enumerate(self.link_ids)}
        self._index = {row.tobytes(): k for k, row in enumerate(self.states)}
        # compact codes used by partial traces and rep conversion
        self._matter_codes, self._link_codes = self._codes()

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def n_matter(self) -> int:
        return len(self.matter_sites)

    @property
    def n_links(self) -> int:
        return len(self.link_ids)

    def index(self, state) -> int:
        key = np.asarray(state, dtype=np.uint8).tobytes()
        try:
            return self._index[key]
        except KeyError:
            raise KeyError(f"state {list(state)} not in basis") from None

    def site_column(self, site: int) -> int:
        try:
            return self._site_col[site]
        except KeyError:
            raise KeyError(f"unknown matter site {site}") from None

    def link_column(self, link: int) -> int:
        try:
            return self._link_col[link]
        except KeyError:
            raise KeyError(f"unknown link {link}") from None

    def occupations(self, k: int) -> dict[int, int]:
        row = self.states[k]
        return {s: int(row[self._site_col[s]]) for s in self.matter_sites}

    def link_values(self, k: int) -> dict[int, int]:
        row = self.states[k]
        return {l: 1 - 2 * int(row[self._link_col[l]]) for l in self.link_ids}

    def _codes(self):
        m = self.states[:, : self.n_matter].astype(np.int64)
        weights = np.ones(self.n_matter, dtype=np.int64)
        for i in range(self.n_matter - 2, -1, -1):
            weights[i] = weights[i + 1] * self.matter_dims[i + 1]
        matter_codes = m @ weights if self.n_matter else np.zeros(self.dim, dtype=np.int64)
        bits = self.states[:, self.n_matter:].astype(np.int64)
        lw = 2 ** np.arange(self.n_links - 1, -1, -1, dtype=np.int64) \
            if self.n_links else np.zeros(0, dtype=np.int64)
        link_codes = bits @ lw if self.n_links else np.zeros(self.dim, dtype=np.int64)
        return matter_codes, link_codes

    def with_link_rep(self, rep: str) -> "BasisSet":
        """Twin basis with the same rows interpreted in the other link basis."""
        if rep == self.link_rep:
            return self
        if self.constraint.kind == "gauss_sector":
            raise Z2SimError("gauss-sector bases are tied to link rep 'x'; embed first")
        return BasisSet(self.matter_sites, self.matter_dims, self.link_ids, rep,
                        self.states, self.constraint, self.geom)


def _matter_configs(dims, constraint, geom, sites):
    if constraint.kind in ("none",):
        yield from itertools.product(*(range(d) for d in dims))
        return
    if constraint.kind == "total_excitation_number":
        for cfg in itertools.product(*(range(d) for d in dims)):
            if sum(cfg) == constraint.total:
                yield cfg
        return
    # one boson per plaquette (also the matter part of gauss sectors)
    if geom is None:
        raise Z2SimError("one-boson constraint needs a geometry")
    configs = set()
    for positions in itertools.product(range(3), repeat=geom.n_plaquettes):
        occ = [0] * len(sites)
        for p, slot in enumerate(positions):
            occ[3 * p + slot] = 1
        configs.add(tuple(occ))
    yield from sorted(configs)


def enumerate_basis(geom: LatticeGeometry | None, constraint: SectorConstraint,
                    max_occupation: int = 1, link_rep: str = "z",
                    matter_dims: dict[int, int] | None = None,
                    link_ids: list[int] | None = None,
                    include_links: bool = True) -> BasisSet:
    """Enumerate the product basis, lexicographic in (occupations, link bits).

    With a geometry, matter modes are its sites (cutoff `max_occupation`) and
    the link modes its links.  `matter_dims` instead gives explicit per-site
    Fock dimensions for oscillator models, with standalone links via
    `link_ids`.
    """
    if max_occupation < 1:
        raise ValueError("max_occupation must be >= 1")
    if matter_dims is not None:
        sites = sorted(matter_dims)
        dims = [matter_dims[s] for s in sites]
        link_ids = list(link_ids or [])
    else:
        if geom is None:
            raise Z2SimError("need a geometry or explicit matter_dims")
        sites = geom.matter_sites
        dims = [max_occupation + 1] * len(sites)
        link_ids = [l.index for l in geom.links] if include_links else []

    if constraint.kind == "gauss_sector":
        if link_rep != "x":
            raise Z2SimError("gauss_sector constraints require link rep 'x'")
        if geom is None:
            raise Z2SimError("gauss_sector constraints need a geometry")
        wanted = dict(constraint.assignments)
        missing = set(v.index for v in geom.super_sites) - set(wanted)
        if missing:
            raise Z2SimError(f"gauss assignments missing super-sites {sorted(missing)}")

    matter_kind = ("one_boson_per_plaquette"
                   if constraint.kind in ("one_boson_per_plaquette", "gauss_sector")
                   else constraint.kind)
    rows = []
    mconstraint = SectorConstraint(matter_kind, total=constraint.total)
    for occ in _matter_configs(dims, mconstraint, geom, sites):
        for bits in itertools.product((0, 1), repeat=len(link_ids)):
            if constraint.kind == "gauss_sector":
                if not _gauss_ok(geom, occ, bits, dict(constraint.assignments)):
                    continue
            rows.append(occ + bits)
    if not rows:
        raise EmptySectorError("constraint selects no basis states")
    states = np.array(rows, dtype=np.uint8)
    return BasisSet(sites, dims, link_ids, link_rep, states, constraint, geom)


def _gauss_ok(geom, occ, bits, wanted):
    link_value = {l.index: 1 - 2 * bits[i] for i, l in enumerate(geom.links)}
    for v in geom.super_sites:
        g = -1 if sum(occ[s] for s in v.members) % 2 else 1
        for l in v.links:
            g *= link_value[l]
        if g != wanted[v.index]:
            return False
    return True


# ---------------------------------------------------------------------------
# sparse operators from term lists
# ---------------------------------------------------------------------------

MATTER_OPS = ("a", "adag", "n", "parity")
LINK_OPS = ("tauz", "taux")


@dataclass
class SparseOperator:
    basis: BasisSet
    matrix: sp.csr_matrix
    dropped_weight: float = 0.0

    @property
    def dim(self) -> int:
        return self.basis.dim

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def expect(self, vec: np.ndarray) -> float:
        return float(np.real(np.vdot(vec, self.matrix @ vec)))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dagger(self) -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix.conj().T.tocsr())

    def hermiticity_defect(self) -> float:
        return max_abs(self.matrix - self.matrix.conj().T)

    def __add__(self, other):
        return SparseOperator(self.basis, (self.matrix + other.matrix).tocsr())

    def __sub__(self, other):
        return SparseOperator(self.basis, (self.matrix - other.matrix).tocsr())

    def __mul__(self, scalar):
        return SparseOperator(self.basis, (self.matrix * scalar).tocsr())

    __rmul__ = __mul__

    def __matmul__(self, other):
        return SparseOperator(self.basis, (self.matrix @ other.matrix).tocsr())


def max_abs(matrix) -> float:
    m = sp.csr_matrix(matrix) if not sp.issparse(matrix) else matrix.tocsr()
    return float(np.abs(m.data).max()) if m.nnz else 0.0


def commutator_norm(a: SparseOperator, b: SparseOperator) -> float:
    return max_abs(a.matrix @ b.matrix - b.matrix @ a.matrix)


def build_operator(basis: BasisSet, terms, audit: bool = False):
    """Assemble sum_k coeff_k * prod(factors_k) over the basis.

    Returns a SparseOperator; with audit=True its `dropped_weight` carries
    sqrt(sum |amplitude|^2) of matrix elements leaving the constrained sector.
    """
    rows, cols, vals = [], [], []
    dropped = 0.0
    n_matter = basis.n_matter
    for coeff, factors in terms:
        for k in range(basis.dim):
            state = basis.states[k].copy()
            amp = complex(coeff)
            for name, ident in reversed(list(factors)):
                if amp == 0:
                    break
                if name in MATTER_OPS:
                    col = basis.site_column(ident)
                    occ = int(state[col])
                    if name == "a":
                        if occ == 0:
                            amp = 0.0
                        else:
                            amp *= math.sqrt(occ)
                            state[col] = occ - 1
                    elif name == "adag":
                        if occ + 1 >= basis.matter_dims[col]:
                            amp = 0.0  # Fock cutoff
                        else:
                            amp *= math.sqrt(occ + 1)
                            state[col] = occ + 1
                    elif name == "n":
                        amp *= occ
                    else:  # parity
                        amp *= -1.0 if occ % 2 else 1.0
                elif name in LINK_OPS:
                    col = basis.link_column(ident)
                    diagonal = (name == "tauz") == (basis.link_rep == "z")
                    if diagonal:
                        amp *= 1.0 - 2.0 * int(state[col])
                    else:
                        state[col] ^= 1
                else:
                    raise Z2SimError(f"unknown operator factor {name!r}")
            if amp == 0:
                continue
            key = state.tobytes()
            target = basis._index.get(key)
            if target is None:
                dropped += abs(amp) ** 2
                continue
            rows.append(target)
            cols.append(k)
            vals.append(amp)
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim),
                           dtype=np.complex128)
    matrix.sum_duplicates()
    op = SparseOperator(basis, matrix, math.sqrt(dropped))
    if audit:
        return op, op.dropped_weight
    return op


# ---------------------------------------------------------------------------
# state utilities
# ---------------------------------------------------------------------------

def check_normalized(vec: np.ndarray, tol: float = 1e-10) -> None:
    nrm = np.linalg.norm(vec)
    if abs(nrm - 1.0) > tol:
        raise PhysicsError(f"state not normalized: |psi| = {nrm}")


def basis_state(basis: BasisSet, occupations: dict[int, int],
                link_values: dict[int, int] | None = None) -> np.ndarray:
    """Unit vector on one product state; link values are +-1 in the basis rep."""
    row = np.zeros(basis.n_matter + basis.n_links, dtype=np.uint8)
    for s, occ in occupations.items():
        row[basis.site_column(s)] = occ
    for l, val in (link_values or {}).items():
        row[basis.link_column(l)] = (1 - val) // 2
    vec = np.zeros(basis.dim, dtype=np.complex128)
    vec[basis.index(row)] = 1.0
    return vec


def embed_state(vec: np.ndarray, src: BasisSet, dst: BasisSet) -> np.ndarray:
    """Map a vector from a sector basis into a larger basis (same link rep)."""
    if src.link_rep != dst.link_rep:
        raise Z2SimError("embed_state requires matching link reps")
    out = np.zeros(dst.dim, dtype=np.complex128)
    for k in range(src.dim):
        if vec[k] != 0:
            out[dst.index(src.states[k])] = vec[k]
    return out


def _link_complete_shape(basis: BasisSet):
    matter_codes = basis._matter_codes
    uniq = np.unique(matter_codes)
    n_link_states = 2 ** basis.n_links
    if basis.dim != len(uniq) * n_link_states:
        raise Z2SimError("basis is not a full product over link configurations")
    remap = {c: i for i, c in enumerate(uniq)}
    m_idx = np.array([remap[c] for c in matter_codes])
    return uniq, m_idx, basis._link_codes, n_link_states


def state_matrix(vec: np.ndarray, basis: BasisSet):
    """Reshape a state into (matter configs) x (link configs)."""
    uniq, m_idx, l_idx, n_link = _link_complete_shape(basis)
    psi = np.zeros((len(uniq), n_link), dtype=np.complex128)
    psi[m_idx, l_idx] = vec
    return psi, uniq


def from_state_matrix(psi: np.ndarray, basis: BasisSet) -> np.ndarray:
    uniq, m_idx, l_idx, _ = _link_complete_shape(basis)
    return psi[m_idx, l_idx]


def convert_link_rep(vec: np.ndarray, basis: BasisSet, rep: str):
    """Rotate every link between the tau^z and tau^x product bases."""
    if rep == basis.link_rep:
        return vec.copy(), basis
    psi, _ = state_matrix(vec, basis)
    n = basis.n_links
    psi = psi.reshape((psi.shape[0],) + (2,) * n)
    had = np.array([[SQRT_HALF, SQRT_HALF], [SQRT_HALF, -SQRT_HALF]])
    for axis in range(1, n + 1):
        psi = np.tensordot(psi, had, axes=([axis], [1]))
        psi = np.moveaxis(psi, -1, axis)
    psi = psi.reshape(psi.shape[0], 2 ** n)
    twin = basis.with_link_rep(rep)
    return from_state_matrix(psi, twin), twin


def partial_trace_matter(vec: np.ndarray, basis: BasisSet) -> np.ndarray:
    """Reduced density matrix on the links, rho[l, l'] indexed by link code."""
    check_normalized(vec)
    psi, _ = state_matrix(vec, basis)
    return psi.T @ psi.conj()


def link_state_overlap(rho_links: np.ndarray, target: np.ndarray) -> float:
    """tr(rho |target><target|) for a link-space density matrix."""
    return float(np.real(np.vdot(target, rho_links @ target)))
