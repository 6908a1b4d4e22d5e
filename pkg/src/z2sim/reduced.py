"""Analytic single-growing-step model: 6x6 boundary blocks plus bulk offsets.

During one growing step the tunable terms act on the new plaquette only and
commute with the bulk, so the spectrum factorizes into bulk sectors, each
dressed by the same boundary problem.  The boundary plaquette (3 matter
positions x 3 links, two local Gauss constraints) is six-dimensional; its
Hamiltonian carries the shared-link hopping at full strength t, the two edge
hoppings at tt and the edge fields h.  Bulk excitation sectors shift whole
blocks by the bulk gap, which equals t on the growing path.

Boundary site labels: 0 and 1 sit on the shared link, 2 is the apex.
Link labels: s = (0,1) shared, e1 = (1,2), e2 = (2,0).
Conserved boundary quantities fixing the sector:
    C1 = (-1)^{n_0} x_s x_e2,   C2 = (-1)^{n_1} x_s x_e1,
with x the tau^x value.  "apex" start (matter pinned at 2, all x = +1) has
(C1, C2) = (+1, +1); a "shared" start (matter on the shared link) has
(-1, +1).
"""

from __future__ import annotations

import itertools

import numpy as np

SECTORS = {"apex": (1, 1), "shared": (-1, 1)}

# relative energies of the bulk sectors dressing the blocks: ground, one
# bulk excitation (twofold), and the remaining branch of the bulk triangle
BULK_OFFSETS = (0.0, 1.0, 1.0, 3.0, 3.0, 4.0)


def boundary_states(sector=(1, 1)):
    """The six (matter position, x_s, x_e1, x_e2) labels of the block."""
    c1, c2 = sector
    states = []
    for m, xs, xe1, xe2 in itertools.product(range(3), (1, -1), (1, -1), (1, -1)):
        if (-1 if m == 0 else 1) * xs * xe2 != c1:
            continue
        if (-1 if m == 1 else 1) * xs * xe1 != c2:
            continue
        states.append((m, xs, xe1, xe2))
    assert len(states) == 6
    return states


def boundary_block(t: float, tt: float, h: float, sector=(1, 1)) -> np.ndarray:
    """6x6 Hermitian block: hoppings -t, -tt, -tt and fields h on the edges."""
    if isinstance(sector, str):
        sector = SECTORS[sector]
    states = boundary_states(sector)
    pos = {s: i for i, s in enumerate(states)}
    H = np.zeros((6, 6))
    hops = (
        (0, 1, "s", t),    # shared link, full strength
        (1, 2, "e1", tt),
        (2, 0, "e2", tt),
    )
    for (m, xs, xe1, xe2) in states:
        i = pos[(m, xs, xe1, xe2)]
        H[i, i] += -h * (xe1 + xe2)
        for (ma, mb, link, amp) in hops:
            if m == ma:
                target_m = mb
            elif m == mb:
                target_m = ma
            else:
                continue
            if link == "s":
                target = (target_m, -xs, xe1, xe2)
            elif link == "e1":
                target = (target_m, xs, -xe1, xe2)
            else:
                target = (target_m, xs, xe1, -xe2)
            H[pos[target], i] += -amp
    return H


def reduced_levels(t: float, tt: float, h: float, sector=(1, 1),
                   bulk_gap: float | None = None) -> np.ndarray:
    """All block levels: eigenvalues of the 6x6 block at every bulk offset."""
    if bulk_gap is None:
        bulk_gap = t
    eig = np.linalg.eigvalsh(boundary_block(t, tt, h, sector))
    levels = np.concatenate([eig + off * bulk_gap for off in BULK_OFFSETS])
    return np.sort(levels)


def spectral_gap(levels, scale: float, tol_factor: float = 1e-9) -> float:
    """First level above the (possibly degenerate) ground manifold."""
    levels = np.sort(np.asarray(levels))
    tol = tol_factor * abs(scale)
    above = levels[levels > levels[0] + tol]
    return float(above[0] - levels[0]) if len(above) else 0.0


def reduced_gap(t: float, tt: float, h: float, sector=(1, 1)) -> float:
    """Many-body gap of one growing step from the reduced block spectrum."""
    if t <= 0:
        raise ValueError("need t > 0")
    return spectral_gap(reduced_levels(t, tt, h, sector), t)


def suggested_path(t: float, h0: float, n_leg: int = 11):
    """The growing path: raise tt at h = h0, then lower h at tt = t."""
    leg1 = [(tt, h0) for tt in np.linspace(0.0, t, n_leg)]
    leg2 = [(t, h) for h in np.linspace(h0, 0.0, n_leg)][1:]
    return leg1 + leg2


def reduced_vs_full(tt_values, h_values, t: float = 1.0, sector="apex"):
    """Max |gap_reduced - gap_fullED| on the two-plaquette growing step."""
    from . import dynamics  # deferred: dynamics depends on this module
    from .hilbert import enumerate_basis, gauss_sector
    from .lattice import chain_of_plaquettes

    geom = chain_of_plaquettes(2)
    occupations, assignment = dynamics.initial_matter_positions(geom)
    basis = enumerate_basis(geom, gauss_sector(assignment), link_rep="x")
    pieces = dynamics.step_pieces(basis)
    worst = 0.0
    for tt in tt_values:
        for h in h_values:
            full = dynamics.growing_step_gap(basis, pieces, geom, step=1,
                                             tt=tt, h=h, t=t, h0=t)
            red = reduced_gap(t, tt, h, sector)
            worst = max(worst, abs(full - red))
    return worst
