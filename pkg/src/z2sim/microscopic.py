"""Coupled (an)harmonic-oscillator models behind the gauge-matter building block.

A building block is two harmonic matter modes bridged by two anharmonic
coupler modes at detuning Delta, coupled with strength g on every leg except
one, which carries -g.  The coupler pair shares one excitation and encodes
the link variable: tau^z = n_c - n_d, tau^x = cdag d + ddag c.  Second-order
processes then give the gauge-invariant hopping

    t_eff = 2 g^2 (1 / (Delta - beta) - 1 / Delta),

with beta the coupler anharmonicity.  Energies are in units of g, times in
1/g.  All Hamiltonians conserve the total excitation number, so models are
built on a fixed-number Fock sector when one is given.

Layouts: single_block (a, b, c, d), merged_chain (two blocks sharing a
matter site, coupler detunings split by delta), double_link (two blocks
sharing one coupler pair, second block detuned by delta_tilde and coupled
with g_tilde) and full_triangle (three matter sites, one coupler pair per
link, per-link fine-tuned parameters).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PhysicsError
from .hilbert import (BasisSet, SparseOperator, basis_state, build_operator,
                      enumerate_basis, no_constraint, total_excitation_number)


# ---------------------------------------------------------------------------
# second-order formulas
# ---------------------------------------------------------------------------

def effective_coupling(g: float, delta: float, beta: float) -> float:
    """Effective hopping 2 g^2 (1/(Delta - beta) - 1/Delta)."""
    if delta == 0.0:
        raise PhysicsError("effective coupling diverges at Delta = 0")
    if delta == beta:
        raise PhysicsError("effective coupling diverges at Delta = beta")
    return 2.0 * g * g * (1.0 / (delta - beta) - 1.0 / delta)


def effective_coupling_main_text(g: float, delta: float, beta: float) -> float:
    """The 2 g^2 beta / (Delta^2 + Delta beta) variant.

    Related to `effective_coupling` by flipping the sign of Delta (or,
    equivalently, of beta together with an overall sign); both appear in
    print and only the convention above matches the oscillator spectra built
    here with the stated parameter signs.
    """
    denom = delta * delta + delta * beta
    if denom == 0.0:
        raise PhysicsError("coupling formula pole")
    return 2.0 * g * g * beta / denom


def coupler_leakage(delta: float, offset: float, g: float) -> float:
    """Suppressed coupler-coupler Rabi rate |g^4 / (Delta^2 offset)|.

    `offset` is the detuning between neighbouring coupler pairs; at zero
    offset the pairs are resonant with rate 2 g^2 / Delta and the scheme
    breaks down.
    """
    if offset == 0.0:
        raise PhysicsError(
            f"resonant coupler pairs: rate 2 g^2 / Delta = {2 * g * g / delta}")
    if abs(g * g / delta) > 0.5 * abs(offset):
        warnings.warn("coupler detuning is not large compared to g^2/Delta; "
                      "leakage formula is unreliable", stacklevel=2)
    return abs(g ** 4 / (delta * delta * offset))


@dataclass(frozen=True)
class FineTuneSolution:
    """Per-link (g_i, beta_i, Delta_i) giving equal hopping and equal shifts."""

    t_eff: float
    g: tuple[float, float, float]
    beta: tuple[float, float, float]
    delta: tuple[float, float, float]

    def residuals(self) -> list[float]:
        return [effective_coupling(gi, di, bi) - self.t_eff
                for gi, di, bi in zip(self.g, self.delta, self.beta)]


def fine_tune_triangle(t_eff: float, delta1: float, delta2: float,
                       delta3: float, g1: float = 1.0) -> FineTuneSolution:
    """Solve for couplings and anharmonicities on a disordered triangle.

    beta_1 = t_eff Delta_1^2 / (2 g_1^2 + t_eff Delta_1), the others scale as
    beta_i ~ Delta_i and g_i^2 ~ beta_i, which equalizes both the effective
    hoppings and the dispersive shifts.
    """
    denom = 2.0 * g1 * g1 + t_eff * delta1
    if denom == 0.0:
        raise PhysicsError("fine-tune pole: 2 g1^2 + t_eff Delta_1 = 0")
    beta1 = t_eff * delta1 * delta1 / denom
    if delta1 == 0.0:
        raise PhysicsError("Delta_1 must be nonzero")
    betas = (beta1, delta2 * beta1 / delta1, delta3 * beta1 / delta1)
    gsq = tuple(g1 * g1 * b / beta1 for b in betas)
    if any(x <= 0 for x in gsq):
        raise PhysicsError(f"infeasible fine-tune: g^2 = {gsq}")
    sol = FineTuneSolution(t_eff, tuple(math.sqrt(x) for x in gsq), betas,
                           (delta1, delta2, delta3))
    worst = max(abs(r) for r in sol.residuals())
    if worst > 1e-12 * abs(t_eff):
        raise PhysicsError(f"fine-tune closure failed: residual {worst}")
    return sol


# ---------------------------------------------------------------------------
# oscillator layouts
# ---------------------------------------------------------------------------

@dataclass
class MicroLayout:
    """One oscillator model: basis, Hamiltonian and the site bookkeeping."""

    kind: str
    basis: BasisSet
    hamiltonian: SparseOperator
    matter_sites: tuple[int, ...]
    coupler_pairs: tuple[tuple[int, int], ...]    # (c, d) per link
    link_matter: tuple[tuple[int, ...], ...]      # matter sites touching each link
    params: dict


def _fock_basis(n_modes: int, d_max: int, n_excitations: int | None) -> BasisSet:
    if d_max < 3:
        raise PhysicsError("d_max >= 3 is needed for the virtual doubly "
                           "excited states")
    constraint = (total_excitation_number(n_excitations)
                  if n_excitations is not None else no_constraint())
    return enumerate_basis(None, constraint,
                           matter_dims={i: d_max for i in range(n_modes)})


def _number_terms(freqs: dict[int, float]):
    return [(w, [("n", s)]) for s, w in freqs.items() if w != 0.0]


def _anharmonic_terms(anh: dict[int, float]):
    # -(alpha/2) n (n - 1)
    terms = []
    for s, a in anh.items():
        if a != 0.0:
            terms.append((-0.5 * a, [("n", s), ("n", s)]))
            terms.append((+0.5 * a, [("n", s)]))
    return terms


def _hop_terms(pairs):
    terms = []
    for amp, s1, s2 in pairs:
        terms.append((amp, [("adag", s1), ("a", s2)]))
        terms.append((amp, [("adag", s2), ("a", s1)]))
    return terms


def single_block(g: float = 1.0, delta: float = -10.0, beta: float = 1.0,
                 alpha: float = 0.0, h: float = 0.0, omega: float = 0.0,
                 d_max: int = 3, n_excitations: int | None = 2) -> MicroLayout:
    """Two matter sites (a=0, b=1) and one coupler pair (c=2, d=3)."""
    basis = _fock_basis(4, d_max, n_excitations)
    terms = []
    terms += _number_terms({0: omega, 1: omega, 2: omega + delta, 3: omega + delta})
    terms += _anharmonic_terms({0: alpha, 1: alpha, 2: beta, 3: beta})
    terms += _hop_terms([(-g, 0, 2), (-g, 1, 2), (-g, 0, 3), (+g, 1, 3)])
    if h != 0.0:
        terms += _hop_terms([(h, 2, 3)])
    H = build_operator(basis, terms)
    return MicroLayout("single_block", basis, H, (0, 1), ((2, 3),),
                       ((0, 1),),
                       dict(g=g, delta=delta, beta=beta, alpha=alpha, h=h,
                            omega=omega, d_max=d_max))


def merged_chain(g: float = 1.0, delta: float = -10.0, offset: float = 1.0,
                 beta: float = 1.0, beta_prime: float | None = None,
                 omega: float = 0.0, d_max: int = 3,
                 n_excitations: int | None = None) -> MicroLayout:
    """Two blocks sharing matter site A' (sites A=0, A'=1, A''=2; couplers
    (3,4) at delta and (5,6) at delta - offset)."""
    if beta_prime is None:
        beta_prime = beta
    basis = _fock_basis(7, d_max, n_excitations)
    terms = []
    terms += _number_terms({0: omega, 1: omega, 2: omega,
                            3: omega + delta, 4: omega + delta,
                            5: omega + delta - offset, 6: omega + delta - offset})
    terms += _anharmonic_terms({3: beta, 4: beta, 5: beta_prime, 6: beta_prime})
    terms += _hop_terms([(-g, 0, 3), (-g, 1, 3), (-g, 0, 4), (+g, 1, 4),
                         (-g, 1, 5), (-g, 2, 5), (-g, 1, 6), (+g, 2, 6)])
    H = build_operator(basis, terms)
    return MicroLayout("merged_chain", basis, H, (0, 1, 2), ((3, 4), (5, 6)),
                       ((0, 1), (1, 2)),
                       dict(g=g, delta=delta, offset=offset, beta=beta,
                            beta_prime=beta_prime, omega=omega, d_max=d_max))


def double_link(g: float = 1.0, g_tilde: float = 1.0, delta: float = -10.0,
                beta: float = 1.0, offset_tilde: float = 1.0,
                omega: float = 0.0, d_max: int = 3,
                n_excitations: int | None = None) -> MicroLayout:
    """Two blocks sharing one coupler pair: matter A=0, B=1 and A'=2, B'=3
    (shifted by offset_tilde), couplers (4, 5)."""
    basis = _fock_basis(6, d_max, n_excitations)
    terms = []
    terms += _number_terms({0: omega, 1: omega,
                            2: omega + offset_tilde, 3: omega + offset_tilde,
                            4: omega + delta, 5: omega + delta})
    terms += _anharmonic_terms({4: beta, 5: beta})
    terms += _hop_terms([(-g, 0, 4), (-g, 1, 4), (-g, 0, 5), (+g, 1, 5),
                         (-g_tilde, 2, 4), (-g_tilde, 3, 4),
                         (-g_tilde, 2, 5), (+g_tilde, 3, 5)])
    H = build_operator(basis, terms)
    return MicroLayout("double_link", basis, H, (0, 1, 2, 3), ((4, 5),),
                       ((0, 1, 2, 3),),
                       dict(g=g, g_tilde=g_tilde, delta=delta, beta=beta,
                            offset_tilde=offset_tilde, omega=omega, d_max=d_max))


def full_triangle(solution: FineTuneSolution, h: float = 0.0,
                  omega: float = 0.0, d_max: int = 3,
                  n_excitations: int | None = 4) -> MicroLayout:
    """Three matter sites 0, 1, 2; link i joins sites (i, i+1 mod 3) through
    coupler pair (3+2i, 4+2i) with the fine-tuned (g_i, beta_i, Delta_i)."""
    basis = _fock_basis(9, d_max, n_excitations)
    freqs = {0: omega, 1: omega, 2: omega}
    anh: dict[int, float] = {}
    hops = []
    pairs, link_matter = [], []
    for i in range(3):
        c, d = 3 + 2 * i, 4 + 2 * i
        pairs.append((c, d))
        s1, s2 = i, (i + 1) % 3
        link_matter.append((s1, s2))
        freqs[c] = freqs[d] = omega + solution.delta[i]
        anh[c] = anh[d] = solution.beta[i]
        gi = solution.g[i]
        hops += [(-gi, s1, c), (-gi, s2, c), (-gi, s1, d), (+gi, s2, d)]
    terms = _number_terms(freqs) + _anharmonic_terms(anh) + _hop_terms(hops)
    if h != 0.0:
        for c, d in pairs:
            terms += _hop_terms([(h, c, d)])
    H = build_operator(basis, terms)
    return MicroLayout("full_triangle", basis, H, (0, 1, 2), tuple(pairs),
                       tuple(link_matter),
                       dict(solution=solution, h=h, omega=omega, d_max=d_max))


LAYOUTS = {"single_block": single_block, "merged_chain": merged_chain,
           "double_link": double_link, "full_triangle": full_triangle}


# ---------------------------------------------------------------------------
# observables and states
# ---------------------------------------------------------------------------

def tau_x_operator(layout: MicroLayout, link: int) -> SparseOperator:
    c, d = layout.coupler_pairs[link]
    return build_operator(layout.basis, _hop_terms([(1.0, c, d)]))


def tau_z_operator(layout: MicroLayout, link: int) -> SparseOperator:
    c, d = layout.coupler_pairs[link]
    return build_operator(layout.basis, [(1.0, [("n", c)]), (-1.0, [("n", d)])])


def number_operator(layout: MicroLayout, site: int) -> SparseOperator:
    return build_operator(layout.basis, [(1.0, [("n", site)])])


def gauss_law_observables(layout: MicroLayout) -> list[SparseOperator]:
    """One G_i = (-1)^{n_i} prod_links (cdag d + h.c.) per matter site."""
    ops = []
    for site in layout.matter_sites:
        links = [l for l, ms in enumerate(layout.link_matter) if site in ms]
        terms = [(1.0, [("parity", site)])]
        op = build_operator(layout.basis, terms)
        for l in links:
            op = op @ tau_x_operator(layout, l)
        ops.append(op)
    return ops


def coupler_product_state(layout: MicroLayout, matter_occupations: dict[int, int],
                          tau_states: dict[int, str]) -> np.ndarray:
    """Product state: given matter occupations, couplers in tau eigenstates.

    tau_states maps link index to one of "x+", "x-", "z+", "z-" (the z states
    are the bare c- or d-excited configurations).
    """
    basis = layout.basis
    vec = np.zeros(basis.dim, dtype=np.complex128)
    components = [({}, 1.0)]
    for l, (c, d) in enumerate(layout.coupler_pairs):
        tag = tau_states[l]
        if tag == "z+":
            parts = [({c: 1, d: 0}, 1.0)]
        elif tag == "z-":
            parts = [({c: 0, d: 1}, 1.0)]
        else:
            sign = 1.0 if tag == "x+" else -1.0
            parts = [({c: 1, d: 0}, 1.0 / math.sqrt(2)),
                     ({c: 0, d: 1}, sign / math.sqrt(2))]
        components = [({**occ, **p}, amp * a)
                      for occ, amp in components for p, a in parts]
    for occ, amp in components:
        vec += amp * basis_state(basis, {**matter_occupations, **occ})
    return vec


def evolve_static(layout: MicroLayout, psi0: np.ndarray, times) -> np.ndarray:
    """Exact propagation under the layout Hamiltonian; states as columns."""
    H = layout.hamiltonian.matrix.toarray()
    vals, vecs = np.linalg.eigh(H)
    coeff = vecs.conj().T @ psi0
    phases = np.exp(-1j * np.outer(vals, np.asarray(times)))
    return vecs @ (phases * coeff[:, None])


def expectation_series(op: SparseOperator, states: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("ij,ij->j", states.conj(), op.matrix @ states))


# ---------------------------------------------------------------------------
# spectroscopy
# ---------------------------------------------------------------------------

def rabi_trace(g: float, delta: float, beta: float, d_max: int = 3,
               n_points: int = 400):
    """<n_b>(t) for a matter excitation launched on site a, tau^z = +1."""
    layout = single_block(g=g, delta=delta, beta=beta, d_max=d_max)
    t_pred = effective_coupling(g, delta, beta)
    t_final = 1.5 * math.pi / abs(t_pred)
    times = np.linspace(0.0, t_final, n_points)
    psi0 = coupler_product_state(layout, {0: 1, 1: 0}, {0: "z+"})
    states = evolve_static(layout, psi0, times)
    nb = expectation_series(number_operator(layout, 1), states)
    return times, nb, t_pred


def spectroscopic_t_eff(g: float, delta: float, beta: float,
                        d_max: int = 3) -> float:
    """Fit <n_b>(t) = A sin^2(t_eff t) over 1.5 Rabi periods."""
    from scipy.optimize import curve_fit
    times, nb, t_pred = rabi_trace(g, delta, beta, d_max)

    def model(t, amp, freq):
        return amp * np.sin(freq * t) ** 2

    popt, _ = curve_fit(model, times, nb, p0=(1.0, abs(t_pred)))
    return float(abs(popt[1]))
