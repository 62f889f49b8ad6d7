"""Recovering the glued shape from endpoint behaviour of density functions.

The observable content of a boundary condition sits in products rho_i =
conj(psi_i) chi_i of low-lying eigenfunctions: wherever two interval ends
are glued, every such density and its derivatives match across the seam.
Scanning all candidate end-to-start identifications over all pairs of states
reconstructs the underlying space: one circle, two circles, or two bare
intervals, with nothing in between for these boundary conditions.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .domain import TWO_PI, BoundaryUnitary, WaveField, endpoint_derivative
from .errors import AmbiguousClassificationError
from .spectral import ModeSum, SpectrumResult, solve_spectrum

MATCH_TOL = 1e-5

START, END = "start", "end"

#: the two gluing patterns realizable by off-diagonal / diagonal unitaries
CROSS_EDGES = frozenset({((1, END), (2, START)), ((2, END), (1, START))})
STRAIGHT_EDGES = frozenset({((1, END), (1, START)), ((2, END), (2, START))})
ALL_EDGES = tuple(sorted(CROSS_EDGES | STRAIGHT_EDGES))


@dataclass
class EndpointProfile:
    """Derivatives of one density pair at both ends of both components.

    ``values[i, e, m]`` is d^m rho_{i+1} / dx^m at the left (e = 0) or right
    (e = 1) endpoint, for m = 0..order.
    """

    order: int
    values: np.ndarray


def endpoint_profile(psi: WaveField, chi: WaveField, order: int,
                     accuracy: int | None = None) -> EndpointProfile:
    """One-sided finite-difference endpoint derivatives of conj(psi) chi.

    The stencil accuracy defaults to max(6, order + 2): at least order + 2
    points beyond the derivative order are required for the matching
    tolerance, and a floor of 6 keeps the truncation error of low-order
    derivatives of high-frequency densities below that tolerance.  Too few
    grid points raises GridTooCoarseError.
    """
    if accuracy is None:
        accuracy = max(6, order + 2)
    rho = np.conj(psi.values) * chi.values
    vals = np.zeros((2, 2, order + 1), dtype=complex)
    for m in range(order + 1):
        if m == 0:
            vals[:, 0, 0] = rho[:, 0]
            vals[:, 1, 0] = rho[:, -1]
        else:
            vals[:, 0, m] = endpoint_derivative(rho, psi.spacing, "left", m, accuracy)
            vals[:, 1, m] = endpoint_derivative(rho, psi.spacing, "right", m, accuracy)
    return EndpointProfile(order, vals)


def profile_from_modes(psi_modes: ModeSum, chi_modes: ModeSum, order: int) -> EndpointProfile:
    """Exact endpoint derivatives of the density via the analytic mode data."""
    vals = np.zeros((2, 2, order + 1), dtype=complex)
    for e, x0 in ((0, 0.0), (1, TWO_PI)):
        dpsi = psi_modes.derivatives_at(x0, order)
        dchi = chi_modes.derivatives_at(x0, order)
        for m in range(order + 1):
            acc = np.zeros(2, dtype=complex)
            for r in range(m + 1):
                acc += comb(m, r) * np.conj(dpsi[r]) * dchi[m - r]
            vals[:, e, m] = acc
    return EndpointProfile(order, vals)


@dataclass
class TopologySpace:
    """Classification result: a kind tag plus the surviving identifications."""

    kind: str
    gluing: list
    order_checked: int

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "gluing": [
                [[int(a[0]), a[1]], [int(b[0]), b[1]]] for a, b in self.gluing
            ],
            "order_checked": self.order_checked,
        }


def _slot_value(profile: EndpointProfile, slot, m: int) -> complex:
    comp, side = slot
    return profile.values[comp - 1, 1 if side == END else 0, m]


def _surviving_edges(profiles: list, order: int, tol: float) -> set:
    """Edges satisfied by every density profile at every order up to D."""
    scales = np.zeros(order + 1)
    for prof in profiles:
        scales = np.maximum(scales, np.max(np.abs(prof.values), axis=(0, 1)))
    edges = set()
    for edge in ALL_EDGES:
        slot_a, slot_b = edge
        ok = True
        for prof in profiles:
            for m in range(order + 1):
                gap = abs(_slot_value(prof, slot_a, m) - _slot_value(prof, slot_b, m))
                if gap > tol * max(scales[m], 1e-12):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            edges.add(edge)
    return edges


def _edges_to_space(edges: set, order: int) -> TopologySpace:
    if edges == CROSS_EDGES:
        return TopologySpace("Circle", sorted(CROSS_EDGES), order)
    if edges == STRAIGHT_EDGES:
        return TopologySpace("TwoCircles", sorted(STRAIGHT_EDGES), order)
    if not edges:
        return TopologySpace("TwoIntervals", [], order)
    raise AmbiguousClassificationError(
        f"gluing candidates {sorted(edges)} match no single pattern"
    )


def classify_topology(
    u: BoundaryUnitary,
    n_states: int = 8,
    order: int = 4,
    tol: float = MATCH_TOL,
    n_x: int = 501,
    spectrum: SpectrumResult | None = None,
) -> TopologySpace:
    """Reconstruct the glued space from the lowest eigenfunctions.

    All pairwise densities among the lowest ``n_states`` eigenfunctions are
    profiled to derivative order ``order``; an identification survives only
    if every pair matches at every order.  A surviving set that is neither a
    full known pattern nor empty raises AmbiguousClassificationError rather
    than guessing.
    """
    if spectrum is None:
        spectrum = solve_spectrum(u, n_states, n_x=n_x)
    eigf = spectrum.eigenfunctions[:n_states]
    profiles = []
    for i in range(len(eigf)):
        for j in range(i, len(eigf)):
            profiles.append(endpoint_profile(eigf[i], eigf[j], order))
    edges = _surviving_edges(profiles, order, tol)
    return _edges_to_space(edges, order)


def verify_module_property(
    u: BoundaryUnitary,
    n_states: int = 8,
    power: int = 2,
    order: int = 4,
    tol: float = MATCH_TOL,
    n_x: int = 501,
    spectrum: SpectrumResult | None = None,
) -> bool:
    """Check the gluing is stable under applying H repeatedly.

    On eigenfunction pairs, H^m acts by lambda^m, so the density profiles
    rescale level by level; the reconstructed identification must not change
    for any m <= power.
    """
    if spectrum is None:
        spectrum = solve_spectrum(u, n_states, n_x=n_x)
    eigf = spectrum.eigenfunctions[:n_states]
    lams = spectrum.state_eigenvalues[: len(eigf)]
    base_edges = None
    for m in range(power + 1):
        profiles = []
        for i in range(len(eigf)):
            for j in range(i, len(eigf)):
                prof = endpoint_profile(eigf[i], eigf[j], order)
                prof.values = prof.values * (lams[i] * lams[j]) ** m
                profiles.append(prof)
        edges = _surviving_edges(profiles, order, tol)
        if base_edges is None:
            base_edges = edges
        elif edges != base_edges:
            return False
    return True


# ---------------------------------------------------------------------------
# smoothness grading of superposition densities


def _expected_edges(u: BoundaryUnitary) -> set:
    return {"off_diagonal": set(CROSS_EDGES),
            "diagonal": set(STRAIGHT_EDGES),
            "generic": set()}[u.kind]


def smoothness_order(
    spectrum: SpectrumResult,
    coefficients,
    order: int = 4,
    conv_tol: float = 0.05,
    match_tol: float = MATCH_TOL,
    expected_edges: set | None = None,
) -> int:
    """Largest derivative order at which the seam data of |psi|^2 is trustworthy.

    psi = sum_n c_n phi_n over the eigenbasis.  For each derivative order the
    endpoint values are evaluated exactly from the mode data at the full and
    the half truncation; the order counts as held only if (a) the truncation
    change is below ``conv_tol`` relative to the profile scale (the series
    evaluation has converged) and (b) every expected identification matches.
    Orders are accumulated from 0 upward; the first failure stops the climb.
    """
    if expected_edges is None:
        expected_edges = _expected_edges(spectrum.u)
    c = np.asarray(coefficients, dtype=complex)
    eigf = spectrum.eigenfunctions[: c.size]
    if len(eigf) < c.size:
        raise ValueError("not enough eigenfunctions for the coefficient list")

    def combined(n_keep: int) -> ModeSum:
        acc = ModeSum([])
        for cn, f in zip(c[:n_keep], eigf[:n_keep]):
            if cn != 0.0:
                acc = acc + f.modes.scaled(cn)
        return acc

    full = combined(c.size)
    half = combined(max(1, c.size // 2))
    prof_full = profile_from_modes(full, full, order)
    prof_half = profile_from_modes(half, half, order)

    held = 0
    for m in range(order + 1):
        scale = float(np.max(np.abs(prof_full.values[:, :, m])))
        drift = float(
            np.max(np.abs(prof_full.values[:, :, m] - prof_half.values[:, :, m]))
        )
        converged = drift <= conv_tol * max(scale, 1e-30)
        glued = all(
            abs(
                _slot_value(prof_full, ea, m) - _slot_value(prof_full, eb, m)
            ) <= match_tol * max(scale, 1e-30)
            for ea, eb in expected_edges
        )
        if converged and glued:
            held = m
        else:
            break
    return held


def smoothness_degradation(
    u: BoundaryUnitary,
    decay_exponent: float,
    order: int = 4,
    n_basis: int = 64,
    spectrum: SpectrumResult | None = None,
) -> int:
    """Smoothness order of the state with coefficients n^{-decay_exponent}.

    Faster coefficient decay keeps more derivative orders verifiable at the
    seam; the returned order is non-increasing as the exponent drops.
    """
    if spectrum is None:
        spectrum = solve_spectrum(u, n_basis)
    n = min(n_basis, len(spectrum.eigenfunctions))
    coeffs = np.arange(1, n + 1, dtype=float) ** (-decay_exponent)
    return smoothness_order(spectrum, coeffs, order)


# ---------------------------------------------------------------------------
# rendering


def ascii_diagram(space: TopologySpace) -> str:
    """Small end-labelled picture of the two intervals and their gluing."""
    labels = {}
    marks = "ABCD"
    for idx, (a, b) in enumerate(space.gluing):
        labels[a] = marks[idx]
        labels[b] = marks[idx]

    def tag(comp, side):
        return labels.get((comp, side), ".")

    lines = [
        f"kind: {space.kind}",
        f"  interval 1:  {tag(1, START)} 0 ================ 2pi {tag(1, END)}",
        f"  interval 2:  {tag(2, START)} 0 ================ 2pi {tag(2, END)}",
    ]
    if space.gluing:
        pairs = ", ".join(
            f"({a[0]},{a[1]})~({b[0]},{b[1]})" for a, b in space.gluing
        )
        lines.append(f"  glued ends share a letter: {pairs}")
    else:
        lines.append("  no ends are identified")
    return "\n".join(lines)
