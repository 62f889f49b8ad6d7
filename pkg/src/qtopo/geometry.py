"""Geometry from spectra: dimension fits and commutator distances.

Two desk-scale probes of "shape from operators": the growth rate of sorted
eigenvalues recovers a dimension through a log-log fit, and a sup over slowly
varying diagonal elements recovers distances between points,

    d(x, y) = sup { a_x - a_y :  (1/N!) || ad_a^N H ||_2 <= 1 },

with ad_a^N H formed entrywise as (a_j - a_k)^N H_jk for diagonal a.  N = 1
is a convex problem and is solved exactly; N >= 2 is attacked by projected
gradient ascent from many random starts, using the exact scaling
ad_{ca}^N = c^N ad_a^N to project onto the constraint surface.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateFitError

# ---------------------------------------------------------------------------
# dimension from eigenvalue growth


@dataclass
class DimensionFit:
    d: float
    slope: float
    residual: float
    window: tuple

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "slope": self.slope,
            "residual": self.residual,
            "window": list(self.window),
        }


def estimate_dimension(eigenvalues, N: int, fit_window: tuple) -> DimensionFit:
    """Dimension d = N / slope of log lambda_n against log n.

    ``fit_window`` = (lo, hi) selects 1-based indices lo..hi of the sorted
    eigenvalue list (multiplicity included).  Requires at least 20 levels in
    the window, all positive.  Raises DegenerateFitError for slope <= 0.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    lo, hi = int(fit_window[0]), int(fit_window[1])
    if lo < 1 or hi > lam.size or hi - lo + 1 < 20:
        raise ValueError(
            f"window [{lo}, {hi}] needs >= 20 levels inside a list of {lam.size}"
        )
    lam_w = lam[lo - 1:hi]
    if np.any(lam_w <= 0):
        raise ValueError("window contains non-positive eigenvalues")
    n_idx = np.arange(lo, hi + 1, dtype=float)
    slope, intercept = np.polyfit(np.log(n_idx), np.log(lam_w), 1)
    if slope <= 0:
        raise DegenerateFitError(f"non-increasing eigenvalue trend, slope {slope:.3e}")
    fitted = slope * np.log(n_idx) + intercept
    residual = float(np.sqrt(np.mean((np.log(lam_w) - fitted) ** 2)))
    return DimensionFit(float(N / slope), float(slope), residual, (lo, hi))


# ---------------------------------------------------------------------------
# iterated commutators with a diagonal


def iterated_commutator(a_diag, H, N: int) -> np.ndarray:
    """ad_a^N H for diagonal a: entrywise (a_j - a_k)^N H_jk."""
    a = np.asarray(a_diag, dtype=float)
    H = np.asarray(H, dtype=complex)
    diff = a[:, None] - a[None, :]
    return diff**N * H


def spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.svd(np.asarray(m, complex), compute_uv=False)[0])


# ---------------------------------------------------------------------------
# distance problems


@dataclass
class DistanceProblem:
    """Hermitian H with a diagonal algebra of functions on ``point_slots``.

    ``point_slots[p]`` lists the diagonal indices on which the value at
    point p acts; a plain n-point problem uses [[0], [1], ..., [n-1]].
    """

    h: np.ndarray
    point_slots: list
    order: int = 1
    restarts: int = 32
    iterations: int = 300
    seed: int = 0
    diam_guess: float = 10.0

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=complex)
        if np.max(np.abs(self.h - self.h.conj().T)) > 1e-12 * max(
            1.0, float(np.max(np.abs(self.h)))
        ):
            raise ValueError("H must be Hermitian")
        self.point_slots = [list(map(int, s)) for s in self.point_slots]
        used = sorted(i for s in self.point_slots for i in s)
        if len(used) != len(set(used)):
            raise ValueError("point slots overlap")

    @property
    def n_points(self) -> int:
        return len(self.point_slots)

    def slot_matrix(self) -> np.ndarray:
        """0/1 map P with (P a)_slot = a_point."""
        P = np.zeros((self.h.shape[0], self.n_points))
        for p, slots in enumerate(self.point_slots):
            for s in slots:
                P[s, p] = 1.0
        return P


def path_graph_dirac(n: int, spacing: float) -> DistanceProblem:
    """Edge-block hopping operator whose N = 1 distance is the path geodesic.

    Each edge (j, j+1) contributes an independent 2x2 block with hopping
    amplitude 1/spacing; point j owns its slot in every adjacent block.  The
    commutator with a point function is block diagonal, so the constraint is
    exactly max_j |a_{j+1} - a_j| <= spacing.
    """
    dim = 2 * (n - 1)
    H = np.zeros((dim, dim))
    slots: list[list[int]] = [[] for _ in range(n)]
    for e in range(n - 1):
        H[2 * e, 2 * e + 1] = H[2 * e + 1, 2 * e] = 1.0 / spacing
        slots[e].append(2 * e)
        slots[e + 1].append(2 * e + 1)
    return DistanceProblem(H, slots, order=1)


def circle_laplacian_problem(n: int, order: int = 2, **kwargs) -> DistanceProblem:
    """Finite-difference -d^2 on an n-point circle of circumference 2 pi."""
    h = 2.0 * np.pi / n
    H = np.zeros((n, n))
    for j in range(n):
        H[j, j] = 2.0 / h**2
        H[j, (j + 1) % n] = H[(j + 1) % n, j] = -1.0 / h**2
    return DistanceProblem(H, [[j] for j in range(n)], order=order, **kwargs)


@dataclass
class DistanceReport:
    value: float
    restart_values: np.ndarray = field(default_factory=lambda: np.array([]))
    dispersion: float = 0.0
    method: str = ""


def _point_adjacency(prob: DistanceProblem) -> np.ndarray:
    """0/1 coupling graph between points, induced by nonzero entries of H."""
    n = prob.n_points
    adj = np.zeros((n, n))
    hn = np.abs(prob.h) > 1e-14
    for p in range(n):
        for q in range(p + 1, n):
            if any(hn[i, j] for i in prob.point_slots[p] for j in prob.point_slots[q]):
                adj[p, q] = adj[q, p] = 1.0
    return adj

def _points_connected(prob: DistanceProblem, x: int, y: int) -> bool:
    adj = _point_adjacency(prob)
    ncomp, labels = connected_components(sp.csr_matrix(adj), directed=False)
    return labels[x] == labels[y]


def _solve_convex(prob: DistanceProblem, x: int, y: int) -> float:
    import cvxpy as cp

    dim = prob.h.shape[0]
    P = prob.slot_matrix()
    a = cp.Variable(prob.n_points)
    d = P @ a
    col = cp.reshape(d, (dim, 1), order="C")
    row = cp.reshape(d, (1, dim), order="C")
    comm = cp.multiply(col - row, prob.h)
    target = cp.Maximize(a[x] - a[y])
    problem = cp.Problem(target, [cp.norm(comm, 2) <= 1.0])
    try:
        problem.solve(solver=cp.CLARABEL)
    except cp.error.SolverError:
        problem.solve(solver=cp.SCS, eps_abs=1e-9, eps_rel=1e-9, max_iters=200000)
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"convex solve ended with status {problem.status}")
    return float(problem.value)


#: annealing schedule for the smoothed spectral norm used by the ascent
_P_SCHEDULE = (8, 16, 32, 64, 128)


def _norm_and_gradient(prob: DistanceProblem, a_pts: np.ndarray, p: int):
    """Smoothed norm (sum_i |lambda_i|^p)^{1/p} of ad_a^N H and its gradient.

    The p-norm of the eigenvalues upper-bounds the spectral norm and is
    differentiable even when the extreme eigenvalues tie in magnitude, which
    they routinely do for hopping-type H; the exact spectral norm makes the
    subgradient flip between the +/- branches and stalls the line search.
    """
    N = prob.order
    P = prob.slot_matrix()
    d = P @ a_pts
    diff = d[:, None] - d[None, :]
    M = diff**N * prob.h
    w_all, v_all = np.linalg.eigh(M)
    aw = np.abs(w_all)
    top = float(np.max(aw))
    if top <= 0.0:
        return 0.0, np.zeros(prob.n_points)
    s = top * float(np.sum((aw / top) ** p)) ** (1.0 / p)
    omega = np.sign(w_all) * (aw / s) ** (p - 1)
    W = (v_all * omega) @ v_all.conj().T
    G = N * diff ** (N - 1) * prob.h
    T = np.conj(W) * G
    per_slot = np.real(np.sum(T, axis=1) - np.sum(T, axis=0))
    return s, P.T @ per_slot


def _spectral_norm_at(prob: DistanceProblem, a_pts: np.ndarray) -> float:
    d = prob.slot_matrix() @ a_pts
    diff = d[:, None] - d[None, :]
    return spectral_norm(diff**prob.order * prob.h)


def _ascend(prob: DistanceProblem, x: int, y: int, a0: np.ndarray) -> float:
    """One projected-gradient restart from the profile a0.

    Runs a backtracking line search on the scale-invariant ratio
    (a_x - a_y) / (s_p / N!)^{1/N} while annealing p toward the true
    spectral norm, then projects once onto the exact constraint surface.
    """
    N = prob.order
    n_fact = float(math.factorial(N))
    a = np.asarray(a0, dtype=float).copy()
    a -= a.mean()
    if np.max(np.abs(a)) <= 0.0:
        return 0.0
    e = np.zeros(prob.n_points)
    e[x] += 1.0
    e[y] -= 1.0
    iters = max(30, prob.iterations // len(_P_SCHEDULE))

    def ratio(a_vec, p):
        s, _ = _norm_and_gradient(prob, a_vec, p)
        if s <= 0.0:
            return -math.inf, s
        return (a_vec[x] - a_vec[y]) / (s / n_fact) ** (1.0 / N), s

    for p in _P_SCHEDULE:
        step = 1.0
        for _ in range(iters):
            s, grad_s = _norm_and_gradient(prob, a, p)
            if s <= 0.0:
                return 0.0
            obj = a[x] - a[y]
            f0 = obj / (s / n_fact) ** (1.0 / N)
            grad = e - (obj / (N * s)) * grad_s
            gn = np.linalg.norm(grad)
            if gn < 1e-13:
                break
            improved = False
            while step > 1e-12:
                trial = a + step * grad / gn
                f1, _ = ratio(trial, p)
                if f1 > f0 + 1e-14:
                    a = trial
                    improved = True
                    step *= 1.3
                    break
                step *= 0.5
            if not improved:
                break
    s = _spectral_norm_at(prob, a)
    if s <= 0.0:
        return 0.0
    a = a * (n_fact / s) ** (1.0 / N)
    return float(a[x] - a[y])


def _start_profiles(prob: DistanceProblem, x: int, y: int) -> list:
    """Restart seeds: graph-informed bumps and ramps, then smooth noise.

    The optimizer landscape rewards profiles whose extremes sit at the two
    query points, so the deterministic seeds are differences of Gaussian
    bumps (several widths) in the hop-count distance, plus the hop-count
    ramp itself.  The remaining restarts are random low-pass profiles:
    white noise relaxed by a few rounds of neighbour averaging.
    """
    adj = _point_adjacency(prob)
    graph = sp.csr_matrix(adj)
    from scipy.sparse.csgraph import shortest_path

    dists = shortest_path(graph, method="D", unweighted=True, indices=[x, y])
    dx, dy = dists[0], dists[1]
    finite = np.isfinite(dx) & np.isfinite(dy)
    dx = np.where(finite, dx, np.max(dx[finite]) + 1.0)
    dy = np.where(finite, dy, np.max(dy[finite]) + 1.0)
    diam = max(1.0, float(np.max(dx[finite])))
    seeds = [dy - dx]
    for width in (diam / 8.0, diam / 4.0, diam / 2.0):
        w = max(width, 0.5)
        seeds.append(np.exp(-(dx / w) ** 2 / 2) - np.exp(-(dy / w) ** 2 / 2))

    rng = np.random.default_rng(prob.seed)
    deg = np.maximum(adj.sum(axis=1), 1.0)
    smooth = adj / deg[:, None]
    while len(seeds) < prob.restarts:
        prof = rng.normal(size=prob.n_points)
        for _ in range(8):
            prof = 0.5 * prof + 0.5 * (smooth @ prof)
        seeds.append(prof)
    return seeds[: max(prob.restarts, len(seeds))]


def connes_distance_report(prob: DistanceProblem, x: int, y: int) -> DistanceReport:
    """Distance between points x and y of the diagonal algebra.

    Infinity when H never couples the two blocks; exact convex solution for
    N = 1; multi-restart projected gradient for N >= 2, reporting the best
    value and the spread across restarts.  QTOPO_THREADS caps the worker
    pool used for the restarts.
    """
    if x == y:
        return DistanceReport(0.0, method="trivial")
    if not _points_connected(prob, x, y):
        return DistanceReport(math.inf, method="disconnected")
    if prob.order == 1:
        return DistanceReport(_solve_convex(prob, x, y), method="convex")

    starts = _start_profiles(prob, x, y)
    env = os.environ.get("QTOPO_THREADS")
    workers = max(1, int(env)) if env else min(4, len(starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda a0: _ascend(prob, x, y, a0), starts))
    else:
        values = [_ascend(prob, x, y, a0) for a0 in starts]
    values = np.array(values)
    return DistanceReport(
        float(np.max(values)),
        values,
        float(np.max(values) - np.min(values)),
        method="projected_gradient",
    )


def connes_distance(prob: DistanceProblem, x: int, y: int) -> float:
    return connes_distance_report(prob, x, y).value
