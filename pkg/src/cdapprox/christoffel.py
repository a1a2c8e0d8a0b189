"""Christoffel function evaluation and graph recovery.

An evaluator wraps the symmetric eigendecomposition of a moment matrix in
one of two modes: ``regularized`` (Tikhonov shift of the spectrum) or
``pseudoinverse`` (rank truncation with explicit kernel detection, for
genuinely degenerate measures).  It answers point queries of the
Christoffel function and recovers a function value at x as the minimizer
over y of the inverse Christoffel function along the fiber.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import BasisSpec, eval_basis_vector, univariate_table
from .measures import AffineMap, BoxDomain, MomentMatrix

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class Regularized:
    """Spectrum shift by beta (moment matrix of measure + beta * reference)."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")


@dataclass(frozen=True)
class Pseudoinverse:
    """Rank-truncated inverse; eigenvalues below rank_tol * lambda_max are kernel.

    ``kernel_tol`` is the relative kernel-projection size above which a
    query point is declared off the variety (Christoffel value exactly 0).
    It is deliberately much looser than ``rank_tol``: truncated directions
    are merely *near*-null for non-polynomial graph pieces, so points on
    the support carry kernel projections of order sqrt(rank_tol), while
    genuinely off-variety points carry projections of order one.
    """

    rank_tol: float = 1e-10
    kernel_tol: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.rank_tol < 1.0):
            raise ValueError(f"rank_tol must lie in (0, 1), got {self.rank_tol}")
        if not (0.0 < self.kernel_tol < 1.0):
            raise ValueError(f"kernel_tol must lie in (0, 1), got {self.kernel_tol}")


@dataclass(frozen=True)
class YSearchConfig:
    """Coarse-grid-plus-golden-section search settings for the fiber minimum."""

    y_lo: float
    y_hi: float
    coarse_points: int = 257
    refine_candidates: int = 5
    refine_tol: float = 1e-10

    def __post_init__(self):
        if not (self.y_lo < self.y_hi):
            raise ValueError(f"need y_lo < y_hi, got [{self.y_lo}, {self.y_hi}]")
        if self.coarse_points < 3:
            raise ValueError(f"coarse_points must be >= 3, got {self.coarse_points}")
        if self.refine_candidates < 1:
            raise ValueError("refine_candidates must be >= 1")
        if not (self.refine_tol > 0):
            raise ValueError(f"refine_tol must be positive, got {self.refine_tol}")


def default_y_search(observed_y, pad: float = 1.0, **kwargs) -> YSearchConfig:
    """Search window [min - pad, max + pad] around observed function values."""
    observed_y = np.asarray(observed_y, dtype=float)
    return YSearchConfig(
        y_lo=float(np.min(observed_y) - pad), y_hi=float(np.max(observed_y) + pad), **kwargs
    )


@dataclass(frozen=True, eq=False)
class ChristoffelEvaluator:
    """Immutable factorized moment matrix answering Christoffel queries.

    ``eigenvalues`` are the ascending eigenvalues of the raw matrix
    (negatives clamped to zero), ``inv_eigenvalues`` the mode-dependent
    inverted spectrum, ``rank`` the numerical rank (= N in regularized
    mode), and ``mass`` the total measure mass, including the beta
    contribution in regularized mode.
    """

    spec: BasisSpec
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    inv_eigenvalues: np.ndarray
    rank: int
    mode: Regularized | Pseudoinverse
    mass: float
    transform: AffineMap | None = None
    domain: BoxDomain | None = None

    @property
    def kernel_dim(self) -> int:
        return self.spec.size - self.rank

    def mapped_basis_vector(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.transform is not None:
            z = self.transform.apply(z)
        return eval_basis_vector(self.spec, z)


def build_evaluator(M: MomentMatrix, mode: Regularized | Pseudoinverse) -> ChristoffelEvaluator:
    """Eigendecompose a moment matrix into a query-ready evaluator."""
    lam, vecs = np.linalg.eigh(M.entries)
    lam_max = float(lam[-1])
    if lam[0] < -1e-10 * max(lam_max, 1e-300):
        raise ValueError(
            f"moment matrix is not numerically PSD (min eigenvalue {lam[0]:g})"
        )
    lam = np.maximum(lam, 0.0)
    n = M.spec.size
    if isinstance(mode, Regularized):
        inv = 1.0 / (lam + mode.beta)
        rank = n
        mass = M.mass + mode.beta
    elif isinstance(mode, Pseudoinverse):
        threshold = mode.rank_tol * lam_max
        active = lam > threshold
        rank = int(np.count_nonzero(active))
        inv = np.where(active, 1.0 / np.where(active, lam, 1.0), 0.0)
        mass = M.mass
    else:
        raise TypeError(f"unknown mode {mode!r}")
    return ChristoffelEvaluator(
        spec=M.spec,
        eigenvalues=lam,
        eigenvectors=vecs,
        inv_eigenvalues=inv,
        rank=rank,
        mode=mode,
        mass=mass,
        transform=M.transform,
        domain=M.domain,
    )


def _check_point(ev: ChristoffelEvaluator, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (ev.spec.nvars,):
        raise ValueError(f"point has shape {z.shape}, expected ({ev.spec.nvars},)")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"point must be finite, got {z}")
    return z


def lambda_value(ev: ChristoffelEvaluator, z) -> float:
    """Christoffel function at a joint point; always within [0, mass].

    In pseudoinverse mode the value is exactly zero whenever the basis
    vector has a kernel component above the rank tolerance.
    """
    z = _check_point(ev, z)
    b = ev.mapped_basis_vector(z)
    w = ev.eigenvectors.T @ b
    if isinstance(ev.mode, Pseudoinverse):
        kdim = ev.kernel_dim
        if kdim > 0:
            kernel_norm = float(np.linalg.norm(w[:kdim]))
            if kernel_norm > ev.mode.kernel_tol * float(np.linalg.norm(b)):
                return 0.0
    denom = float(np.dot(w * w, ev.inv_eigenvalues))
    if denom <= 0.0:
        return float(ev.mass)
    return float(min(max(1.0 / denom, 0.0), ev.mass))


def inverse_quadratic_form(ev: ChristoffelEvaluator, z) -> float:
    """b(z)^T A b(z) with A the mode's inverted moment matrix (no clamping)."""
    z = _check_point(ev, z)
    b = ev.mapped_basis_vector(z)
    w = ev.eigenvectors.T @ b
    return float(np.dot(w * w, ev.inv_eigenvalues))


def _fiber_quadratic(ev: ChristoffelEvaluator, x: np.ndarray):
    """Reduce g(x, .) to a small quadratic form in the univariate y-basis.

    For fixed x the basis vector factors as b(x, y) = S(x) u(y) with u the
    family values in y up to the total degree, so g(y) = u(y)^T G u(y)
    with G = S^T M^{-1} S of size (degree+1)^2.
    """
    spec = ev.spec
    exps = spec.exponent_matrix
    n = spec.nvars - 1
    tx = x if ev.transform is None else np.array(
        [ev.transform.apply_component(v, x[v]) for v in range(n)]
    )
    xfactor = np.ones(spec.size)
    for v in range(n):
        table = univariate_table(spec.family, spec.degree, np.array([tx[v]]))
        xfactor *= table[exps[:, v], 0]
    S = np.zeros((spec.size, spec.degree + 1))
    S[np.arange(spec.size), exps[:, -1]] = xfactor
    W = ev.eigenvectors.T @ S
    G = W.T @ (ev.inv_eigenvalues[:, None] * W)

    yvar = spec.nvars - 1

    def g(ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        ty = ys if ev.transform is None else ev.transform.apply_component(yvar, ys)
        U = univariate_table(spec.family, spec.degree, np.atleast_1d(ty))
        return np.einsum("km,kl,lm->m", U, G, U)

    return g


def _golden_refine(g, a: np.ndarray, b: np.ndarray, tol: float):
    """Vectorized golden-section minimization on brackets [a, b].

    Returns the best probed point and value per bracket after shrinking
    every interval below tol.
    """
    h = b - a
    hmax = float(np.max(h))
    if hmax <= tol:
        mid = 0.5 * (a + b)
        return mid, g(mid)
    iters = int(math.ceil(math.log(tol / hmax) / math.log(_INVPHI)))
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc = g(c)
    fd = g(d)
    for _ in range(iters):
        left = fc < fd
        h = _INVPHI * h
        a_new = np.where(left, a, c)
        b_new = np.where(left, d, b)
        c_new = np.where(left, a_new + _INVPHI2 * h, d)
        d_new = np.where(left, c, a_new + _INVPHI * h)
        probe = np.where(left, c_new, d_new)
        fp = g(probe)
        fc_new = np.where(left, fp, fd)
        fd_new = np.where(left, fc, fp)
        a, b, c, d, fc, fd = a_new, b_new, c_new, d_new, fc_new, fd_new
    take_c = fc <= fd
    return np.where(take_c, c, d), np.where(take_c, fc, fd)


def _check_x_in_domain(ev: ChristoffelEvaluator, x: np.ndarray):
    if ev.domain is None:
        return
    n = x.shape[0]
    lower = np.asarray(ev.domain.lower[:n])
    upper = np.asarray(ev.domain.upper[:n])
    tol = 1e-12 * np.maximum(1.0, np.abs(upper - lower))
    if np.any(x < lower - tol) or np.any(x > upper + tol):
        raise ValueError(f"x = {x} lies outside the domain box [{lower}, {upper}]")


def minimize_over_y(ev: ChristoffelEvaluator, x, cfg: YSearchConfig):
    """Recover (y_star, q_min) = argmin / min of g(y) = b(x,y)^T M_beta^{-1} b(x,y).

    Coarse scan, refinement of the best local minima by golden section,
    ties broken toward smaller y.  Requires regularized mode: the
    pseudoinverse form is unbounded off the variety.
    """
    if not isinstance(ev.mode, Regularized):
        raise ValueError("minimize_over_y requires an evaluator in regularized mode")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (ev.spec.nvars - 1,):
        raise ValueError(f"x has shape {x.shape}, expected ({ev.spec.nvars - 1},)")
    _check_x_in_domain(ev, x)

    g = _fiber_quadratic(ev, x)
    ys = np.linspace(cfg.y_lo, cfg.y_hi, cfg.coarse_points)
    gv = g(ys)

    interior = np.flatnonzero((gv[1:-1] <= gv[:-2]) & (gv[1:-1] <= gv[2:])) + 1
    cands = list(interior)
    if gv[0] <= gv[1]:
        cands.append(0)
    if gv[-1] <= gv[-2]:
        cands.append(len(ys) - 1)
    cands = np.asarray(sorted(cands), dtype=int)
    order = np.lexsort((ys[cands], gv[cands]))
    cands = cands[order[: cfg.refine_candidates]]

    lo = ys[np.maximum(cands - 1, 0)]
    hi = ys[np.minimum(cands + 1, len(ys) - 1)]
    y_ref, g_ref = _golden_refine(g, lo, hi, cfg.refine_tol)

    # never do worse than the coarse points themselves
    better_coarse = gv[cands] < g_ref
    y_ref = np.where(better_coarse, ys[cands], y_ref)
    g_ref = np.where(better_coarse, gv[cands], g_ref)

    best = np.lexsort((y_ref, g_ref))[0]
    y_star = float(y_ref[best])
    # report the definitional reciprocal of the Christoffel value, not the
    # reduced-form search value (they differ by rounding of opposite paths)
    q_min = 1.0 / lambda_value(ev, np.append(x, y_star))
    return y_star, q_min


def approximant_on_grid(ev: ChristoffelEvaluator, x_grid, cfg: YSearchConfig):
    """minimize_over_y at every grid point, order preserved.

    Returns a list of (x, y_star, q_min) tuples.
    """
    out = []
    for x in x_grid:
        xv = np.asarray(x, dtype=float).reshape(-1)
        y_star, q_min = minimize_over_y(ev, xv, cfg)
        out.append((xv.copy(), y_star, q_min))
    return out


def unit_box_bound_sum(d: int, n: int):
    """Reference-box Christoffel sum at the origin and its (1+d)^{2n} cap.

    Returns (sum, cap) with sum = sum_{i<=d} (P_i(0)^2)^n over standard
    Legendre values; odd-degree terms vanish, and sum <= cap always.
    """
    if d < 0:
        raise ValueError(f"d must be >= 0, got {d}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    p0 = univariate_table("legendre", d, np.array([0.0]))[:, 0]
    total = float(np.sum((p0 * p0) ** n))
    cap = float((1 + d) ** (2 * n))
    return total, cap
