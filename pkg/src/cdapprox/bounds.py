"""Needle polynomials, Christoffel bounds, and separating-degree certificates.

The off-graph upper bound decays like 2^(2 - 2*delta3*floor(d/2)); the
on-graph lower bound decays like (1+d)^(-2n) with explicit transcendental
constants.  A degree is *separating* once the lower bound exceeds the
upper bound, certified here by a scan over degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .basis import eval_univariate

EXACT_DIAMETER_LIMIT = 2000


@dataclass(frozen=True)
class NeedleSpec:
    """Center, localization radius delta in (0,1), and Chebyshev degree."""

    center: tuple[float, ...]
    delta: float
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")


@dataclass(frozen=True)
class SeparationInputs:
    vol_x: float
    delta1: float
    delta_max: float
    n: int
    d_max: int

    def __post_init__(self):
        if not (self.vol_x > 0):
            raise ValueError(f"vol_x must be positive, got {self.vol_x}")
        if not (self.delta1 > 0 and self.delta_max > 0):
            raise ValueError("delta1 and delta_max must be positive")
        if self.delta1 > self.delta_max:
            raise ValueError(
                f"delta1 = {self.delta1} exceeds delta_max = {self.delta_max}; "
                "the tube radius cannot exceed twice the variety diameter"
            )
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.d_max < 1:
            raise ValueError(f"d_max must be >= 1, got {self.d_max}")

    @property
    def delta3(self) -> float:
        return delta3(self.delta1, self.delta_max)


@dataclass(frozen=True)
class DegreeCertificate:
    """Separation table plus the smallest tail-stable separating degree."""

    constant_c: float
    d_star_sep: int | None
    per_degree: tuple  # rows (d, lhs, rhs, separated)

    def to_json_obj(self) -> dict:
        return {
            "constant_c": self.constant_c,
            "d_star_sep": self.d_star_sep,
            "table": [
                {"d": d, "lhs": lhs, "rhs": rhs, "separated": sep}
                for (d, lhs, rhs, sep) in self.per_degree
            ],
        }


@dataclass(frozen=True)
class RemarkQuantities:
    """Informational degree quantities; invalid regimes are flagged, not raised."""

    d0: int
    epsilon_gap: float
    sufficient_d: float | None
    invalid_reason: str | None = None


def needle_eval(spec: NeedleSpec, z_tilde) -> float:
    """Needle polynomial value T_d(1 + delta^2 - |z - z~|^2) / T_d(1 + delta^2).

    Equals 1 at the center, stays within [-1, 1] on the unit ball around
    it, and decays like 2^(1 - delta*d) outside the delta-ball.
    """
    z_tilde = np.asarray(z_tilde, dtype=float)
    center = np.asarray(spec.center)
    if z_tilde.shape != center.shape:
        raise ValueError(f"point shape {z_tilde.shape} does not match center {center.shape}")
    r2 = float(np.sum((center - z_tilde) ** 2))
    num = eval_univariate("chebyshev", spec.degree, 1.0 + spec.delta**2 - r2)
    den = eval_univariate("chebyshev", spec.degree, 1.0 + spec.delta**2)
    return float(num / den)


def upper_bound_off_graph(delta3: float, d: int) -> float:
    """Christoffel upper bound at variety points off the graph (unit mass)."""
    if not (0.0 < delta3 <= 1.0):
        raise ValueError(f"delta3 must lie in (0, 1], got {delta3}")
    if d < 0:
        raise ValueError(f"d must be >= 0, got {d}")
    return 2.0 ** (2.0 - 2.0 * delta3 * (d // 2))


def lower_bound_on_graph(vol_x: float, d: int, n: int) -> float:
    """Christoffel lower bound on the graph at interior points."""
    if not (vol_x > 0):
        raise ValueError(f"vol_x must be positive, got {vol_x}")
    if d < 0 or n < 1:
        raise ValueError(f"need d >= 0 and n >= 1, got d={d}, n={n}")
    return 2.0 * vol_x / (
        math.sqrt(2.0 * math.pi) * math.erf(1.0) * math.e * (1.0 + d) ** (2 * n)
    )


def delta3(delta1: float, delta_max: float) -> float:
    """Needle radius delta1 / (delta1 + delta_max) used by the upper bound."""
    if not (delta1 > 0 and delta_max > 0):
        raise ValueError(f"need positive inputs, got delta1={delta1}, delta_max={delta_max}")
    return delta1 / (delta1 + delta_max)


def delta_max_estimate(points) -> float:
    """Twice the diameter of a point cloud.

    Exact pairwise diameter up to EXACT_DIAMETER_LIMIT points; above that
    the bounding-box diagonal is used, which over-estimates the diameter
    and therefore errs toward a smaller delta3.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("need at least one point")
    if pts.shape[0] == 1:
        return 0.0
    if pts.shape[0] <= EXACT_DIAMETER_LIMIT:
        diam = float(np.max(pdist(pts)))
    else:
        diam = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    return 2.0 * diam


def separation_constant(vol_x: float) -> float:
    """Right-hand side vol(X) / (2 sqrt(2 pi) erf(1) e) of the degree inequality."""
    if not (vol_x > 0):
        raise ValueError(f"vol_x must be positive, got {vol_x}")
    return vol_x / (2.0 * math.sqrt(2.0 * math.pi) * math.erf(1.0) * math.e)


def separating_degree_from_delta3(
    vol_x: float, delta3_value: float, n: int, d_max: int
) -> DegreeCertificate:
    """Scan d = 1..d_max for (1+d)^{2n} / 2^{2 delta3 floor(d/2)} < constant.

    Because of the floor, the left side is not monotone between
    consecutive degrees; the certified degree is the smallest one from
    which the inequality holds for the whole remaining tail.
    """
    if not (0.0 < delta3_value <= 1.0):
        raise ValueError(f"delta3 must lie in (0, 1], got {delta3_value}")
    if n < 1 or d_max < 1:
        raise ValueError(f"need n >= 1 and d_max >= 1, got n={n}, d_max={d_max}")
    constant_c = separation_constant(vol_x)
    rows = []
    for d in range(1, d_max + 1):
        lhs = (1.0 + d) ** (2 * n) / 2.0 ** (2.0 * delta3_value * (d // 2))
        rows.append((d, lhs, constant_c, lhs < constant_c))
    d_star = None
    for d, _, _, sep in reversed(rows):
        if not sep:
            break
        d_star = d
    return DegreeCertificate(constant_c=constant_c, d_star_sep=d_star, per_degree=tuple(rows))


def separating_degree(inp: SeparationInputs) -> DegreeCertificate:
    """Degree certificate from geometric inputs (tube radius, variety size)."""
    return separating_degree_from_delta3(inp.vol_x, inp.delta3, inp.n, inp.d_max)


def remark_degree_quantities(constant_c: float, delta3_value: float, n: int) -> RemarkQuantities:
    """Closed-form degree quantities of the refinement remark, verbatim.

    These formulas carry sign/exponent inconsistencies in degenerate
    regimes (the epsilon relation forces epsilon <= 1, making the final
    denominator nonpositive); they are reported for information and
    flagged invalid instead of raised.  The authoritative certificate is
    separating_degree.
    """
    if not (constant_c > 0):
        raise ValueError(f"constant_c must be positive, got {constant_c}")
    if not (0.0 < delta3_value <= 1.0):
        raise ValueError(f"delta3 must lie in (0, 1], got {delta3_value}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    root = constant_c ** (1.0 / (2 * n))
    ratio = root * n / delta3_value
    d0 = int(math.ceil(ratio)) - 1
    epsilon_gap = root * n / (delta3_value * math.ceil(ratio))
    denom = (epsilon_gap - 1.0) * delta3_value
    if denom <= 0.0:
        return RemarkQuantities(
            d0=d0,
            epsilon_gap=epsilon_gap,
            sufficient_d=None,
            invalid_reason=f"(epsilon - 1) * delta3 = {denom:g} is not positive",
        )
    sufficient = n / denom * math.log2(1.0 / root)
    return RemarkQuantities(d0=d0, epsilon_gap=epsilon_gap, sufficient_d=sufficient)
