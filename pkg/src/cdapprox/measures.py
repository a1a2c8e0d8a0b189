"""Measures on boxes and their moment matrices.

The central object is the degenerate measure carried by the graph of a
function f: integrating against it reduces to an integral over the domain
with the basis evaluated at (x, f(x)).  This module assembles moment
matrices for that measure by tensor Gauss-Legendre quadrature, for its
Gaussian-band smoothing, for a plain (nondegenerate) box measure, and for
empirical samples; it also applies Tikhonov regularization.

Assembly accumulates outer products in a fixed row-major order over nodes
with compensated (Kahan) summation, so results are reproducible
bit-for-bit at a fixed quadrature order.

Moment matrices can optionally be assembled in affinely standardized
coordinates (each variable mapped toward [-1, 1]).  The Christoffel
function is exactly invariant under such maps, so this changes nothing
downstream except conditioning; the map is recorded on the matrix and
applied transparently by the evaluator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import BasisSpec, eval_basis_matrix

NORMALIZATIONS = ("lebesgue", "probability")

SLICE_MASS_RAW = 1.0 / math.sqrt(2.0)  # band integral of the truncated-Gaussian density


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box with a mass normalization flag.

    ``lebesgue`` weights integrate to the box volume, ``probability``
    rescales them to total mass one.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    normalization: str = "lebesgue"

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper must be nonempty and of equal length")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ValueError(f"need lower < upper per coordinate, got {lo} / {hi}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    @property
    def mass(self) -> float:
        return 1.0 if self.normalization == "probability" else self.volume

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= np.asarray(self.lower) - tol)
            and np.all(x <= np.asarray(self.upper) + tol)
        )


@dataclass(frozen=True)
class AffineMap:
    """Per-variable affine change of coordinates t_j = scale_j * z_j + shift_j."""

    scale: tuple[float, ...]
    shift: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "scale", tuple(float(v) for v in self.scale))
        object.__setattr__(self, "shift", tuple(float(v) for v in self.shift))
        if len(self.scale) != len(self.shift):
            raise ValueError("scale and shift must have equal length")
        if any(s <= 0 or not math.isfinite(s) for s in self.scale):
            raise ValueError("scales must be positive and finite")

    @staticmethod
    def identity(nvars: int) -> "AffineMap":
        return AffineMap((1.0,) * nvars, (0.0,) * nvars)

    @staticmethod
    def to_unit_box(lower: Sequence[float], upper: Sequence[float]) -> "AffineMap":
        """Map the box [lower, upper] onto [-1, 1]^d (identity when it already is)."""
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        return AffineMap(tuple(2.0 / (hi - lo)), tuple(-(hi + lo) / (hi - lo)))

    @property
    def nvars(self) -> int:
        return len(self.scale)

    def is_identity(self) -> bool:
        return all(s == 1.0 for s in self.scale) and all(c == 0.0 for c in self.shift)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts * np.asarray(self.scale) + np.asarray(self.shift)

    def apply_component(self, j: int, values):
        return np.asarray(values, dtype=float) * self.scale[j] + self.shift[j]


@dataclass(frozen=True)
class GraphMeasure:
    """Lebesgue measure on a box pushed onto the graph {(x, f(x))}."""

    f: Callable[[np.ndarray], float]
    domain: BoxDomain
    quad_order: int = 32

    def __post_init__(self):
        if self.quad_order < 1:
            raise ValueError(f"quad_order must be >= 1, got {self.quad_order}")


@dataclass(frozen=True)
class SmoothedMeasure:
    """Graph measure smeared over a Gaussian band of half-width epsilon in y.

    The band density integrates to 1/sqrt(2) per x-slice; with
    ``normalize_slice`` each slice is rescaled to carry exactly the
    x-weight.
    """

    base: GraphMeasure
    epsilon: float
    y_quad_order: int = 16
    normalize_slice: bool = False

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.y_quad_order < 1:
            raise ValueError(f"y_quad_order must be >= 1, got {self.y_quad_order}")


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Finite list of joint points (x_1..x_n, y)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        if pts.shape[0] < 1:
            raise ValueError("need at least one sample")
        if not np.all(np.isfinite(pts)):
            raise ValueError("samples must be finite")

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class MomentMatrix:
    """Symmetric Gram matrix of the basis against a measure."""

    entries: np.ndarray
    spec: BasisSpec
    provenance: str  # quadrature | monte-carlo | regularized
    normalization: str = "lebesgue"
    transform: AffineMap | None = None
    domain: BoxDomain | None = None

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", m)
        n = self.spec.size
        if m.shape != (n, n):
            raise ValueError(f"entries shape {m.shape} does not match basis size {n}")
        if not np.all(np.isfinite(m)):
            raise ValueError("moment matrix has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(m))))
        asym = float(np.max(np.abs(m - m.T)))
        if asym > 1e-14 * scale:
            raise ValueError(f"moment matrix is not symmetric (max asymmetry {asym:g})")

    @property
    def mass(self) -> float:
        """Total measure mass; equals the (0,0) entry since b_0 is constant 1."""
        return float(self.entries[0, 0])

    def to_json_obj(self) -> dict:
        obj = {
            "nvars": self.spec.nvars,
            "degree": self.spec.degree,
            "family": self.spec.family,
            "normalization": self.normalization,
            "entries": [float(v) for v in self.entries.ravel()],
        }
        if self.transform is not None and not self.transform.is_identity():
            obj["affine"] = {
                "scale": list(self.transform.scale),
                "shift": list(self.transform.shift),
            }
        obj["provenance"] = self.provenance
        return obj

    @staticmethod
    def from_json_obj(obj: dict) -> "MomentMatrix":
        spec = BasisSpec(nvars=int(obj["nvars"]), degree=int(obj["degree"]), family=obj["family"])
        n = spec.size
        entries = np.asarray(obj["entries"], dtype=float).reshape(n, n)
        transform = None
        if "affine" in obj:
            transform = AffineMap(tuple(obj["affine"]["scale"]), tuple(obj["affine"]["shift"]))
        return MomentMatrix(
            entries=entries,
            spec=spec,
            provenance=obj.get("provenance", "quadrature"),
            normalization=obj["normalization"],
            transform=transform,
        )


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _legendre_with_derivative(order: int, x: np.ndarray):
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(1, order):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    dp = order * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_legendre_rule(order: int):
    """Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.

    Roots of the degree-`order` Legendre polynomial found by Newton from
    the Chebyshev initial guess; weights sum to 2 and the rule is exact
    for polynomials of degree <= 2*order - 1.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    k = np.arange(order)
    x = np.cos(np.pi * (k + 0.75) / (order + 0.5))
    converged = False
    for _ in range(100):
        p, dp = _legendre_with_derivative(order, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            converged = True
            break
    if not converged:
        bad = int(np.argmax(np.abs(dx)))
        raise RuntimeError(f"Gauss-Legendre node {bad} did not converge for order {order}")
    _, dp = _legendre_with_derivative(order, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    # nodes come in +/- pairs; enforce the symmetry exactly
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x[::-1].copy(), w[::-1].copy()


def tensor_grid(domain: BoxDomain, order: int):
    """Tensor Gauss-Legendre grid on a box; row-major node order.

    Returns (points, weights) with points of shape (order^dim, dim).
    Weights carry the domain normalization.
    """
    t, w = gauss_legendre_rule(order)
    axes_nodes = []
    axes_weights = []
    for lo, hi in zip(domain.lower, domain.upper):
        half = 0.5 * (hi - lo)
        axes_nodes.append(0.5 * (lo + hi) + half * t)
        axes_weights.append(half * w)
    mesh = np.meshgrid(*axes_nodes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    wmesh = np.meshgrid(*axes_weights, indexing="ij")
    weights = np.ones(points.shape[0])
    for wm in wmesh:
        weights = weights * wm.ravel()
    if domain.normalization == "probability":
        weights = weights / domain.volume
    return points, weights


def _kahan_gram(B: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # Fixed-order compensated accumulation of sum_q w_q b(z_q) b(z_q)^T.
    n = B.shape[1]
    acc = np.zeros((n, n))
    comp = np.zeros((n, n))
    for q in range(B.shape[0]):
        term = weights[q] * np.outer(B[q], B[q])
        y = term - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return acc


def _check_mass(m00: float, expected: float, context: str):
    if abs(m00 - expected) > 1e-10 * max(1.0, abs(expected)):
        raise ValueError(
            f"{context}: (0,0) moment {m00!r} does not match the measure mass "
            f"{expected!r}; increase the quadrature order"
        )


def _basis_on_points(spec: BasisSpec, points: np.ndarray, transform: AffineMap | None):
    if transform is not None:
        if transform.nvars != spec.nvars:
            raise ValueError("transform dimension does not match basis")
        points = transform.apply(points)
    return eval_basis_matrix(spec, points)


def graph_moment_matrix(
    measure: GraphMeasure, spec: BasisSpec, transform: AffineMap | None = None
) -> MomentMatrix:
    """Moment matrix of the degenerate measure carried by the graph of f."""
    n = measure.domain.dim
    if spec.nvars != n + 1:
        raise ValueError(f"basis has {spec.nvars} variables, expected {n + 1}")
    xs, weights = tensor_grid(measure.domain, measure.quad_order)
    ys = np.empty(xs.shape[0])
    for q in range(xs.shape[0]):
        val = float(measure.f(xs[q]))
        if not math.isfinite(val):
            raise ValueError(f"f returned non-finite value {val!r} at quadrature node {xs[q]}")
        ys[q] = val
    joint = np.column_stack([xs, ys])
    B = _basis_on_points(spec, joint, transform)
    entries = _kahan_gram(B, weights)
    _check_mass(entries[0, 0], measure.domain.mass, "graph moment matrix")
    return MomentMatrix(
        entries=entries,
        spec=spec,
        provenance="quadrature",
        normalization=measure.domain.normalization,
        transform=transform,
        domain=measure.domain,
    )


def smoothed_moment_matrix(
    measure: SmoothedMeasure, spec: BasisSpec, transform: AffineMap | None = None
) -> MomentMatrix:
    """Moment matrix of the Gaussian-band smoothing of a graph measure.

    Per x-node, the band [f(x)-eps, f(x)+eps] is integrated with its own
    Gauss-Legendre rule against the truncated-Gaussian density.
    """
    base = measure.base
    n = base.domain.dim
    if spec.nvars != n + 1:
        raise ValueError(f"basis has {spec.nvars} variables, expected {n + 1}")
    xs, xweights = tensor_grid(base.domain, base.quad_order)
    tband, wband = gauss_legendre_rule(measure.y_quad_order)
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * measure.epsilon * math.erf(1.0))
    ny = measure.y_quad_order

    points = np.empty((xs.shape[0] * ny, n + 1))
    weights = np.empty(xs.shape[0] * ny)
    for q in range(xs.shape[0]):
        fval = float(base.f(xs[q]))
        if not math.isfinite(fval):
            raise ValueError(f"f returned non-finite value {fval!r} at quadrature node {xs[q]}")
        ynodes = fval + measure.epsilon * tband
        dens = norm * np.exp(-((fval - ynodes) / measure.epsilon) ** 2)
        slice_w = measure.epsilon * wband * dens
        if measure.normalize_slice:
            slice_w = slice_w / np.sum(slice_w)
        sl = slice(q * ny, (q + 1) * ny)
        points[sl, :n] = xs[q]
        points[sl, n] = ynodes
        weights[sl] = xweights[q] * slice_w
    B = _basis_on_points(spec, points, transform)
    entries = _kahan_gram(B, weights)
    expected = base.domain.mass * (1.0 if measure.normalize_slice else SLICE_MASS_RAW)
    _check_mass(entries[0, 0], expected, "smoothed moment matrix")
    return MomentMatrix(
        entries=entries,
        spec=spec,
        provenance="quadrature",
        normalization=base.domain.normalization,
        transform=transform,
        domain=base.domain,
    )


def box_moment_matrix(
    domain: BoxDomain, spec: BasisSpec, order: int | None = None,
    transform: AffineMap | None = None,
) -> MomentMatrix:
    """Moment matrix of the plain (nondegenerate) uniform measure on a box.

    The box lives in all spec.nvars variables; default order integrates
    degree-2d products exactly.
    """
    if spec.nvars != domain.dim:
        raise ValueError(f"basis has {spec.nvars} variables, box has {domain.dim}")
    if order is None:
        order = spec.degree + 1
    points, weights = tensor_grid(domain, order)
    B = _basis_on_points(spec, points, transform)
    entries = _kahan_gram(B, weights)
    _check_mass(entries[0, 0], domain.mass, "box moment matrix")
    return MomentMatrix(
        entries=entries,
        spec=spec,
        provenance="quadrature",
        normalization=domain.normalization,
        transform=transform,
        domain=domain,
    )


def regularize(M: MomentMatrix, beta: float) -> MomentMatrix:
    """Tikhonov shift M + beta * I."""
    if not (beta > 0 and math.isfinite(beta)):
        raise ValueError(f"beta must be positive and finite, got {beta}")
    entries = M.entries + beta * np.eye(M.spec.size)
    return MomentMatrix(
        entries=entries,
        spec=M.spec,
        provenance="regularized",
        normalization=M.normalization,
        transform=M.transform,
        domain=M.domain,
    )


def empirical_moment_matrix(
    samples: SampleSet, spec: BasisSpec, transform: AffineMap | None = None
) -> MomentMatrix:
    """Monte Carlo moment matrix (1/m) sum_i b(z_i) b(z_i)^T."""
    if samples.dim != spec.nvars:
        raise ValueError(f"samples have dimension {samples.dim}, basis expects {spec.nvars}")
    B = _basis_on_points(spec, samples.points, transform)
    weights = np.full(samples.count, 1.0 / samples.count)
    entries = _kahan_gram(B, weights)
    return MomentMatrix(
        entries=entries,
        spec=spec,
        provenance="monte-carlo",
        normalization="probability",
        transform=transform,
    )


def jitter_samples(samples: SampleSet, sigma: float, replication: int, seed) -> SampleSet:
    """Replicate each sample r times with Gaussian noise on the y coordinate."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if replication < 1:
        raise ValueError(f"replication must be >= 1, got {replication}")
    rng = np.random.default_rng(seed)
    noise = sigma * rng.standard_normal((samples.count, replication))
    out = np.repeat(samples.points, replication, axis=0)
    out[:, -1] = out[:, -1] + noise.ravel()
    return SampleSet(out)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def sample_csv_header(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)] + ["y"]


def read_samples_csv(path) -> SampleSet:
    """Read samples from CSV with header x1,...,xn,y (one sample per row)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("row 1: empty file, expected header x1,...,xn,y") from None
        header = [h.strip() for h in header]
        n = len(header) - 1
        if n < 1 or header != sample_csv_header(n):
            raise ValueError(f"row 1: bad header {header!r}, expected x1,...,xn,y")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n + 1:
                raise ValueError(f"row {lineno}: expected {n + 1} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ValueError(f"row {lineno}: non-numeric field in {row!r}") from None
        if not rows:
            raise ValueError("row 2: no data rows")
    return SampleSet(np.asarray(rows))


def write_samples_csv(path, samples: SampleSet, float_format: str = "%.17g"):
    n = samples.dim - 1
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(sample_csv_header(n))
        for row in samples.points:
            writer.writerow([float_format % v for v in row])
