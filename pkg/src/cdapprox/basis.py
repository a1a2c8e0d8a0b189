"""Total-degree multivariate polynomial bases over joint variables.

Three univariate families share one interface: plain monomials, Chebyshev
polynomials of the first kind, and standard (non-normalized) Legendre
polynomials, all evaluated by their three-term recurrences.  Multi-indices
are enumerated in graded lexicographic order; this fixes the row/column
order of every Gram matrix downstream, so serialized matrices are
comparable across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

FAMILIES = ("monomial", "chebyshev", "legendre")


@dataclass(frozen=True)
class MultiIndex:
    """Exponent tuple of one multivariate basis function."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        if any(e < 0 for e in self.exponents):
            raise ValueError(f"exponents must be nonnegative, got {self.exponents}")

    @property
    def total_degree(self) -> int:
        return sum(self.exponents)


@dataclass(frozen=True)
class BasisSpec:
    """Identifies a total-degree basis: family, variable count, degree.

    ``nvars`` counts the joint variables (ambient dimension plus one for
    the function value when the basis feeds a graph measure).  The
    enumeration order is always graded lexicographic.
    """

    nvars: int
    degree: int
    family: str = "legendre"

    def __post_init__(self):
        if self.nvars < 1:
            raise ValueError(f"nvars must be >= 1, got {self.nvars}")
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected one of {FAMILIES}")

    @property
    def size(self) -> int:
        return basis_size(self.nvars, self.degree)

    @cached_property
    def exponent_matrix(self) -> np.ndarray:
        """(N, nvars) int array of exponents, rows in graded-lex order."""
        rows = [m.exponents for m in enumerate_multiindices(self)]
        return np.array(rows, dtype=np.int64).reshape(len(rows), self.nvars)


def basis_size(nvars: int, degree: int) -> int:
    """Number of multi-indices with total degree <= degree in nvars variables."""
    if nvars < 1:
        raise ValueError(f"nvars must be >= 1, got {nvars}")
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    return math.comb(nvars + degree, degree)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    # Degree-`total` exponent tuples, first variable's power descending.
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def enumerate_multiindices(spec: BasisSpec) -> list[MultiIndex]:
    """All multi-indices with total degree <= spec.degree, graded-lex order."""
    out = []
    for g in range(spec.degree + 1):
        for exps in _compositions(g, spec.nvars):
            out.append(MultiIndex(exps))
    return out


def eval_univariate(family: str, k: int, t):
    """Evaluate the degree-k family polynomial at t (scalar or array).

    Chebyshev and Legendre use their three-term recurrences, which remain
    valid for arguments outside [-1, 1]; the Legendre family is the
    standard (non-normalized) one with P_k(1) = 1.
    """
    if k < 0:
        raise ValueError(f"polynomial degree must be >= 0, got {k}")
    t = np.asarray(t, dtype=float)
    table = univariate_table(family, k, np.atleast_1d(t).ravel())
    vals = table[k].reshape(t.shape)
    return float(vals) if vals.ndim == 0 else vals


def univariate_table(family: str, kmax: int, t: np.ndarray) -> np.ndarray:
    """Values of the family polynomials of degree 0..kmax at points t.

    Returns an array of shape (kmax + 1, len(t)).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}, expected one of {FAMILIES}")
    t = np.asarray(t, dtype=float)
    if family == "monomial":
        # Direct powers so monomial vectors match componentwise products exactly.
        return t[None, :] ** np.arange(kmax + 1)[:, None]
    table = np.empty((kmax + 1, t.size))
    table[0] = 1.0
    if kmax == 0:
        return table
    table[1] = t
    if family == "chebyshev":
        for k in range(1, kmax):
            table[k + 1] = 2.0 * t * table[k] - table[k - 1]
    else:  # legendre
        for k in range(1, kmax):
            table[k + 1] = ((2 * k + 1) * t * table[k] - k * table[k - 1]) / (k + 1)
    return table


def eval_basis_vector(spec: BasisSpec, point: Sequence[float]) -> np.ndarray:
    """Basis vector [b_1(z), ..., b_N(z)] at one point, graded-lex order."""
    point = np.asarray(point, dtype=float)
    if point.shape != (spec.nvars,):
        raise ValueError(f"point has shape {point.shape}, expected ({spec.nvars},)")
    return eval_basis_matrix(spec, point.reshape(1, -1))[0]


def eval_basis_matrix(spec: BasisSpec, points: np.ndarray) -> np.ndarray:
    """Basis values at many points; shape (len(points), N).

    Component j of each row is the product over variables of the family
    polynomial at the exponent of multi-index j.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != spec.nvars:
        raise ValueError(f"points must have shape (m, {spec.nvars}), got {points.shape}")
    exps = spec.exponent_matrix
    out = np.ones((points.shape[0], exps.shape[0]))
    for v in range(spec.nvars):
        table = univariate_table(spec.family, spec.degree, points[:, v])
        out *= table[exps[:, v]].T
    return out
