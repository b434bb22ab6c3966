"""Weighted and penalized least-squares solvers with thin-plate energy.

The unpenalized solver works on the scaled system ``sqrt(W) B c = sqrt(W) f``
through an orthogonal factorization shared across value components; normal
equations are formed only for the penalized solve, where the energy matrix
makes the orthogonal route unnatural.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import RankDeficiencyError, SingularSystemError
from .spline_core import SplineFunction, WeightedPointCloud, _as_sites

__all__ = [
    "FitMetrics",
    "solve_wls",
    "assemble_thin_plate",
    "solve_penalized_wls",
    "metrics",
    "RANK_RTOL",
]

# Singular values below RANK_RTOL times the largest count as zero.
RANK_RTOL = 1e-12


def _weighted_system(B, weights, f):
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    f = np.asarray(f, dtype=float)
    squeeze = f.ndim == 1
    f2 = f[:, None] if squeeze else f
    m = B.shape[0]
    if w.shape != (m,) or f2.shape[0] != m:
        raise ValueError("B, weights and f must agree on the number of rows")
    return w, f2, squeeze


def solve_wls(B, weights, f) -> np.ndarray:
    """Coefficients minimizing ``sum_i w_i ||(B c)_i - f_i||^2``.

    All value components share one factorization. Raises
    :class:`RankDeficiencyError` when the scaled matrix has numerical rank
    below its column count.
    """
    B = np.asarray(B, dtype=float)
    m, n = B.shape
    if n > m:
        raise RankDeficiencyError(f"underdetermined system: {n} unknowns, {m} rows")
    w, f2, squeeze = _weighted_system(B, weights, f)
    sqrt_w = np.sqrt(w)
    c, _, rank, _ = np.linalg.lstsq(
        B * sqrt_w[:, None], f2 * sqrt_w[:, None], rcond=RANK_RTOL
    )
    if rank < n:
        raise RankDeficiencyError(f"collocation matrix has rank {rank} < {n}")
    return c[:, 0] if squeeze else c


def _second_order_multi_indices(ndim):
    """Multi-indices of total order two with their multinomial coefficients."""
    out = []
    for alpha in itertools.product(range(3), repeat=ndim):
        if sum(alpha) == 2:
            coeff = 2.0 / math.prod(math.factorial(a) for a in alpha)
            out.append((alpha, coeff))
    return out


def _cell_rects(space):
    """Cells of the space tessellation as (level, bounds) pairs."""
    leaves = getattr(space, "leaf_cells", None)
    if leaves is not None:
        out = []
        for cid in leaves():
            kvs = space.levels[cid.level].knot_vectors
            bounds = tuple(
                (kv.breakpoints[i], kv.breakpoints[i + 1])
                for kv, i in zip(kvs, cid.index)
            )
            out.append((cid.level, bounds))
        return out
    return [(None, rect) for rect in space.cells()]


def assemble_thin_plate(space) -> np.ndarray:
    """Thin-plate energy matrix ``P`` with ``c^T P c = J(v)`` per component.

    ``J`` integrates the squared second derivatives over the domain, mixed
    terms carrying their multinomial weight (``ss + 2 st + tt`` in two
    variables, ``integral of (v'')^2`` in one). Gauss-Legendre quadrature
    with ``max degree + 1`` points per direction on every cell of the
    tessellation is exact for the piecewise-polynomial integrand. Requires
    degree at least two in every direction.
    """
    for d in space.degrees:
        if d < 2:
            raise ValueError("thin-plate energy needs degree >= 2 in every direction")
    terms = _second_order_multi_indices(space.ndim)
    q = max(space.degrees) + 1
    nodes, gauss_w = np.polynomial.legendre.leggauss(q)

    P = np.zeros((space.dim, space.dim))
    for level, rect in _cell_rects(space):
        axes_pts, axes_wts = [], []
        for a, b in rect:
            half = 0.5 * (b - a)
            axes_pts.append(a + half * (nodes + 1.0))
            axes_wts.append(gauss_w * half)
        pw = axes_wts[0]
        for wrow in axes_wts[1:]:
            pw = np.multiply.outer(pw, wrow)
        pw = pw.ravel()

        idx, rows = space.local_ders_on_grid(axes_pts, 2, max_level=level)
        if idx.size == 0:
            continue
        for alpha, coeff in terms:
            R = rows[alpha]
            P[np.ix_(idx, idx)] += coeff * (R.T @ (R * pw[:, None]))
    return 0.5 * (P + P.T)


def solve_penalized_wls(B, weights, f, P, lam: float) -> np.ndarray:
    """Solve ``(0.5 B^T W B + lam P) c = 0.5 B^T W f`` per value component.

    ``B`` may be dense or a scipy sparse matrix. ``lam = 0`` reduces to
    :func:`solve_wls`. Raises :class:`SingularSystemError` when the
    regularized normal matrix cannot be factorized.
    """
    if lam < 0:
        raise ValueError("penalty weight must be non-negative")
    if lam == 0:
        dense = B.toarray() if scipy.sparse.issparse(B) else B
        return solve_wls(dense, weights, f)

    w, f2, squeeze = _weighted_system(B, weights, f)
    if scipy.sparse.issparse(B):
        B = B.tocsr()
        gram = (B.T @ B.multiply(w[:, None])).toarray()
        rhs = B.T @ (f2 * w[:, None])
    else:
        B = np.asarray(B, dtype=float)
        gram = B.T @ (B * w[:, None])
        rhs = B.T @ (f2 * w[:, None])
    A = 0.5 * gram + lam * np.asarray(P)
    A = 0.5 * (A + A.T)
    try:
        factor = scipy.linalg.cho_factor(A, check_finite=False)
        c = scipy.linalg.cho_solve(factor, 0.5 * rhs, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"penalized normal system is singular: {exc}") from exc
    return c[:, 0] if squeeze else c


@dataclass(frozen=True)
class FitMetrics:
    """Pointwise errors ``e_i = ||v(x_i) - f_i||_2`` with their RMSE and maximum."""

    errors: np.ndarray
    rmse: float
    max: float

    @classmethod
    def from_errors(cls, errors) -> "FitMetrics":
        e = np.asarray(errors, dtype=float)
        return cls(errors=e, rmse=float(np.sqrt(np.mean(e**2))), max=float(e.max()))


def metrics(fn: SplineFunction, cloud: WeightedPointCloud) -> FitMetrics:
    """Pointwise fit errors of ``fn`` against the cloud."""
    sites = _as_sites(cloud.sites, fn.space.ndim)
    residual = fn.evaluate_many(sites) - cloud.values
    return FitMetrics.from_errors(np.linalg.norm(residual, axis=1))
