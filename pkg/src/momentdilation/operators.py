"""Compact-interval ancilla operators on [0, 1].

The continuum generator is ``p d/dp + 1/2``; its grid version is built from a
summation-by-parts pair and conjugated by ``W^{1/2}`` so that the result is
skew in the standard inner product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import AncillaTriple, FamilyTag, max_abs

__all__ = [
    "GridSpec",
    "SBPPair",
    "IntervalOperator",
    "sbp_coefficients",
    "build_sbp",
    "build_interval_operator",
    "choose_theta",
    "encode_vector",
    "eval_functional",
    "propagation_bound",
    "consistency_error",
    "local_error_constant",
    "high_order_m",
    "default_M",
    "compact_triple",
    "to_coo_text",
]

THETA_CAP = 0.9
CFL_SAFETY = 0.99


@dataclass(frozen=True)
class GridSpec:
    M: int
    theta: float

    def __post_init__(self):
        if self.M < 2 or self.M % 2:
            raise ValueError(f"M must be a positive even integer, got {self.M}")
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0,1), got {self.theta}")

    @property
    def h(self) -> float:
        return 1.0 / self.M

    @property
    def beta(self) -> float:
        return 1.0 / self.theta - 0.5

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.h


def sbp_coefficients(m: int) -> np.ndarray:
    """Central-difference weights ``c_1..c_m`` of interior order ``2m``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    c = math.comb(2 * m, m)
    return np.array([(-1) ** (s + 1) * math.comb(2 * m, m + s) / (s * c) for s in range(1, m + 1)])


def _boundary_matrix(n: int) -> np.ndarray:
    B = np.zeros((n, n))
    B[0, 0], B[-1, -1] = -1.0, 1.0
    return B


@dataclass(frozen=True)
class SBPPair:
    """Trapezoid weights and ghost-zero Toeplitz central difference.

    ``D`` is antisymmetric, so ``W D + D^T W`` vanishes away from the two end
    rows/columns.  ``closed()`` returns the boundary-corrected operator
    ``W^-1 (h D + B/2)`` which has the same interior rows and satisfies the
    identity ``W D + D^T W = B`` exactly.
    """

    m: int
    M: int
    h: float
    w: np.ndarray
    D: np.ndarray

    @property
    def W(self) -> np.ndarray:
        return np.diag(self.w)

    @property
    def B(self) -> np.ndarray:
        return _boundary_matrix(self.M + 1)

    def closed(self) -> np.ndarray:
        return (self.h * self.D + 0.5 * self.B) / self.w[:, None]

    def residual(self, D=None) -> np.ndarray:
        D = self.D if D is None else D
        WD = self.w[:, None] * D
        return WD + WD.T - self.B

    def interior_residual(self) -> float:
        return max_abs(self.residual()[1:-1, 1:-1])

    def boundary_residual(self) -> float:
        return max_abs(self.residual())

    def closed_residual(self) -> float:
        return max_abs(self.residual(self.closed()))


def build_sbp(m: int, M: int, h: Optional[float] = None) -> SBPPair:
    if M < 4 * m:
        raise ValueError(f"M={M} too small for m={m} (need M >= 4m)")
    h = 1.0 / M if h is None else h
    D = np.zeros((M + 1, M + 1))
    for s, c in enumerate(sbp_coefficients(m), start=1):
        i = np.arange(M + 1 - s)
        D[i, i + s] = c / h
        D[i + s, i] = -c / h
    w = np.full(M + 1, h)
    w[0] = w[-1] = h / 2
    return SBPPair(m, M, h, w, D)


@dataclass(frozen=True)
class IntervalOperator:
    """Grid operator for ``p d/dp + 1/2`` (unscaled; the triple uses ``theta F``)."""

    F: np.ndarray
    order: int
    grid: GridSpec
    sbp: SBPPair

    @property
    def m(self) -> int:
        return self.order // 2

    def skew_residual(self) -> float:
        return max_abs(self.F + self.F.T)

    def interior(self) -> slice:
        """Rows whose stencil touches neither node 0, ghost nodes nor the zeroed column M."""
        return slice(self.m + 1, self.grid.M - self.m)


def build_interval_operator(m: int, grid: GridSpec) -> IntervalOperator:
    sbp = build_sbp(m, grid.M, grid.h)
    Dc = sbp.closed()
    p = grid.nodes
    G = 0.5 * (p[:, None] * Dc + Dc * p[None, :])
    sw = np.sqrt(sbp.w)
    F = sw[:, None] * G / sw[None, :]
    F[-1, :] = 0.0
    F[:, -1] = 0.0
    return IntervalOperator(F, 2 * m, grid, sbp)


def choose_theta(Kmax: float, T: float) -> float:
    """Largest safe ``theta`` with ``theta Kmax T < 1/(8e)``, capped at 0.9."""
    if Kmax < 0 or T < 0:
        raise ValueError("Kmax and T must be nonnegative")
    if Kmax * T == 0:
        return THETA_CAP
    return min(CFL_SAFETY / (8 * math.e * Kmax * T), THETA_CAP)


def encode_vector(grid: GridSpec, beta_override: Optional[float] = None):
    """Normalized samples of ``p^beta``; returns ``(r, C)`` with ``C`` the norm."""
    beta = grid.beta if beta_override is None else beta_override
    if beta < 0:
        raise ValueError("beta must be >= 0")
    raw = grid.nodes ** beta
    C = float(np.linalg.norm(raw))
    return raw / C, C


def eval_functional(grid: GridSpec, C: float, beta: Optional[float] = None) -> np.ndarray:
    """``2^beta C e_{M/2}``, the point evaluation at ``p = 1/2``."""
    if grid.M % 2:
        raise ValueError("M must be even")
    beta = grid.beta if beta is None else beta
    l = np.zeros(grid.M + 1)
    l[grid.M // 2] = 2.0 ** beta * C
    return l


def propagation_bound(theta: float, Kmax: float, t: float, M: int, norm_uR: float) -> float:
    q = 4 * math.e * theta * t * Kmax
    if q >= 1:
        raise ValueError(f"4 e theta t Kmax = {q:.4g} >= 1; bound diverges")
    return q ** (M / 4) / (1 - q) * norm_uR


def local_error_constant(theta: float) -> float:
    """``C(theta) = theta beta (beta-1)(beta-2) / 6``."""
    beta = 1 / theta - 0.5
    return theta * beta * (beta - 1) * (beta - 2) / 6


def consistency_error(op: IntervalOperator, v_samples, v_exact_Fv) -> np.ndarray:
    """``(F_h v)_i - (F v)(p_i)`` for the unscaled operator at every node."""
    return op.F @ np.asarray(v_samples) - np.asarray(v_exact_Fv)


def high_order_m(beta: int) -> int:
    """Half-order making the split stencil exact on ``p^beta``.

    The split form differentiates ``p^(beta+1)``, so ``2m >= beta + 1``.
    """
    return int(beta) // 2 + 1


def default_M(eps: float) -> int:
    M = math.ceil(math.log2(1 / eps))
    M += M % 2
    return max(M, 8)


def compact_triple(M: int, theta: float, m: int = 1, high_order: bool = False) -> AncillaTriple:
    """Compact-interval triple ``(theta F_h, r_h, l_h)``.

    With ``high_order`` the exponent is rounded up to an integer, ``theta`` is
    reduced to match, and ``m`` defaults to :func:`high_order_m`.
    """
    grid = GridSpec(M, theta)
    beta = grid.beta
    if high_order:
        beta = math.ceil(beta - 1e-12)
        grid = GridSpec(M, 1.0 / (beta + 0.5))
        m = max(m, high_order_m(beta))
    op = build_interval_operator(m, grid)
    r, C = encode_vector(grid, beta)
    l = eval_functional(grid, C, beta)
    raw = float(l @ r)
    params = {
        "theta": grid.theta, "beta": float(beta), "h": grid.h, "M": M, "m": m,
        "order": op.order, "C_norm": C, "raw_pairing": raw,
    }
    return AncillaTriple(grid.theta * op.F, r, l / raw, FamilyTag.COMPACT, params)


def to_coo_text(F) -> str:
    """Coordinate list ``row col value`` (complex values as ``re im``)."""
    F = np.asarray(F.toarray() if hasattr(F, "toarray") else F)
    rows, cols = np.nonzero(F)
    lines = []
    for i, j in zip(rows, cols):
        v = F[i, j]
        if np.iscomplexobj(F):
            lines.append(f"{i} {j} {v.real:.17g} {v.imag:.17g}")
        else:
            lines.append(f"{i} {j} {v:.17g}")
    return "\n".join(lines) + "\n"
