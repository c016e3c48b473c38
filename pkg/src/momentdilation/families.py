"""Ancilla triples for the non-compact families.

Every constructor returns an :class:`AncillaTriple` with ``r`` normalized and
``l`` rescaled so that ``l @ r == 1``; the pairing before rescaling is kept in
``params['raw_pairing']``.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from .core import AncillaTriple, FamilyTag, max_abs
from .operators import build_sbp

__all__ = [
    "schrodingerization_triple",
    "lchs_triple",
    "lchs_residue",
    "lchs_fourier_dual",
    "integral_kernel_triple",
    "integral_lambda",
    "solve_integral_a",
    "pseudodifferential_triple",
    "pseudodifferential_branch_check",
    "difference_triple",
    "eigenrelation_residual",
    "interpolation_covector",
]


def _finish(F, raw_r, raw_l, tag, params) -> AncillaTriple:
    C = float(np.linalg.norm(raw_r))
    r = raw_r / C
    raw_pairing = complex(raw_l @ raw_r)
    l = raw_l * C / raw_pairing
    if abs(raw_pairing.imag) < 1e-15 * abs(raw_pairing):
        raw_pairing = raw_pairing.real
    params = dict(params, raw_pairing=raw_pairing, C_norm=C)
    return AncillaTriple(F, r, l, tag, params)


def interpolation_covector(x: np.ndarray, x_star: float, npts: int = 4) -> np.ndarray:
    """Lagrange weights on the ``npts`` nodes nearest ``x_star``."""
    if not x[0] <= x_star <= x[-1]:
        raise ValueError(f"{x_star} lies outside the grid [{x[0]}, {x[-1]}]")
    l = np.zeros(len(x))
    j = int(np.argmin(np.abs(x - x_star)))
    if abs(x[j] - x_star) <= 1e-14 * max(1.0, abs(x_star)):
        l[j] = 1.0
        return l
    lo = min(max(int(np.searchsorted(x, x_star)) - npts // 2, 0), len(x) - npts)
    idx = np.arange(lo, lo + npts)
    for a in idx:
        others = idx[idx != a]
        l[a] = np.prod((x_star - x[others]) / (x[a] - x[others]))
    return l


def schrodingerization_triple(p_star: float = 1.0, M_p: int = 256, L: float = 20.0,
                              m: int = 1, evaluation: str = "point") -> AncillaTriple:
    """``F = -d/dp`` on ``(0, L)`` with ``r ~ exp(-p)``.

    ``evaluation='point'`` reads ``e^{p*} f(p*)``; ``'integral'`` reads the
    trapezoid integral of ``f`` over ``(0, L)``.  Rows and columns at both
    ends are removed, which makes ``F`` skew.
    """
    if not 0 < p_star < L:
        raise ValueError("need 0 < p_star < L")
    h = L / M_p
    sbp = build_sbp(m, M_p, h)
    sw = np.sqrt(sbp.w)
    F = -sw[:, None] * sbp.closed() / sw[None, :]
    F[[0, -1], :] = 0.0
    F[:, [0, -1]] = 0.0
    p = np.arange(M_p + 1) * h
    raw_r = np.exp(-p)
    if evaluation == "point":
        raw_l = math.exp(p_star) * interpolation_covector(p, p_star)
    elif evaluation == "integral":
        raw_l = sbp.w.copy()
    else:
        raise ValueError(f"unknown evaluation {evaluation!r}")
    params = {"p_star": p_star, "M_p": M_p, "L": L, "h": h, "m": m, "tail": math.exp(-L)}
    return _finish(F, raw_r, raw_l, FamilyTag.SCHRODINGERIZATION, params)


def _lchs_grid(M_k: int, K_extent: float):
    k = np.linspace(-K_extent / 2, K_extent / 2, M_k + 1)
    dk = k[1] - k[0]
    w = np.full(M_k + 1, dk)
    w[0] = w[-1] = dk / 2
    return k, w


def lchs_triple(M_k: int = 4096, K_extent: float = 2000.0) -> AncillaTriple:
    """``F = diag(ik)`` on ``k in [-K/2, K/2]``, ``r = 1/(k+i)``.

    The evaluation is the Lorentzian pairing ``l(k) = w_k / (pi (k - i))`` so
    that ``l r`` integrates ``1/(pi(1+k^2))``.
    """
    k, w = _lchs_grid(M_k, K_extent)
    F = sp.diags(1j * k).tocsr()
    raw_r = 1.0 / (k + 1j)
    raw_l = w / (np.pi * (k - 1j))
    params = {"M_k": M_k, "K_extent": K_extent, "dk": k[1] - k[0]}
    return _finish(F, raw_r, raw_l, FamilyTag.LCHS, params)


def lchs_residue(n: int, radius: float = 0.5, nodes: int = 256) -> complex:
    """Contour value of ``(1/2 pi i) \\oint (ik)^n / (k+i) dk`` around ``k = -i``."""
    phi = 2 * np.pi * np.arange(nodes) / nodes
    z = -1j + radius * np.exp(1j * phi)
    dz = 1j * radius * np.exp(1j * phi)
    vals = (1j * z) ** n / (z + 1j) * dz
    return complex(vals.mean() * 2 * np.pi / (2j * np.pi))


def lchs_fourier_dual(M_k: int, K_extent: float, p) -> tuple[np.ndarray, np.ndarray, float]:
    """Inverse transform of ``1/(k+i)`` against ``-i exp(-p) 1_{p>0}``.

    Returns ``(transform, expected, relative L2 error)``; the expected value
    at ``p = 0`` is the midpoint ``-i/2``.
    """
    p = np.asarray(p, dtype=float)
    k, w = _lchs_grid(M_k, K_extent)
    f = (np.exp(-1j * np.outer(p, k)) @ (w / (k + 1j))) / (2 * np.pi)
    expected = np.where(p > 0, -1j * np.exp(-np.maximum(p, 0)), 0.0)
    expected = np.where(p == 0, -0.5j, expected)
    err = float(np.linalg.norm(f - expected) / np.linalg.norm(expected))
    return f, expected, err


def integral_lambda(a, theta: float):
    """Eigenvalue of the kernel ``(p-q) exp(-theta |p-q|)`` on ``exp(a p)``."""
    a = np.asarray(a, dtype=float)
    return -4 * theta * a / (theta ** 2 - a ** 2) ** 2


def solve_integral_a(theta: float, scan: int = 4001) -> float:
    """Root ``a in (-theta, 0)`` of ``lambda_theta(a) = 1``.

    A dense scan first checks that ``lambda`` is monotone on the bracket so the
    root is unique.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    eps = 1e-9 * theta
    grid = np.linspace(-theta + eps, -eps, scan)
    lam = integral_lambda(grid, theta)
    if not np.all(np.diff(lam) < 0):
        raise ValueError("lambda is not monotone on (-theta, 0)")
    g = lambda a: float(integral_lambda(a, theta)) - 1.0
    if g(grid[0]) * g(grid[-1]) > 0:
        raise ValueError("no sign change on (-theta, 0)")
    return brentq(g, grid[0], grid[-1], xtol=1e-14, rtol=4 * np.finfo(float).eps)


def integral_kernel_triple(theta: float = 1.0, M_x: int = 1024, L: float = 60.0) -> AncillaTriple:
    """Nystrom discretization on ``[-L/2, L/2]`` with ``r ~ exp(a x)``.

    The trapezoid Nystrom matrix is antisymmetrized; the size of that
    correction is kept in ``params['antisym_correction']``.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    a = solve_integral_a(theta)
    x = np.linspace(-L / 2, L / 2, M_x + 1)
    dx = x[1] - x[0]
    w = np.full(M_x + 1, dx)
    w[0] = w[-1] = dx / 2
    d = x[:, None] - x[None, :]
    F = d * np.exp(-theta * np.abs(d)) * w[None, :]
    Fa = 0.5 * (F - F.T)
    params = {"theta": theta, "a": a, "M_x": M_x, "L": L, "antisym_correction": max_abs(F - Fa)}
    return _finish(Fa, np.exp(a * x), interpolation_covector(x, 0.0), FamilyTag.INTEGRAL_KERNEL,
                   params)


def pseudodifferential_branch_check(theta: float) -> dict:
    """Principal-branch check that ``-i (xi0^2)^theta = 1`` for ``xi0 = e^{i pi/(4 theta)}``."""
    if theta == 0:
        raise ValueError("theta must be nonzero")
    xi0 = np.exp(1j * np.pi / (4 * theta))
    sq = xi0 ** 2
    value = -1j * np.exp(theta * np.log(sq))
    return {"theta": theta, "xi0": complex(xi0), "xi0_sq": complex(sq),
            "symbol": complex(value), "residual": float(abs(value - 1)),
            "passed": bool(abs(value - 1) <= 1e-12)}


def pseudodifferential_triple(theta: float = 0.5, M_x: int = 128, L: float = 20.0):
    """Periodic Fourier multiplier ``-i (xi^2)^theta``.

    Returns ``(triple, report)``.  The encode vector is the sampled plane wave
    ``exp(i xi0 x)``, which grows exponentially, so only the analytic branch
    identity is checked (in ``report``); no numeric moment chain is claimed.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    dx = L / M_x
    x = -L / 2 + dx * np.arange(M_x)
    xi = 2 * np.pi * np.fft.fftfreq(M_x, dx)
    symbol = -1j * (xi ** 2) ** theta
    I = np.eye(M_x)
    F = np.fft.ifft(symbol[:, None] * np.fft.fft(I, axis=0), axis=0)
    report = pseudodifferential_branch_check(theta)
    report["symbol_real_part"] = float(np.abs(symbol.real).max())
    xi0 = report["xi0"]
    params = {"theta": theta, "M_x": M_x, "L": L, "xi0_re": xi0.real, "xi0_im": xi0.imag}
    tri = _finish(F, np.exp(1j * xi0 * x), interpolation_covector(x, 0.0),
                  FamilyTag.PSEUDODIFFERENTIAL, params)
    return tri, report


def difference_triple(theta: float = 1.0, N_seq: int = 200, evaluation: str = "e0") -> AncillaTriple:
    """Sequence family ``(F f)_n = theta (f_{n-1} - f_n)``, ``r_n = lambda^n``.

    Row 0 is ``(F f)_0 = f_0``, which leaves ``F`` unchanged on sequences with
    ``f_0 = 0`` and makes ``F r = r`` hold exactly.  ``F`` is lower bidiagonal,
    so the truncated chain is exact as well; it is not skew.
    """
    if theta <= 0 or N_seq < 8:
        raise ValueError("need theta > 0 and N_seq >= 8")
    lam = theta / (1 + theta)
    n = np.arange(N_seq)
    F = sp.diags([np.r_[1.0, np.full(N_seq - 1, -theta)], np.full(N_seq - 1, theta)], [0, -1],
                 format="csr")
    raw_l = np.zeros(N_seq)
    if evaluation == "e0":
        raw_l[0] = 1.0
    elif evaluation == "e1":
        raw_l[1] = 1.0 / lam
    else:
        raise ValueError(f"unknown evaluation {evaluation!r}")
    params = {"theta": theta, "N_seq": N_seq, "lambda": lam, "tail": lam ** N_seq}
    return _finish(F, lam ** n.astype(float), raw_l, FamilyTag.DIFFERENCE, params)


def eigenrelation_residual(t: AncillaTriple, nodes=None) -> float:
    """``||F r - r|| / ||r||``, optionally restricted to an index set or mask."""
    res = t.F @ t.r - t.r
    r = t.r
    if nodes is not None:
        res, r = res[nodes], r[nodes]
    return float(np.linalg.norm(res) / np.linalg.norm(r))
