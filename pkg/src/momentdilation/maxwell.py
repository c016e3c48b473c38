"""Two-dimensional Maxwell-type viscoelastic wave model on a periodic grid.

State layout is field-blocked ``[u1 | u2x | u2y | u3]``, each block an
``n x n`` field flattened row-major with ``y`` as the row index.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .core import HermitianSplit
from .evolve import IntegratorConfig, encode, evolve_dilated, readout, reference_solution
from .operators import compact_triple
from .report import ExperimentReport

__all__ = [
    "MaxwellModel",
    "periodic_difference",
    "build_maxwell",
    "maxwell_initial",
    "midline_pressure",
    "maxwell_reference",
    "run_maxwell_experiment",
]


@dataclass(frozen=True)
class MaxwellModel:
    n: int = 64
    Lx: float = 2.0
    Ly: float = 2.0
    K1: float = 1.0
    K2: float = 1.0
    rho: float = 1.0
    eta: float = 3.4

    @property
    def N(self) -> int:
        return 4 * self.n * self.n

    @property
    def dx(self) -> float:
        return self.Lx / self.n

    @property
    def dy(self) -> float:
        return self.Ly / self.n

    def split(self) -> HermitianSplit:
        return build_maxwell(self.n, self.Lx, self.Ly, self.K1, self.K2, self.rho, self.eta)


def periodic_difference(n: int, dx: float) -> sp.csr_matrix:
    """Centered periodic first difference; antisymmetric."""
    e = np.ones(n)
    D = sp.diags([e[:-1], -e[:-1]], [1, -1], shape=(n, n), format="lil")
    D[0, n - 1] = -1.0
    D[n - 1, 0] = 1.0
    return (D.tocsr() / (2 * dx)).tocsr()


def build_maxwell(n: int = 64, Lx: float = 2.0, Ly: float = 2.0, K1: float = 1.0,
                  K2: float = 1.0, rho: float = 1.0, eta: float = 3.4) -> HermitianSplit:
    """Sparse split with ``H = i A_H`` (wave part) and the per-node damping block ``K``."""
    if n < 8 or min(Lx, Ly, K1, K2, rho, eta) <= 0:
        raise ValueError("need n >= 8 and positive constants")
    I = sp.identity(n, format="csr")
    Gx = sp.kron(I, periodic_difference(n, Lx / n), format="csr")
    Gy = sp.kron(periodic_difference(n, Ly / n), I, format="csr")
    c = math.sqrt(K1 / rho)
    n2 = n * n
    Z = sp.csr_matrix((n2, n2))
    AH = sp.bmat([
        [None, c * Gx, c * Gy, None],
        [c * Gx, None, None, None],
        [c * Gy, None, None, None],
        [None, None, None, Z],
    ], format="csr")
    I2 = sp.identity(n2, format="csr")
    g = math.sqrt(K1 * K2) / eta
    K = sp.bmat([
        [-K1 / eta * I2, None, None, g * I2],
        [None, Z, None, None],
        [None, None, Z, None],
        [g * I2, None, None, -K2 / eta * I2],
    ], format="csr")
    H = (1j * AH).tocsr()
    return HermitianSplit(H, K.astype(complex))


def maxwell_initial(n: int = 64, sigma0: float = 0.05, Lx: float = 2.0, Ly: float = 2.0,
                    K1: float = 1.0, shift: tuple = (0, 0)) -> np.ndarray:
    """Strain = difference of two Gaussians, zero momentum and internal variable."""
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    x = np.arange(n) * Lx / n
    y = np.arange(n) * Ly / n
    X, Y = np.meshgrid(x, y)
    bump = lambda cx, cy: np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * sigma0 ** 2))
    eps = bump(0.5, 0.5) - bump(1.5, 1.5)
    eps = np.roll(eps, shift, axis=(0, 1))
    u = np.zeros(4 * n * n, dtype=complex)
    u[: n * n] = math.sqrt(K1) * eps.ravel()
    return u / np.linalg.norm(u)


def midline_pressure(u: np.ndarray, n: int, K1: float = 1.0) -> np.ndarray:
    """``-sqrt(K1) u1`` along the row ``y = Ly/2``."""
    return -math.sqrt(K1) * np.real(u[: n * n].reshape(n, n)[n // 2, :])


def run_maxwell_experiment(M_list: Sequence[int] = (10, 20, 40), theta: float = 2 / 9,
                           order: int = 2, T: float = 1.0, dt: float = 1e-3,
                           model: Optional[MaxwellModel] = None, sigma0: float = 0.05,
                           reference: Optional[np.ndarray] = None) -> ExperimentReport:
    """Dilated runs for each ``M`` compared with a fine-step rk4 reference.

    ``order`` 2 uses the second-order stencil, ``2m`` the order-``2m`` one.
    The reference uses ``dt/10``; pass ``reference`` to reuse one.
    """
    model = MaxwellModel() if model is None else model
    if order % 2 or order < 2:
        raise ValueError("order must be an even integer >= 2")
    if any(M % 2 for M in M_list):
        raise ValueError("every M must be even (evaluation node M/2)")
    split = model.split()
    u0 = maxwell_initial(model.n, sigma0, model.Lx, model.Ly, model.K1)
    Kmax = (model.K1 + model.K2) / model.eta
    cfl_ok = bool(theta * Kmax * T < 1 / (8 * math.e))
    if not cfl_ok:
        warnings.warn(f"theta={theta} violates theta*Kmax*T < 1/(8e) (Kmax={Kmax:.4g}, T={T})")
    if reference is None:
        reference = maxwell_reference(model, T, dt / 10, sigma0)
    p_ref = midline_pressure(reference, model.n, model.K1)
    x = np.arange(model.n) * model.dx
    errors, peak_rows, curve_rows = [], [], []
    for M in M_list:
        tri = compact_triple(M, theta, m=order // 2)
        st = evolve_dilated(encode(tri.r, u0), split, tri.F, T, IntegratorConfig("rk4", dt))
        err = np.abs(midline_pressure(readout(st, tri.l), model.n, model.K1) - p_ref)
        errors.append(float(err.max()))
        peak_rows.append({"M": M, "peak_error": float(err.max()), "norm_drift": st.norm_drift})
        curve_rows.extend({"M": M, "x": float(xi), "error": float(e)} for xi, e in zip(x, err))
    ratios = [errors[i] / errors[i + 1] if errors[i + 1] else float("inf")
              for i in range(len(errors) - 1)]
    orders = [math.log2(q) if 0 < q < float("inf") else float("nan") for q in ratios]
    for row, q, o in zip(peak_rows[1:], ratios, orders):
        row["ratio"], row["order"] = q, o
    rep = ExperimentReport("maxwell", {
        "n": model.n, "Lx": model.Lx, "Ly": model.Ly, "K1": model.K1, "K2": model.K2,
        "rho": model.rho, "eta": model.eta, "sigma0": sigma0, "theta": theta, "order": order,
        "T": T, "dt": dt, "reference_dt": dt / 10, "M_list": ",".join(map(str, M_list)),
    })
    rep.results["cfl_ok"] = cfl_ok
    for M, e in zip(M_list, errors):
        rep.results[f"peak_error_M{M}"] = e
    for i, (q, o) in enumerate(zip(ratios, orders)):
        rep.results[f"ratio_{M_list[i]}_{M_list[i + 1]}"] = q
        rep.results[f"order_{M_list[i]}_{M_list[i + 1]}"] = o
    rep.add_table("peak", peak_rows, ["M", "peak_error", "ratio", "order", "norm_drift"])
    rep.add_table("midline", curve_rows, ["M", "x", "error"])
    return rep


def maxwell_reference(model: Optional[MaxwellModel] = None, T: float = 1.0, dt: float = 1e-4,
                      sigma0: float = 0.05) -> np.ndarray:
    """Undilated solution at ``T`` by fixed-step rk4."""
    model = MaxwellModel() if model is None else model
    u0 = maxwell_initial(model.n, sigma0, model.Lx, model.Ly, model.K1)
    if T == 0:
        return u0
    return reference_solution(model.split(), u0, T, method="rk4", dt=dt)
