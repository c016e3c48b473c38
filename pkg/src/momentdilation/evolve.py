"""Matrix-free evolution of the dilated system.

The joint state is an ``(M+1) x N`` array ``S`` (rows: ancilla nodes, columns:
system components).  The generator ``-i(I (x) H) + F (x) K`` acts as
``S -> -i S H^T + F S K^T`` and is never assembled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .core import AncillaTriple, HermitianSplit, max_abs
from .report import ExperimentReport

__all__ = [
    "DilatedState",
    "IntegratorConfig",
    "IntegrationInstability",
    "encode",
    "apply_dilated",
    "iter_dilated",
    "evolve_dilated",
    "readout",
    "reference_solution",
    "convergence_study",
    "rk4_step",
]

SCHEMES = ("rk4", "strang-trotter")


class IntegrationInstability(RuntimeError):
    pass


@dataclass
class DilatedState:
    S: np.ndarray
    t: float = 0.0
    norm_drift: float = 0.0
    steps: int = 0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.S))


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "rk4"
    dt: float = 1e-3
    drift_tol: float = 1e-6

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


def encode(r, x0) -> DilatedState:
    """Initial joint state ``r (x) x0``."""
    return DilatedState(np.outer(np.asarray(r, dtype=complex), np.asarray(x0, dtype=complex)))


def _right(S, X):
    """``S @ X^T`` for dense or sparse ``X``."""
    if sp.issparse(X):
        return (X @ S.T).T
    return S @ np.asarray(X).T


def apply_dilated(S, split: HermitianSplit, F, t: float = 0.0) -> np.ndarray:
    """Action of ``-i(I (x) H) + F (x) K`` on the joint state."""
    S = S.S if isinstance(S, DilatedState) else S
    H, K = split.H_at(t), split.K_at(t)
    if S.shape != (F.shape[0], H.shape[0]):
        raise ValueError(f"state {S.shape} incompatible with F {F.shape} and N={H.shape[0]}")
    out = -1j * _right(S, H)
    if max_abs(K):
        out += F @ _right(S, K)
    return out


def rk4_step(f: Callable, y, t: float, dt: float):
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _steps(T: float, dt: float) -> tuple[int, float]:
    n = max(1, math.ceil(T / dt - 1e-9))
    return n, T / n


class _TrotterStepper:
    """Symmetric splitting: half H step, full K step, half H step.

    The K step diagonalizes ``K = V diag(kappa) V^H`` and applies
    ``expm(dt kappa_j F)`` to column ``j`` of ``S conj(V)``.
    """

    def __init__(self, split: HermitianSplit, F, dt: float):
        self.split, self.dt = split, dt
        self.F = F.toarray() if sp.issparse(F) else np.asarray(F)
        self._cache = None if split.time_dependent else self._factors(0.0)

    def _factors(self, t):
        H = self.split.H_at(t)
        K = self.split.K_at(t)
        H = H.toarray() if sp.issparse(H) else np.asarray(H)
        K = K.toarray() if sp.issparse(K) else np.asarray(K)
        UhT = expm(-0.5j * self.dt * H).T
        kappa, V = np.linalg.eigh(K)
        props = [None if abs(k) < 1e-15 else expm(self.dt * k * self.F) for k in kappa]
        return UhT, V, props

    def __call__(self, S, t):
        UhT, V, props = self._cache or self._factors(t + self.dt / 2)
        S = S @ UhT
        Y = S @ V.conj()
        for j, P in enumerate(props):
            if P is not None:
                Y[:, j] = P @ Y[:, j]
        S = Y @ V.T
        return S @ UhT


def iter_dilated(S0, split: HermitianSplit, F, T: float,
                 config: IntegratorConfig = IntegratorConfig()) -> Iterator[DilatedState]:
    """Yield the state after every step (the initial state first)."""
    state = S0 if isinstance(S0, DilatedState) else DilatedState(np.asarray(S0, dtype=complex))
    S = np.array(state.S, dtype=complex)
    t = state.t
    norm0 = np.linalg.norm(S)
    yield DilatedState(S, t)
    if T == 0:
        return
    n, dt = _steps(T, config.dt)
    check = max_abs(F + F.conj().T) <= 1e-12 * max(max_abs(F), 1.0)
    if config.scheme == "rk4":
        rhs = lambda tt, y: apply_dilated(y, split, F, tt)
        step = lambda y, tt: rk4_step(rhs, y, tt, dt)
    else:
        step = _TrotterStepper(split, F, dt)
    for k in range(n):
        S = step(S, t)
        t = state.t + (k + 1) * dt
        drift = abs(np.linalg.norm(S) - norm0)
        if check and (drift > config.drift_tol or not np.isfinite(drift)):
            raise IntegrationInstability(
                f"norm drift {drift:.3e} exceeds {config.drift_tol:g} at t={t:.6g} (dt={dt:.3g})")
        yield DilatedState(S, t, drift, k + 1)


def evolve_dilated(S0, split: HermitianSplit, F, T: float,
                   config: IntegratorConfig = IntegratorConfig()) -> DilatedState:
    last = None
    for last in iter_dilated(S0, split, F, T, config):
        pass
    return last


def readout(S, l) -> np.ndarray:
    """``(l (x) I) Psi``."""
    S = S.S if isinstance(S, DilatedState) else S
    return np.asarray(l) @ S


def _rk4_solve(split, x0, T, dt):
    n, dt = _steps(T, dt)
    f = lambda t, y: split.A_at(t) @ y
    y = np.array(x0, dtype=complex)
    for k in range(n):
        y = rk4_step(f, y, k * dt, dt)
    return y


def reference_solution(split, x0, T: float, tol: float = 1e-10, method: str = "auto",
                       dt: Optional[float] = None) -> np.ndarray:
    """Physical solution ``x(T)`` of ``x' = A x``.

    ``split`` may be a :class:`HermitianSplit`, a matrix ``A`` or a callable
    ``A(t)``.  ``method`` is ``expm`` (time-independent dense), ``rk4`` with a
    fixed ``dt``, or ``auto``: expm when possible, otherwise rk4 with step
    halving until two successive results agree to ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not isinstance(split, HermitianSplit):
        A = split
        split = _ASplit(A)
    x0 = np.asarray(x0, dtype=complex)
    if T == 0:
        return x0.copy()
    if method == "auto":
        method = "expm" if not split.time_dependent and split.dim <= 512 and dt is None else "rk4"
    if method == "expm":
        A = split.A_at(0.0)
        A = A.toarray() if sp.issparse(A) else A
        return expm(A * T) @ x0
    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")
    if dt is not None:
        return _rk4_solve(split, x0, T, dt)
    dt = T / 64
    prev = _rk4_solve(split, x0, T, dt)
    for _ in range(20):
        dt /= 2
        cur = _rk4_solve(split, x0, T, dt)
        if np.linalg.norm(cur - prev) <= tol:
            return cur
        prev = cur
    raise IntegrationInstability("reference rk4 did not reach the requested tolerance")


class _ASplit:
    """Duck-typed stand-in for a split built from a raw generator."""

    def __init__(self, A):
        self.time_dependent = callable(A)
        self._A = A

    def A_at(self, t):
        return self._A(t) if self.time_dependent else self._A

    @property
    def dim(self):
        return self.A_at(0.0).shape[0]


def fit_orders(sizes: Sequence[float], errors: Sequence[float]) -> list:
    """``log(e_i / e_{i+1}) / log(M_{i+1} / M_i)``."""
    return [math.log(errors[i] / errors[i + 1]) / math.log(sizes[i + 1] / sizes[i])
            for i in range(len(errors) - 1)]


def convergence_study(split: HermitianSplit, triple_factory: Callable[[int], AncillaTriple],
                      M_list: Sequence[int], T: float, x0,
                      config: IntegratorConfig = IntegratorConfig(),
                      exact_floor: float = 1e-10) -> ExperimentReport:
    """Dilation error for every ``M`` and the fitted convergence orders."""
    M_list = list(M_list)
    if M_list != sorted(M_list):
        raise ValueError("M_list must be sorted ascending")
    x0 = np.asarray(x0, dtype=complex)
    from .core import dilation_error

    ref = reference_solution(split, x0, T)
    rows, errors = [], []
    for M in M_list:
        tri = triple_factory(M)
        err = dilation_error(split, tri, T, x0, config.dt, config.scheme, reference=ref)
        errors.append(err)
        rows.append({"M": M, "h": 1.0 / M, "error": err,
                     "theta": tri.params.get("theta", float("nan"))})
    exact = all(e <= exact_floor for e in errors)
    orders = [] if exact else fit_orders(M_list, errors)
    for row, o in zip(rows[1:], orders):
        row["order"] = o
    rep = ExperimentReport("convergence", {"T": T, "dt": config.dt, "scheme": config.scheme,
                                           "M_list": ",".join(map(str, M_list))})
    rep.add_table("errors", rows, ["M", "h", "theta", "error", "order"])
    rep.results["exact"] = exact
    rep.results["orders"] = ",".join(f"{o:.6g}" for o in orders)
    if orders:
        rep.results["min_order"] = min(orders)
        rep.results["max_order"] = max(orders)
    return rep
