"""Dilation framework primitives.

A linear system ``x' = A x`` is split as ``A = -iH + K`` with Hermitian ``H``
and ``K``.  An ancilla triple ``(F, r, l)`` whose moments ``l F^k r`` all equal
one turns the system into ``-i(I (x) H) + F (x) K`` acting on ancilla (x)
system, which is unitary whenever ``F`` is skew.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

__all__ = [
    "FamilyTag",
    "HermitianSplit",
    "AncillaTriple",
    "MomentReport",
    "CostEstimate",
    "split_hermitian",
    "random_split",
    "moment_sequence",
    "verify_moments",
    "similarity_transform",
    "dilation_error",
    "query_complexity_estimate",
    "max_abs",
    "skew_residual",
]

ROUNDOFF = 1e-12
MAX_CONDITION = 1e12

MatrixLike = Union[np.ndarray, sp.spmatrix, sp.sparray]


class FamilyTag(str, enum.Enum):
    COMPACT = "compact-interval"
    SCHRODINGERIZATION = "schrodingerization"
    LCHS = "lchs"
    INTEGRAL_KERNEL = "integral-kernel"
    PSEUDODIFFERENTIAL = "pseudodifferential"
    DIFFERENCE = "difference"
    BARGMANN = "bargmann-fock"


def max_abs(X) -> float:
    """Largest entry modulus of a dense or sparse matrix (0 for empty)."""
    if sp.issparse(X):
        X = X.tocoo()
        return float(np.abs(X.data).max()) if X.nnz else 0.0
    X = np.asarray(X)
    return float(np.abs(X).max()) if X.size else 0.0


def skew_residual(F) -> float:
    """``max|F + F^H|``."""
    return max_abs(F + F.conj().T)


def _hermitian_defect(X) -> float:
    scale = max(max_abs(X), 1.0)
    return max_abs(X - X.conj().T) / scale


@dataclass(frozen=True)
class HermitianSplit:
    """Hermitian pair with ``A = -iH + K``.

    ``H`` and ``K`` are matrices (dense or sparse) or, for time-dependent
    problems, callables ``t -> matrix``.
    """

    H: Union[MatrixLike, Callable[[float], MatrixLike]]
    K: Union[MatrixLike, Callable[[float], MatrixLike]]
    time_dependent: bool = False

    def __post_init__(self):
        if self.time_dependent:
            for t in (0.0,):
                self._check(self.H_at(t), self.K_at(t))
        else:
            if callable(self.H) or callable(self.K):
                raise ValueError("callable coefficients need time_dependent=True")
            self._check(self.H, self.K)

    @staticmethod
    def _check(H, K):
        if H.shape != K.shape or H.shape[0] != H.shape[1]:
            raise ValueError(f"H {H.shape} and K {K.shape} must be equal square shapes")
        if _hermitian_defect(H) > ROUNDOFF:
            raise ValueError("H is not Hermitian")
        if _hermitian_defect(K) > ROUNDOFF:
            raise ValueError("K is not Hermitian")

    @property
    def dim(self) -> int:
        return self.H_at(0.0).shape[0]

    def H_at(self, t: float):
        return self.H(t) if self.time_dependent else self.H

    def K_at(self, t: float):
        return self.K(t) if self.time_dependent else self.K

    def A_at(self, t: float = 0.0):
        return -1j * self.H_at(t) + self.K_at(t)

    @property
    def Hmax(self) -> float:
        return _opnorm(self.H_at(0.0))

    @property
    def Kmax(self) -> float:
        return _opnorm(self.K_at(0.0))


def _opnorm(X) -> float:
    if sp.issparse(X):
        # Hermitian: the largest |eigenvalue| is the spectral norm
        from scipy.sparse.linalg import eigsh

        if X.shape[0] < 64:
            return float(np.linalg.norm(X.toarray(), 2))
        if X.nnz == 0:
            return 0.0
        vals = eigsh(X, k=1, which="LM", return_eigenvectors=False)
        return float(abs(vals[0]))
    return float(np.linalg.norm(np.asarray(X), 2))


def split_hermitian(A) -> HermitianSplit:
    """``H = i(A - A^H)/2``, ``K = (A + A^H)/2``."""
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if not sp.issparse(A):
        A = np.asarray(A, dtype=complex)
    Ah = A.conj().T
    H = 0.5j * (A - Ah)
    K = 0.5 * (A + Ah)
    return HermitianSplit(H, K)


def random_split(N: int, seed: int, Hnorm: float = 1.0, Kmax: float = 0.25,
                 dissipative: bool = True) -> HermitianSplit:
    """Random dense split with ``||H|| = Hnorm`` and ``||K|| = Kmax``.

    With ``dissipative`` the K part is ``-B B^H`` (negative semidefinite).
    """
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    H = (X + X.conj().T) / 2
    H *= Hnorm / np.linalg.norm(H, 2)
    Y = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    K = -(Y @ Y.conj().T) if dissipative else (Y + Y.conj().T) / 2
    K *= Kmax / np.linalg.norm(K, 2) if Kmax > 0 else 0.0
    return HermitianSplit(H, K)


@dataclass(frozen=True)
class AncillaTriple:
    """Discretized ``(F, r, l)``.

    ``l`` is stored so that ``l @ r == 1``; any raw pairing produced by the
    family's own normalization is kept in ``params['raw_pairing']``.
    """

    F: MatrixLike
    r: np.ndarray
    l: np.ndarray
    family_tag: FamilyTag
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.F.shape[0]
        if self.F.shape != (n, n) or self.r.shape != (n,) or self.l.shape != (n,):
            raise ValueError("F, r, l dimensions disagree")

    @property
    def ancilla_dim(self) -> int:
        return self.F.shape[0]

    def pairing(self) -> complex:
        return complex(self.l @ self.r)

    def skew_residual(self) -> float:
        return skew_residual(self.F)

    def relative_skew_residual(self) -> float:
        scale = max_abs(self.F)
        return self.skew_residual() / scale if scale else 0.0

    def diagnostics(self) -> dict:
        from .families import eigenrelation_residual

        return {
            "skew_residual": self.skew_residual(),
            "eigen_residual": eigenrelation_residual(self),
            "pairing_deviation": abs(self.pairing() - 1.0),
        }


def moment_sequence(t: AncillaTriple, k_max: int) -> np.ndarray:
    """``[l F^k r for k in 0..k_max]`` by repeated matvecs."""
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    v = t.r
    out = np.empty(k_max + 1, dtype=complex)
    for k in range(k_max + 1):
        if k:
            v = t.F @ v
        out[k] = t.l @ v
    return out


@dataclass(frozen=True)
class MomentReport:
    passed: bool
    max_deviation: float
    deviations: np.ndarray
    per_k: tuple
    tol: float


def verify_moments(t: AncillaTriple, k_max: int, tol: float) -> MomentReport:
    if not tol >= 0:
        raise ValueError("tol must be nonnegative")
    dev = np.abs(moment_sequence(t, k_max) - 1.0)
    worst = float(dev.max())
    return MomentReport(
        passed=bool(worst <= tol and tol > 0),
        max_deviation=worst,
        deviations=dev,
        per_k=tuple(bool(d <= tol) for d in dev),
        tol=tol,
    )


def similarity_transform(t: AncillaTriple, S) -> AncillaTriple:
    """``(S F S^-1, S r, l S^-1)``; rejects ``cond(S) > 1e12``."""
    S = np.asarray(S)
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise ValueError(f"S is singular or ill-conditioned (cond={cond:.3g})")
    F = t.F.toarray() if sp.issparse(t.F) else np.asarray(t.F)
    lu = np.linalg.solve
    F2 = lu(S.T, (S @ F).T).T  # S F S^-1
    l2 = lu(S.T, t.l)  # l S^-1
    params = dict(t.params, similarity_condition=float(cond))
    return AncillaTriple(F2, S @ t.r, l2, t.family_tag, params)


def dilation_error(split: HermitianSplit, t: AncillaTriple, T: float, x0, dt: float,
                   scheme: str = "rk4", reference=None) -> float:
    """``||x_ref(T) - (l (x) I) Psi(T)||`` with ``Psi(0) = r (x) x0``."""
    from .evolve import IntegratorConfig, evolve_dilated, readout, reference_solution, encode

    x0 = np.asarray(x0, dtype=complex)
    if abs(np.linalg.norm(x0) - 1.0) > 1e-12:
        raise ValueError("x0 must be a unit vector")
    if reference is None:
        reference = reference_solution(split, x0, T)
    state = evolve_dilated(encode(t.r, x0), split, t.F, T, IntegratorConfig(scheme, dt))
    return float(np.linalg.norm(reference - readout(state, t.l)))


@dataclass(frozen=True)
class CostEstimate:
    query_count_second_order: float
    query_count_high_order: float
    log_multiplier: float
    T: float
    Hmax: float
    Kmax: float
    eps: float
    norm_xT: float
    scheme: str = "second-order"

    @property
    def count(self) -> float:
        if self.scheme == "high-order":
            return self.query_count_high_order
        return self.query_count_second_order


def query_complexity_estimate(T: float, Hmax: float, Kmax: float, eps: float = 0.01,
                              norm_xT: float = 1.0, scheme: str = "second-order") -> CostEstimate:
    """Leading query counts, with logarithms kept as a separate multiplier.

    second order: ``T Hmax + T^1.5 Kmax / sqrt(eps)``
    high order:   ``T (Hmax + Kmax) / ||x(T)||``
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    if scheme not in ("second-order", "high-order"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if T <= 0 or Hmax < 0 or Kmax < 0 or norm_xT <= 0:
        raise ValueError("T and norm_xT must be positive, Hmax and Kmax nonnegative")
    second = T * Hmax + T ** 1.5 * Kmax / math.sqrt(eps)
    high = T * (Hmax + Kmax) / norm_xT
    logs = math.log(1 / eps) * max(1.0, math.log(T * Kmax) if T * Kmax > 0 else 1.0)
    return CostEstimate(second, high, logs, T, Hmax, Kmax, eps, norm_xT, scheme)
