"""Eigensolvers and the Fock-cutoff convergence controller."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .errors import DimensionTooLarge, NoConvergence, TruncationExhausted
from .model import ModelParams, SymmetricOperator, build_hamiltonian, validate_params

DENSE_CAP = 4096
RESIDUAL_TOL = 1e-9
# Absolute eigenvalue resolution is RESOLUTION_FACTOR * machine eps * ||H||.
RESOLUTION_FACTOR = 100.0
_TIE_RTOL = 1e-10


@dataclass(frozen=True)
class TruncationSpec:
    """Fock cutoff policy.

    ``n_start=None`` picks ``32 * ceil(1 / (1 - |g2|/g_t))`` per parameter
    point, since the cutoff needed grows as spectral collapse is approached.
    """

    n_start: int | None = None
    n_max: int = 2048
    growth: float = 1.5
    rtol: float = 1e-8

    def __post_init__(self):
        if self.n_start is not None and self.n_start < 4:
            raise ValueError(f"n_start must be >= 4, got {self.n_start}")
        if self.n_max < max(4, self.n_start or 4):
            raise ValueError(f"n_max={self.n_max} must be >= max(4, n_start)")
        if not self.growth > 1.0:
            raise ValueError(f"growth must exceed 1, got {self.growth}")
        if not self.rtol > 0.0:
            raise ValueError(f"rtol must be positive, got {self.rtol}")

    def start_for(self, p: ModelParams) -> int:
        if self.n_start is not None:
            return self.n_start
        ratio = abs(p.g2) / p.g_t
        # slack keeps ratios like 0.75000000000000011 from rounding up a whole step
        return int(min(self.n_max, 32 * math.ceil(1.0 / (1.0 - ratio) - 1e-9)))

    def next_cutoff(self, n_c: int) -> int:
        return int(min(self.n_max, max(n_c + 1, math.ceil(n_c * self.growth))))


@dataclass(frozen=True, eq=False)
class EigenSet:
    values: np.ndarray
    vectors: np.ndarray  # columns are eigenvectors
    n_c: int
    resolution: float = 0.0

    @property
    def ground(self) -> np.ndarray:
        return self.vectors[:, 0]

    @property
    def gap(self) -> float:
        return float(self.values[1] - self.values[0])


class Round(NamedTuple):
    n_c: int
    e0: float
    gap: float


@dataclass(frozen=True, eq=False)
class ConvergedGround:
    params: ModelParams
    eigen: EigenSet
    n_c_final: int
    converged: bool
    history: list[Round] = field(default_factory=list)

    @property
    def e0(self) -> float:
        return float(self.eigen.values[0])

    @property
    def gap(self) -> float:
        return self.eigen.gap


def solver_resolution(H: SymmetricOperator) -> float:
    """Absolute accuracy to which eigenvalues of ``H`` are trusted."""
    return RESOLUTION_FACTOR * np.finfo(float).eps * max(H.norm_scale(), 1e-300)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry positive.

    Magnitudes within a relative 1e-10 count as tied; the lowest index wins.
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.ndim == 1:
        return fix_signs(vectors[:, None])[:, 0]
    mags = np.abs(vectors)
    peak = mags.max(axis=0)
    pivot = np.argmax(mags >= peak * (1.0 - _TIE_RTOL), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _residuals(H: SymmetricOperator, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    res = np.empty(len(values))
    for j, (e, v) in enumerate(zip(values, vectors.T)):
        res[j] = np.linalg.norm(H.matvec(v) - e * v)
    return res


def _finish(H, values, vectors, what, diagnostics=None) -> EigenSet:
    order = np.argsort(values, kind="stable")
    values = np.asarray(values)[order]
    vectors = fix_signs(np.asarray(vectors)[:, order])
    res = _residuals(H, values, vectors)
    bound = RESIDUAL_TOL * max(H.norm_scale(), 1.0)
    if np.any(res > bound):
        raise NoConvergence(
            f"{what}: residual {res.max():.3e} exceeds {bound:.3e}",
            {"residuals": res.tolist(), **(diagnostics or {})},
        )
    return EigenSet(values, vectors, H.n_c, solver_resolution(H))


def eigs_full(H: SymmetricOperator, dense_cap: int = DENSE_CAP) -> EigenSet:
    """All eigenpairs by dense diagonalization."""
    if H.dim > dense_cap:
        raise DimensionTooLarge(f"dimension {H.dim} exceeds dense cap {dense_cap}")
    values, vectors = sla.eigh(H.to_dense(), driver="evd")
    return _finish(H, values, vectors, "dense eigh")


def _lanczos_start(dim: int) -> np.ndarray:
    # Deterministic, with overlap on every basis state.
    v0 = 1.0 + 0.5 * np.cos(np.arange(dim))
    return v0 / np.linalg.norm(v0)


def _to_general_band(H: SymmetricOperator, shift: float) -> np.ndarray:
    """Symmetric lower band storage -> ``solve_banded`` layout for H - shift."""
    w = H.bands.shape[0] - 1
    d = H.dim
    ab = np.zeros((2 * w + 1, d))
    ab[w] = H.bands[0] - shift
    for k in range(1, w + 1):
        ab[w + k, : d - k] = H.bands[k, : d - k]
        ab[w - k, k:] = H.bands[k, : d - k]
    return ab


def _inverse_iteration(H: SymmetricOperator, values: np.ndarray, sweeps: int = 3) -> np.ndarray:
    """Eigenvectors for known eigenvalues, finished by a Rayleigh-Ritz step.

    Vectors are orthogonalized against the ones already found, so a cluster
    of near-degenerate values still yields an orthonormal basis of its span.
    """
    w = H.bands.shape[0] - 1
    resolution = solver_resolution(H)
    vectors = np.empty((H.dim, len(values)))
    for j, value in enumerate(values):
        shift = value - resolution
        x = _lanczos_start(H.dim)
        for _ in range(sweeps):
            x = sla.solve_banded((w, w), _to_general_band(H, shift), x, check_finite=False)
            x -= vectors[:, :j] @ (vectors[:, :j].T @ x)
            x /= np.linalg.norm(x)
        vectors[:, j] = x
    basis, _ = np.linalg.qr(vectors)
    projected = basis.T @ np.column_stack([H.matvec(b) for b in basis.T])
    _, rotation = np.linalg.eigh(0.5 * (projected + projected.T))
    return basis @ rotation


def eigs_lowest(H: SymmetricOperator, k: int = 2, method: str = "banded") -> EigenSet:
    """Lowest ``k`` eigenpairs.

    ``method="banded"`` takes eigenvalues from LAPACK's band bisection and
    eigenvectors from shifted inverse iteration on the band LU factors;
    ``"lanczos"`` uses implicitly restarted Lanczos (ARPACK) on the sparse
    matrix.
    """
    if not 1 <= k <= H.dim // 4:
        raise ValueError(f"need 1 <= k <= dim/4 = {H.dim // 4}, got k={k}")
    if method == "banded":
        values = sla.eigvals_banded(H.bands, lower=True, select="i", select_range=(0, k - 1))
        vectors = _inverse_iteration(H, values)
        return _finish(H, values, vectors, "band solver")
    if method == "lanczos":
        ncv = min(H.dim, max(2 * k + 1, 40))
        try:
            values, vectors = spla.eigsh(
                H.to_sparse(), k=k, which="SA", tol=1e-14, ncv=ncv,
                maxiter=100 * H.dim, v0=_lanczos_start(H.dim),
            )
        except spla.ArpackNoConvergence as exc:
            raise NoConvergence(
                f"Lanczos did not converge: {len(exc.eigenvalues)} of {k} pairs",
                {"converged_values": list(exc.eigenvalues), "ncv": ncv},
            ) from exc
        return _finish(H, values, vectors, "Lanczos", {"ncv": ncv})
    raise ValueError(f"unknown eigensolver method {method!r}")


def _rounds_agree(prev: Round, cur: Round, p: ModelParams, rtol: float, resolution: float) -> bool:
    d_e0 = abs(cur.e0 - prev.e0)
    d_gap = abs(cur.gap - prev.gap)
    e0_ok = d_e0 < rtol * max(abs(cur.e0), p.omega) or d_e0 <= resolution
    gap_ok = d_gap < rtol * max(cur.gap, 1e-14 * p.omega) or d_gap <= resolution
    return e0_ok and gap_ok


def converge_ground(
    p: ModelParams,
    t: TruncationSpec | None = None,
    k: int = 2,
    *,
    method: str = "banded",
    strict: bool = True,
) -> ConvergedGround:
    """Grow the Fock cutoff until E0 and the gap stop moving.

    Convergence is declared when two consecutive cutoffs agree on both E0
    and E1 - E0 to ``t.rtol`` (or to solver resolution for near-zero gaps).
    With ``strict=False`` an exhausted cutoff returns ``converged=False``
    instead of raising :class:`TruncationExhausted`.
    """
    validate_params(p)
    t = t or TruncationSpec()
    k = max(k, 2)
    n_c = max(t.start_for(p), 2 * k)
    history: list[Round] = []
    prev = None
    while True:
        H = build_hamiltonian(p, n_c)
        eigen = eigs_lowest(H, k, method=method)
        cur = Round(n_c, float(eigen.values[0]), max(eigen.gap, 0.0))
        history.append(cur)
        if prev is not None and _rounds_agree(prev, cur, p, t.rtol, eigen.resolution):
            return ConvergedGround(p, eigen, n_c, True, history)
        if n_c >= t.n_max:
            if strict:
                raise TruncationExhausted(
                    f"no convergence up to n_c={n_c} (rtol={t.rtol:g}) for {p}", history
                )
            return ConvergedGround(p, eigen, n_c, False, history)
        prev = cur
        n_c = t.next_cutoff(n_c)
