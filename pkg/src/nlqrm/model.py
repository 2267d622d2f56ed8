"""Biased nonlinear quantum Rabi Hamiltonian in a truncated Fock basis.

    H = omega a^dag a + (Omega/2) sigma_x + g1 sigma_z (a^dag + a)
        + g2 sigma_z (a^dag^2 + a^2) - eps sigma_z

The basis is |n> (x) |s> with s the sigma_z eigenbasis, flattened as
``index = 2*n + (0 if s is up else 1)``.  With this ordering every term
couples indices at most four apart, so operators are kept in LAPACK lower
band storage (5 rows).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.sparse as sp

from .errors import CollapseRegime, NonPositiveFrequency, UnsupportedParameter

ParameterId = Literal["g1_over_bigomega", "eps_over_bigomega"]

PARAMETER_ALIASES = {
    "g1_over_bigomega": "g1_over_bigomega",
    "g1": "g1_over_bigomega",
    "eps_over_bigomega": "eps_over_bigomega",
    "eps": "eps_over_bigomega",
}

BANDWIDTH = 4
SPIN_SIGNS = np.array([1.0, -1.0])


@dataclass(frozen=True)
class ModelParams:
    """The five energies of the Hamiltonian, in one arbitrary unit."""

    omega: float
    big_omega: float
    g1: float = 0.0
    g2: float = 0.0
    eps: float = 0.0

    @property
    def g_s(self) -> float:
        return math.sqrt(self.omega * self.big_omega) / 2.0

    @property
    def g_t(self) -> float:
        return self.omega / 2.0

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def validate_params(p: ModelParams) -> None:
    """Raise unless ``p`` describes a bounded-below Hamiltonian."""
    if not (p.omega > 0.0) or not (p.big_omega > 0.0):
        raise NonPositiveFrequency(
            f"omega and big_omega must be positive (omega={p.omega}, big_omega={p.big_omega})"
        )
    for name in ("g1", "g2", "eps"):
        if not math.isfinite(getattr(p, name)):
            raise NonPositiveFrequency(f"{name} must be finite")
    if abs(p.g2) >= p.g_t:
        raise CollapseRegime(
            f"|g2|={abs(p.g2):.6g} must stay below g_t=omega/2={p.g_t:.6g} (spectral collapse)"
        )


def canonical_parameter(which: str) -> ParameterId:
    try:
        return PARAMETER_ALIASES[which]  # type: ignore[return-value]
    except (KeyError, TypeError):
        raise UnsupportedParameter(
            f"unsupported parameter {which!r}; expected one of g1_over_bigomega, eps_over_bigomega"
        ) from None


def parameter_value(p: ModelParams, which: str) -> float:
    """Dimensionless lambda (g1/Omega or eps/Omega) for ``p``."""
    which = canonical_parameter(which)
    if which == "g1_over_bigomega":
        return p.g1 / p.big_omega
    return p.eps / p.big_omega


def with_parameter(p: ModelParams, which: str, lam: float) -> ModelParams:
    """Copy of ``p`` with lambda set to ``lam``; Omega is held fixed."""
    which = canonical_parameter(which)
    if which == "g1_over_bigomega":
        return p.replace(g1=lam * p.big_omega)
    return p.replace(eps=lam * p.big_omega)


@dataclass(frozen=True, eq=False)
class SymmetricOperator:
    """Real symmetric operator in lower band storage.

    ``bands[k, i]`` holds the entry at (i + k, i); columns past ``dim - k``
    are padding and always zero.
    """

    bands: np.ndarray

    @property
    def dim(self) -> int:
        return self.bands.shape[1]

    @property
    def n_c(self) -> int:
        return self.dim // 2

    def to_dense(self) -> np.ndarray:
        d = self.dim
        out = np.zeros((d, d))
        for k in range(self.bands.shape[0]):
            i = np.arange(d - k)
            out[i + k, i] = self.bands[k, : d - k]
            out[i, i + k] = self.bands[k, : d - k]
        return out

    def to_sparse(self) -> sp.csr_matrix:
        d = self.dim
        diags, offsets = [], []
        for k in range(self.bands.shape[0]):
            band = self.bands[k, : d - k]
            if k == 0:
                diags.append(band)
                offsets.append(0)
            elif np.any(band):
                diags += [band, band]
                offsets += [-k, k]
        return sp.diags(diags, offsets, shape=(d, d), format="csr")

    def matvec(self, v: np.ndarray) -> np.ndarray:
        d = self.dim
        out = self.bands[0] * v
        for k in range(1, self.bands.shape[0]):
            band = self.bands[k, : d - k]
            out[k:] += band * v[: d - k]
            out[: d - k] += band * v[k:]
        return out

    def norm_scale(self) -> float:
        """Max absolute row sum, an upper bound on the spectral norm."""
        d = self.dim
        rows = np.abs(self.bands[0]).copy()
        for k in range(1, self.bands.shape[0]):
            band = np.abs(self.bands[k, : d - k])
            rows[k:] += band
            rows[: d - k] += band
        return float(rows.max()) if d else 0.0

    def nnz(self) -> int:
        d = self.dim
        total = int(np.count_nonzero(self.bands[0]))
        for k in range(1, self.bands.shape[0]):
            total += 2 * int(np.count_nonzero(self.bands[k, : d - k]))
        return total


def _check_cutoff(n_c: int) -> int:
    n_c = int(n_c)
    if n_c < 2:
        raise ValueError(f"Fock cutoff must be >= 2, got {n_c}")
    return n_c


def _empty_bands(n_c: int) -> np.ndarray:
    return np.zeros((BANDWIDTH + 1, 2 * n_c))


def _fill_boson_bands(bands: np.ndarray, n_c: int, linear: float, quadratic: float) -> None:
    n = np.arange(n_c)
    for si, s in enumerate(SPIN_SIGNS):
        if linear:
            bands[2, 2 * n[:-1] + si] = s * linear * np.sqrt(n[:-1] + 1.0)
        if quadratic:
            m = n[:-2]
            bands[4, 2 * m + si] = s * quadratic * np.sqrt((m + 1.0) * (m + 2.0))


def build_hamiltonian(p: ModelParams, n_c: int) -> SymmetricOperator:
    validate_params(p)
    n_c = _check_cutoff(n_c)
    bands = _empty_bands(n_c)
    n = np.arange(n_c, dtype=float)
    bands[0] = (p.omega * n[:, None] - SPIN_SIGNS[None, :] * p.eps).ravel()
    bands[1, 0::2] = p.big_omega / 2.0
    _fill_boson_bands(bands, n_c, p.g1, p.g2)
    return SymmetricOperator(bands)


def build_generator(which: str, p: ModelParams, n_c: int) -> SymmetricOperator:
    """dH/dlambda for lambda = g1/Omega or lambda = eps/Omega."""
    which = canonical_parameter(which)
    n_c = _check_cutoff(n_c)
    bands = _empty_bands(n_c)
    if which == "g1_over_bigomega":
        _fill_boson_bands(bands, n_c, p.big_omega, 0.0)
    else:
        bands[0] = np.tile(-p.big_omega * SPIN_SIGNS, n_c)
    return SymmetricOperator(bands)
