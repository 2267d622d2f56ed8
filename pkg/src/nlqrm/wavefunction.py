"""Position-space spin components of the ground state."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooNarrow
from .spectra import ConvergedGround

NORM_TOL = 1e-6
# Weight fraction in psi_down counted as "essentially all" after the transition.
WEIGHT_TRANSFER_THRESHOLD = 0.9


@dataclass(frozen=True, eq=False)
class PositionWave:
    xs: np.ndarray
    psi_up: np.ndarray
    psi_down: np.ndarray
    x_s: float
    weight_up: float
    weight_down: float

    @property
    def total_weight(self) -> float:
        return self.weight_up + self.weight_down


def hermite_basis(n_max: int, x) -> np.ndarray:
    """Oscillator eigenfunctions phi_0 .. phi_{n_max-1} at ``x``.

    Row n holds phi_n.  Uses the normalized three-term recursion, so there
    is no factorial overflow; values underflow to zero far in the tails.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max,) + x.shape)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def _position_moments(coeffs: np.ndarray) -> list[tuple[float, float, float]]:
    """(weight, <x>, <x^2>) per spin column, with x = (a + a^dag)/sqrt(2)."""
    n = np.arange(coeffs.shape[0] - 1)
    raise_x = np.sqrt((n + 1) / 2.0)
    raise_x2 = np.sqrt((n[:-1] + 1) * (n[:-1] + 2)) / 2.0
    out = []
    for c in coeffs.T:
        weight = float(c @ c)
        mean = 2.0 * float(c[:-1] @ (raise_x * c[1:]))
        diag = (np.arange(coeffs.shape[0]) + 0.5) @ (c * c)
        second = float(diag + 2.0 * (c[:-2] @ (raise_x2 * c[2:])))
        out.append((weight, mean, second))
    return out


def default_grid(ground: ConvergedGround) -> tuple[float, float, int]:
    """Symmetric grid of at least [-4 x_s, 4 x_s] with 801 points.

    Widened, at the same spacing, to ten standard deviations past the mean
    of either spin component when the state reaches further out.
    """
    base = 4.0 * reference_position(ground)
    half = base
    for weight, mean, second in _position_moments(ground.eigen.ground.reshape(-1, 2)):
        if weight > 1e-14:
            mean /= weight
            std = math.sqrt(max(second / weight - mean * mean, 0.0))
            half = max(half, abs(mean) + 10.0 * std)
    n_points = 801 if half == base else 2 * math.ceil(400 * half / base) + 1
    return -half, half, n_points


def reference_position(ground: ConvergedGround) -> float:
    p = ground.params
    return math.sqrt(2.0) * p.g_s / p.omega


def position_wave(ground: ConvergedGround, grid: tuple[float, float, int] | None = None) -> PositionWave:
    """psi_s(x) = sum_n c_{n,s} phi_n(x) from the ground eigenvector.

    Raises :class:`GridTooNarrow` if the two component weights do not add up
    to one within 1e-6, i.e. the grid misses part of the state.
    """
    x_min, x_max, n_points = grid or default_grid(ground)
    xs = np.linspace(x_min, x_max, int(n_points))
    coeffs = ground.eigen.ground.reshape(-1, 2)
    phi = hermite_basis(coeffs.shape[0], xs)
    psi_up = coeffs[:, 0] @ phi
    psi_down = coeffs[:, 1] @ phi
    weight_up = float(np.trapezoid(psi_up**2, xs))
    weight_down = float(np.trapezoid(psi_down**2, xs))
    wave = PositionWave(xs, psi_up, psi_down, reference_position(ground), weight_up, weight_down)
    if abs(wave.total_weight - 1.0) > NORM_TOL:
        raise GridTooNarrow(
            f"grid [{x_min:.4g}, {x_max:.4g}] x {n_points} captures weight {wave.total_weight:.8f}"
        )
    return wave
