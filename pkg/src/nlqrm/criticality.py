"""Critical couplings, closed-form phase boundaries and the QFI-peak locator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import BiasNeedsNonlinearity, CollapseRegime, NoInteriorPeak, NonPositiveFrequency
from .metrology import qfi_overlap, qfi_sum_rule
from .model import ModelParams, canonical_parameter, validate_params
from .spectra import TruncationSpec

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class CriticalScales(NamedTuple):
    g_s: float
    g_t: float


@dataclass(frozen=True)
class PeakResult:
    g_m: float
    qfi_max: float
    bracket: tuple[float, float]
    evaluations: int
    samples: list[tuple[float, float]] = field(default_factory=list, compare=False)


def critical_scales(omega: float, big_omega: float) -> CriticalScales:
    if not (omega > 0.0 and big_omega > 0.0):
        raise NonPositiveFrequency(f"omega={omega}, big_omega={big_omega} must be positive")
    return CriticalScales(math.sqrt(omega * big_omega) / 2.0, omega / 2.0)


def _squeeze_factor(g2: float, g_t: float) -> float:
    ratio = g2 / g_t
    if abs(ratio) >= 1.0:
        raise CollapseRegime(f"|g2|={abs(g2):.6g} must stay below g_t={g_t:.6g}")
    return math.sqrt(1.0 - ratio * ratio)


def critical_g1(omega: float, big_omega: float, g2: float, eps: float = 0.0) -> float:
    """Critical linear coupling.

    Unbiased: ``g_s sqrt(1 - g2^2/g_t^2)``; at g2 = 0 this is the
    second-order point g_s, which the finite-omega QFI peak lies above.
    Biased: ``g_s (1 + g_t eps / (g2 Omega)) sqrt(1 - g2^2/g_t^2)``.
    """
    g_s, g_t = critical_scales(omega, big_omega)
    root = _squeeze_factor(g2, g_t)
    if eps == 0.0:
        return g_s * root
    if g2 == 0.0:
        raise BiasNeedsNonlinearity("biased boundary is singular at g2 = 0")
    return g_s * (1.0 + g_t * eps / (g2 * big_omega)) * root


def critical_eps(omega: float, big_omega: float, g1: float, g2: float) -> float:
    """Critical bias ``(g2/g_t) [g1 / (g_s sqrt(1 - g2^2/g_t^2)) - 1] Omega``."""
    g_s, g_t = critical_scales(omega, big_omega)
    root = _squeeze_factor(g2, g_t)
    if g2 == 0.0:
        raise BiasNeedsNonlinearity("critical bias is undefined at g2 = 0")
    return (g2 / g_t) * (g1 / (g_s * root) - 1.0) * big_omega


def qfi_function(
    p: ModelParams,
    which: str = "g1_over_bigomega",
    t: TruncationSpec | None = None,
    method: str = "sum_rule",
) -> Callable[[float], float]:
    """QFI for parameter ``which`` as a function of g1, other entries fixed."""
    which = canonical_parameter(which)

    def f(g1: float) -> float:
        q = p.replace(g1=g1)
        if method == "sum_rule":
            return qfi_sum_rule(q, which, t, check_truncation=False).value
        if method == "overlap":
            return qfi_overlap(q, which, t=t).value
        raise ValueError(f"unknown QFI method {method!r}")

    return f


def locate_qfi_peak(
    p: ModelParams,
    which: str = "g1_over_bigomega",
    bracket: tuple[float, float] | None = None,
    xtol: float | None = None,
    t: TruncationSpec | None = None,
    *,
    n_grid: int = 32,
    method: str = "sum_rule",
    objective: Callable[[float], float] | None = None,
) -> PeakResult:
    """Coupling g1 at which the QFI is maximal.

    A coarse scan over ``bracket`` (default ``[0.3 g_s, 2 g_s]``) picks the
    best grid cell; golden-section search then refines the two cells around
    it until narrower than ``xtol`` (default ``1e-4 g_s``).
    """
    validate_params(p)
    lo, hi = bracket if bracket is not None else (0.3 * p.g_s, 2.0 * p.g_s)
    if not lo < hi:
        raise ValueError(f"bracket must satisfy lo < hi, got ({lo}, {hi})")
    xtol = xtol if xtol is not None else 1e-4 * p.g_s
    f = objective or qfi_function(p, which, t, method)
    cache: dict[float, float] = {}

    def value(x: float) -> float:
        if x not in cache:
            cache[x] = f(x)
        return cache[x]

    grid = np.linspace(lo, hi, n_grid)
    scan = [value(float(x)) for x in grid]
    best = int(np.argmax(scan))
    if best == 0 or best == n_grid - 1:
        raise NoInteriorPeak(
            f"QFI maximum at bracket edge g1={grid[best]:.6g} of ({lo:.6g}, {hi:.6g})"
        )
    a, b = float(grid[best - 1]), float(grid[best + 1])
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    while b - a > xtol:
        if value(c) >= value(d):
            b, d = d, c
            c = b - GOLDEN * (b - a)
        else:
            a, c = c, d
            d = a + GOLDEN * (b - a)
    inside = [x for x in cache if a <= x <= b] + [a, b]
    g_m = max(inside, key=value)
    samples = sorted(cache.items())
    return PeakResult(g_m, value(g_m), (a, b), len(cache), samples)

