"""Ground-state quantum Fisher information, the gap, and preparation time.

Two independent QFI routes are provided:

* :func:`qfi_overlap` - fidelity form, ``8 (1 - |<psi(l)|psi(l + d)>|) / d**2``
  averaged over both one-sided steps.
* :func:`qfi_sum_rule` - perturbative form,
  ``4 sum_{n>0} |<n|dH/dl|0>|**2 / (E_n - E_0)**2`` over the full spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .errors import DegenerateGround, QuadratureStalled
from .model import (
    ModelParams,
    build_generator,
    build_hamiltonian,
    canonical_parameter,
    parameter_value,
    validate_params,
    with_parameter,
)
from .spectra import ConvergedGround, EigenSet, TruncationSpec, converge_ground, eigs_full, eigs_lowest

DEFAULT_DELTA = 1e-4
DELTA_FLOOR = 1e-7
STEP_RTOL = 1e-3
DEGENERACY_FACTOR = 10.0
NEGATIVE_FLOOR = -1e-10
LAMBDA_QUANTUM = 1e-12


@dataclass(frozen=True)
class QfiEstimate:
    value: float
    lam: float
    method: str
    step: float | None
    n_c: int
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class PrepTimeResult:
    value: float
    lambda_start: float
    lambda_end: float
    quad_error: float
    evaluations: list[tuple[float, float]] = field(default_factory=list, compare=False)


def _clamp(value: float) -> float:
    if value < NEGATIVE_FLOOR:
        raise ArithmeticError(f"QFI came out negative ({value:.3e}) beyond the numerical floor")
    return max(value, 0.0)


def _require_gap(gap: float, resolution: float, where: str) -> None:
    if gap < DEGENERACY_FACTOR * resolution:
        raise DegenerateGround(
            f"gap {gap:.3e} below {DEGENERACY_FACTOR:g}x solver resolution {resolution:.3e} at {where}"
        )


def _ground_vector(p: ModelParams, n_c: int) -> np.ndarray:
    v = eigs_lowest(build_hamiltonian(p, n_c), 1).ground
    return v / np.linalg.norm(v)


def _infidelity(a: np.ndarray, b: np.ndarray) -> float:
    # 1 - |<a|b>| for unit vectors, without the cancellation of 1 - dot.
    s = 1.0 if a @ b >= 0.0 else -1.0
    diff = a - s * b
    return 0.5 * float(diff @ diff)


def qfi_overlap(
    p: ModelParams,
    which: str = "g1_over_bigomega",
    delta: float = DEFAULT_DELTA,
    t: TruncationSpec | None = None,
    *,
    delta_floor: float = DELTA_FLOOR,
    step_rtol: float = STEP_RTOL,
    ground: ConvergedGround | None = None,
) -> QfiEstimate:
    """QFI from ground-state overlaps at lambda +- delta.

    The step is halved until the estimates at ``h`` and ``h/2`` agree to
    ``step_rtol`` (``h`` starts at ``delta`` and never drops below
    ``delta_floor``); the ``h/2`` estimate is returned with ``step = h/2``.
    All ground states share the cutoff converged at lambda.
    """
    which = canonical_parameter(which)
    if not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    ground = ground or converge_ground(p, t)
    _require_gap(ground.gap, ground.eigen.resolution, f"{p}")
    n_c = ground.n_c_final
    lam = parameter_value(p, which)
    psi0 = ground.eigen.ground / np.linalg.norm(ground.eigen.ground)

    def estimate(d: float) -> float:
        total = 0.0
        for sign in (1.0, -1.0):
            q = with_parameter(p, which, lam + sign * d)
            validate_params(q)
            total += _infidelity(psi0, _ground_vector(q, n_c))
        return 4.0 * total / d**2

    step = float(delta)
    coarse = estimate(step)
    history = [(step, coarse)]
    while True:
        fine = estimate(step / 2.0)
        history.append((step / 2.0, fine))
        accepted = abs(coarse - fine) <= step_rtol * abs(fine) + 1e-12
        if accepted or step / 2.0 < delta_floor:
            break
        step /= 2.0
        coarse = fine
    diagnostics = {
        "richardson": (4.0 * fine - coarse) / 3.0,
        "pair": (coarse, fine),
        "step_accepted": accepted,
        "steps": history,
        "gap": ground.gap,
    }
    return QfiEstimate(_clamp(fine), lam, "overlap", step / 2.0, n_c, diagnostics)


def _sum_rule_at(p: ModelParams, which: str, n_c: int, full: EigenSet | None = None) -> tuple[float, EigenSet]:
    full = full or eigs_full(build_hamiltonian(p, n_c))
    _require_gap(full.gap, full.resolution, f"{p}")
    V = build_generator(which, p, n_c)
    elements = full.vectors.T @ V.matvec(full.ground)
    denominators = full.values[1:] - full.values[0]
    return 4.0 * float(np.sum(elements[1:] ** 2 / denominators**2)), full


def qfi_sum_rule(
    p: ModelParams,
    which: str = "g1_over_bigomega",
    t: TruncationSpec | None = None,
    *,
    ground: ConvergedGround | None = None,
    full: EigenSet | None = None,
    check_truncation: bool = True,
) -> QfiEstimate:
    """QFI from the full spectrum at the converged cutoff.

    ``full`` may carry a dense decomposition already computed at
    ``ground.n_c_final`` so several generators can share one solve.  With
    ``check_truncation`` the value is recomputed at the previous cutoff of
    the refinement history and the relative drift is reported.
    """
    which = canonical_parameter(which)
    ground = ground or converge_ground(p, t)
    _require_gap(ground.gap, ground.eigen.resolution, f"{p}")
    n_c = ground.n_c_final
    value, full = _sum_rule_at(p, which, n_c, full)
    diagnostics = {"gap": full.gap}
    if check_truncation and len(ground.history) >= 2:
        prev_n = ground.history[-2].n_c
        prev_value, _ = _sum_rule_at(p, which, prev_n)
        diagnostics["truncation_drift"] = abs(value - prev_value) / max(abs(value), 1e-300)
        diagnostics["previous_n_c"] = prev_n
    return QfiEstimate(_clamp(value), parameter_value(p, which), "sum_rule", None, n_c, diagnostics)


def gap(p: ModelParams, t: TruncationSpec | None = None) -> float:
    """E1 - E0 at the converged cutoff."""
    return converge_ground(p, t).gap


def prep_time(
    p: ModelParams,
    lambda_end: float,
    t: TruncationSpec | None = None,
    quad_rtol: float = 1e-6,
    *,
    max_intervals: int = 200,
) -> PrepTimeResult:
    """Adiabatic preparation-time lower bound, the integral of dl / gap(l).

    The path runs over lambda = g1/Omega from 0 to ``lambda_end`` with the
    other entries of ``p`` fixed (its own g1 is ignored).  Gaps are memoized
    per call on lambda quantized to 1e-12.
    """
    if lambda_end < 0.0:
        raise ValueError(f"lambda_end must be >= 0, got {lambda_end}")
    cache: dict[int, float] = {}

    def gap_at(lam: float) -> float:
        key = round(lam / LAMBDA_QUANTUM)
        if key not in cache:
            ground = converge_ground(with_parameter(p, "g1", key * LAMBDA_QUANTUM), t)
            if ground.gap < DEGENERACY_FACTOR * ground.eigen.resolution:
                raise QuadratureStalled(
                    f"gap {ground.gap:.3e} vanishes at lambda={lam:.6g} (critical slowing down)",
                    _trace(cache),
                )
            cache[key] = ground.gap
        return cache[key]

    if lambda_end == 0.0:
        return PrepTimeResult(0.0, 0.0, 0.0, 0.0, [])
    # Validate the endpoints up front; g1 never enters the validity condition.
    validate_params(with_parameter(p, "g1", lambda_end))
    try:
        value, error, _ = quadrature.integrate(
            lambda lam: 1.0 / gap_at(lam), 0.0, float(lambda_end), rtol=quad_rtol,
            max_intervals=max_intervals,
        )
    except QuadratureStalled as exc:
        raise QuadratureStalled(str(exc), _trace(cache)) from exc
    return PrepTimeResult(value, 0.0, float(lambda_end), error, _trace(cache))


def _trace(cache: dict[int, float]) -> list[tuple[float, float]]:
    return [(key * LAMBDA_QUANTUM, cache[key]) for key in sorted(cache)]
