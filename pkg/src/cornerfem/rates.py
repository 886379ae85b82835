"""Predicted convergence rates for the L2, boundary-flux and strip errors."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import FLUX_GAMMA, L2_OMEGA, L2_STRIP
from .mesh import DomainKind, DomainTag

INF = math.inf


@dataclass(frozen=True)
class RatePrediction:
    """Predicted exponent ``tau`` of h for one error metric.

    ``epsilon`` marks predictions that hold for tau - eps, any eps > 0.
    ``log_factor`` marks a predicted |ln h| (or |ln h|^(1/2)) factor.
    """

    metric: str
    tau: float
    degree: int
    log_factor: bool = False
    active: str = ""
    epsilon: bool = False
    caveat: str = ""

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("predicted rate must be non-negative")
        if self.tau > self.cap + 1e-12:
            raise ValueError(f"predicted rate {self.tau} exceeds the cap {self.cap} for {self.metric}")

    @property
    def cap(self) -> float:
        return {L2_OMEGA: self.degree + 1.0, FLUX_GAMMA: float(self.degree), L2_STRIP: self.degree + 1.5}[
            self.metric
        ]

    def __str__(self) -> str:
        s = f"{self.tau:.4f}"
        if self.epsilon:
            s += " - eps"
        if self.log_factor:
            s += " (log)"
        return s


@dataclass(frozen=True)
class ShiftIndex:
    """Regularity gain s0 of the solution operator; ``None`` when not assigned."""

    value: float | None
    limiting: bool = False

    def __post_init__(self):
        if self.value is not None and not 0.0 < self.value <= 1.0:
            raise ValueError("s0 must lie in (0, 1]")


def singular_exponent(omega: float) -> float:
    """pi / omega for an interior angle omega."""
    if omega <= 0 or omega > 2 * math.pi + 1e-12:
        raise ValueError("interior angle must lie in (0, 2*pi]")
    return math.pi / omega


def shift_index(dom: DomainKind) -> ShiftIndex:
    if dom.tag is DomainTag.FicheraCube:
        return ShiftIndex(None)
    if not dom.corners:
        return ShiftIndex(1.0)
    s0 = min(singular_exponent(c.angle) for c in dom.corners)
    return ShiftIndex(s0, limiting=s0 <= 0.5)


def _pick(options: dict) -> tuple[float, str]:
    label = min(options, key=lambda k: options[k])
    return options[label], label


def predict_l2_global(k: int, s: float, s0: ShiftIndex | float | None) -> RatePrediction:
    """tau = min(k + 1, s - 1 + s0) for a solution in H^s."""
    if s < 1:
        raise ValueError("s must be at least 1")
    if isinstance(s0, ShiftIndex):
        limiting, s0 = s0.limiting, s0.value
    else:
        limiting = s0 is not None and s0 <= 0.5
    if s0 is None:
        if math.isfinite(s):
            raise ValueError("a finite regularity needs a numeric s0")
        # any s0 > 0 leaves the cap active for an analytic solution
        tau, label = float(k + 1), "k+1"
    else:
        tau, label = _pick({"k+1": float(k + 1), "s-1+s0": s - 1 + s0})
    caveat = "k = 1: a logarithmic factor may accompany the optimal rate" if k == 1 else ""
    if limiting:
        caveat = "; ".join(filter(None, [caveat, "s0 = 1/2 is a limiting case outside the theory"]))
    return RatePrediction(L2_OMEGA, tau, k, False, label, caveat=caveat)


def predict_l2_local(k: int, s: float, corners: Sequence[tuple[float, float]] = ()) -> RatePrediction:
    """tau = min(1 + k, s, min_j(-1 + alpha_j + s_j)) - eps.

    ``corners`` holds (alpha_j, s_j) per reentrant corner; s_j may be ``inf``.
    """
    options = {"k+1": float(k + 1), "s": float(s)}
    limiting = False
    for j, (alpha, sj) in enumerate(corners):
        if not 0.5 <= alpha < 1:
            raise ValueError("singular exponents must lie in [1/2, 1)")
        limiting |= alpha == 0.5
        options[f"corner{j}"] = -1.0 + alpha + sj
    tau, label = _pick(options)
    caveat = "alpha = 1/2 is a limiting case outside the theory" if limiting else ""
    return RatePrediction(L2_OMEGA, tau, k, False, label, epsilon=bool(corners), caveat=caveat)


def _check_offset(k: int, s: float):
    if not 0 <= s <= k:
        raise ValueError(f"regularity offset must lie in [0, {k}]")


def predict_flux(k: int, s: float | None = None) -> RatePrediction:
    """Boundary flux error: tau = s (s = k by default), log factor for k = 1."""
    s = float(k) if s is None else s
    _check_offset(k, s)
    return RatePrediction(FLUX_GAMMA, float(s), k, k == 1, "k" if s == k else "s")


def predict_strip(k: int, s: float | None = None) -> RatePrediction:
    """L2 error on the boundary strip: tau = s + 3/2, log factor for k = 1."""
    s = float(k) if s is None else s
    _check_offset(k, s)
    return RatePrediction(L2_STRIP, s + 1.5, k, k == 1, "k+3/2" if s == k else "s+3/2")
