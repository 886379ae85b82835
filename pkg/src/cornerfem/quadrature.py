"""Quadrature rules on the reference triangle, unit cube and unit interval.

Reference triangle: vertices (0,0), (1,0), (0,1), measure 1/2.
Reference cube: [0,1]^3, measure 1.
Reference interval: [0,1].

Composite rules (uniform red subdivision; a collapsed rule graded toward a
singular point) are built in reference coordinates so that shape functions can be evaluated
directly at the returned points.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Points in reference coordinates and weights summing to the reference measure."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self) -> int:
        return len(self.weights)


def _orbit3(a, w):
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)], [w] * 3


def _orbit6(a, b, w):
    c = 1.0 - a - b
    pts = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
    return pts, [w] * 6


# Dunavant symmetric rules; weights normalised to sum to one.
_DUNAVANT = {
    1: [("c", 1.0)],
    2: [("3", 1.0 / 6.0, 1.0 / 3.0)],
    4: [
        ("3", 0.445948490915965, 0.223381589678011),
        ("3", 0.091576213509771, 0.109951743655322),
    ],
    6: [
        ("3", 0.249286745170910, 0.116786275726379),
        ("3", 0.063089014491502, 0.050844906370207),
        ("6", 0.053145049844817, 0.310352451033784, 0.082851075618374),
    ],
    8: [
        ("c", 0.144315607677787),
        ("3", 0.459292588292723, 0.095091634267285),
        ("3", 0.170569307751760, 0.103217370534718),
        ("3", 0.050547228317031, 0.032458497623198),
        ("6", 0.008394777409958, 0.263112829634638, 0.027230314174435),
    ],
}


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Symmetric rule on the reference triangle exact for polynomials of ``degree``."""
    avail = sorted(_DUNAVANT)
    chosen = next((d for d in avail if d >= degree), None)
    if chosen is None:
        raise ValueError(f"no triangle rule of degree {degree}; max is {avail[-1]}")
    bary, wts = [], []
    for orbit in _DUNAVANT[chosen]:
        if orbit[0] == "c":
            bary.append((1 / 3, 1 / 3, 1 / 3))
            wts.append(orbit[1])
        elif orbit[0] == "3":
            p, w = _orbit3(*orbit[1:])
            bary += p
            wts += w
        else:
            p, w = _orbit6(*orbit[1:])
            bary += p
            wts += w
    bary = np.array(bary)
    wts = np.array(wts)
    # exact renormalisation; tabulated weights carry 15 digits
    wts = wts / wts.sum() * 0.5
    # reference coordinates (xi, eta) = (lambda_1, lambda_2)
    return QuadratureRule(bary[:, 1:].copy(), wts, chosen)


@lru_cache(maxsize=None)
def gauss_interval(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(0.5 * (x + 1.0)[:, None], 0.5 * w, 2 * n - 1)


@lru_cache(maxsize=None)
def hex_rule(n: int) -> QuadratureRule:
    """Tensor n x n x n Gauss rule on [0,1]^3, local index i + n*j + n*n*k."""
    g = gauss_interval(n)
    x = g.points[:, 0]
    w = g.weights
    k, j, i = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    pts = np.stack([x[i], x[j], x[k]], axis=1)
    return QuadratureRule(pts, w[i] * w[j] * w[k], 2 * n - 1)


_REF_TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def red_children(tri: np.ndarray) -> np.ndarray:
    """Split triangles ``(..., 3, 2)`` into their four midpoint children ``(..., 4, 3, 2)``.

    Child order: three corner children (at vertex 0, 1, 2), then the middle one.
    Orientation is preserved.
    """
    v0, v1, v2 = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    m01 = 0.5 * (v0 + v1)
    m12 = 0.5 * (v1 + v2)
    m20 = 0.5 * (v2 + v0)
    kids = [
        (v0, m01, m20),
        (m01, v1, m12),
        (m20, m12, v2),
        (m01, m12, m20),
    ]
    return np.stack([np.stack(k, axis=-2) for k in kids], axis=-3)


def _rule_on_subtriangles(base: QuadratureRule, subs: np.ndarray) -> QuadratureRule:
    # subs: (m, 3, 2) triangles inside the reference triangle
    a = subs[:, 0, :]
    J = np.stack([subs[:, 1, :] - a, subs[:, 2, :] - a], axis=-1)  # (m, 2, 2)
    det = np.abs(J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0])
    pts = a[:, None, :] + np.einsum("mij,qj->mqi", J, base.points)
    wts = det[:, None] * base.weights[None, :]
    return QuadratureRule(pts.reshape(-1, 2), wts.ravel(), base.degree)


@lru_cache(maxsize=None)
def composite_triangle_rule(degree: int, subdivisions: int) -> QuadratureRule:
    """Base rule of ``degree`` applied on each of the 4**subdivisions red subtriangles."""
    subs = _REF_TRI[None]
    for _ in range(subdivisions):
        subs = red_children(subs).reshape(-1, 3, 2)
    return _rule_on_subtriangles(triangle_rule(degree), subs)


def graded_triangle_rule(
    degree: int, target: np.ndarray, depth: int, subdivisions: int = 0
) -> QuadratureRule:
    """Rule on the reference triangle for integrands singular like |x - target|**beta.

    The triangle is split into sub-triangles with apex ``target``; each is the
    image of the unit square under the collapsing map
    (u, v) -> A + u (B - A) + u v (C - B), Jacobian 2|T| u. In u the rule is
    graded geometrically toward 0 (``depth`` halvings), in v it is Gauss on
    2**subdivisions panels (the angular factor has complex poles about 1/2
    away from [0, 1]). A homogeneous singularity is smooth on every u-panel,
    so the error keeps falling with depth; red grading toward the point
    stalls near 1e-4 relative because every level repeats the same error.
    """
    target = np.asarray(target, dtype=float)
    n = degree // 2 + 2
    g = gauss_interval(n)
    # u-panels [2^-(j+1), 2^-j] and a last one [0, 2^-depth]
    edges = np.concatenate([[0.0], 2.0 ** -np.arange(depth, -1, -1.0)])
    ln = edges[1:] - edges[:-1]
    u = (edges[:-1, None] + ln[:, None] * g.points[None, :, 0]).ravel()
    wu = (ln[:, None] * g.weights[None, :]).ravel()
    m = 2**subdivisions
    v = (np.arange(m)[:, None] / m + g.points[None, :, 0] / m).ravel()
    wv = np.tile(g.weights / m, m)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv) * U
    U, V, W = U.ravel(), V.ravel(), W.ravel()
    pts, wts = [], []
    for k in range(3):
        B, C = _REF_TRI[k], _REF_TRI[(k + 1) % 3]
        area2 = (B[0] - target[0]) * (C[1] - target[1]) - (B[1] - target[1]) * (C[0] - target[0])
        if area2 <= 1e-14:
            continue  # target on this edge: the sub-triangle is degenerate
        pts.append(target + U[:, None] * (B - target) + (U * V)[:, None] * (C - B))
        wts.append(area2 * W)
    return QuadratureRule(np.concatenate(pts), np.concatenate(wts), degree)


def graded_interval_rule(n: int, target: float, depth: int) -> QuadratureRule:
    """Gauss rule on [0,1] with subintervals halving geometrically toward ``target``."""
    g = gauss_interval(n)
    pieces = []
    if target > 0.0:
        pieces.append((0.0, target))
    if target < 1.0:
        pieces.append((target, 1.0))
    intervals = []
    for lo, hi in pieces:
        # grade toward the endpoint equal to target
        near, far = (hi, lo) if hi == target else (lo, hi)
        for _ in range(depth):
            mid = 0.5 * (near + far)
            intervals.append((mid, far))
            far = mid
        intervals.append((near, far))
    iv = np.array(intervals)
    lo = np.minimum(iv[:, 0], iv[:, 1])
    ln = np.abs(iv[:, 1] - iv[:, 0])
    pts = lo[:, None] + ln[:, None] * g.points[None, :, 0]
    wts = ln[:, None] * g.weights[None, :]
    return QuadratureRule(pts.reshape(-1, 1), wts.ravel(), g.degree)
