"""Error norms of a discrete solution and observed convergence rates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exact import ExactSolution
from .fem import FemSpace, _chunks, evaluate
from .mesh import element_layer_strip
from .quadrature import (
    composite_triangle_rule,
    graded_interval_rule,
    graded_triangle_rule,
    gauss_interval,
    hex_rule,
)

L2_OMEGA = "L2Omega"
FLUX_GAMMA = "FluxGamma"
L2_STRIP = "L2Strip"


@dataclass(frozen=True)
class QuadraturePolicy:
    """How an error integral is evaluated.

    ``degree`` is the base rule degree (triangles) or Gauss points per
    direction (hexahedra). ``subdivisions`` is the number of uniform red
    refinements per cell, and on cells touching the singular point the
    number of angular panel halvings of the collapsed rule. ``depth`` is the
    number of geometric radial levels toward the singular point.
    """

    degree: int
    subdivisions: int
    depth: int


def default_policy(space: FemSpace) -> QuadraturePolicy:
    if space.is_simplex:
        return QuadraturePolicy(2 * space.degree + 4, 2, 24)
    # smooth 3D solutions only: 5-point tensor Gauss per direction
    return QuadraturePolicy(5, 0, 0)


def oracle_policy(space: FemSpace) -> QuadraturePolicy:
    if space.is_simplex:
        return QuadraturePolicy(2 * space.degree + 4, 3, 40)
    return QuadraturePolicy(6, 0, 0)


@dataclass(frozen=True)
class ErrorReport:
    metric: str
    value: float
    policy: QuadraturePolicy

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"invalid error value {self.value}")


def _square_error_on_cells(space, uh, exact, cells, rule):
    x, vals, _, jxw = space.tabulate(cells, rule)
    d = x.shape[-1]
    hint = np.repeat(space.mesh.centroids[cells], x.shape[1], axis=0)
    u = exact.u(x.reshape(-1, d), hint).reshape(x.shape[:2])
    diff = u - evaluate(space, uh, cells, vals)
    return float(np.sum(diff * diff * jxw))


def l2_error(
    space: FemSpace,
    uh: np.ndarray,
    exact: ExactSolution,
    cells: np.ndarray | None = None,
    policy: QuadraturePolicy | None = None,
    metric: str = L2_OMEGA,
) -> ErrorReport:
    """||u - u_h|| in L2 over all cells or over the subset ``cells``."""
    policy = policy or default_policy(space)
    mesh = space.mesh
    cells = np.arange(mesh.n_cells) if cells is None else np.asarray(cells)
    special = np.array([], dtype=np.int64)
    x0 = exact.singular_point
    if space.is_simplex:
        rule = composite_triangle_rule(policy.degree, policy.subdivisions)
        if x0 is not None and policy.depth > 0:
            special = np.intersect1d(space.cells_touching(x0), cells)
    else:
        rule = hex_rule(policy.degree)
    regular = np.setdiff1d(cells, special)
    parts = []
    for idx in _chunks(len(regular), max(1, 2_000_000 // len(rule))):
        parts.append(_square_error_on_cells(space, uh, exact, regular[idx], rule))
    for c in special:
        r = graded_triangle_rule(
            policy.degree, space.to_reference(c, x0), policy.depth, policy.subdivisions
        )
        parts.append(_square_error_on_cells(space, uh, exact, np.array([c]), r))
    return ErrorReport(metric, math.sqrt(math.fsum(parts)), policy)


def strip_l2_error(space, uh, exact, policy=None) -> ErrorReport:
    """L2 error on the one-element boundary layer."""
    if space.mesh.dim != 2:
        raise NotImplementedError("strip error is implemented for 2D meshes")
    strip = element_layer_strip(space.mesh)
    return l2_error(space, uh, exact, strip, policy, metric=L2_STRIP)


_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def flux_error(
    space: FemSpace, uh: np.ndarray, exact: ExactSolution, points: int = 6, depth: int = 24
) -> ErrorReport:
    """||d_n u - d_n u_h|| in L2 of the boundary, traces taken from the adjacent cell."""
    if space.mesh.dim != 2:
        raise NotImplementedError("flux error is only implemented for 2D meshes")
    mesh = space.mesh
    bnd = mesh.boundary
    X = mesh.vertices
    x0 = exact.singular_point
    start = X[bnd.vertices[:, 0]]
    end = X[bnd.vertices[:, 1]]
    graded = np.zeros(len(bnd), dtype=bool)
    t0 = np.zeros(len(bnd))
    if x0 is not None:
        # parameter of the closest point on each edge
        d = end - start
        t = np.clip(np.einsum("ij,ij->i", x0 - start, d) / bnd.measures**2, 0.0, 1.0)
        dist = np.linalg.norm(start + t[:, None] * d - x0, axis=1)
        graded = dist <= 1e-12 * bnd.measures
        t0 = t
    total = []
    base = gauss_interval(points)
    groups = [(np.flatnonzero(~graded), None)] + [(np.array([i]), t0[i]) for i in np.flatnonzero(graded)]
    policy = QuadraturePolicy(2 * points - 1, 0, depth)
    for facets, target in groups:
        if len(facets) == 0:
            continue
        rule = base if target is None else graded_interval_rule(points, float(target), depth)
        t = rule.points[:, 0]
        cells = bnd.cells[facets]
        lf = bnd.local[facets]
        a = _REF_VERTS[lf]
        b = _REF_VERTS[(lf + 1) % 3]
        ref = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]  # (m, q, 2)
        phys = start[facets][:, None, :] + t[None, :, None] * (end - start)[facets][:, None, :]
        n = bnd.normals[facets]
        hint = np.repeat(mesh.centroids[cells], len(t), axis=0)
        gu = exact.grad(phys.reshape(-1, 2), hint).reshape(len(facets), len(t), 2)
        dn_u = np.einsum("mqd,md->mq", gu, n)
        dn_uh = np.empty_like(dn_u)
        for j, c in enumerate(cells):
            _, rg = space.basis(ref[j])
            Xc = X[mesh.cells[c]]
            J = np.stack([Xc[1] - Xc[0], Xc[2] - Xc[0]], axis=-1)
            G = rg @ np.linalg.inv(J)  # (q, n, 2) physical gradients
            grad_h = np.einsum("n,qnd->qd", uh[space.cell_dofs[c]], G)
            dn_uh[j] = grad_h @ n[j]
        w = rule.weights[None, :] * bnd.measures[facets][:, None]
        total.append(float(np.sum((dn_u - dn_uh) ** 2 * w)))
    return ErrorReport(FLUX_GAMMA, math.sqrt(math.fsum(total)), policy)


def observed_rates(errors: Sequence[float], dofs: Sequence[int] | None = None, dim: int = 2) -> list:
    """Rates between consecutive levels.

    2D: log2 of consecutive error ratios (h halves per level). 3D: the
    exponent with respect to N**(1/3), N the number of unknowns.
    """
    e = np.asarray(errors, dtype=float)
    if np.any(e <= 0):
        raise ValueError("errors must be positive")
    if dim == 2:
        return list(np.log2(e[:-1] / e[1:]))
    if dim != 3:
        raise ValueError("dim must be 2 or 3")
    if dofs is None or len(dofs) < len(e):
        raise ValueError("3D rates need a DOF count per error value")
    n = np.asarray(dofs[: len(e)], dtype=float)
    return list(np.log(e[:-1] / e[1:]) / np.log((n[1:] / n[:-1]) ** (1.0 / 3.0)))


def fitted_rate(h: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(h)."""
    slope, _ = np.polyfit(np.log(np.asarray(h)), np.log(np.asarray(errors)), 1)
    return float(slope)
