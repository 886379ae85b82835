"""Lagrange spaces (P1, P2 on triangles; Q1 on hexahedra), assembly and solve."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, TextIO

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import HEX_CORNERS, Mesh
from .quadrature import QuadratureRule, graded_triangle_rule, hex_rule, triangle_rule

FAMILIES = {"P1": (2, 1, 3), "P2": (2, 2, 6), "Q1": (3, 1, 8)}
CHUNK = 8192

# base quadrature degree for stiffness and load per family
_STIFFNESS_DEGREE = {"P1": 4, "P2": 6}
_HEX_POINTS = 3


class SolverError(RuntimeError):
    """CG did not reach the requested residual."""

    def __init__(self, iterations: int, residual: float, message: str = ""):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message or f"CG not converged after {iterations} iterations, relative residual {residual:.3e}")


# -- reference shape functions ----------------------------------------------

def tri_basis(degree: int, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values ``(q, n)`` and reference gradients ``(q, n, 2)`` at reference points."""
    xi, eta = pts[:, 0], pts[:, 1]
    l0, l1, l2 = 1.0 - xi - eta, xi, eta
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    if degree == 1:
        vals = np.stack([l0, l1, l2], axis=1)
        grads = np.broadcast_to(dl, (len(pts), 3, 2)).copy()
        return vals, grads
    if degree != 2:
        raise ValueError(f"unsupported triangle degree {degree}")
    lam = [l0, l1, l2]
    vals = [lam[i] * (2 * lam[i] - 1) for i in range(3)]
    grads = [(4 * lam[i] - 1)[:, None] * dl[i] for i in range(3)]
    for i, j in ((0, 1), (1, 2), (2, 0)):
        vals.append(4 * lam[i] * lam[j])
        grads.append(4 * (lam[j][:, None] * dl[i] + lam[i][:, None] * dl[j]))
    return np.stack(vals, axis=1), np.stack(grads, axis=1)


def hex_basis(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Trilinear values ``(q, 8)`` and reference gradients ``(q, 8, 3)`` on [0,1]^3."""
    f = np.stack([1.0 - pts, pts], axis=-1)  # (q, 3, 2)
    df = np.broadcast_to(np.array([-1.0, 1.0]), f.shape)
    c = HEX_CORNERS
    fx, fy, fz = f[:, 0, c[:, 0]], f[:, 1, c[:, 1]], f[:, 2, c[:, 2]]
    dx, dy, dz = df[:, 0, c[:, 0]], df[:, 1, c[:, 1]], df[:, 2, c[:, 2]]
    vals = fx * fy * fz
    grads = np.stack([dx * fy * fz, fx * dy * fz, fx * fy * dz], axis=-1)
    return vals, grads


def hex_geometry(x: np.ndarray, pts: np.ndarray):
    """Trilinear map of cells ``x`` (m, 8, 3) at reference points.

    Returns physical points (m, q, 3), Jacobian determinants (m, q) and
    inverse Jacobians (m, q, 3, 3).
    """
    vals, grads = hex_basis(pts)
    phys = np.einsum("qn,mnd->mqd", vals, x)
    J = np.einsum("qnj,mni->mqij", grads, x)
    det = np.linalg.det(J)
    return phys, det, np.linalg.inv(J)


# -- spaces --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FemSpace:
    mesh: Mesh
    family: str
    cell_dofs: np.ndarray
    dof_coords: np.ndarray
    dirichlet: np.ndarray
    dof_cell: np.ndarray

    @property
    def degree(self) -> int:
        return FAMILIES[self.family][1]

    @property
    def n_dofs(self) -> int:
        return len(self.dof_coords)

    @property
    def n_local(self) -> int:
        return self.cell_dofs.shape[1]

    @cached_property
    def free(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.dirichlet] = False
        return np.flatnonzero(mask)

    @property
    def is_simplex(self) -> bool:
        return self.family in ("P1", "P2")

    def basis(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.is_simplex:
            return tri_basis(self.degree, pts)
        return hex_basis(pts)

    def stiffness_rule(self) -> QuadratureRule:
        if self.is_simplex:
            return triangle_rule(_STIFFNESS_DEGREE[self.family])
        return hex_rule(_HEX_POINTS)

    def tabulate(self, cells: np.ndarray, rule: QuadratureRule):
        """Geometry and basis data on ``cells`` at the rule's reference points.

        Returns ``(x, vals, grads, jxw)``: physical points (m, q, d), basis values
        (q, n), physical gradients (m, q, n, d) and weights times |det J| (m, q).
        """
        vals, rgrads = self.basis(rule.points)
        X = self.mesh.vertices[self.mesh.cells[cells]]
        if self.is_simplex:
            v0 = X[:, 0]
            J = np.stack([X[:, 1] - v0, X[:, 2] - v0], axis=-1)  # (m, 2, 2), columns
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            Jinv = np.linalg.inv(J)
            x = v0[:, None, :] + np.einsum("mij,qj->mqi", J, rule.points)
            grads = np.einsum("qnj,mji->mqni", rgrads, Jinv)
            jxw = np.abs(det)[:, None] * rule.weights[None, :]
        else:
            x, det, Jinv = hex_geometry(X, rule.points)
            grads = np.einsum("qnj,mqji->mqni", rgrads, Jinv)
            jxw = np.abs(det) * rule.weights[None, :]
        return x, vals, grads, jxw

    def to_reference(self, cell: int, point: np.ndarray) -> np.ndarray:
        """Reference coordinates of a physical point w.r.t. an affine triangle."""
        X = self.mesh.vertices[self.mesh.cells[cell]]
        J = np.stack([X[1] - X[0], X[2] - X[0]], axis=-1)
        return np.linalg.solve(J, np.asarray(point, float) - X[0])

    def cells_touching(self, point: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Triangles whose closure contains ``point``."""
        X = self.mesh.vertices[self.mesh.cells]
        v0 = X[:, 0]
        J = np.stack([X[:, 1] - v0, X[:, 2] - v0], axis=-1)
        ref = np.linalg.solve(J, (np.asarray(point, float) - v0)[..., None])[..., 0]
        lam = np.column_stack([1 - ref.sum(axis=1), ref])
        return np.flatnonzero(np.all(lam >= -tol, axis=1))

    def hints(self, dofs: np.ndarray | None = None) -> np.ndarray:
        """A point inside one cell adjacent to each DOF (selects the slit bank)."""
        c = self.dof_cell if dofs is None else self.dof_cell[dofs]
        return self.mesh.centroids[c]


def build_space(mesh: Mesh, family: str) -> FemSpace:
    """Lagrange space on ``mesh``; DOFs are vertices, then edge midpoints for P2."""
    if family not in FAMILIES:
        raise ValueError(f"unknown element family {family!r}")
    dim = FAMILIES[family][0]
    if dim != mesh.dim:
        raise ValueError(f"{family} needs a {dim}D mesh, got {mesh.dim}D")
    bnd = mesh.boundary
    diri = mesh.boundary_vertex_mask.copy()
    coords = mesh.vertices
    cell_dofs = mesh.cells
    if family == "P2":
        edges, cell_edges = mesh.edges
        nv = mesh.n_vertices
        coords = np.concatenate([coords, 0.5 * (coords[edges[:, 0]] + coords[edges[:, 1]])])
        cell_dofs = np.concatenate([mesh.cells, nv + cell_edges], axis=1)
        edge_diri = np.zeros(len(edges), dtype=bool)
        edge_diri[cell_edges[bnd.cells, bnd.local]] = True
        diri = np.concatenate([diri, edge_diri])
    dof_cell = np.empty(len(coords), dtype=np.int64)
    dof_cell[cell_dofs.ravel()] = np.repeat(np.arange(mesh.n_cells), cell_dofs.shape[1])
    return FemSpace(mesh, family, cell_dofs, coords, np.flatnonzero(diri), dof_cell)


def interpolate(space: FemSpace, func: Callable) -> np.ndarray:
    """Nodal interpolant; ``func(x, hint)`` is evaluated with bank hints."""
    return np.asarray(func(space.dof_coords, space.hints()), dtype=float)


def evaluate(space: FemSpace, uh: np.ndarray, cells: np.ndarray, vals, grads=None):
    """Discrete function values (m, q) and optionally gradients (m, q, d) on ``cells``."""
    loc = uh[space.cell_dofs[cells]]
    v = loc @ vals.T
    if grads is None:
        return v
    return v, np.einsum("mn,mqnd->mqd", loc, grads)


# -- assembly -------------------------------------------------------------------

def _chunks(n: int, size: int = CHUNK):
    for start in range(0, n, size):
        yield np.arange(start, min(start + size, n))


def assemble_stiffness(
    space: FemSpace, coefficient: Callable | None = None, order: np.ndarray | None = None
) -> sp.csr_matrix:
    """Global matrix of a(u, v) = integral of A grad u . grad v.

    ``coefficient(x)`` returns (n, d, d) symmetric matrices; ``None`` is the
    identity. ``order`` permutes the cell traversal (used to check that the
    result does not depend on it).
    """
    nc = space.mesh.n_cells
    perm = np.arange(nc) if order is None else np.asarray(order)
    rule = space.stiffness_rule()
    rows, cols, data = [], [], []
    n = space.n_local
    for idx in _chunks(nc):
        cells = perm[idx]
        x, _, G, jxw = space.tabulate(cells, rule)
        if coefficient is None:
            Ke = np.einsum("mq,mqid,mqjd->mij", jxw, G, G)
        else:
            d = x.shape[-1]
            A = np.asarray(coefficient(x.reshape(-1, d)), dtype=float).reshape(*x.shape[:2], d, d)
            if not np.allclose(A, np.swapaxes(A, -1, -2), rtol=1e-12, atol=1e-14):
                raise ValueError("coefficient is not symmetric at quadrature points")
            Ke = np.einsum("mq,mqid,mqde,mqje->mij", jxw, G, A, G)
        dofs = space.cell_dofs[cells]
        rows.append(np.repeat(dofs, n, axis=1).ravel())
        cols.append(np.tile(dofs, (1, n)).ravel())
        data.append(Ke.ravel())
    N = space.n_dofs
    K = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    ).tocsr()
    K.sum_duplicates()
    K.sort_indices()
    return K


def _check_singular(point, exponent):
    if point is not None and (exponent is None or exponent <= 0):
        raise ValueError("a singular point needs a positive exponent")


def assemble_load(
    space: FemSpace,
    f: Callable,
    singular_point=None,
    exponent: float | None = None,
    depth: int = 24,
) -> np.ndarray:
    """Vector of integrals f * phi_i.

    ``f(x, hint)`` is evaluated at quadrature points. Cells whose closure
    contains ``singular_point`` use a collapsed rule graded toward it.
    """
    _check_singular(singular_point, exponent)
    rule = space.stiffness_rule()
    b = np.zeros(space.n_dofs)
    nc = space.mesh.n_cells
    special = np.array([], dtype=np.int64)
    if singular_point is not None:
        if not space.is_simplex:
            raise NotImplementedError("singular loads are only supported on triangles")
        special = space.cells_touching(singular_point)
    regular = np.setdiff1d(np.arange(nc), special)
    centroids = space.mesh.centroids
    for idx in _chunks(len(regular)):
        cells = regular[idx]
        x, vals, _, jxw = space.tabulate(cells, rule)
        d = x.shape[-1]
        hint = np.repeat(centroids[cells], x.shape[1], axis=0)
        fx = np.asarray(f(x.reshape(-1, d), hint)).reshape(x.shape[:2])
        be = np.einsum("mq,qn->mn", fx * jxw, vals)
        np.add.at(b, space.cell_dofs[cells], be)
    for c in special:
        r = graded_triangle_rule(rule.degree, space.to_reference(c, singular_point), depth, 2)
        x, vals, _, jxw = space.tabulate(np.array([c]), r)
        hint = np.repeat(centroids[[c]], x.shape[1], axis=0)
        fx = np.asarray(f(x.reshape(-1, 2), hint)).reshape(x.shape[:2])
        np.add.at(b, space.cell_dofs[c], (fx * jxw)[0] @ vals)
    return b


# -- boundary conditions and solve --------------------------------------------

@dataclass(frozen=True)
class ReducedSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    lift: np.ndarray

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        u = self.lift.copy()
        u[self.free] = x_free
        return u


def apply_dirichlet_nodal(
    K: sp.csr_matrix, b: np.ndarray, space: FemSpace, g: Callable
) -> ReducedSystem:
    """Eliminate Dirichlet DOFs with values g(nodal point), lifting them to the RHS."""
    diri = space.dirichlet
    lift = np.zeros(space.n_dofs)
    lift[diri] = np.asarray(g(space.dof_coords[diri], space.hints(diri)), dtype=float)
    free = space.free
    rhs = b[free] - K[free][:, diri] @ lift[diri]
    Kff = K[free][:, free].tocsr()
    return ReducedSystem(Kff, rhs, free, lift)


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    residual: float


def solve_cg(
    K: sp.spmatrix, b: np.ndarray, rel_tol: float = 1e-10, max_iter: int | None = None
) -> tuple[np.ndarray, SolveInfo]:
    """Jacobi-preconditioned conjugate gradients from a zero initial guess.

    Stops once the residual satisfies ||Kx - b|| <= rel_tol * ||b||; raises
    :class:`SolverError` with the final residual otherwise.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    n = K.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveInfo(0, 0.0)
    if max_iter is None:
        max_iter = max(10 * n, 100)
    M = sp.diags(1.0 / K.diagonal())
    count = [0]

    def tick(_):
        count[0] += 1

    x, info = spla.cg(K, b, rtol=rel_tol, atol=0.0, maxiter=max_iter, M=M, callback=tick)
    res = np.linalg.norm(K @ x - b) / bnorm
    if info != 0:
        raise SolverError(count[0], res)
    return x, SolveInfo(count[0], res)


def write_matrix(K: sp.spmatrix, out: TextIO) -> None:
    """Coordinate dump, one ``i j value`` line per stored entry (0-based)."""
    C = K.tocoo()
    for i, j, v in zip(C.row, C.col, C.data):
        out.write(f"{int(i)} {int(j)} {v:.17g}\n")
