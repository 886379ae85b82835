"""Coarse meshes of the benchmark domains and uniform red refinement.

Triangles are stored counter-clockwise. Hexahedra use tensor vertex order:
local vertex ``i + 2*j + 4*k`` sits at reference corner ``(i, j, k)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import TextIO

import numpy as np

COARSE_STEP = 0.5

# local facets: triangle edge i joins local vertices (i, i+1 mod 3)
TRI_FACETS = np.array([[0, 1], [1, 2], [2, 0]])
# hexahedron faces, tensor vertex order; orientation fixed afterwards
HEX_FACETS = np.array(
    [
        [0, 2, 4, 6],  # xi = 0
        [1, 3, 5, 7],  # xi = 1
        [0, 1, 4, 5],  # eta = 0
        [2, 3, 6, 7],  # eta = 1
        [0, 1, 2, 3],  # zeta = 0
        [4, 5, 6, 7],  # zeta = 1
    ]
)
HEX_CORNERS = np.array([[i, j, k] for k in (0, 1) for j in (0, 1) for i in (0, 1)])


class DomainTag(enum.Enum):
    UnitSquareCentered = "UnitSquareCentered"
    LShape = "LShape"
    Slit = "Slit"
    FicheraCube = "FicheraCube"


@dataclass(frozen=True)
class Corner:
    point: tuple
    angle: float


@dataclass(frozen=True)
class DomainKind:
    tag: DomainTag
    corners: tuple = ()
    nonconvex_edges: bool = False

    @property
    def dim(self) -> int:
        return 3 if self.tag is DomainTag.FicheraCube else 2

    @property
    def measure(self) -> float:
        return {
            DomainTag.UnitSquareCentered: 4.0,
            DomainTag.LShape: 3.0,
            DomainTag.Slit: 4.0,
            DomainTag.FicheraCube: 7.0,
        }[self.tag]

    @property
    def boundary_measure(self) -> float:
        return {
            DomainTag.UnitSquareCentered: 8.0,
            DomainTag.LShape: 8.0,
            DomainTag.Slit: 10.0,
            DomainTag.FicheraCube: 24.0,
        }[self.tag]

    def contains(self, x: np.ndarray) -> np.ndarray:
        """Open-set membership test for points ``(n, d)`` (slit points count as outside)."""
        x = np.atleast_2d(x)
        inside = np.all(np.abs(x) < 1.0, axis=1)
        if self.tag is DomainTag.LShape:
            inside &= ~((x[:, 0] >= 0) & (x[:, 1] <= 0))
        elif self.tag is DomainTag.Slit:
            inside &= ~((x[:, 0] >= 0) & (x[:, 1] == 0))
        elif self.tag is DomainTag.FicheraCube:
            inside &= ~np.all(x >= 0, axis=1)
        return inside


def domain(tag) -> DomainKind:
    """The DomainKind for a tag or tag name, with its reentrant-corner data."""
    tag = DomainTag(tag) if not isinstance(tag, DomainTag) else tag
    if tag is DomainTag.LShape:
        return DomainKind(tag, (Corner((0.0, 0.0), 1.5 * math.pi),))
    if tag is DomainTag.Slit:
        return DomainKind(tag, (Corner((0.0, 0.0), 2.0 * math.pi),))
    if tag is DomainTag.FicheraCube:
        return DomainKind(tag, (), nonconvex_edges=True)
    return DomainKind(tag)


@dataclass(frozen=True)
class BoundaryFacets:
    """Facets on the domain boundary; slit banks appear as separate facets."""

    cells: np.ndarray  # adjacent cell
    local: np.ndarray  # local facet index within the cell
    vertices: np.ndarray  # (nf, 2) edge or (nf, 4) face vertex indices
    normals: np.ndarray  # outward unit normals
    measures: np.ndarray

    def __len__(self) -> int:
        return len(self.cells)


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    cells: np.ndarray
    domain: DomainKind
    level: int = 0
    h0: float = COARSE_STEP

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def h(self) -> float:
        return self.h0 * 2.0 ** (-self.level)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def cell_measures(self) -> np.ndarray:
        return cell_measures(self)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique triangle edges ``(ne, 2)`` (sorted pairs) and per-cell edge ids ``(nc, 3)``."""
        if self.dim != 2:
            raise ValueError("edges are only tabulated for triangle meshes")
        e = np.sort(self.cells[:, TRI_FACETS], axis=2).reshape(-1, 2)
        uniq, inv = np.unique(e, axis=0, return_inverse=True)
        return uniq, inv.reshape(-1, 3)

    @cached_property
    def boundary(self) -> BoundaryFacets:
        return boundary_facets(self)

    @cached_property
    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary.vertices.ravel()] = True
        return mask


def _grid_cells_2d(keep) -> tuple[np.ndarray, np.ndarray]:
    n = int(round(2 / COARSE_STEP))
    xs = np.linspace(-1.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            centre = np.array([xs[i] + xs[i + 1], xs[j] + xs[j + 1]]) / 2
            if not keep(centre):
                continue
            ll, lr, ur, ul = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((ll, lr, ur))
            tris.append((ll, ur, ul))
    return verts, np.array(tris, dtype=np.int64)


def _compact(verts, cells):
    used = np.unique(cells)
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return verts[used], remap[cells]


def _on_slit(x: np.ndarray) -> np.ndarray:
    # slit (0,1) x {0} plus its outer end (1,0), where the two banks also carry different traces
    return (np.abs(x[:, 1]) < 1e-14) & (x[:, 0] > 1e-14)


def _split_slit(verts, cells, centroids):
    """Duplicate slit vertices so that cells below the slit use their own copies."""
    below = centroids[:, 1] < 0
    slit_v = np.flatnonzero(_on_slit(verts))
    copy = -np.ones(len(verts), dtype=np.int64)
    copy[slit_v] = len(verts) + np.arange(len(slit_v))
    cells = cells.copy()
    sub = cells[below]
    sub = np.where(copy[sub] >= 0, copy[sub], sub)
    cells[below] = sub
    return np.concatenate([verts, verts[slit_v]]), cells


def build_coarse_mesh(dom) -> Mesh:
    """Level-0 mesh with step 1/2 on the bounding box of ``dom``."""
    dom = dom if isinstance(dom, DomainKind) else domain(dom)
    tag = dom.tag
    if tag is DomainTag.FicheraCube:
        return _build_fichera(dom)
    if tag is DomainTag.LShape:
        verts, cells = _grid_cells_2d(lambda c: not (c[0] > 0 and c[1] < 0))
    else:
        verts, cells = _grid_cells_2d(lambda c: True)
    verts, cells = _compact(verts, cells)
    if tag is DomainTag.Slit:
        verts, cells = _split_slit(verts, cells, verts[cells].mean(axis=1))
    return Mesh(verts, cells, dom, 0)


def _build_fichera(dom: DomainKind) -> Mesh:
    n = int(round(2 / COARSE_STEP))
    xs = np.linspace(-1.0, 1.0, n + 1)
    Z, Y, X = np.meshgrid(xs, xs, xs, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def vid(i, j, k):
        return (k * (n + 1) + j) * (n + 1) + i

    hexes = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                centre = np.array([xs[i] + xs[i + 1], xs[j] + xs[j + 1], xs[k] + xs[k + 1]]) / 2
                if np.all(centre > 0):
                    continue
                hexes.append([vid(i + a, j + b, k + c) for a, b, c in HEX_CORNERS])
    verts, cells = _compact(verts, np.array(hexes, dtype=np.int64))
    return Mesh(verts, cells, dom, 0)


def refine_red(mesh: Mesh) -> Mesh:
    """Uniform refinement: 4 children per triangle, 8 per hexahedron."""
    if mesh.dim == 2:
        verts, cells = _refine_tri(mesh.vertices, mesh.cells)
    else:
        verts, cells = _refine_hex(mesh.vertices, mesh.cells)
    return Mesh(verts, cells, mesh.domain, mesh.level + 1, mesh.h0)


def _refine_tri(verts, cells):
    e = np.sort(cells[:, TRI_FACETS], axis=2).reshape(-1, 2)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.reshape(-1, 3)
    nv = len(verts)
    mids = 0.5 * (verts[uniq[:, 0]] + verts[uniq[:, 1]])
    m01, m12, m20 = (nv + inv[:, i] for i in range(3))
    v0, v1, v2 = cells[:, 0], cells[:, 1], cells[:, 2]
    kids = np.stack(
        [
            np.stack([v0, m01, m20], 1),
            np.stack([m01, v1, m12], 1),
            np.stack([m20, m12, v2], 1),
            np.stack([m01, m12, m20], 1),
        ],
        axis=1,
    ).reshape(-1, 3)
    return np.concatenate([verts, mids]), kids


def _refine_hex(verts, cells):
    nc = len(cells)
    # 3x3x3 lattice per cell; each lattice point is keyed by the sorted set of
    # parent vertices it averages (1 corner, 2 edge, 4 face or 8 cell vertices)
    lattice_ids = np.empty((nc, 3, 3, 3), dtype=np.int64)
    new_points = [verts]
    offset = len(verts)
    groups: dict[int, list] = {1: [], 2: [], 4: [], 8: []}
    for c in range(3):
        for b in range(3):
            for a in range(3):
                members = [
                    i + 2 * j + 4 * k
                    for k in ((0,) if c == 0 else (1,) if c == 2 else (0, 1))
                    for j in ((0,) if b == 0 else (1,) if b == 2 else (0, 1))
                    for i in ((0,) if a == 0 else (1,) if a == 2 else (0, 1))
                ]
                groups[len(members)].append(((a, b, c), members))
    for (a, b, c), members in groups[1]:
        lattice_ids[:, a, b, c] = cells[:, members[0]]
    for size in (2, 4, 8):
        if not groups[size]:
            continue
        keys = np.stack([np.sort(cells[:, m], axis=1) for _, m in groups[size]], axis=1)
        flat = keys.reshape(-1, size)
        uniq, inv = np.unique(flat, axis=0, return_inverse=True)
        new_points.append(verts[uniq].mean(axis=1))
        inv = inv.reshape(nc, len(groups[size])) + offset
        offset += len(uniq)
        for col, ((a, b, c), _) in enumerate(groups[size]):
            lattice_ids[:, a, b, c] = inv[:, col]
    kids = []
    for dc in (0, 1):
        for db in (0, 1):
            for da in (0, 1):
                kids.append(
                    np.stack(
                        [lattice_ids[:, da + i, db + j, dc + k] for i, j, k in HEX_CORNERS], axis=1
                    )
                )
    kids = np.stack(kids, axis=1).reshape(-1, 8)
    return np.concatenate(new_points), kids


def cell_measures(mesh: Mesh) -> np.ndarray:
    """Signed area (triangles) or volume (trilinear hexahedra)."""
    x = mesh.vertices[mesh.cells]
    if mesh.dim == 2:
        d1 = x[:, 1] - x[:, 0]
        d2 = x[:, 2] - x[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    from .quadrature import hex_rule
    from .fem import hex_geometry

    rule = hex_rule(2)
    _, det, _ = hex_geometry(x, rule.points)
    return det @ rule.weights


def boundary_facets(mesh: Mesh) -> BoundaryFacets:
    """Facets owned by exactly one cell, with outward unit normals."""
    local = TRI_FACETS if mesh.dim == 2 else HEX_FACETS
    nloc = len(local)
    fv = mesh.cells[:, local]  # (nc, nloc, nv_facet)
    keys = np.sort(fv, axis=2).reshape(nc_nl := mesh.n_cells * nloc, -1)
    _, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    on_bnd = counts[inv.ravel()] == 1
    idx = np.flatnonzero(on_bnd)
    cells = idx // nloc
    lf = idx % nloc
    verts = fv.reshape(nc_nl, -1)[idx]
    X = mesh.vertices
    if mesh.dim == 2:
        t = X[verts[:, 1]] - X[verts[:, 0]]
        length = np.hypot(t[:, 0], t[:, 1])
        normals = np.stack([t[:, 1], -t[:, 0]], axis=1) / length[:, None]
        measures = length
    else:
        p = X[verts]
        # face vertices in tensor order: 0-1-3-2 is the cyclic quad
        d1 = p[:, 3] - p[:, 0]
        d2 = p[:, 2] - p[:, 1]
        n = np.cross(d1, d2)
        norm = np.linalg.norm(n, axis=1)
        normals = n / norm[:, None]
        measures = 0.5 * norm
        outward = np.einsum("ij,ij->i", normals, p.mean(axis=1) - mesh.centroids[cells])
        normals = normals * np.sign(outward)[:, None]
    return BoundaryFacets(cells, lf, verts, normals, measures)


def element_layer_strip(mesh: Mesh) -> np.ndarray:
    """Indices of cells with at least one vertex on the boundary."""
    return np.flatnonzero(mesh.boundary_vertex_mask[mesh.cells].any(axis=1))


def refined(dom, level: int) -> Mesh:
    mesh = build_coarse_mesh(dom)
    for _ in range(level):
        mesh = refine_red(mesh)
    return mesh


def write_mesh(mesh: Mesh, out: TextIO) -> None:
    """Plain-text dump: header, vertices, cells, then boundary facets."""
    b = mesh.boundary
    out.write(f"{mesh.dim} {mesh.n_cells} {mesh.n_vertices}\n")
    for x in mesh.vertices:
        out.write(" ".join(f"{v:.17g}" for v in x) + "\n")
    for c in mesh.cells:
        out.write(" ".join(str(int(v)) for v in c) + "\n")
    for cell, lf, n in zip(b.cells, b.local, b.normals):
        out.write(f"{int(cell)} {int(lf)} " + " ".join(f"{v:.17g}" for v in n) + "\n")
