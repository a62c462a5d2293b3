"""C0 finite element spaces and matrix assembly.

Builds the degree-p space with homogeneous Dirichlet elimination and
assembles the mass matrix M, the stiffness matrix K, the gradient-jump
penalty S, and the softened matrix K - eta*S. Assembly order is
deterministic, so repeated builds are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .coefficient import CoefficientField, parse_coefficient
from .mesh import Mesh
from .polyref import ReferenceBasis, cuboid_rule, gauss_legendre_rule, simplex_rule


class AssemblyError(RuntimeError):
    """Raised when a coefficient cannot be evaluated on an element."""


class SymMatrix:
    """Symmetric sparse matrix in canonical (sorted, merged) COO form."""

    def __init__(self, n, rows, cols, vals):
        self.n = n
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            key = rows * n + cols
            uniq, inv = np.unique(key, return_inverse=True)
            merged = np.zeros(len(uniq))
            np.add.at(merged, inv, vals)
            keep = merged != 0.0
            uniq, merged = uniq[keep], merged[keep]
            rows, cols, vals = uniq // n, uniq % n, merged
        self.rows, self.cols, self.vals = rows, cols, vals
        self._csr = None

    def tocsr(self):
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (self.vals, (self.rows, self.cols)), shape=(self.n, self.n)
            )
        return self._csr

    def toarray(self):
        return self.tocsr().toarray()

    def matvec(self, x):
        return self.tocsr() @ x

    def norm1(self):
        return sp.linalg.norm(self.tocsr(), 1) if len(self.vals) else 0.0

    def is_symmetric(self):
        c = self.tocsr()
        return (c != c.T).nnz == 0

    def __sub__(self, other):
        if not isinstance(other, SymMatrix) or other.n != self.n:
            raise ValueError("order mismatch")
        rows = np.concatenate([self.rows, other.rows])
        cols = np.concatenate([self.cols, other.cols])
        vals = np.concatenate([self.vals, -other.vals])
        return SymMatrix(self.n, rows, cols, vals)

    def scaled(self, alpha):
        return SymMatrix(self.n, self.rows, self.cols, alpha * self.vals)


@dataclass
class FeSpace:
    """Degree-p C0 space on a mesh with Dirichlet dofs eliminated.

    element_dofs maps local dofs to the full (pre-elimination) numbering;
    full_to_reduced is -1 on eliminated boundary dofs. node_coords holds
    the interpolation node of every full dof.
    """

    mesh: Mesh
    p: int
    basis: ReferenceBasis
    element_dofs: np.ndarray
    n_full: int
    full_to_reduced: np.ndarray
    reduced_to_full: np.ndarray
    node_coords: np.ndarray

    @property
    def ndof(self):
        return len(self.reduced_to_full)

    def interpolate(self, f):
        """Reduced coefficient vector of the nodal interpolant of f."""
        vals = f(self.node_coords)
        return np.asarray(vals, dtype=float)[self.reduced_to_full]

    def dof_map(self, reduced=True):
        if reduced:
            return self.full_to_reduced, self.ndof
        return np.arange(self.n_full), self.n_full


def build_space(mesh, p):
    """Build the C0 nodal space of degree p on a mesh."""
    if p < 1:
        raise ValueError("degree must be >= 1")
    if mesh.kind == "tensor":
        return _build_tensor_space(mesh, p)
    return _build_simplicial_space(mesh, p)


def _build_tensor_space(mesh, p):
    d = mesh.d
    basis = ReferenceBasis("interval" if d == 1 else "cuboid", p, d=d)
    axes = mesh.axes
    ref1 = basis.nodes[: p + 1, 0] if d == 1 else np.unique(basis.nodes[:, 0])
    axis_nodes = []
    for b in axes:
        nodes = []
        for e in range(len(b) - 1):
            mapped = b[e] + 0.5 * (ref1[:-1] + 1.0) * (b[e + 1] - b[e])
            nodes.extend(mapped.tolist())
        nodes.append(b[-1])
        axis_nodes.append(np.array(nodes))
    counts = [len(a) for a in axis_nodes]
    strides = [1]
    for c in counts[:-1]:
        strides.append(strides[-1] * c)
    n_full = int(np.prod(counts))

    cells = [len(b) - 1 for b in axes]
    ne = mesh.n_elements
    nloc = (p + 1) ** d
    element_dofs = np.empty((ne, nloc), dtype=np.int64)
    for e in range(ne):
        idx = e
        cell = []
        for ax in range(d):
            cell.append(idx % cells[ax])
            idx //= cells[ax]
        for m in range(nloc):
            rem = m
            gid = 0
            for ax in range(d):
                i = rem % (p + 1)
                rem //= p + 1
                gid += (cell[ax] * p + i) * strides[ax]
            element_dofs[e, m] = gid

    node_coords = np.empty((n_full, d))
    for gid in range(n_full):
        rem = gid
        for ax in range(d):
            node_coords[gid, ax] = axis_nodes[ax][rem % counts[ax]]
            rem //= counts[ax]

    boundary = np.zeros(n_full, dtype=bool)
    for gid in range(n_full):
        rem = gid
        for ax in range(d):
            i = rem % counts[ax]
            rem //= counts[ax]
            if i == 0 or i == counts[ax] - 1:
                boundary[gid] = True
                break
    return _finish_space(mesh, p, basis, element_dofs, n_full, boundary, node_coords)


def _build_simplicial_space(mesh, p):
    basis = ReferenceBasis("simplex", p, d=2)
    nv = len(mesh.vertices)
    edges = sorted(
        {
            tuple(sorted((int(el[a]), int(el[b]))))
            for el in mesh.elements
            for a, b in ((0, 1), (1, 2), (2, 0))
        }
    )
    edge_index = {e: k for k, e in enumerate(edges)}
    n_edge_dofs = p - 1
    n_interior = (p - 1) * (p - 2) // 2
    interior_base = nv + len(edges) * n_edge_dofs
    n_full = interior_base + mesh.n_elements * n_interior

    lattice = [(i, j) for j in range(p + 1) for i in range(p + 1 - j)]
    ne = mesh.n_elements
    element_dofs = np.empty((ne, basis.ndof), dtype=np.int64)
    node_coords = np.empty((n_full, 2))
    for e in range(ne):
        el = [int(v) for v in mesh.elements[e]]
        v0, v1, v2 = (mesh.vertices[v] for v in el)
        n_int_seen = 0
        for m, (i, j) in enumerate(lattice):
            if i == 0 and j == 0:
                gid = el[0]
            elif i == p and j == 0:
                gid = el[1]
            elif i == 0 and j == p:
                gid = el[2]
            elif j == 0:
                gid = _edge_dof(el[0], el[1], i, p, nv, edge_index, n_edge_dofs)
            elif i == 0:
                gid = _edge_dof(el[0], el[2], j, p, nv, edge_index, n_edge_dofs)
            elif i + j == p:
                gid = _edge_dof(el[1], el[2], j, p, nv, edge_index, n_edge_dofs)
            else:
                gid = interior_base + e * n_interior + n_int_seen
                n_int_seen += 1
            element_dofs[e, m] = gid
            node_coords[gid] = v0 + (i / p) * (v1 - v0) + (j / p) * (v2 - v0)

    boundary = np.zeros(n_full, dtype=bool)
    for key in mesh.boundary_faces():
        a, b = key
        boundary[a] = boundary[b] = True
        base = nv + edge_index[tuple(sorted((a, b)))] * n_edge_dofs
        boundary[base : base + n_edge_dofs] = True
    return _finish_space(mesh, p, basis, element_dofs, n_full, boundary, node_coords)


def _edge_dof(ga, gb, t, p, nv, edge_index, n_edge_dofs):
    # t is the lattice position measured from ga (1..p-1)
    key = (ga, gb) if ga < gb else (gb, ga)
    slot = (t - 1) if ga < gb else (p - 1 - t)
    return nv + edge_index[key] * n_edge_dofs + slot


def _finish_space(mesh, p, basis, element_dofs, n_full, boundary, node_coords):
    full_to_reduced = np.full(n_full, -1, dtype=np.int64)
    reduced_to_full = np.flatnonzero(~boundary)
    full_to_reduced[reduced_to_full] = np.arange(len(reduced_to_full))
    return FeSpace(
        mesh=mesh,
        p=p,
        basis=basis,
        element_dofs=element_dofs,
        n_full=n_full,
        full_to_reduced=full_to_reduced,
        reduced_to_full=reduced_to_full,
        node_coords=node_coords,
    )


# -- element geometry ------------------------------------------------------


def element_map(space, e):
    """Affine map data for element e.

    Returns (to_phys, to_ref, grad_scale, detj) where grad_scale transforms
    reference gradients (nq, nloc, d) to physical ones.
    """
    mesh = space.mesh
    verts = mesh.vertices[mesh.elements[e]]
    if mesh.kind == "tensor":
        lo, hi = verts.min(axis=0), verts.max(axis=0)
        span = hi - lo

        def to_phys(xi):
            return lo + 0.5 * (np.atleast_2d(xi) + 1.0) * span

        def to_ref(x):
            return 2.0 * (np.atleast_2d(x) - lo) / span - 1.0

        def grad_scale(g):
            return g * (2.0 / span)

        detj = float(np.prod(span)) / 2**mesh.d
    else:
        v0 = verts[0]
        B = np.column_stack([verts[1] - v0, verts[2] - v0])
        Binv = np.linalg.inv(B)

        def to_phys(xi):
            return v0 + np.atleast_2d(xi) @ B.T

        def to_ref(x):
            return (np.atleast_2d(x) - v0) @ Binv.T

        def grad_scale(g):
            return np.einsum("qld,de->qle", g, Binv)

        detj = float(np.linalg.det(B))
    return to_phys, to_ref, grad_scale, detj


def assembly_quadrature(space):
    """The reference quadrature used for element integrals."""
    p, mesh = space.p, space.mesh
    if mesh.kind == "tensor":
        return cuboid_rule(mesh.d, p + 2)
    return simplex_rule(2 * p + 2)


def _kappa_values(kappa, pts, e):
    vals = np.asarray(kappa(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise AssemblyError(f"coefficient evaluation failed on element {e}")
    return vals


def element_kappa_min(space, kappa):
    """Per-element minimum of kappa over the assembly quadrature nodes."""
    quad = assembly_quadrature(space)
    out = np.empty(space.mesh.n_elements)
    for e in range(space.mesh.n_elements):
        to_phys, _, _, _ = element_map(space, e)
        out[e] = _kappa_values(kappa, to_phys(quad.nodes), e).min()
    return out


def _assemble_cellwise(space, local_matrix, reduced=True):
    dof_map, n = space.dof_map(reduced)
    rows, cols, vals = [], [], []
    for e in range(space.mesh.n_elements):
        loc = local_matrix(e)
        loc = 0.5 * (loc + loc.T)  # exact symmetry
        gl = dof_map[space.element_dofs[e]]
        keep = gl >= 0
        idx = np.flatnonzero(keep)
        gk = gl[idx]
        rows.append(np.repeat(gk, len(gk)))
        cols.append(np.tile(gk, len(gk)))
        vals.append(loc[np.ix_(idx, idx)].ravel())
    return SymMatrix(
        n,
        np.concatenate(rows) if rows else [],
        np.concatenate(cols) if cols else [],
        np.concatenate(vals) if vals else [],
    )


def assemble_mass(space, reduced=True):
    """Mass matrix of the L2 inner product."""
    quad = assembly_quadrature(space)
    V, _ = space.basis.eval(quad.nodes)

    def local(e):
        _, _, _, detj = element_map(space, e)
        w = quad.weights * detj
        return (V * w[:, None]).T @ V

    return _assemble_cellwise(space, local, reduced)


def assemble_stiffness(space, kappa=None, reduced=True):
    """Stiffness matrix of (kappa grad v, grad w)."""
    kappa = kappa if kappa is not None else parse_coefficient("1")
    quad = assembly_quadrature(space)
    _, G = space.basis.eval(quad.nodes)

    def local(e):
        to_phys, _, grad_scale, detj = element_map(space, e)
        gp = grad_scale(G)
        kv = _kappa_values(kappa, to_phys(quad.nodes), e)
        w = quad.weights * detj * kv
        return np.einsum("q,qld,qmd->lm", w, gp, gp)

    return _assemble_cellwise(space, local, reduced)


def _face_quadrature(space, interface):
    """Physical quadrature points and weights on an interior face."""
    mesh, p = space.mesh, space.p
    verts = mesh.vertices[list(interface.vertex_ids)]
    if mesh.d == 1:
        return verts.reshape(1, 1), np.array([1.0])
    line = gauss_legendre_rule(p + 1)
    if mesh.d == 2:
        a, b = verts
        pts = a + 0.5 * (line.nodes[:, None] + 1.0) * (b - a)
        w = line.weights * (interface.measure / 2.0)
        return pts, w
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    span = hi - lo
    axes = [ax for ax in range(3) if span[ax] > 1e-14]
    t1, t2 = np.meshgrid(line.nodes, line.nodes, indexing="ij")
    pts = np.tile(lo, (t1.size, 1))
    pts[:, axes[0]] = lo[axes[0]] + 0.5 * (t1.ravel() + 1.0) * span[axes[0]]
    pts[:, axes[1]] = lo[axes[1]] + 0.5 * (t2.ravel() + 1.0) * span[axes[1]]
    w1, w2 = np.meshgrid(line.weights, line.weights, indexing="ij")
    w = w1.ravel() * w2.ravel() * (interface.measure / 4.0)
    return pts, w


def assemble_penalty(space, kappa=None, reduced=True, face_length=None):
    """Gradient-jump penalty matrix over interior interfaces.

    Each face contributes kappa_F * h_F * int_F [[grad v . n]] [[grad w . n]],
    with kappa_F the minimum of the two adjacent element minima of kappa.
    face_length, if given, replaces h_F by a constant for every face (some
    published 1D results use the mean element size instead of the local h_F).
    """
    kappa = kappa if kappa is not None else parse_coefficient("1")
    mesh = space.mesh
    kappa_tau = element_kappa_min(space, kappa)
    dof_map, n = space.dof_map(reduced)
    rows, cols, vals = [], [], []
    for interface in mesh.interfaces:
        e1, e2 = interface.elements
        pts, w = _face_quadrature(space, interface)
        nrm = interface.normal
        jump_cols = []
        dof_cols = []
        for e, sign in ((e1, 1.0), (e2, -1.0)):
            _, to_ref, grad_scale, _ = element_map(space, e)
            ref = np.clip(to_ref(pts), -1.0, 1.0) if mesh.kind == "tensor" else to_ref(pts)
            _, G = space.basis.eval(ref)
            gp = grad_scale(G)
            jump_cols.append(sign * np.einsum("qld,d->ql", gp, nrm))
            dof_cols.append(space.element_dofs[e])
        J = np.concatenate(jump_cols, axis=1)
        dofs = np.concatenate(dof_cols)
        kappa_f = min(kappa_tau[e1], kappa_tau[e2])
        h_f = interface.h_f if face_length is None else float(face_length)
        loc = kappa_f * h_f * (J * w[:, None]).T @ J
        loc = 0.5 * (loc + loc.T)
        gl = dof_map[dofs]
        idx = np.flatnonzero(gl >= 0)
        gk = gl[idx]
        rows.append(np.repeat(gk, len(gk)))
        cols.append(np.tile(gk, len(gk)))
        vals.append(loc[np.ix_(idx, idx)].ravel())
    return SymMatrix(
        n,
        np.concatenate(rows) if rows else [],
        np.concatenate(cols) if cols else [],
        np.concatenate(vals) if vals else [],
    )


def soften(K, S, eta):
    """The softened stiffness matrix K - eta * S."""
    if K.n != S.n:
        raise ValueError("order mismatch")
    if eta < 0:
        raise ValueError("softness parameter must be nonnegative")
    if eta == 0:
        return K
    return K - S.scaled(eta)


def softness_parameters(p, mesh_kind, d=None):
    """Coercivity limit and default value of the softness parameter."""
    if p < 1:
        raise ValueError("degree must be >= 1")
    if mesh_kind == "tensor":
        eta_max = 1.0 / (2 * p * (p + 1))
    elif mesh_kind == "simplicial":
        if d is None or d < 2:
            raise ValueError("simplicial meshes require d >= 2")
        eta_max = 1.0 / (2 * p * (p + d - 1))
    else:
        raise ValueError(f"unknown mesh kind {mesh_kind!r}")
    return {"eta_max": eta_max, "eta_default": 1.0 / (2 * (p + 1) * (p + 2))}
