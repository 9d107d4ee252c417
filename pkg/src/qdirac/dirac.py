"""Weak Dirac operator of an immersed triangle mesh.

For piecewise linear spinors ``lam`` the operator
``D lam = -(df ^ dlam) / |df|^2`` is constant on every face.  With
opposite-edge vectors ``e_j = f_{j+2} - f_{j+1}`` one has
``int_T df ^ dlam = 1/2 sum_j e_j lam_j``, so

* the Galerkin stiffness block coupling test vertex ``a`` and trial vertex
  ``j`` of a face is ``-(1/6) M_L(e_j)``;
* the face value is ``(D lam)_T = -(1/(2 A_T)) sum_j e_j lam_j``.

The second map (vertex spinors to face values) gives the squared form
``Q = B^T W B`` of ``D`` that the spectral module uses to filter the
spurious modes of the first-order Galerkin pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateFace, ParseError
from .mesh import TriMesh, face_normals, mean_edge_length, vertex_normals
from .quat import as_quat, left_mul_matrix

__all__ = [
    "DiracSystem", "assemble", "apply", "symbol", "induced_cometric",
    "mean_curvature_halfdensity", "MeanCurvature", "cotan_weights",
    "mixed_voronoi_area",
    "read_potential_csv", "export_coo", "block_sparse",
]


@dataclass(frozen=True, eq=False)
class DiracSystem:
    """Assembled Dirac system of a mesh.

    Attributes
    ----------
    K : scipy.sparse.csr_matrix, shape (4n, 4n)
        Weak form of ``D - rho`` in 4x4 vertex blocks.
    M : ndarray, shape (4n,)
        Lumped vertex mass ``A_p`` repeated four times.
    B : scipy.sparse.csr_matrix, shape (4F, 4n)
        Face values of ``(D - rho) lam`` for piecewise linear ``lam``.
    W : ndarray, shape (4F,)
        Face areas repeated four times.
    mesh : TriMesh
    rho : ndarray, shape (F,)
        Face potential used.
    h : float
        Mean edge length.
    """

    K: sp.csr_matrix
    M: np.ndarray
    B: sp.csr_matrix
    W: np.ndarray
    mesh: TriMesh
    rho: np.ndarray
    h: float

    @property
    def n(self) -> int:
        return self.mesh.n_vertices

    @property
    def Q(self) -> sp.csr_matrix:
        """Squared form ``B^T W B`` of ``D - rho`` on vertex spinors."""
        return (self.B.T @ sp.diags(self.W) @ self.B).tocsr()


def block_sparse(row_blocks, col_blocks, blocks, shape):
    """Sparse matrix from lists of 4x4 blocks at block positions."""
    r4 = np.arange(4)
    rows = (4 * np.asarray(row_blocks))[:, None, None] + r4[None, :, None]
    cols = (4 * np.asarray(col_blocks))[:, None, None] + r4[None, None, :]
    blocks = np.asarray(blocks)
    rows = np.broadcast_to(rows, blocks.shape).ravel()
    cols = np.broadcast_to(cols, blocks.shape).ravel()
    return sp.csr_matrix((blocks.ravel(), (rows, cols)), shape=shape)


def _face_data(mesh: TriMesh):
    p = mesh.positions[mesh.faces]
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    area = 0.5 * np.linalg.norm(face_normals(mesh.positions, mesh.faces), axis=1)
    if np.any(area <= 0):
        raise DegenerateFace("zero-area face")
    return e, area


def assemble(mesh: TriMesh, rho=None) -> DiracSystem:
    """Assemble the weak Dirac system of ``mesh`` shifted by a face potential.

    Parameters
    ----------
    mesh : TriMesh
    rho : float or array_like of shape (F,), optional
        Face potential; subtracted with the lumped weight ``area/3``.

    Returns
    -------
    DiracSystem
    """
    faces = mesh.faces
    nf, n = len(faces), mesh.n_vertices
    e, area = _face_data(mesh)
    rho = np.broadcast_to(np.asarray(0.0 if rho is None else rho, dtype=float), (nf,)).copy()
    if not np.all(np.isfinite(rho)):
        raise ValueError("potential must be finite")
    L = left_mul_matrix(as_quat(e))                   # (F, 3, 4, 4)

    rb, cb, bl = [], [], []
    for a in range(3):
        for j in range(3):
            rb.append(faces[:, a])
            cb.append(faces[:, j])
            bl.append(-L[:, j] / 6.0)
    eye = np.eye(4)
    for a in range(3):
        rb.append(faces[:, a])
        cb.append(faces[:, a])
        bl.append(-(rho * area / 3.0)[:, None, None] * eye)
    K = block_sparse(np.concatenate(rb), np.concatenate(cb),
                     np.concatenate(bl), (4 * n, 4 * n))

    fidx = np.arange(nf)
    rb, cb, bl = [], [], []
    for j in range(3):
        rb.append(fidx)
        cb.append(faces[:, j])
        bl.append(-L[:, j] / (2.0 * area)[:, None, None]
                  - (rho / 3.0)[:, None, None] * eye)
    B = block_sparse(np.concatenate(rb), np.concatenate(cb),
                     np.concatenate(bl), (4 * nf, 4 * n))

    mass = np.zeros(n)
    np.add.at(mass, faces.ravel(), np.repeat(area / 3.0, 3))
    return DiracSystem(K, np.repeat(mass, 4), B, np.repeat(area, 4), mesh, rho,
                       mean_edge_length(mesh))


def apply(system: DiracSystem, lam):
    """Galerkin approximation ``M^{-1} K lam`` of ``(D - rho) lam``.

    ``lam`` may be given as ``(n, 4)`` or flat ``(4n,)``; the output has the
    same layout.
    """
    lam = np.asarray(lam, dtype=float)
    out = (system.K @ lam.reshape(-1)) / system.M
    return out.reshape(lam.shape)


def induced_cometric(mesh: TriMesh, face: int):
    """Inverse Gram matrix of the face chart ``(u, v) -> f0 + u e1 + v e2``."""
    p = mesh.positions[mesh.faces[face]]
    E = np.stack([p[1] - p[0], p[2] - p[0]], axis=1)
    G = E.T @ E
    if np.linalg.det(G) <= 1e-300:
        raise DegenerateFace(f"face {face} is degenerate")
    return np.linalg.inv(G)


def symbol(mesh: TriMesh, face: int, xi):
    """Principal symbol ``M_L(-(df ^ xi)/|df|^2)`` on one face.

    Parameters
    ----------
    mesh : TriMesh
    face : int
    xi : array_like, shape (2,)
        Covector ``xi_u du + xi_v dv`` in the chart ``f0 + u e1 + v e2``.

    Returns
    -------
    ndarray, shape (4, 4)
    """
    p = mesh.positions[mesh.faces[face]]
    e1, e2 = p[1] - p[0], p[2] - p[0]
    area2 = np.linalg.norm(np.cross(e1, e2))
    if area2 <= 1e-300:
        raise DegenerateFace(f"face {face} is degenerate")
    xu, xv = np.asarray(xi, dtype=float)
    q = -(e1 * xv - e2 * xu) / area2
    return left_mul_matrix(as_quat(q))


def cotan_weights(mesh: TriMesh):
    """Cotangent weights ``(cot a + cot b)/2`` on unique undirected edges.

    Returns
    -------
    edges : ndarray of int, shape (E, 2)
    weights : ndarray, shape (E,)
    """
    P = mesh.positions
    F = mesh.faces
    keys, vals = [], []
    for c in range(3):
        o, a, b = F[:, c], F[:, (c + 1) % 3], F[:, (c + 2) % 3]
        u, v = P[a] - P[o], P[b] - P[o]
        cr = np.linalg.norm(np.cross(u, v), axis=1)
        if np.any(cr <= 1e-300):
            raise DegenerateFace("zero cotangent denominator")
        keys.append(np.sort(np.stack([a, b], 1), axis=1))
        vals.append(0.5 * np.sum(u * v, axis=1) / cr)
    keys = np.concatenate(keys)
    vals = np.concatenate(vals)
    edges, inv = np.unique(keys, axis=0, return_inverse=True)
    w = np.zeros(len(edges))
    np.add.at(w, inv.reshape(-1), vals)
    return edges, w


def mixed_voronoi_area(mesh: TriMesh):
    """Mixed Voronoi vertex areas: circumcentric cells, with the usual
    half/quarter split of obtuse triangles."""
    P = mesh.positions
    F = mesh.faces
    p = P[F]
    area = 0.5 * np.linalg.norm(face_normals(P, F), axis=1)
    cots = np.empty((len(F), 3))
    for c in range(3):
        u = p[:, (c + 1) % 3] - p[:, c]
        v = p[:, (c + 2) % 3] - p[:, c]
        cots[:, c] = np.sum(u * v, axis=1) / np.linalg.norm(np.cross(u, v), axis=1)
    obtuse = cots < 0
    A = np.zeros(mesh.n_vertices)
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        la = np.sum((p[:, a] - p[:, c]) ** 2, axis=1)
        lb = np.sum((p[:, b] - p[:, c]) ** 2, axis=1)
        vor = (la * cots[:, b] + lb * cots[:, a]) / 8.0
        share = np.where(obtuse.any(axis=1),
                         np.where(obtuse[:, c], area / 2.0, area / 4.0), vor)
        np.add.at(A, F[:, c], share)
    return A


@dataclass(frozen=True)
class MeanCurvature:
    """Per-vertex mean curvature ``H``, area ``A`` and half-density ``H sqrt(A)``."""

    H: np.ndarray
    area: np.ndarray
    halfdensity: np.ndarray


def mean_curvature_halfdensity(mesh: TriMesh) -> MeanCurvature:
    """Cotangent mean curvature with sign from the outward vertex normal.

    ``H_p N_p = (1/(2 A_p)) sum_q w_pq (f_p - f_q)`` where ``A_p`` is the
    mixed Voronoi area (barycentric areas make the pointwise estimate
    inconsistent on irregular meshes).  Values at boundary vertices are
    one-sided and should be excluded by callers.
    """
    edges, w = cotan_weights(mesh)
    P = mesh.positions
    d = P[edges[:, 0]] - P[edges[:, 1]]
    vec = np.zeros_like(P)
    np.add.at(vec, edges[:, 0], w[:, None] * d)
    np.add.at(vec, edges[:, 1], -w[:, None] * d)
    area = mixed_voronoi_area(mesh)
    hn = vec / (2.0 * area[:, None])
    nrm = vertex_normals(mesh)
    H = np.sign(np.sum(hn * nrm, axis=1)) * np.linalg.norm(hn, axis=1)
    return MeanCurvature(H, area, H * np.sqrt(area))


def read_potential_csv(path, n_faces: int):
    """Read ``face_index,rho`` rows; missing faces default to zero."""
    rho = np.zeros(n_faces)
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2,
                          comments="#", skiprows=_header_rows(path))
    except ValueError as exc:
        raise ParseError(f"{path}: malformed potential file") from exc
    idx = data[:, 0].astype(int)
    if idx.min(initial=0) < 0 or idx.max(initial=0) >= n_faces:
        raise ParseError(f"{path}: face index out of range")
    rho[idx] = data[:, 1]
    return rho


def _header_rows(path) -> int:
    first = Path(path).read_text().lstrip().split("\n", 1)[0]
    return 1 if first[:1].isalpha() else 0


def export_coo(system: DiracSystem, path) -> None:
    """Write ``row col value`` lines of ``K`` for debugging."""
    K = system.K.tocoo()
    np.savetxt(path, np.column_stack([K.row, K.col, K.data]),
               fmt=["%d", "%d", "%.17g"])
