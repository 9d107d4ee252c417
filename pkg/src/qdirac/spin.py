"""Conformal spin transformations ``df~ = conj(lam) df lam`` of triangle meshes.

Edge targets are the exact integrals of ``conj(lam) df lam`` for linearly
interpolated spinors; new positions are their weighted least-squares
primitive.  The module also doubles disc deformations with planar
boundary by reflection and builds the table of Dirac spheres from the
eigenspinors of the round sphere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dirac import cotan_weights, mean_curvature_halfdensity
from .errors import (AllZeroSpinor, BoundaryNotPlanar, ClusterSplit, InputError,
                     SolverFailure, WeldFailure)
from .mesh import TriMesh, euler_characteristic
from .quat import as_quat, imag, qconj, qexp, qmul

__all__ = [
    "DeformationResult", "spin_transform", "edge_targets", "verify_mc_density",
    "double_reflect", "plane_fit", "procrustes", "diameter",
    "normalized_mean_curvature", "revolution_deviation",
    "DiracSphere", "DiracSphereTable", "dirac_sphere_table",
]

WEIGHT_FLOOR = 1e-3
BRANCH_REL = 1e-6


# ------------------------------------------------------------- geometry

def diameter(points) -> float:
    """Largest pairwise distance (exact for up to a few thousand points)."""
    P = np.asarray(points, dtype=float)
    if len(P) > 4000:
        P = P[np.linspace(0, len(P) - 1, 4000).astype(int)]
    sq = np.sum(P * P, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * P @ P.T
    return float(np.sqrt(max(d2.max(), 0.0)))


def plane_fit(points):
    """Least-squares plane through ``points``.

    Returns
    -------
    normal : ndarray, shape (3,)
    center : ndarray, shape (3,)
    residual : float
        Largest distance to the plane divided by the diameter.
    """
    P = np.asarray(points, dtype=float)
    c = P.mean(axis=0)
    _, _, Vt = np.linalg.svd(P - c, full_matrices=False)
    nrm = Vt[-1]
    dist = np.abs((P - c) @ nrm)
    return nrm, c, float(dist.max() / diameter(P))


def procrustes(source, target, allow_reflection: bool = False):
    """Best similarity ``x -> s R x + t`` mapping ``source`` onto ``target``.

    Returns
    -------
    residual : float
        Largest point distance after alignment divided by the target diameter.
    R : ndarray, shape (3, 3)
    s : float
    t : ndarray, shape (3,)
    """
    A = np.asarray(source, dtype=float)
    B = np.asarray(target, dtype=float)
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    A0, B0 = A - ca, B - cb
    U, S, Vt = np.linalg.svd(B0.T @ A0)
    D = np.eye(3)
    if not allow_reflection and np.linalg.det(U @ Vt) < 0:
        D[2, 2] = -1.0
    R = U @ D @ Vt
    na = np.sum(A0 * A0)
    s = float(np.sum(S * np.diag(D)) / na) if na > 0 else 1.0
    t = cb - s * R @ ca
    err = np.linalg.norm(A @ (s * R).T + t - B, axis=1).max()
    return float(err / diameter(B)), R, s, t


def normalized_mean_curvature(mesh: TriMesh, target_diameter: float = 2.0):
    """Mean curvature of ``mesh`` rescaled to the given diameter."""
    H = mean_curvature_halfdensity(mesh).H
    return H * diameter(mesh.positions) / target_diameter


def revolution_deviation(mesh: TriMesh) -> float:
    """Deviation of ``f(r p)`` from the rotated ``f(p)`` relative to the diameter.

    The rotation is the ``n_s``-fold one about the i-axis carried by the
    mesh; the best translation is removed.
    """
    if mesh.rotation is None or not mesh.n_s:
        raise InputError("mesh carries no rotational symmetry")
    a = qexp([1.0, 0.0, 0.0], np.pi / mesh.n_s)
    pos = mesh.positions
    rotated = imag(qmul(qmul(qconj(a), pos), a))
    diff = pos[mesh.rotation] - rotated
    diff -= diff.mean(axis=0)
    return float(np.linalg.norm(diff, axis=1).max() / diameter(pos))


# ------------------------------------------------------- spin transform

def _as_spinor(mesh: TriMesh, lam):
    lam = np.asarray(lam, dtype=float)
    if lam.shape == (4,):
        lam = np.broadcast_to(lam, (mesh.n_vertices, 4))
    lam = lam.reshape(mesh.n_vertices, 4)
    if not np.all(np.isfinite(lam)):
        raise ValueError("spinor must be finite")
    return np.ascontiguousarray(lam)


def edge_targets(mesh: TriMesh, lam, edges=None):
    """Exact integral of ``conj(lam) df lam`` along each edge ``p -> q``.

    With ``e = f_q - f_p`` the integral of the linearly interpolated spinor
    is ``(1/3) lp' e lp + (1/6)(lp' e lq + lq' e lp) + (1/3) lq' e lq``
    where ``'`` denotes conjugation.
    """
    lam = _as_spinor(mesh, lam)
    if edges is None:
        edges = cotan_weights(mesh)[0]
    p, q = edges[:, 0], edges[:, 1]
    e = as_quat(mesh.positions[q] - mesh.positions[p])
    lp, lq = lam[p], lam[q]
    cp, cq = qconj(lp), qconj(lq)
    tgt = (qmul(cp, qmul(e, lp)) + qmul(cq, qmul(e, lq))) / 3.0 \
        + (qmul(cp, qmul(e, lq)) + qmul(cq, qmul(e, lp))) / 6.0
    return imag(tgt)


@dataclass(frozen=True, eq=False)
class DeformationResult:
    """Outcome of a spin transformation.

    Attributes
    ----------
    mesh : TriMesh
        Deformed mesh; connectivity, orientation and symmetry data are those
        of the input.
    original : TriMesh
    spinor : ndarray, shape (n, 4)
    closure_residual : float
        Largest norm over faces of the sum of oriented edge targets.
    closure_relative : float
        ``closure_residual`` divided by the mean edge-target length.
    branch_vertices : ndarray of int
        Vertices with ``|lam| < branch_tol``.
    branch_tol : float
    fix : int
    """

    mesh: TriMesh
    original: TriMesh
    spinor: np.ndarray
    closure_residual: float
    closure_relative: float
    branch_vertices: np.ndarray
    branch_tol: float
    fix: int
    meta: dict = field(default_factory=dict)

    def mc_comparison(self, rho=0.0):
        """Half-densities ``H~ sqrt(A~)`` and ``(H + rho) sqrt(A)``.

        Returns
        -------
        lhs, rhs : ndarray, shape (n,)
        mask : ndarray of bool
            Interior vertices that are not branch vertices.
        """
        new = mean_curvature_halfdensity(self.mesh)
        old = mean_curvature_halfdensity(self.original)
        lhs = new.halfdensity
        rhs = (old.H + rho) * np.sqrt(old.area)
        mask = self.original.interior_mask.copy()
        mask[self.branch_vertices] = False
        return lhs, rhs, mask

    def report(self) -> dict:
        return {"n_vertices": int(self.mesh.n_vertices),
                "closure_residual": self.closure_residual,
                "closure_relative": self.closure_relative,
                "branch_vertices": [int(v) for v in self.branch_vertices],
                "branch_tol": self.branch_tol, "fix": int(self.fix),
                "diameter": diameter(self.mesh.positions), **self.meta}


def spin_transform(mesh: TriMesh, lam, fix: int = 0) -> DeformationResult:
    """Integrate ``df~ = conj(lam) df lam`` by weighted least squares.

    Parameters
    ----------
    mesh : TriMesh
    lam : array_like, shape (n, 4), (4n,) or (4,)
        Vertex spinor; a single quaternion is used at every vertex.
    fix : int
        Vertex pinned at the origin.

    Returns
    -------
    DeformationResult

    Raises
    ------
    AllZeroSpinor
        If ``lam`` vanishes identically.
    SolverFailure
        If the pinned cotangent system cannot be solved.

    Examples
    --------
    >>> from qdirac.mesh import gen_icosphere
    >>> m = gen_icosphere(1)
    >>> r = spin_transform(m, [1.0, 0, 0, 0])
    >>> bool(np.allclose(r.mesh.positions, m.positions - m.positions[0]))
    True
    """
    lam = _as_spinor(mesh, lam)
    n = mesh.n_vertices
    if not 0 <= fix < n:
        raise ValueError(f"fix vertex {fix} out of range")
    norms = np.linalg.norm(lam, axis=1)
    med = float(np.median(norms))
    if norms.max() == 0.0 or med == 0.0 and norms.max() < 1e-300:
        raise AllZeroSpinor("spinor vanishes at every vertex")
    branch_tol = BRANCH_REL * (med if med > 0 else norms.max())
    branch = np.flatnonzero(norms < branch_tol)

    edges, w = cotan_weights(mesh)
    w = np.maximum(w, WEIGHT_FLOOR)
    tgt = edge_targets(mesh, lam, edges)
    p, q = edges[:, 0], edges[:, 1]
    L = sp.coo_matrix((np.concatenate([w, w, -w, -w]),
                       (np.concatenate([p, q, p, q]), np.concatenate([p, q, q, p]))),
                      shape=(n, n)).tocsc()
    rhs = np.zeros((n, 3))
    np.add.at(rhs, q, w[:, None] * tgt)
    np.add.at(rhs, p, -w[:, None] * tgt)
    keep = np.setdiff1d(np.arange(n), [fix])
    new = np.zeros((n, 3))
    try:
        lu = spla.splu(L[keep][:, keep].tocsc())
        new[keep] = lu.solve(rhs[keep])
    except RuntimeError as exc:
        raise SolverFailure(f"spin transform system is singular: {exc}") from exc
    if not np.all(np.isfinite(new)):
        raise SolverFailure("spin transform produced non-finite positions")

    closure = _closure(mesh.faces, edges, tgt)
    scale = float(np.mean(np.linalg.norm(tgt, axis=1)))
    rel = closure / scale if scale > 0 else 0.0
    out = mesh.with_positions(new, tag=f"spin({mesh.tag})")
    return DeformationResult(out, mesh, lam, closure, rel, branch, branch_tol, int(fix))


def _closure(faces, edges, tgt) -> float:
    n = int(max(edges.max(), faces.max())) + 1
    key = edges[:, 0] * n + edges[:, 1]
    order = np.argsort(key)
    total = np.zeros((len(faces), 3))
    for a, b in ((0, 1), (1, 2), (2, 0)):
        u, v = faces[:, a], faces[:, b]
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        idx = order[np.searchsorted(key[order], lo * n + hi)]
        sign = np.where(u < v, 1.0, -1.0)
        total += sign[:, None] * tgt[idx]
    return float(np.linalg.norm(total, axis=1).max())


def verify_mc_density(original: TriMesh, result: DeformationResult, rho=0.0) -> float:
    """Largest deviation from ``H~ sqrt(A~) = (H + rho) sqrt(A)``.

    Interior non-branch vertices are compared; the deviation is relative to
    the largest of ``|(H + rho) sqrt(A)|`` and ``|H sqrt(A)|`` so that it
    stays meaningful when the target density vanishes.
    """
    if result.original is not original and (
            result.original.n_vertices != original.n_vertices
            or not np.array_equal(result.original.faces, original.faces)):
        raise InputError("result does not derive from this mesh")
    lhs, rhs, mask = result.mc_comparison(rho)
    if not mask.any():
        return 0.0
    old = mean_curvature_halfdensity(original).halfdensity
    scale = max(np.abs(rhs[mask]).max(), np.abs(old[mask]).max())
    if scale == 0:
        return float(np.abs(lhs[mask]).max())
    return float(np.abs(lhs[mask] - rhs[mask]).max() / scale)


# ----------------------------------------------------------- doubling

def double_reflect(source, tol: float = 1e-3) -> TriMesh:
    """Close a disc by reflecting it in the plane of its boundary.

    Parameters
    ----------
    source : TriMesh or DeformationResult
        Disc whose boundary lies in a plane with normal ``i``.
    tol : float
        Allowed spread of the boundary i-coordinates relative to the diameter.

    Returns
    -------
    TriMesh
        Closed mesh; the reflected copy has reversed faces so orientation is
        consistent, boundary vertices are shared.

    Raises
    ------
    BoundaryNotPlanar
        If the boundary leaves the plane by more than ``tol``.
    WeldFailure
        If the welded mesh is not a closed surface of the expected Euler
        characteristic.
    """
    mesh = source.mesh if isinstance(source, DeformationResult) else source
    if len(mesh.boundary_loops) != 1:
        raise WeldFailure("doubling needs exactly one boundary loop")
    bnd = mesh.boundary_vertices
    x = mesh.positions[bnd, 0]
    c = float(x.mean())
    spread = float(np.abs(x - c).max()) / diameter(mesh.positions)
    if spread > tol:
        raise BoundaryNotPlanar(f"boundary leaves the plane x = {c:.4g} by "
                                f"{spread:.3g} of the diameter (tol {tol})")
    n = mesh.n_vertices
    inner = np.setdiff1d(np.arange(n), bnd)
    mirror = np.arange(n)
    mirror[inner] = n + np.arange(len(inner))
    pos = mesh.positions.copy()
    pos[bnd, 0] = c
    refl = pos[inner].copy()
    refl[:, 0] = 2.0 * c - refl[:, 0]
    faces = np.concatenate([mesh.faces, mirror[mesh.faces][:, [0, 2, 1]]])
    rot = None
    if mesh.rotation is not None:
        rot = np.concatenate([mesh.rotation, mirror[mesh.rotation[inner]]])
    param = None if mesh.param is None else np.concatenate([mesh.param, mesh.param[inner]])
    try:
        out = TriMesh(np.concatenate([pos, refl]), faces, None, f"doubled({mesh.tag})",
                      None, param, rot, mesh.n_s)
    except InputError as exc:
        raise WeldFailure(f"welded mesh is invalid: {exc}") from exc
    expect = 2 * euler_characteristic(mesh)
    if out.boundary_loops or euler_characteristic(out) != expect:
        raise WeldFailure(f"welded mesh has Euler characteristic "
                          f"{euler_characteristic(out)}, expected {expect}")
    return out


# ------------------------------------------------------- sphere table

@dataclass(frozen=True, eq=False)
class DiracSphere:
    """One Dirac sphere: spin transform of a Fourier mode of an eigenspace.

    ``revolution`` is the rotated-copy deviation (meaningful for ``l = 0``),
    ``axis_branch`` lists branch vertices on the rotation axis and
    ``reflection`` the deviation of the ``-(2 + mu)`` partner from the
    point reflection of this surface (``None`` if not computed).
    """

    mu: float
    mu_discrete: float
    l: int
    result: DeformationResult
    revolution: float
    axis_branch: list
    reflection: float | None


@dataclass(frozen=True, eq=False)
class DiracSphereTable:
    mesh: TriMesh
    modes: dict
    spheres: list

    def rows(self) -> list:
        return [{"mu": s.mu, "mu_discrete": s.mu_discrete, "l": s.l,
                 "revolution_deviation": s.revolution,
                 "axis_branch": s.axis_branch,
                 "reflection_deviation": s.reflection,
                 "closure_relative": s.result.closure_relative}
                for s in self.spheres]


def _mode_subspaces(C, tol=1e-6):
    """Real invariant subspaces of an orthogonal matrix grouped by ``cos`` of the angle."""
    S = 0.5 * (C + C.T)
    w, Z = np.linalg.eigh(S)
    groups = []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > tol:
            groups.append((float(np.mean(w[start:k])), Z[:, start:k]))
            start = k
    return groups


def _nearest_cluster(ev, target, k):
    """Indices of the ``k`` eigenvalues nearest ``target``, which must be
    separated from the remaining ones."""
    d = np.abs(ev - target)
    order = np.argsort(d, kind="stable")
    if len(ev) < k:
        raise ClusterSplit(f"fewer than {k} eigenvalues near {target}")
    inner = ev[order[:k]]
    rest = ev[order[k:]]
    width = float(inner.max() - inner.min())
    if rest.size:
        sep = float(np.min(np.abs(rest[:, None] - inner[None, :])))
        if sep <= 2 * width:
            raise ClusterSplit(f"no separated cluster of {k} eigenvalues near {target}")
    return np.sort(order[:k])


def _axis_vertices(mesh: TriMesh):
    return np.flatnonzero(mesh.rotation == np.arange(mesh.n_vertices))


def dirac_sphere_table(n_r: int = 8, n_s: int = 32, mus=(0, 1, 2),
                       reflection: bool = True, dense_threshold: int = 4000):
    """Dirac spheres of the round sphere for eigenvalues ``mus``.

    Each eigenspace is split by the left rotation action into modes
    ``l = 0..|mu+1|-1``; a representative of mode ``l`` is the real part of
    its eigenvector for the two-sided action at angle ``l theta``, which for
    ``l = 0`` gives a surface of revolution.  With ``reflection`` the
    spinor ``f lam`` is projected onto the ``-(2 + mu)`` eigenspace and its
    transform compared with the point reflection ``-f~``.

    Parameters
    ----------
    n_r, n_s : int
        Resolution of the doubled hemisphere (exact ``n_s``-fold symmetry).
    mus : sequence of int
        Eigenvalues ``mu >= 0``.

    Returns
    -------
    DiracSphereTable
    """
    from .boundary import constraint_basis
    from .dirac import assemble
    from .mesh import gen_symmetric_sphere
    from .spectral import eigen_constrained, fourier_decompose, rotation_action

    mus = [int(m) for m in mus]
    if any(m < 0 for m in mus):
        raise ValueError("table eigenvalues must be >= 0 (partners are -(2+mu))")
    mesh = gen_symmetric_sphere(n_r, n_s)
    system = assemble(mesh)
    basis = constraint_basis(mesh, None)
    top = max(mus) + 0.5
    low = -(2 + max(mus)) - 0.5 if reflection else min(mus) - 0.5
    spec = eigen_constrained(system, basis, window=(low, top),
                             dense_threshold=dense_threshold)
    M = system.M
    th = 2 * np.pi / n_s
    U = rotation_action(mesh, right=True)
    L = rotation_action(mesh, right=False)
    axis = _axis_vertices(mesh)
    pos = mesh.positions
    modes, spheres = {}, []
    for mu in mus:
        fm = fourier_decompose(mesh, spec, mu, mass=M)
        modes[mu] = fm.modes
        sel = np.flatnonzero(np.abs(spec.eigenvalues - mu) <= 0.25)
        X = spec.flat(sel)
        mu_h = float(spec.eigenvalues[sel].mean())
        CL = X.T @ (M[:, None] * (L @ X))
        partner = None
        if reflection:
            partner = spec.flat(_nearest_cluster(spec.eigenvalues, -(2 + mu), len(sel)))
        subs = []
        for cosang, Z in _mode_subspaces(CL):
            ang = np.arccos(np.clip(cosang, -1, 1))
            subs.append((int(np.rint(ang / th - 0.5)), Z))
        for l, Z in sorted(subs, key=lambda s: s[0]):
            Y = X @ Z
            CU = Y.T @ (M[:, None] * (U @ Y))
            ev, vec = np.linalg.eig(CU)
            k = int(np.argmin(np.abs(np.abs(np.angle(ev)) - l * th)))
            v = np.real(vec[:, k])
            if np.linalg.norm(v) < 1e-8:
                v = np.imag(vec[:, k])
            lam = (Y @ v).reshape(-1, 4)
            lam /= np.sqrt(np.sum(M.reshape(-1, 4)[:, 0] * np.sum(lam ** 2, axis=1)))
            fix = int(axis[0]) if len(axis) else 0
            res = spin_transform(mesh, lam, fix=fix)
            rev = revolution_deviation(res.mesh)
            on_axis = [int(b) for b in res.branch_vertices if b in set(axis.tolist())]
            refl = None
            if partner is not None:
                fl = qmul(pos, lam).reshape(-1)
                proj = partner @ (partner.T @ (M * fl))
                res2 = spin_transform(mesh, proj.reshape(-1, 4), fix=fix)
                refl = procrustes(res2.mesh.positions, -res.mesh.positions)[0]
            spheres.append(DiracSphere(float(mu), mu_h, l, res, rev, on_axis, refl))
    return DiracSphereTable(mesh, modes, spheres)
