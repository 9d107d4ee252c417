"""Local boundary conditions ``V lam = lam Vt`` and their certification.

A boundary condition assigns to every boundary vertex a pair of unit
imaginary quaternions ``(V, Vt)``; admissible boundary values of a spinor
form the 2-plane ``E' = {lam : V lam = lam Vt}``.  With the boundary frame
``(T, N, B)`` the condition is elliptic iff ``V != +-N`` and self-adjoint
iff ``V`` is perpendicular to ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (ConfigError, FamilyNotClosed, InsufficientResolution,
                     NotElliptic, WrongMesh)
from .mesh import TriMesh
from .quat import (as_quat, imag, plane_basis, qexp, qinv, qmul, slerp,
                   unit_imvec)

__all__ = [
    "BoundaryCondition", "BCFamily", "ConstraintBasis", "EllipticReport",
    "SelfAdjointReport", "canonical_bc", "check_elliptic", "check_selfadjoint",
    "adjoint_bc", "deg_V", "deg_torus", "family_bcproof", "constraint_basis",
    "bc_from_json", "bc_to_json", "solid_angle", "bcproof_fields", "bcproof_gauge",
]


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    """Per boundary vertex pair ``(V, Vt)`` in loop order.

    Attributes
    ----------
    vertices : ndarray of int, shape (nb,)
        Boundary vertex indices, concatenated loop order.
    V, Vt : ndarray, shape (nb, 3)
        Unit imaginary quaternions.
    """

    vertices: np.ndarray
    V: np.ndarray
    Vt: np.ndarray

    def __post_init__(self):
        nb = len(self.vertices)
        V = np.broadcast_to(np.asarray(self.V, dtype=float), (nb, 3)).copy()
        Vt = np.broadcast_to(np.asarray(self.Vt, dtype=float), (nb, 3)).copy()
        unit_imvec(V, 1e-12)
        unit_imvec(Vt, 1e-12)
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=np.int64))
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "Vt", Vt)


def _normalize(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class BCFamily:
    """Samples ``t_0 < ... < t_K`` of a one-parameter boundary condition.

    Values between samples are obtained by per-vertex spherical linear
    interpolation of ``V`` and ``Vt``.
    """

    t: np.ndarray
    vertices: np.ndarray
    V: np.ndarray
    Vt: np.ndarray
    closed: bool = False

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) == 0):
            raise ConfigError("family needs at least two distinct, ordered samples")
        if not (np.all(np.diff(t) > 0) or np.all(np.diff(t) < 0)):
            raise ConfigError("family samples must be monotone in t")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "V", np.asarray(self.V, dtype=float))
        object.__setattr__(self, "Vt", np.asarray(self.Vt, dtype=float))
        if self.closed:
            err = max(np.abs(self.V[-1] - self.V[0]).max(),
                      np.abs(self.Vt[-1] - self.Vt[0]).max())
            if err > 1e-10:
                raise FamilyNotClosed(f"end samples differ by {err:.3e}")

    def __len__(self):
        return len(self.t)

    def sample(self, k: int) -> BoundaryCondition:
        return BoundaryCondition(self.vertices, self.V[k], self.Vt[k])

    def at(self, t: float) -> BoundaryCondition:
        """Condition at parameter ``t`` by spherical interpolation."""
        ts = self.t
        lo, hi = min(ts[0], ts[-1]), max(ts[0], ts[-1])
        if not lo - 1e-12 <= t <= hi + 1e-12:
            raise ValueError(f"t={t} outside the family range [{lo}, {hi}]")
        asc = ts[-1] > ts[0]
        tt = ts if asc else ts[::-1]
        k = int(np.clip(np.searchsorted(tt, t) - 1, 0, len(tt) - 2))
        if not asc:
            k = len(ts) - 2 - k
        t0, t1 = ts[k], ts[k + 1]
        s = (t - t0) / (t1 - t0)
        if s <= 1e-14:
            return self.sample(k)
        if s >= 1 - 1e-14:
            return self.sample(k + 1)
        return BoundaryCondition(self.vertices, slerp(self.V[k], self.V[k + 1], s),
                                 slerp(self.Vt[k], self.Vt[k + 1], s))

    def reversed(self) -> "BCFamily":
        """The same family traversed backwards."""
        return BCFamily(self.t[::-1].copy(), self.vertices, self.V[::-1].copy(),
                        self.Vt[::-1].copy(), self.closed)

    def restrict(self, t_lo: float, t_hi: float) -> "BCFamily":
        """Samples with ``t_lo <= t <= t_hi`` (an open sub-family)."""
        keep = (self.t >= t_lo - 1e-12) & (self.t <= t_hi + 1e-12)
        return BCFamily(self.t[keep], self.vertices, self.V[keep], self.Vt[keep], False)


@dataclass(frozen=True, eq=False)
class ConstraintBasis:
    """Prolongation from constrained coefficients to vertex spinors.

    Interior vertices keep four identity columns; boundary vertices get the
    two orthonormal columns spanning ``E'``.
    """

    P: sp.csr_matrix
    n_interior: int
    n_boundary: int

    @property
    def n_cols(self) -> int:
        return self.P.shape[1]


@dataclass(frozen=True)
class EllipticReport:
    ok: bool
    margin: float


@dataclass(frozen=True)
class SelfAdjointReport:
    ok: bool
    defect: float


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def canonical_bc(mesh: TriMesh, kind: str, Vt) -> BoundaryCondition:
    """``V`` from the boundary frame (``"T"``, ``"N"`` or ``"B"``), ``Vt`` given.

    ``Vt`` may be one vector or one per boundary vertex.
    """
    frame = mesh.require_frame()
    if kind not in ("T", "N", "B"):
        raise ConfigError(f"canonical kind must be T, N or B, got {kind!r}")
    V = getattr(frame, kind)
    return BoundaryCondition(frame.vertices, V, Vt)


def _frame_for(mesh, bc):
    frame = mesh.require_frame()
    if len(frame.vertices) != len(bc.vertices) or np.any(frame.vertices != bc.vertices):
        raise ConfigError("boundary condition and frame index different vertices")
    return frame


def check_elliptic(mesh: TriMesh, bc: BoundaryCondition, tol: float = 1e-6) -> EllipticReport:
    """Ellipticity margin ``min_p min(|V - N|, |V + N|)``."""
    fr = _frame_for(mesh, bc)
    d = np.minimum(np.linalg.norm(bc.V - fr.N, axis=1), np.linalg.norm(bc.V + fr.N, axis=1))
    margin = float(d.min())
    return EllipticReport(margin > tol, margin)


def check_selfadjoint(mesh: TriMesh, bc: BoundaryCondition,
                      tol: float = 1e-6) -> SelfAdjointReport:
    """Self-adjointness defect ``max_p |<V, T>|``."""
    fr = _frame_for(mesh, bc)
    defect = float(np.abs(_dot(bc.V, fr.T)).max())
    return SelfAdjointReport(defect < tol, defect)


def adjoint_bc(mesh: TriMesh, bc: BoundaryCondition) -> BoundaryCondition:
    """Adjoint condition ``(-T V T^{-1}, Vt)``.

    Conjugation by ``T`` fixes the ``T`` component of ``V`` and negates the
    perpendicular part, so the adjoint condition has ``V`` reflected in
    the plane perpendicular to ``T``; its fixed points are the conditions
    with ``V`` perpendicular to ``T``.
    """
    fr = _frame_for(mesh, bc)
    T = as_quat(fr.T)
    Vadj = -imag(qmul(qmul(T, bc.V), qinv(T)))
    return BoundaryCondition(bc.vertices, _normalize(Vadj), bc.Vt)


def deg_V(mesh: TriMesh, bc: BoundaryCondition, tol: float = 1e-6) -> int:
    """Winding number of ``(<V,T>, <V,B>)`` summed over boundary loops.

    Raises
    ------
    NotElliptic
        If the ellipticity margin is not positive.
    InsufficientResolution
        If a single angle increment reaches ``pi/2``.
    """
    rep = check_elliptic(mesh, bc, tol)
    if not rep.ok:
        raise NotElliptic(f"not elliptic, margin {rep.margin:.3g}")
    fr = _frame_for(mesh, bc)
    v = _dot(bc.V, fr.T) + 1j * _dot(bc.V, fr.B)
    total = 0.0
    start = 0
    for loop in mesh.boundary_loops:
        seg = v[start:start + len(loop)]
        start += len(loop)
        inc = np.angle(np.roll(seg, -1) / seg)
        if np.abs(inc).max() >= np.pi / 2:
            raise InsufficientResolution("angle increment of V reaches pi/2")
        total += inc.sum()
    return int(round(total / (2 * np.pi)))


def solid_angle(a, b, c):
    """Signed solid angle of the spherical triangle ``(a, b, c)``."""
    num = _dot(a, np.cross(b, c))
    den = 1.0 + _dot(a, b) + _dot(b, c) + _dot(c, a)
    return 2.0 * np.arctan2(num, den)


def _refine(grid, axis):
    a = grid
    b = np.roll(grid, -1, axis=axis)
    mid = slerp(a, b, 0.5)
    out = np.stack([a, mid], axis=axis + 1)
    shape = list(grid.shape)
    shape[axis] *= 2
    return out.reshape(shape)


def deg_torus(family: BCFamily, field: str = "Vt", max_refine: int = 6) -> int:
    """Degree of ``(t, s) -> field(t, s)`` as a map from the torus to ``S^2``.

    The grid is triangulated with the (t, s) orientation, signed solid
    angles are summed and divided by ``4 pi``.  The grid is refined by
    spherical interpolation until every edge is shorter than ``pi/2``.

    Raises
    ------
    FamilyNotClosed
    InsufficientResolution
    """
    if not family.closed:
        raise FamilyNotClosed("torus degree needs a closed family")
    if field not in ("V", "Vt"):
        raise ConfigError("field must be 'V' or 'Vt'")
    grid = getattr(family, field)[:-1]            # (nt, nb, 3), periodic in both
    for _ in range(max_refine + 1):
        et = np.arccos(np.clip(_dot(grid, np.roll(grid, -1, 0)), -1, 1)).max()
        es = np.arccos(np.clip(_dot(grid, np.roll(grid, -1, 1)), -1, 1)).max()
        ed = np.arccos(np.clip(_dot(grid, np.roll(np.roll(grid, -1, 0), -1, 1)), -1, 1)).max()
        if max(et, es, ed) < np.pi / 2:
            break
        if et >= es:
            grid = _refine(grid, 0)
        else:
            grid = _refine(grid, 1)
    else:
        raise InsufficientResolution("torus grid edges stay above pi/2")
    a = grid
    b = np.roll(grid, -1, 0)
    c = np.roll(b, -1, 1)
    d = np.roll(grid, -1, 1)
    total = solid_angle(a, b, c).sum() + solid_angle(a, c, d).sum()
    deg = total / (4 * np.pi)
    if abs(deg - round(deg)) >= 0.01:
        raise InsufficientResolution(f"torus degree {deg:.4f} not near an integer")
    return int(round(deg))


def bcproof_fields(s, t, rotated: bool):
    """``Vt_t(e^{is}) = -cos(t/2) i + sin(t/2) cos(s) j - sin(t/2) sin(s) k``,
    optionally conjugated by ``exp(k t/4)``."""
    s = np.asarray(s, dtype=float)
    Vt = np.stack([-np.cos(t / 2) * np.ones_like(s), np.sin(t / 2) * np.cos(s),
                   -np.sin(t / 2) * np.sin(s)], axis=-1)
    if rotated:
        q = qexp([0.0, 0.0, 1.0], t / 4)
        Vt = imag(qmul(qmul(q, Vt), qinv(q)))
    return Vt


def bcproof_gauge(t: float, rotated: bool = True):
    """Constant ``g`` with ``Vt_rotated = g Vt_raw g^{-1}``; the eigenspinors of
    the rotated condition are the raw ones times ``g^{-1}`` from the right."""
    return qexp([0.0, 0.0, 1.0], t / 4) if rotated else np.array([1.0, 0.0, 0.0, 0.0])


def family_bcproof(mesh: TriMesh, steps: int, rotated: bool = True) -> BCFamily:
    """The hemisphere family with ``V = i`` and rotating ``Vt``.

    Samples are ``t_k = 2 pi k / steps`` for ``k = 0..steps``.  The raw
    family runs from ``Vt = -i`` to ``Vt = i``; the rotated one is closed.
    """
    if mesh.tag != "hemisphere" or mesh.frame is None:
        raise WrongMesh("family_bcproof needs a gen_hemisphere mesh")
    if int(steps) != steps or steps < 8:
        raise ConfigError("family_bcproof needs steps >= 8")
    verts = mesh.frame.vertices
    s = np.angle(mesh.param[verts])
    t = 2 * np.pi * np.arange(int(steps) + 1) / int(steps)
    Vt = np.stack([bcproof_fields(s, tk, rotated) for tk in t])
    V = np.broadcast_to([1.0, 0.0, 0.0], Vt.shape).copy()
    if rotated:
        Vt[-1] = Vt[0]                  # exact closure, round-off only
    return BCFamily(t, verts, V, Vt, closed=bool(rotated))


def constraint_basis(mesh: TriMesh, bc: BoundaryCondition | None) -> ConstraintBasis:
    """Prolongation ``P`` with orthonormal columns; identity on closed meshes."""
    n = mesh.n_vertices
    bverts = np.zeros(0, dtype=np.int64) if bc is None else bc.vertices
    if bc is None and len(mesh.boundary_vertices):
        raise ConfigError("a mesh with boundary needs a boundary condition")
    is_b = np.zeros(n, dtype=bool)
    is_b[bverts] = True
    ncol_v = np.where(is_b, 2, 4)
    start = np.concatenate([[0], np.cumsum(ncol_v)[:-1]])
    rows, cols, vals = [], [], []
    inner = np.flatnonzero(~is_b)
    for r in range(4):
        rows.append(4 * inner + r)
        cols.append(start[inner] + r)
        vals.append(np.ones(len(inner)))
    if len(bverts):
        b1, b2 = plane_basis(bc.V, bc.Vt)
        for c, bb in enumerate((b1, b2)):
            for r in range(4):
                rows.append(4 * bverts + r)
                cols.append(start[bverts] + c)
                vals.append(bb[:, r])
    P = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(4 * n, int(ncol_v.sum())))
    P.eliminate_zeros()
    return ConstraintBasis(P, len(inner), len(bverts))


# -------------------------------------------------------------------- JSON

def bc_from_json(mesh: TriMesh, data: dict):
    """Build a condition or family from its JSON description.

    Accepted kinds are ``fields``, ``canonical``, ``family_bcproof`` and
    ``vekua``; see the README for the layout.
    """
    kind = data.get("kind")
    if kind == "fields":
        loop = int(data.get("loop", 0))
        if loop >= len(mesh.boundary_loops):
            raise ConfigError(f"mesh has no boundary loop {loop}")
        verts = mesh.boundary_loops[loop]
        V = np.asarray(data["V"], dtype=float)
        Vt = np.asarray(data["Vt"], dtype=float)
        if V.shape != (len(verts), 3) or Vt.shape != (len(verts), 3):
            raise ConfigError("fields V/Vt must list one vector per loop vertex")
        try:
            return BoundaryCondition(verts, V, Vt)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if kind == "canonical":
        vt = data["Vt"]
        if isinstance(vt, dict):
            vt = vt["constant"]
        try:
            return canonical_bc(mesh, data["V"], np.asarray(vt, dtype=float))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if kind == "family_bcproof":
        fam = family_bcproof(mesh, int(data.get("steps", 64)), bool(data.get("rotated", True)))
        return fam.at(float(data["t"])) if "t" in data else fam
    if kind == "vekua":
        from .vekua import quaternionic_vekua_bc
        return quaternionic_vekua_bc(mesh, int(data["p1"]), int(data["p2"]))
    raise ConfigError(f"unknown boundary condition kind {kind!r}")


def bc_to_json(bc: BoundaryCondition, loop: int = 0) -> dict:
    return {"kind": "fields", "loop": loop, "V": bc.V.tolist(), "Vt": bc.Vt.tolist()}
