"""Oriented triangle meshes in imaginary-quaternion space.

Positions are stored as ``(n, 3)`` arrays of imaginary parts ``(i, j, k)``.
Faces are oriented vertex triples; boundary loops run with the surface on
their left.  Disc generators share one parameter triangulation of the unit
disc with exact ``n_s``-fold rotational symmetry and carry the analytic
boundary frame of their immersion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DegenerateFace, DegenerateFrame, InvalidResolution,
                     NonManifold, NonTriangleFace, ParseError, MissingFrame)

__all__ = [
    "BoundaryFrame", "TriMesh", "gen_flat_disc", "gen_hemisphere",
    "gen_icosphere", "gen_symmetric_sphere", "boundary_loops",
    "discrete_frame", "read_obj", "write_obj", "write_frame_json",
    "read_frame_json", "unique_edges", "face_areas", "face_normals",
    "vertex_normals", "mean_edge_length", "euler_characteristic",
]


@dataclass(frozen=True)
class BoundaryFrame:
    """Per boundary vertex frame ``(T, N, B)`` in loop order.

    Attributes
    ----------
    vertices : ndarray of int, shape (nb,)
        Boundary vertex indices, concatenated loop order.
    T, N, B : ndarray, shape (nb, 3)
        Unit tangent, surface normal and bi-normal ``B = T x N``.
    """

    vertices: np.ndarray
    T: np.ndarray
    N: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        for name in ("T", "N", "B"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (len(self.vertices), 3):
                raise ValueError(f"frame field {name} has shape {v.shape}")
            if np.abs(np.linalg.norm(v, axis=1) - 1).max(initial=0) > 1e-10:
                raise ValueError(f"frame field {name} is not unit length")
        if np.abs(np.cross(self.T, self.N) - self.B).max(initial=0) > 1e-10:
            raise ValueError("frame violates B = T x N")


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable oriented triangle mesh.

    Attributes
    ----------
    positions : ndarray, shape (n, 3)
        Vertex images as imaginary quaternions.
    faces : ndarray of int, shape (m, 3)
        Oriented faces.
    boundary_loops : list of ndarray
        Positively oriented boundary cycles.
    tag : str
        Generator provenance, e.g. ``"hemisphere"`` or ``"obj"``.
    frame : BoundaryFrame or None
        Analytic boundary frame when the generator knows one.
    param : ndarray of complex or None
        Parameter-domain coordinates for disc-based generators.
    rotation : ndarray of int or None
        Index of ``r(p)`` for the generating rotation ``z -> exp(2 pi i/n_s) z``.
    n_s : int or None
        Order of the rotational symmetry.
    """

    positions: np.ndarray
    faces: np.ndarray
    boundary_loops: list = field(default=None)
    tag: str = "mesh"
    frame: BoundaryFrame | None = None
    param: np.ndarray | None = None
    rotation: np.ndarray | None = None
    n_s: int | None = None

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=float)
        faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("positions must have shape (n, 3)")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ValueError("faces must have shape (m, 3)")
        if faces.size and (faces.min() < 0 or faces.max() >= len(pos)):
            raise ValueError("face index out of range")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "faces", faces)
        _check_faces(pos, faces)
        if self.boundary_loops is None:
            object.__setattr__(self, "boundary_loops", _boundary_loops(faces))

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def boundary_vertices(self) -> np.ndarray:
        if not self.boundary_loops:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(self.boundary_loops)

    @property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = False
        return mask

    def with_positions(self, positions, tag: str | None = None,
                       keep_frame: bool = False) -> "TriMesh":
        """Same connectivity and symmetry data, new immersion."""
        return TriMesh(positions, self.faces, [l.copy() for l in self.boundary_loops],
                       tag or self.tag, self.frame if keep_frame else None,
                       self.param, self.rotation, self.n_s)

    def require_frame(self) -> BoundaryFrame:
        if self.frame is None:
            raise MissingFrame("mesh carries no boundary frame; use discrete_frame")
        return self.frame


# ---------------------------------------------------------------- geometry

def face_normals(positions, faces):
    """Unnormalized face normals ``(f1-f0) x (f2-f0)`` (twice the area)."""
    p = positions[faces]
    return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])


def face_areas(mesh_or_pos, faces=None):
    pos, faces = _pf(mesh_or_pos, faces)
    return 0.5 * np.linalg.norm(face_normals(pos, faces), axis=1)


def vertex_normals(mesh: TriMesh):
    """Area-weighted unit vertex normals."""
    n = face_normals(mesh.positions, mesh.faces)
    acc = np.zeros_like(mesh.positions)
    for c in range(3):
        np.add.at(acc, mesh.faces[:, c], n)
    return acc / np.linalg.norm(acc, axis=1, keepdims=True)


def unique_edges(faces):
    """Undirected edges as sorted pairs, in a deterministic order."""
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    return np.unique(np.sort(e, axis=1), axis=0)


def mean_edge_length(mesh: TriMesh) -> float:
    e = unique_edges(mesh.faces)
    return float(np.linalg.norm(mesh.positions[e[:, 0]] - mesh.positions[e[:, 1]], axis=1).mean())


def euler_characteristic(mesh: TriMesh) -> int:
    return mesh.n_vertices - len(unique_edges(mesh.faces)) + len(mesh.faces)


def _pf(mesh_or_pos, faces):
    if isinstance(mesh_or_pos, TriMesh):
        return mesh_or_pos.positions, mesh_or_pos.faces
    return np.asarray(mesh_or_pos, dtype=float), np.asarray(faces)


def _check_faces(pos, faces):
    if len(faces) == 0:
        return
    scale = np.ptp(pos, axis=0).max() if len(pos) else 0.0
    area = 0.5 * np.linalg.norm(face_normals(pos, faces), axis=1)
    bad = np.flatnonzero(area <= 1e-14 * max(scale, 1e-300) ** 2)
    if bad.size:
        raise DegenerateFace(f"{bad.size} degenerate face(s), first index {bad[0]}")
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    _, counts = np.unique(directed, axis=0, return_counts=True)
    if counts.max() > 1:
        raise NonManifold("a directed edge occurs twice (inconsistent orientation "
                          "or more than two incident faces)")
    _, ucounts = np.unique(np.sort(directed, axis=1), axis=0, return_counts=True)
    if ucounts.max() > 2:
        raise NonManifold("an edge has more than two incident faces")


def _boundary_loops(faces):
    if len(faces) == 0:
        return []
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    present = {(int(a), int(b)) for a, b in directed}
    nxt = {}
    for a, b in directed:
        a, b = int(a), int(b)
        if (b, a) not in present:
            if a in nxt:
                raise NonManifold(f"vertex {a} has two outgoing boundary edges")
            nxt[a] = b
    loops = []
    seen = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        v = nxt[start]
        while v != start:
            if v in seen or v not in nxt:
                raise NonManifold("boundary edges do not form simple cycles")
            loop.append(v)
            seen.add(v)
            v = nxt[v]
        loops.append(np.array(loop, dtype=np.int64))
    return loops


def boundary_loops(mesh: TriMesh):
    """Positively oriented boundary cycles (surface on the left).

    Raises
    ------
    NonManifold
        If an edge has more than two incident faces or the boundary is
        pinched.
    """
    _check_faces(mesh.positions, mesh.faces)
    return _boundary_loops(mesh.faces)


# -------------------------------------------------------------- generators

def _disc_param(n_r: int, n_s: int):
    """Parameter triangulation of the unit disc with n_s-fold symmetry."""
    if int(n_r) != n_r or int(n_s) != n_s or n_r < 1 or n_s < 3:
        raise InvalidResolution(f"need n_r >= 1 and n_s >= 3, got ({n_r}, {n_s})")
    n_r, n_s = int(n_r), int(n_s)
    r = np.repeat(np.arange(1, n_r + 1), n_s) / n_r
    m = np.tile(np.arange(n_s), n_r)
    z = np.concatenate([[0.0 + 0.0j], r * np.exp(2j * np.pi * m / n_s)])

    def idx(ring, sector):
        return np.where(ring == 0, 0, 1 + (ring - 1) * n_s + np.mod(sector, n_s))

    ms = np.arange(n_s)
    faces = [np.stack([np.zeros(n_s, int), idx(1, ms), idx(1, ms + 1)], 1)]
    for ring in range(1, n_r):
        a, b = idx(ring, ms), idx(ring, ms + 1)
        c, d = idx(ring + 1, ms), idx(ring + 1, ms + 1)
        faces.append(np.stack([a, c, d], 1))
        faces.append(np.stack([a, d, b], 1))
    faces = np.concatenate(faces)
    ring = np.concatenate([[0], np.repeat(np.arange(1, n_r + 1), n_s)])
    sector = np.concatenate([[0], m])
    rot = idx(ring, sector + 1)
    loop = idx(n_r, ms).astype(np.int64)
    return z, faces, rot.astype(np.int64), loop


def _jz(z):
    """Imaginary coordinates of ``j z`` for complex z: ``x j - y k``."""
    z = np.asarray(z, dtype=complex)
    return np.stack([np.zeros(z.shape), z.real, -z.imag], axis=-1)


def gen_flat_disc(n_r: int, n_s: int) -> TriMesh:
    """Unit disc immersed by ``f(z) = j z`` with its analytic boundary frame.

    The frame on ``|z| = 1`` is ``T = j i z``, ``N = -i``, ``B = j z``.

    Examples
    --------
    >>> m = gen_flat_disc(2, 6)
    >>> m.n_vertices, len(m.boundary_loops[0])
    (13, 6)
    """
    z, faces, rot, loop = _disc_param(n_r, n_s)
    pos = _jz(z)
    zb = z[loop]
    T = _jz(1j * zb)        # j i z
    N = np.tile([-1.0, 0.0, 0.0], (len(loop), 1))
    B = _jz(zb)
    frame = BoundaryFrame(loop, T, N, B)
    return TriMesh(pos, faces, [loop], "flat_disc", frame, z, rot, int(n_s))


def hemisphere_map(z):
    """Stereographic parametrization ``((|z|^2-1) i + 2 j z) / (1+|z|^2)``."""
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    out = 2.0 * _jz(z)
    out[..., 0] = r2 - 1.0
    return out / (1.0 + r2)[..., None]


def gen_hemisphere(n_r: int, n_s: int) -> TriMesh:
    """Southern unit hemisphere over the disc, boundary on the equator.

    Frame on the equator: ``N = f`` (outward), ``T = j i z``, ``B = i``.
    """
    z, faces, rot, loop = _disc_param(n_r, n_s)
    pos = hemisphere_map(z)
    zb = z[loop]
    N = hemisphere_map(zb)
    T = _jz(1j * zb)
    B = np.tile([1.0, 0.0, 0.0], (len(loop), 1))
    frame = BoundaryFrame(loop, T, N, B)
    return TriMesh(pos, faces, [loop], "hemisphere", frame, z, rot, int(n_s))


def gen_symmetric_sphere(n_r: int, n_s: int) -> TriMesh:
    """Closed unit sphere obtained by reflecting ``gen_hemisphere`` in the jk-plane.

    The result keeps the exact ``n_s``-fold symmetry about the i-axis; the
    northern copy has reversed face orientation so the sphere is oriented
    outward.
    """
    hemi = gen_hemisphere(n_r, n_s)
    n = hemi.n_vertices
    bnd = hemi.boundary_vertices
    inner = np.setdiff1d(np.arange(n), bnd)
    north = np.arange(n)
    north[inner] = n + np.arange(len(inner))
    pos = np.concatenate([hemi.positions, hemi.positions[inner] * [-1.0, 1.0, 1.0]])
    faces = np.concatenate([hemi.faces, north[hemi.faces][:, [0, 2, 1]]])
    rot = np.concatenate([hemi.rotation, north[hemi.rotation[inner]]])
    param = np.concatenate([hemi.param, hemi.param[inner]])
    return TriMesh(pos, faces, [], "symmetric_sphere", None, param, rot, int(n_s))


_T = (1 + 5 ** 0.5) / 2
_ICO_V = [(-1, _T, 0), (1, _T, 0), (-1, -_T, 0), (1, -_T, 0), (0, -1, _T),
          (0, 1, _T), (0, -1, -_T), (0, 1, -_T), (_T, 0, -1), (_T, 0, 1),
          (-_T, 0, -1), (-_T, 0, 1)]
_ICO_F = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9),
          (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2),
          (3, 2, 6), (3, 6, 8), (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10),
          (8, 6, 7), (9, 8, 1)]


def gen_icosphere(level: int) -> TriMesh:
    """Subdivided icosahedron projected to the unit sphere, outward oriented.

    Examples
    --------
    >>> gen_icosphere(2).n_vertices
    162
    """
    if int(level) != level or not 0 <= level <= 6:
        raise InvalidResolution(f"icosphere level must be in [0, 6], got {level}")
    v = np.array(_ICO_V, dtype=float)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = np.array(_ICO_F, dtype=np.int64)
    for _ in range(int(level)):
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        key = np.sort(e, axis=1)
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        mid = v[uniq[:, 0]] + v[uniq[:, 1]]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        base = len(v)
        v = np.concatenate([v, mid])
        m = len(f)
        ab, bc, ca = (base + inv[:m], base + inv[m:2 * m], base + inv[2 * m:])
        a, b, c = f[:, 0], f[:, 1], f[:, 2]
        f = np.concatenate([np.stack([a, ab, ca], 1), np.stack([b, bc, ab], 1),
                            np.stack([c, ca, bc], 1), np.stack([ab, bc, ca], 1)])
    nrm = face_normals(v, f)
    if np.sum(nrm * v[f].mean(axis=1)) < 0:
        f = f[:, [0, 2, 1]]
    return TriMesh(v, f, [], f"icosphere{int(level)}")


# ------------------------------------------------------------------ frames

def discrete_frame(mesh: TriMesh) -> BoundaryFrame:
    """Frame from mesh data alone, for imported meshes.

    ``T`` is the normalized central difference along the positive loop,
    ``N`` the normalized area-weighted mean of incident face normals and
    ``B = T x N`` normalized.
    """
    if not mesh.boundary_loops:
        raise MissingFrame("closed mesh has no boundary frame")
    fn = face_normals(mesh.positions, mesh.faces)
    acc = np.zeros_like(mesh.positions)
    for c in range(3):
        np.add.at(acc, mesh.faces[:, c], fn)
    Ts, Ns, Bs = [], [], []
    for loop in mesh.boundary_loops:
        p = mesh.positions
        T = p[np.roll(loop, -1)] - p[np.roll(loop, 1)]
        T /= np.linalg.norm(T, axis=1, keepdims=True)
        N = acc[loop] / np.linalg.norm(acc[loop], axis=1, keepdims=True)
        B = np.cross(T, N)
        nb = np.linalg.norm(B, axis=1)
        if nb.min() < 1e-8:
            raise DegenerateFrame(f"T parallel to N at vertex {loop[np.argmin(nb)]}")
        B /= nb[:, None]
        # re-orthogonalize N so the frame is orthonormal
        N = np.cross(B, T)
        Ts.append(T)
        Ns.append(N)
        Bs.append(B)
    return BoundaryFrame(mesh.boundary_vertices, np.concatenate(Ts),
                         np.concatenate(Ns), np.concatenate(Bs))


# --------------------------------------------------------------------- I/O

def write_obj(mesh: TriMesh, path) -> None:
    """Write positions ``(i, j, k) -> (x, y, z)`` and 1-based faces."""
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.positions]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path, tag: str = "obj") -> TriMesh:
    """Read a triangle OBJ file (``v`` and ``f`` records only).

    Raises
    ------
    ParseError
        Empty or malformed files.
    NonTriangleFace
        Any face with other than three vertices.
    """
    verts, faces = [], []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
                if len(parts) < 4:
                    raise ValueError
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) for tok in parts[1:]]
                if len(idx) != 3:
                    raise NonTriangleFace(f"line {lineno}: face with {len(idx)} vertices")
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
        except NonTriangleFace:
            raise
        except (ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: cannot parse {raw!r}") from exc
    if not verts or not faces:
        raise ParseError(f"{path}: no vertices or faces")
    try:
        return TriMesh(np.array(verts), np.array(faces), tag=tag)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def write_frame_json(mesh: TriMesh, path) -> None:
    """Sidecar with the per-vertex ``[T, N, B]`` boundary frame."""
    fr = mesh.require_frame()
    data = {
        "vertices": fr.vertices.tolist(),
        "boundary_frame": [[t.tolist(), n.tolist(), b.tolist()]
                           for t, n, b in zip(fr.T, fr.N, fr.B)],
    }
    Path(path).write_text(json.dumps(data, indent=1))


def read_frame_json(path) -> BoundaryFrame:
    try:
        data = json.loads(Path(path).read_text())
        arr = np.array(data["boundary_frame"], dtype=float)
        verts = np.array(data["vertices"], dtype=np.int64)
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"{path}: malformed frame sidecar") from exc
    return BoundaryFrame(verts, arr[:, 0], arr[:, 1], arr[:, 2])
