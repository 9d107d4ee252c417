import numpy as np
import pytest

from qdirac.errors import (DegenerateFace, InvalidResolution, MissingFrame, NonManifold,
                           NonTriangleFace, ParseError)
from qdirac.mesh import (TriMesh, boundary_loops, discrete_frame, euler_characteristic,
                         face_normals, gen_flat_disc, gen_hemisphere, gen_icosphere,
                         gen_symmetric_sphere, mean_edge_length, read_frame_json,
                         read_obj, unique_edges, vertex_normals, write_frame_json,
                         write_obj)
from qdirac.quat import imag, qconj, qexp, qmul

GENERATORS = [
    lambda: gen_flat_disc(4, 12),
    lambda: gen_hemisphere(4, 12),
    lambda: gen_symmetric_sphere(4, 12),
    lambda: gen_icosphere(2),
]


@pytest.mark.parametrize("make", GENERATORS)
def test_generated_meshes_are_valid(make):
    m = make()
    assert len(boundary_loops(m)) == len(m.boundary_loops)
    chi = euler_characteristic(m)
    assert chi == (1 if m.boundary_loops else 2)


def test_counts():
    m = gen_flat_disc(3, 8)
    assert m.n_vertices == 1 + 3 * 8
    assert len(m.faces) == 8 + 2 * 8 * 2
    assert len(m.boundary_loops[0]) == 8
    assert gen_icosphere(3).n_vertices == 642
    assert gen_icosphere(0).n_vertices == 12


def test_hemisphere_on_unit_sphere():
    m = gen_hemisphere(6, 24)
    assert np.abs(np.linalg.norm(m.positions, axis=1) - 1).max() < 1e-12
    assert m.positions[:, 0].max() < 1e-12           # southern: i-coordinate <= 0
    assert np.abs(m.positions[m.boundary_vertices, 0]).max() < 1e-12


def test_outward_orientation():
    for m in (gen_icosphere(2), gen_symmetric_sphere(4, 12)):
        c = m.positions[m.faces].mean(axis=1)
        assert np.all(np.sum(face_normals(m.positions, m.faces) * c, axis=1) > 0)


def test_boundary_loop_positive():
    # the disc lies in the jk-plane with normal -i; positive loops turn
    # counterclockwise around that normal
    m = gen_flat_disc(3, 10)
    loop = m.positions[m.boundary_loops[0]]
    area = 0.5 * np.sum(np.cross(loop, np.roll(loop, -1, axis=0)), axis=0)
    n = face_normals(m.positions, m.faces).sum(axis=0)
    assert np.dot(area, n) > 0


@pytest.mark.parametrize("make", [lambda: gen_flat_disc(3, 12), lambda: gen_hemisphere(3, 12),
                                  lambda: gen_symmetric_sphere(3, 12)])
def test_rotation_symmetry(make):
    m = make()
    th = 2 * np.pi / m.n_s
    a = qexp([1.0, 0, 0], th / 2)
    expect = imag(qmul(qmul(qconj(a), m.positions), a))
    assert np.abs(m.positions[m.rotation] - expect).max() < 1e-14
    assert sorted(m.rotation) == list(range(m.n_vertices))


@pytest.mark.parametrize("make", [lambda: gen_flat_disc(3, 12), lambda: gen_hemisphere(3, 12)])
def test_analytic_frame(make):
    m = make()
    fr = m.require_frame()
    assert np.array_equal(fr.vertices, m.boundary_vertices)
    d = discrete_frame(m)
    # central differences on a regular polygon give the exact tangent direction
    assert np.abs(d.T - fr.T).max() < 1e-12
    assert np.abs(d.N - fr.N).max() < 0.3


def test_missing_frame():
    with pytest.raises(MissingFrame):
        gen_icosphere(1).require_frame()


def test_invalid_resolution():
    with pytest.raises(InvalidResolution):
        gen_flat_disc(0, 12)
    with pytest.raises(InvalidResolution):
        gen_hemisphere(2, 2)
    with pytest.raises(InvalidResolution):
        gen_icosphere(9)


def test_non_manifold():
    pos = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1.0]])
    faces = np.array([[0, 1, 2], [1, 0, 3], [0, 1, 4]])
    with pytest.raises(NonManifold):
        TriMesh(pos, faces)


def test_degenerate_face():
    pos = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0.0]])
    with pytest.raises(DegenerateFace):
        TriMesh(pos, np.array([[0, 1, 2]]))


def test_obj_roundtrip(tmp_path):
    m = gen_hemisphere(3, 8)
    write_obj(m, tmp_path / "m.obj")
    r = read_obj(tmp_path / "m.obj")
    assert np.array_equal(r.faces, m.faces)
    assert np.abs(r.positions - m.positions).max() == 0.0
    write_frame_json(m, tmp_path / "f.json")
    fr = read_frame_json(tmp_path / "f.json")
    assert np.array_equal(fr.T, m.frame.T)


def test_obj_errors(tmp_path):
    p = tmp_path / "q.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(NonTriangleFace):
        read_obj(p)
    p.write_text("v 0 0\n")
    with pytest.raises(ParseError):
        read_obj(p)
    p.write_text("")
    with pytest.raises(ParseError):
        read_obj(p)


def test_helpers():
    m = gen_icosphere(2)
    assert len(unique_edges(m.faces)) == 3 * len(m.faces) // 2
    vn = vertex_normals(m)
    assert np.all(np.sum(vn * m.positions, axis=1) > 0.99)
    assert 0 < mean_edge_length(m) < 0.3
