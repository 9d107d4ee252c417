import numpy as np
import pytest
from scipy.spatial import cKDTree

from qdirac.errors import AllZeroSpinor, BoundaryNotPlanar, InputError, WeldFailure
from qdirac.mesh import (euler_characteristic, gen_flat_disc, gen_hemisphere, gen_icosphere,
                         gen_symmetric_sphere)
from qdirac.quat import as_quat, qmul, qnorm
from qdirac.spin import (dirac_sphere_table, double_reflect, edge_targets, plane_fit,
                         procrustes, revolution_deviation, spin_transform, verify_mc_density)


@pytest.fixture(scope="module")
def ico():
    return gen_icosphere(2)


def test_constant_spinor_is_similarity(ico, rng):
    q = rng.normal(size=4)
    r = spin_transform(ico, q)
    res, R, s, _ = procrustes(ico.positions, r.mesh.positions)
    assert res < 1e-12
    assert s == pytest.approx(qnorm(q) ** 2)
    assert r.closure_residual < 1e-13


def test_sign_invariance(ico, rng):
    lam = rng.normal(size=(ico.n_vertices, 4))
    a, b = spin_transform(ico, lam), spin_transform(ico, -lam)
    assert np.allclose(a.mesh.positions, b.mesh.positions, atol=1e-12)


def test_right_unit_factor_rotates(ico, rng):
    lam = qmul(as_quat(ico.positions), [0.2, 0.5, -0.3, 0.8]) + 0.5
    q = rng.normal(size=4)
    q /= qnorm(q)
    a, b = spin_transform(ico, lam), spin_transform(ico, qmul(lam, q))
    res, _, s, _ = procrustes(a.mesh.positions, b.mesh.positions)
    assert res < 1e-12 and s == pytest.approx(1.0)


def test_edge_targets_exact_for_constant(ico):
    from qdirac.dirac import cotan_weights
    edges = cotan_weights(ico)[0]
    t = edge_targets(ico, [0, 0, 0, 2.0], edges)
    e = ico.positions[edges[:, 1]] - ico.positions[edges[:, 0]]
    # conj(2k) e (2k) = 4 * (rotation of e by pi about k)
    assert np.allclose(t, 4 * e * [-1, -1, 1])


def test_all_zero_spinor(ico):
    with pytest.raises(AllZeroSpinor):
        spin_transform(ico, np.zeros((ico.n_vertices, 4)))
    with pytest.raises(ValueError):
        spin_transform(ico, [1.0, 0, 0, 0], fix=-1)


def test_mc_density_constant_scaling(ico):
    r = spin_transform(ico, [1.5, 0, 0, 0])
    assert verify_mc_density(ico, r) < 1e-10
    with pytest.raises(InputError):
        verify_mc_density(gen_icosphere(1), r)


def test_mc_density_sphere_eigenspinor():
    # f q is a -2 eigenspinor of the unit sphere, so H~ sqrt(A~) = (1 - 2) sqrt(A)
    m = gen_icosphere(4)
    lam = qmul(as_quat(m.positions), [0.3, 0.0, 0.4, 0.1]) + 0.0
    r = spin_transform(m, lam)
    assert verify_mc_density(m, r, rho=-2.0) < 0.02
    assert verify_mc_density(m, r, rho=0.0) > 0.5


def test_double_reflect_hemisphere_gives_sphere():
    hemi = gen_hemisphere(6, 24)
    sph = double_reflect(hemi)
    assert euler_characteristic(sph) == 2 and not sph.boundary_loops
    ref = gen_symmetric_sphere(6, 24)
    assert sph.n_vertices == ref.n_vertices
    d, _ = cKDTree(ref.positions).query(sph.positions)
    assert d.max() < 1e-12
    assert revolution_deviation(sph) < 1e-13


def test_double_reflect_commutes_with_transform():
    # a constant spinor keeps the boundary planar, doubling commutes with it
    hemi = gen_hemisphere(4, 16)
    q = np.array([0.7, 0.0, 0.0, 0.0])
    a = double_reflect(spin_transform(hemi, q))
    sph = double_reflect(hemi)
    b = spin_transform(sph, q, fix=0)
    assert procrustes(a.positions, b.mesh.positions)[0] < 1e-12


def test_double_reflect_errors():
    hemi = gen_hemisphere(4, 16)
    tilted = hemi.with_positions(hemi.positions + 0.1 * hemi.positions[:, [1]] * [1, 0, 0])
    with pytest.raises(BoundaryNotPlanar):
        double_reflect(tilted)
    with pytest.raises(WeldFailure):
        double_reflect(gen_icosphere(1))


def test_plane_fit(rng):
    P = rng.normal(size=(50, 3))
    P[:, 2] = 0.5
    n, c, res = plane_fit(P)
    assert abs(abs(n[2]) - 1) < 1e-12 and res < 1e-12


def test_procrustes_recovers_similarity(rng):
    A = rng.normal(size=(30, 3))
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1
    B = 2.5 * A @ Q.T + [1, 2, 3]
    res, R, s, t = procrustes(A, B)
    assert res < 1e-12 and np.allclose(R, Q) and s == pytest.approx(2.5)
    # a mirror image is not reachable by a proper similarity
    assert procrustes(A, -B)[0] > 0.1
    assert procrustes(A, -B, allow_reflection=True)[0] < 1e-12


def test_small_table():
    tab = dirac_sphere_table(6, 24, mus=(0, 1), reflection=False)
    assert tab.modes == {0: {0: 4}, 1: {0: 4, 1: 4}}
    rows = tab.rows()
    assert [r["l"] for r in rows] == [0, 0, 1]
    assert rows[0]["revolution_deviation"] < 1e-10
    assert rows[1]["revolution_deviation"] < 1e-10
    assert all(r["reflection_deviation"] is None for r in rows)
    with pytest.raises(ValueError):
        dirac_sphere_table(6, 24, mus=(-1,))


def test_flat_disc_identity():
    d = gen_flat_disc(3, 12)
    r = spin_transform(d, [1.0, 0, 0, 0], fix=0)
    assert np.allclose(r.mesh.positions, d.positions - d.positions[0])
