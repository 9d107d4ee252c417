import numpy as np
import pytest
from scipy.sparse.linalg import norm

from qdirac.dirac import (apply, assemble, cotan_weights, export_coo, induced_cometric,
                          mean_curvature_halfdensity, mixed_voronoi_area,
                          read_potential_csv, symbol)
from qdirac.errors import ParseError
from qdirac.mesh import (gen_flat_disc, gen_hemisphere, gen_icosphere,
                         gen_symmetric_sphere, mean_edge_length)
from qdirac.quat import as_quat, qmul

MESHES = {
    "disc": lambda: gen_flat_disc(4, 16),
    "hemisphere": lambda: gen_hemisphere(4, 16),
    "sphere": lambda: gen_symmetric_sphere(4, 16),
    "icosphere": lambda: gen_icosphere(2),
}


@pytest.mark.parametrize("name", MESHES)
def test_constants_in_kernel(name, rng):
    m = MESHES[name]()
    s = assemble(m)
    c = np.tile(rng.normal(size=4), m.n_vertices)
    assert np.abs(s.K @ c).max() < 1e-14
    assert np.abs(s.B @ c).max() < 1e-12


@pytest.mark.parametrize("name", ["sphere", "icosphere"])
def test_symmetric_on_closed_meshes(name):
    s = assemble(MESHES[name]())
    K = s.K
    assert norm(K - K.T) <= 1e-13 * norm(K)


def test_boundary_asymmetry_is_nonzero():
    s = assemble(gen_hemisphere(4, 16))
    assert norm(s.K - s.K.T) > 1e-3 * norm(s.K)


def test_mass_is_total_area():
    s = assemble(gen_icosphere(3))
    assert np.isclose(s.M.sum() / 4, s.W.sum() / 4)
    assert 0 < 4 * np.pi - s.M.sum() / 4 < 0.1          # inscribed polyhedron


def test_potential_shift(rng):
    m = gen_icosphere(1)
    rho = rng.normal(size=len(m.faces))
    s0, s1 = assemble(m), assemble(m, rho)
    lam = rng.normal(size=(m.n_vertices, 4))
    diff = (s1.K - s0.K) @ lam.ravel()
    area = s0.W[::4]
    w = np.zeros(m.n_vertices)
    np.add.at(w, m.faces.ravel(), np.repeat(rho * area / 3, 3))
    assert np.allclose(diff.reshape(-1, 4), -w[:, None] * lam)
    assert np.allclose(assemble(m, 2.0).rho, 2.0)


def test_squared_form_is_psd():
    s = assemble(gen_icosphere(1))
    w = np.linalg.eigvalsh(s.Q.toarray())
    assert w.min() > -1e-12


def test_galerkin_eigenspinor_on_sphere():
    # lam = f q solves D lam = -2 lam on the unit sphere
    vals = []
    for level in (2, 3):
        m = gen_icosphere(level)
        s = assemble(m)
        q = np.array([0.3, -0.1, 0.7, 0.2])
        lam = qmul(as_quat(m.positions), q).ravel()
        vals.append(lam @ (s.K @ lam) / (lam @ (s.M * lam)))
    err = [abs(v + 2) for v in vals]
    assert err[1] < 0.02
    assert err[1] < err[0] / 2


def test_apply_layout(rng):
    m = gen_icosphere(1)
    s = assemble(m)
    lam = rng.normal(size=(m.n_vertices, 4))
    out = apply(s, lam)
    assert out.shape == lam.shape
    assert np.allclose(out.ravel(), apply(s, lam.ravel()))


def test_symbol_clifford_identity(rng):
    m = gen_hemisphere(3, 10)
    for face in rng.integers(0, len(m.faces), 5):
        xi = rng.normal(size=2)
        S = symbol(m, face, xi)
        g = induced_cometric(m, face)
        assert np.allclose(S @ S, -(xi @ g @ xi) * np.eye(4), atol=1e-10)


def test_mean_curvature_sphere_convergence():
    errs = []
    for level in (2, 3, 4):
        mc = mean_curvature_halfdensity(gen_icosphere(level))
        errs.append(np.abs(mc.H - 1).max())
    assert errs[-1] < 1e-4
    assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3


def test_mean_curvature_scaling_and_flat():
    m = gen_icosphere(3)
    big = m.with_positions(2 * m.positions)
    assert np.allclose(mean_curvature_halfdensity(big).H, 0.5, atol=1e-3)
    d = gen_flat_disc(4, 16)
    H = mean_curvature_halfdensity(d).H
    assert np.abs(H[d.interior_mask]).max() < 1e-12


def test_voronoi_area_partitions_surface():
    m = gen_hemisphere(5, 20)
    assert np.isclose(mixed_voronoi_area(m).sum(), assemble(m).W.sum() / 4)


def test_cotan_weights_flat_constant_harmonic():
    m = gen_flat_disc(3, 12)
    e, w = cotan_weights(m)
    L = np.zeros((m.n_vertices, m.n_vertices))
    for (a, b), wab in zip(e, w):
        L[a, b] -= wab
        L[b, a] -= wab
        L[a, a] += wab
        L[b, b] += wab
    # linear functions are discretely harmonic at interior vertices
    x = m.positions[:, 1]
    assert np.abs((L @ x)[m.interior_mask]).max() < 1e-12
    assert mean_edge_length(m) > 0


def test_potential_csv(tmp_path):
    p = tmp_path / "rho.csv"
    p.write_text("face,rho\n0,1.5\n3,-2\n")
    rho = read_potential_csv(p, 5)
    assert np.allclose(rho, [1.5, 0, 0, -2, 0])
    p.write_text("0,1\n9,2\n")
    with pytest.raises(ParseError):
        read_potential_csv(p, 5)


def test_export_coo(tmp_path):
    s = assemble(gen_icosphere(0))
    export_coo(s, tmp_path / "k.txt")
    data = np.loadtxt(tmp_path / "k.txt")
    assert len(data) == s.K.nnz
