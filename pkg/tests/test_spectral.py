import numpy as np
import pytest
import scipy.sparse as sp

from qdirac.boundary import (bcproof_gauge, canonical_bc, constraint_basis,
                             family_bcproof)
from qdirac.dirac import assemble
from qdirac.errors import (AmbiguousRank, AsymmetryTooLarge, ClusterSplit, NoSymmetry)
from qdirac.mesh import gen_flat_disc, gen_hemisphere, gen_icosphere, gen_symmetric_sphere
from qdirac.spectral import (_match, constrained_operator, eigen_constrained,
                             fourier_decompose, fredholm_index, index_lemma_check,
                             index_lemma_dims, inertia_count, kernel_dim, rotation_action,
                             spectral_flow)
from qdirac.vekua import quaternionic_vekua_bc


@pytest.fixture(scope="module")
def ico2():
    m = gen_icosphere(2)
    return m, assemble(m), constraint_basis(m, None)


def test_inertia_count_matches_dense(rng):
    A = rng.normal(size=(40, 40))
    A = A + A.T
    w = np.linalg.eigvalsh(A)
    for shift in (-3.1, 0.05, 2.7):
        assert inertia_count(sp.csr_matrix(A), shift) == np.sum(w < shift)


def test_closed_operator_symmetric(ico2):
    m, s, basis = ico2
    op = constrained_operator(s, basis)
    assert op.asymmetry < 1e-14


def test_sphere_window(ico2):
    m, s, basis = ico2
    spec = eigen_constrained(s, basis, window=(-2.5, 1.5))
    counts = {mu: int(np.sum(np.abs(spec.eigenvalues - mu) < 0.3)) for mu in (-2, 0, 1)}
    assert counts == {-2: 4, 0: 4, 1: 8}
    assert not np.any((spec.eigenvalues > -1.4) & (spec.eigenvalues < -0.6))
    X = spec.flat()
    G = X.T @ (s.M[:, None] * X)
    assert np.abs(G - np.eye(len(G))).max() < 1e-10


def test_dense_and_sparse_paths_agree(ico2):
    m, s, basis = ico2
    a = eigen_constrained(s, basis, window=(-2.5, 1.5), dense_threshold=10 ** 6)
    b = eigen_constrained(s, basis, window=(-2.5, 1.5), dense_threshold=10)
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-9)


def test_count_mode(ico2):
    m, s, basis = ico2
    spec = eigen_constrained(s, basis, count=4)
    assert np.abs(spec.eigenvalues).max() < 1e-10
    with pytest.raises(ValueError):
        eigen_constrained(s, basis)


def test_hemisphere_t0_kernel():
    m = gen_hemisphere(6, 24)
    fam = family_bcproof(m, 8)
    spec = eigen_constrained(assemble(m), constraint_basis(m, fam.sample(0)),
                             window=(-2.5, 0.5))
    assert np.sum(np.abs(spec.eigenvalues) < 1e-10) == 2
    assert np.sum(np.abs(spec.eigenvalues + 2) < 0.1) == 2


def test_asymmetry_guard():
    m = gen_hemisphere(4, 16)
    bc = canonical_bc(m, "T", [1.0, 0, 0])
    with pytest.raises(AsymmetryTooLarge):
        eigen_constrained(assemble(m), constraint_basis(m, bc), window=(-1, 1),
                          max_asymmetry=1e-3)


def test_kernel_dim_vekua_small():
    m = gen_flat_disc(8, 32)
    s = assemble(m)
    for (p1, p2), (ker, coker) in {(0, 0): (2, 0), (1, 1): (0, 2)}.items():
        rep = fredholm_index(m, quaternionic_vekua_bc(m, p1, p2), system=s)
        assert (rep.ker_dim, rep.coker_dim, rep.index) == (ker, coker, ker - coker)
        assert rep.deg_V == 1 - p1 - p2
        assert rep.kernel.gap_ratio >= 100
    js = rep.to_json()
    assert js["index"] == -2


def test_ambiguous_rank():
    m = gen_flat_disc(6, 24)
    bc = quaternionic_vekua_bc(m, 0, 0)
    with pytest.raises(AmbiguousRank) as info:
        kernel_dim(assemble(m), constraint_basis(m, bc), threshold=10.0)
    assert info.value.report is not None


def test_match_rules():
    lo, hi, band, jump = -1.5, -0.5, 0.25, 0.25
    v0 = np.array([-1.2, -0.9])
    assert _match(v0, np.array([-1.1, -0.95]), lo, hi, band, jump) is not None
    i0, i1 = _match(v0, np.array([-1.45, -1.2, -0.9]), lo, hi, band, jump)
    assert list(i0) == [0, 1] and list(i1) == [1, 2]
    # an eigenvalue may not appear in the middle of the window
    assert _match(v0, np.array([-1.2, -1.0, -0.9]), lo, hi, band, jump) is None


def test_spectral_flow_small():
    m = gen_hemisphere(6, 24)
    fam = family_bcproof(m, 16)
    flow = spectral_flow(m, fam, level=-1.0)
    assert flow.sf == 1
    assert len(flow.crossings) == 1
    assert abs(flow.crossings[0].t - np.pi) < 2 * np.pi / 16
    rows = flow.track_rows()
    assert len(rows) == sum(len(v) for v in flow.eigenvalues)


def test_fourier_sphere_modes():
    m = gen_symmetric_sphere(6, 24)
    s = assemble(m)
    spec = eigen_constrained(s, constraint_basis(m, None), window=(-0.5, 2.5),
                             dense_threshold=10 ** 5)
    assert fourier_decompose(m, spec, 0.0).modes == {0: 4}
    assert fourier_decompose(m, spec, 1.0).n_modes == 2
    assert fourier_decompose(m, spec, 2.0).n_modes == 3


def test_fourier_hemisphere_tpi_invariant():
    m = gen_hemisphere(8, 32)
    fam = family_bcproof(m, 8)
    bc = fam.at(np.pi)
    spec = eigen_constrained(assemble(m), constraint_basis(m, bc), window=(-1.5, -0.5))
    fm = fourier_decompose(m, spec, spec.eigenvalues[0], cluster_tol=0.2,
                           gauge=bcproof_gauge(np.pi))
    assert np.allclose(fm.angles, 0.0, atol=1e-8)


def test_fourier_errors(ico2):
    m, s, basis = ico2
    with pytest.raises(NoSymmetry):
        rotation_action(m)
    sph = gen_symmetric_sphere(4, 16)
    spec = eigen_constrained(assemble(sph), constraint_basis(sph, None), window=(-2.5, 1.5))
    with pytest.raises(ClusterSplit):
        fourier_decompose(sph, spec, 0.0, cluster_tol=1.5)


def test_rotation_action_orthogonal():
    m = gen_flat_disc(3, 12)
    U = rotation_action(m).toarray()
    assert np.allclose(U.T @ U, np.eye(len(U)))
    L = rotation_action(m, right=False).toarray()
    assert np.allclose(np.linalg.matrix_power(L, 12), -np.eye(len(L)))


def test_index_lemma():
    d = index_lemma_dims(3, 1, 1, seed=0, B=[[1, 0, 0]], C=[[0, 1, 0]])
    assert d == {"A": (1, 0), "C|kerB": (1, 0)}
    assert all(index_lemma_check(4, 2, 3, seed=s) for s in range(10))
    with pytest.raises(ValueError):
        index_lemma_dims(2, 3, 1, seed=0)
