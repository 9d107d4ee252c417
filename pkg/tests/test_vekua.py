import numpy as np
import pytest

from qdirac import vekua
from qdirac.errors import ConfigError, MismatchBeyondTolerance, RankUnstable, WrongMesh
from qdirac.mesh import gen_flat_disc, gen_hemisphere
from qdirac.quat import plane_membership
from qdirac.vekua import (VekuaSpec, dbar_coker_dim, dbar_kernel_dim, laplace_kernel_dim,
                          laplace_kernel_oracle, poly_kernel_oracle, quaternionic_vekua_bc,
                          vekua_experiment)

# Real dimensions counted by hand from the Fourier coefficients
# lam = sum a_m z^m with a_{m-p} + conj(a_{-m-p}) = 0 for every m.
POLY = {-4: 9, -3: 7, -2: 5, -1: 3, 0: 1, 1: 0, 2: 0, 3: 0, 4: 0}
LAPLACE = {-4: 10, -3: 8, -2: 6, -1: 4, 0: 2, 1: 1, 2: 1, 3: 1, 4: 1}


@pytest.mark.parametrize("p", range(-4, 5))
def test_poly_oracle(p):
    assert poly_kernel_oracle(p) == POLY[p] == dbar_kernel_dim(p)
    assert poly_kernel_oracle(1 - p) == dbar_coker_dim(p)


@pytest.mark.parametrize("p", range(-4, 5))
def test_laplace_oracle(p):
    assert laplace_kernel_oracle(p) == LAPLACE[p] == laplace_kernel_dim(p)


def test_scalar_index():
    for p in range(-6, 7):
        assert dbar_kernel_dim(p) - dbar_coker_dim(p) == 1 - 2 * p


def test_oracle_degree_checks(monkeypatch):
    with pytest.raises(ConfigError):
        poly_kernel_oracle(3, K=5)
    with pytest.raises(ConfigError):
        laplace_kernel_oracle(3, K=5)
    monkeypatch.setattr(vekua, "_poly_dim", lambda p, K: K)
    with pytest.raises(RankUnstable):
        poly_kernel_oracle(0)


def test_spec_validation():
    assert VekuaSpec(1, -2).K == 8
    with pytest.raises(ConfigError):
        VekuaSpec(9, 0)
    with pytest.raises(ConfigError):
        VekuaSpec(1, 1, K=3)


def test_bc_on_circle():
    m = gen_flat_disc(3, 16)
    bc = quaternionic_vekua_bc(m, 1, 2)
    assert np.allclose(np.linalg.norm(bc.V, axis=1), 1)
    assert np.allclose(np.linalg.norm(bc.Vt, axis=1), 1)
    with pytest.raises(WrongMesh):
        quaternionic_vekua_bc(gen_hemisphere(3, 16), 0, 0)
    bc0 = quaternionic_vekua_bc(m, 0, 0)
    assert np.allclose(bc0.V, [0, -1.0, 0]) and np.allclose(bc0.Vt, [0, 1.0, 0])
    # with nu = 1 the constants i and k satisfy -j lam = lam j, the constant 1 does not
    n = len(bc0.vertices)
    for q, inside in (([0, 1.0, 0, 0], True), ([0, 0, 0, 1.0], True), ([1.0, 0, 0, 0], False)):
        res = plane_membership(bc0.V, bc0.Vt, np.tile(q, (n, 1))).max()
        assert bool(res < 1e-12) is inside


def test_experiment_small():
    res = vekua_experiment(VekuaSpec(1, 0, n_r=8, n_s=32))
    assert res.agrees
    row = res.row()
    assert (row["fem_ker"], row["fem_coker"], row["index"]) == (1, 1, 0)
    assert row["pred_index"] == 0 and row["deg_V"] == 0


def test_experiment_strict(monkeypatch):
    monkeypatch.setattr(vekua, "poly_kernel_oracle", lambda p, K=None: 5)
    with pytest.raises(MismatchBeyondTolerance):
        vekua_experiment(VekuaSpec(0, 0, n_r=6, n_s=24))
    res = vekua_experiment(VekuaSpec(0, 0, n_r=6, n_s=24), strict=False)
    assert not res.agrees
