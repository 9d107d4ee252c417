"""Riemann-Hilbert model problems on the flat disc.

For ``nu = z^p`` the scalar problem ``dbar lam = 0`` with
``Re(nu lam) = 0`` on the unit circle has a kernel of real dimension
``max(0, 1 - 2p)`` and a cokernel of dimension ``max(0, 2p - 1)``.  The
quaternionic condition ``V = -j nu1 nu2``, ``Vt = j conj(nu1) nu2`` on the
disc ``f = j z`` decouples into two such problems.  This module provides
the boundary condition, exact Fourier-mode oracles for the scalar
dimensions and the finite element experiment comparing both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryCondition
from .errors import ConfigError, MismatchBeyondTolerance, RankUnstable, WrongMesh
from .mesh import TriMesh, gen_flat_disc
from .quat import J, complex_to_quat, imag, qmul

__all__ = [
    "VekuaSpec", "VekuaResult", "quaternionic_vekua_bc", "poly_kernel_oracle",
    "laplace_kernel_oracle", "dbar_kernel_dim", "dbar_coker_dim",
    "laplace_kernel_dim", "vekua_experiment",
]


@dataclass(frozen=True)
class VekuaSpec:
    """Exponents ``p1, p2`` of ``nu_i = z^{p_i}``, disc resolution and oracle degree."""

    p1: int
    p2: int
    n_r: int = 16
    n_s: int = 64
    K: int | None = None

    def __post_init__(self):
        if abs(self.p1) > 8 or abs(self.p2) > 8:
            raise ConfigError("exponents must satisfy |p| <= 8")
        kmin = 2 * max(abs(self.p1), abs(self.p2)) + 4
        if self.K is None:
            object.__setattr__(self, "K", kmin)
        elif self.K < kmin:
            raise ConfigError(f"oracle degree K must be >= {kmin}")


def quaternionic_vekua_bc(mesh: TriMesh, p1: int, p2: int) -> BoundaryCondition:
    """``V = -j nu1 nu2`` and ``Vt = j conj(nu1) nu2`` with ``nu_i = z^{p_i}``."""
    if mesh.tag != "flat_disc" or mesh.param is None:
        raise WrongMesh("the Vekua condition lives on gen_flat_disc meshes")
    verts = mesh.boundary_vertices
    z = mesh.param[verts]
    z = z / np.abs(z)
    nu1, nu2 = z ** p1, z ** p2
    V = -imag(qmul(J, complex_to_quat(nu1 * nu2)))
    Vt = imag(qmul(J, complex_to_quat(np.conj(nu1) * nu2)))
    return BoundaryCondition(verts, V, Vt)


def dbar_kernel_dim(p: int) -> int:
    return max(0, 1 - 2 * p)


def dbar_coker_dim(p: int) -> int:
    return max(0, 2 * p - 1)


def laplace_kernel_dim(p: int) -> int:
    return 1 if p > 0 else 2 - 2 * p


def _condition_rows(p: int, K: int, first: int = 0):
    """Real rows of ``a_{m-p} + conj(a_{-m-p}) = 0`` for all modes ``m``.

    Unknowns are ``(Re a_k, Im a_k)`` for ``k = first..K`` of
    ``lam = sum a_k z^k``.
    """
    ncoef = K + 1 - first
    rows = []
    for m in range(-K - abs(p) - 1, K + abs(p) + 2):
        re = np.zeros(2 * ncoef)
        im = np.zeros(2 * ncoef)
        touched = False
        for k, sign in ((m - p, 1.0), (-m - p, -1.0)):
            if first <= k <= K:
                c = k - first
                re[2 * c] += 1.0                # Re a_k, both terms
                im[2 * c + 1] += sign           # Im a_k and -Im a_{-m-p}
                touched = True
        if touched:
            rows.extend([re, im])
    return np.array(rows) if rows else np.zeros((0, 2 * ncoef))


def _rank(A) -> int:
    if A.size == 0:
        return 0
    return int(np.linalg.matrix_rank(A, tol=1e-10))


def _poly_dim(p, K):
    return 2 * (K + 1) - _rank(_condition_rows(p, K))


def poly_kernel_oracle(p: int, K: int | None = None) -> int:
    """Real dimension of holomorphic polynomials with ``Re(z^p lam) = 0`` on ``|z| = 1``.

    The rank is computed at degree ``K`` and ``K + 2``.

    Raises
    ------
    RankUnstable
        If the two degrees disagree.

    Examples
    --------
    >>> [poly_kernel_oracle(p) for p in (0, -1, 2)]
    [1, 3, 0]
    """
    K = 2 * abs(p) + 4 if K is None else K
    if K < 2 * abs(p) + 4:
        raise ConfigError("oracle degree too small")
    d1, d2 = _poly_dim(p, K), _poly_dim(p, K + 2)
    if d1 != d2:
        raise RankUnstable(f"kernel dimension depends on K: {d1} vs {d2}")
    return d1


def _laplace_dim(p, K):
    # f = Re(sum_{k=0}^K c_k z^k) has 2K + 1 real parameters (Im c_0 is
    # invisible); d f = 1/2 sum k c_k z^{k-1} is a bijective relabeling of
    # (c_1..c_K) onto degree-(K-1) holomorphic polynomials.
    A = _condition_rows(p, K - 1)
    return 2 * K + 1 - _rank(A)


def laplace_kernel_oracle(p: int, K: int | None = None) -> int:
    """Real dimension of harmonic polynomials ``f`` with ``Re(z^p df) = 0``.

    Examples
    --------
    >>> [laplace_kernel_oracle(p) for p in (1, 0, -1)]
    [1, 2, 4]
    """
    K = 2 * abs(p) + 4 if K is None else K
    if K < 2 * abs(p) + 4:
        raise ConfigError("oracle degree too small")
    d1, d2 = _laplace_dim(p, K), _laplace_dim(p, K + 2)
    if d1 != d2:
        raise RankUnstable(f"kernel dimension depends on K: {d1} vs {d2}")
    return d1


@dataclass(frozen=True)
class VekuaResult:
    spec: VekuaSpec
    fem: object                  # IndexReport
    predicted: dict
    oracle: dict

    @property
    def agrees(self) -> bool:
        f = self.fem
        return (f.ker_dim, f.coker_dim) == (self.oracle["ker"], self.oracle["coker"])

    def row(self) -> dict:
        f = self.fem
        return {"p1": self.spec.p1, "p2": self.spec.p2,
                "pred_ker": self.predicted["ker"], "pred_coker": self.predicted["coker"],
                "pred_index": self.predicted["index"],
                "oracle_ker": self.oracle["ker"], "oracle_coker": self.oracle["coker"],
                "fem_ker": f.ker_dim, "fem_coker": f.coker_dim, "index": f.index,
                "deg_V": f.deg_V, "ker_gap": f.kernel.gap_ratio,
                "coker_gap": f.cokernel.gap_ratio}


def vekua_experiment(spec: VekuaSpec, strict: bool = True, **kernel_kw) -> VekuaResult:
    """Finite element index of the quaternionic Vekua problem versus oracles.

    The cokernel oracle of a factor uses the duality
    ``coker(p) = ker(1 - p)`` of the scalar problem.

    Raises
    ------
    MismatchBeyondTolerance
        With ``strict``, if finite element dimensions disagree with the
        oracle sums.
    """
    from .spectral import fredholm_index

    mesh = gen_flat_disc(spec.n_r, spec.n_s)
    bc = quaternionic_vekua_bc(mesh, spec.p1, spec.p2)
    rep = fredholm_index(mesh, bc, **kernel_kw)
    ps = (spec.p1, spec.p2)
    predicted = {"ker": sum(dbar_kernel_dim(p) for p in ps),
                 "coker": sum(dbar_coker_dim(p) for p in ps),
                 "index": 2 * (1 - spec.p1 - spec.p2)}
    oracle = {"ker": sum(poly_kernel_oracle(p, spec.K) for p in ps),
              "coker": sum(poly_kernel_oracle(1 - p, spec.K + 2) for p in ps)}
    res = VekuaResult(spec, rep, predicted, oracle)
    if strict and not res.agrees:
        raise MismatchBeyondTolerance(
            f"FEM (ker, coker) = ({rep.ker_dim}, {rep.coker_dim}) but oracle gives "
            f"({oracle['ker']}, {oracle['coker']}) for (p1, p2) = {ps}")
    return res
