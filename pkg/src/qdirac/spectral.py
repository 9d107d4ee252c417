"""Constrained spectra, kernel dimensions, indices and spectral flow.

Equal-order piecewise linear Galerkin discretizations of first-order
operators carry spurious "doubler" modes: the raw constrained matrix
``P^T K P`` has extra eigenvalues scattered through every window.  The
solver therefore works with two discrete objects:

* the squared form ``Q = B^T W B`` of ``D`` (face values of ``D lam``
  integrated against themselves), a conforming discretization of ``D^2``
  whose low spectrum is clean;
* the stiffness ``K``, used for the sign of ``D`` through a Rayleigh-Ritz
  step on the low eigenspace of ``Q``.

Kernel dimensions are read off the singular values of the stacked
operator ``[M^{-1/2} K P ; h W^{1/2} B P]`` whose second block penalizes
the doubler modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .boundary import (BCFamily, BoundaryCondition, ConstraintBasis,
                       adjoint_bc, check_elliptic, check_selfadjoint,
                       constraint_basis, deg_V)
from .dirac import DiracSystem, assemble, block_sparse
from .errors import (AmbiguousRank, AsymmetryTooLarge, ClusterSplit,
                     NoSymmetry, NotElliptic, NotSelfAdjoint, SolverFailure,
                     WindowLeak)
from .mesh import TriMesh
from .quat import imag, left_mul_matrix, qconj, qexp, qmul, right_mul_matrix

__all__ = [
    "Spectrum", "KernelReport", "IndexReport", "Crossing", "FlowResult",
    "FourierModes", "ConstrainedOperator", "constrained_operator",
    "eigen_constrained", "kernel_dim", "fredholm_index", "spectral_flow",
    "fourier_decompose", "rotation_action", "index_lemma_dims",
    "index_lemma_check", "inertia_count",
]

DENSE_THRESHOLD = 1500
NOISE_FLOOR = 1e-6


# ------------------------------------------------------------------ types

@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs of a constrained Dirac system.

    Attributes
    ----------
    eigenvalues : ndarray, shape (k,)
        Ascending.
    eigenvectors : ndarray, shape (n, 4, k)
        Vertex spinors, orthonormal for the lumped mass.
    window : tuple of float
    asymmetry : float
        Relative Frobenius norm of the antisymmetric part of ``P^T K P``.
    residual_K : ndarray
        ``||K x - mu M x||_{M^-1} / ||x||_M`` per pair.
    residual_Q : ndarray
        ``||Q x - mu^2 M x||_{M^-1} / ||x||_M`` per pair.
    ritz_dim : int
        Dimension of the ``D^2`` subspace used for the Ritz step.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    window: tuple
    asymmetry: float
    residual_K: np.ndarray
    residual_Q: np.ndarray
    ritz_dim: int
    mass_orthonormal: bool = True
    coefficients: np.ndarray | None = field(default=None, repr=False)

    def flat(self, idx=None):
        """Eigenvectors as ``(4n, k)`` columns."""
        X = self.eigenvectors.reshape(-1, self.eigenvectors.shape[-1])
        return X if idx is None else X[:, idx]


@dataclass(frozen=True)
class KernelReport:
    singular_values: np.ndarray
    accepted_dim: int
    gap_ratio: float
    threshold: float
    noise_floor: float
    stabilization: float

    def to_json(self) -> dict:
        return {"singular_values": self.singular_values.tolist(),
                "accepted_dim": self.accepted_dim, "gap_ratio": self.gap_ratio,
                "threshold": self.threshold, "noise_floor": self.noise_floor,
                "stabilization": self.stabilization}


@dataclass(frozen=True)
class IndexReport:
    ker_dim: int
    coker_dim: int
    index: int
    deg_V: int
    kernel: KernelReport
    cokernel: KernelReport

    def to_json(self) -> dict:
        return {"ker_dim": self.ker_dim, "coker_dim": self.coker_dim,
                "index": self.index, "deg_V": self.deg_V,
                "kernel": self.kernel.to_json(), "cokernel": self.cokernel.to_json()}


@dataclass(frozen=True)
class Crossing:
    t: float
    direction: int
    flagged: bool = False


@dataclass(frozen=True, eq=False)
class FlowResult:
    """Tracked window eigenvalues along a family and the net crossing count."""

    t: np.ndarray
    eigenvalues: list
    crossings: list
    sf: int
    level: float
    halfwidth: float
    max_jump: float
    n_solves: int

    def to_json(self) -> dict:
        return {"sf": self.sf, "level": self.level, "halfwidth": self.halfwidth,
                "cross": [{"t": c.t, "dir": c.direction, "flagged": c.flagged}
                          for c in self.crossings],
                "max_jump": self.max_jump, "n_solves": self.n_solves}

    def track_rows(self):
        """Rows ``(t, eig_index, mu)`` for CSV output."""
        return [(t, i, mu) for t, ev in zip(self.t, self.eigenvalues)
                for i, mu in enumerate(ev)]


@dataclass(frozen=True)
class FourierModes:
    """Rotation action on an eigenspace.

    ``angles`` are the eigen-angles of ``U lam = e^{i th/2} lam(r p) e^{-i th/2}``;
    ``quaternionic_angles`` those of the right-linear action
    ``lam -> e^{i th/2} lam(r p)`` (closed meshes only) from which the mode
    numbers ``l`` are read via ``|angle| = (l + 1/2) th``.
    """

    mu: float
    cluster: np.ndarray
    theta: float
    angles: np.ndarray
    quaternionic_angles: np.ndarray | None
    modes: dict
    invariance_residual: float

    @property
    def n_modes(self) -> int:
        return len(self.modes)


# ------------------------------------------------------ constrained forms

@dataclass(frozen=True, eq=False)
class ConstrainedOperator:
    """Whitened constrained matrices ``S P^T K P S`` and ``S P^T Q P S``."""

    K: sp.csr_matrix
    Q: sp.csr_matrix
    P: sp.csr_matrix
    S: np.ndarray
    asymmetry: float


def constrained_operator(system: DiracSystem, basis: ConstraintBasis,
                         Q=None) -> ConstrainedOperator:
    P = basis.P
    Kc = (P.T @ system.K @ P).tocsr()
    anti = Kc - Kc.T
    nk = sp.linalg.norm(Kc)
    asym = float(sp.linalg.norm(anti) / (2 * nk)) if nk > 0 else 0.0
    mc = (P.T @ sp.diags(system.M) @ P).diagonal()
    S = 1.0 / np.sqrt(mc)
    Sd = sp.diags(S)
    Kh = (Sd @ (0.5 * (Kc + Kc.T)) @ Sd).tocsr()
    Qfull = system.Q if Q is None else Q
    Qc = P.T @ Qfull @ P
    Qh = (Sd @ (0.5 * (Qc + Qc.T)) @ Sd).tocsr()
    return ConstrainedOperator(Kh, Qh, P, S, asym)


def inertia_count(A: sp.spmatrix, shift: float) -> int:
    """Number of eigenvalues of the symmetric ``A`` below ``shift``.

    Uses a symmetric-mode sparse LU with diagonal pivoting; by Sylvester's
    law the negative pivots count the eigenvalues below the shift.
    """
    n = A.shape[0]
    B = (A - shift * sp.identity(n, format="csc")).tocsc()
    try:
        lu = spla.splu(B, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise SolverFailure(f"inertia factorization failed at shift {shift}") from exc
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise SolverFailure("inertia factorization used unsymmetric pivoting")
    d = lu.U.diagonal()
    if np.any(d == 0):
        raise SolverFailure(f"shift {shift} is an eigenvalue")
    return int(np.sum(d < 0))


def _low_eigs_dense(Q, upper):
    A = Q.toarray()
    w, Y = la.eigh(A, subset_by_value=(-np.inf, upper), driver="evr")
    return w, Y


def _low_eigs_sparse(Q, upper):
    n = Q.shape[0]
    count = inertia_count(Q, upper)
    if count == 0:
        return np.zeros(0), np.zeros((n, 0))
    if count >= n - 1:
        return _low_eigs_dense(Q, upper)
    sigma = -0.05 * max(upper, 1e-3)
    rng = np.random.default_rng(0)
    for attempt in range(3):
        ncv = min(n, max(2 * count + 20, count + 40) * (attempt + 1))
        try:
            w, Y = spla.eigsh(Q, k=count, sigma=sigma, which="LM", ncv=ncv,
                              tol=1e-12, v0=rng.standard_normal(n), maxiter=20 * n)
        except spla.ArpackNoConvergence:
            continue
        order = np.argsort(w)
        w, Y = w[order], Y[:, order]
        if np.sum(w < upper) == count and np.all(w < upper):
            return w, Y
    raise SolverFailure(f"shift-invert missed eigenvalues below {upper:.4g} "
                        f"(inertia {count})")


def _low_eigs(Q, upper, dense_threshold):
    if Q.shape[0] <= dense_threshold:
        return _low_eigs_dense(Q, upper)
    return _low_eigs_sparse(Q, upper)


def _cut_at_gap(w, lower):
    """Index after the largest relative gap among eigenvalues above ``lower``."""
    idx = np.flatnonzero(w >= lower)
    if len(idx) < 2:
        return len(w)
    lo, hi = w[idx[:-1]], w[idx[1:]]
    rel = (hi - lo) / np.maximum(hi, 1e-12)
    return int(idx[np.argmax(rel)] + 1)


def _ritz(op: ConstrainedOperator, w, Y):
    H = Y.T @ (op.K @ Y)
    H = 0.5 * (H + H.T)
    theta, Z = la.eigh(H)
    return theta, Y @ Z


def eigen_constrained(system: DiracSystem, basis: ConstraintBasis, window=None,
                      count: int | None = None, dense_threshold: int = DENSE_THRESHOLD,
                      pad: float | None = None, max_asymmetry: float = 0.1,
                      op: ConstrainedOperator | None = None) -> Spectrum:
    """All eigenvalues of the constrained Dirac system in a window.

    Parameters
    ----------
    system : DiracSystem
    basis : ConstraintBasis
        Self-adjoint elliptic boundary condition (or identity on closed
        meshes).
    window : (float, float), optional
        Closed interval ``[a, b]``.
    count : int, optional
        Alternatively the number of eigenvalues of smallest modulus.
    dense_threshold : int
        Constrained dimension up to which dense LAPACK solvers are used;
        above it shift-invert Lanczos with inertia validation.
    pad : float, optional
        Extra spectral radius of the ``D^2`` subspace beyond the window.

    Returns
    -------
    Spectrum
    """
    if (window is None) == (count is None):
        raise ValueError("give exactly one of window or count")
    if op is None:
        op = constrained_operator(system, basis)
    if op.asymmetry > max_asymmetry:
        raise AsymmetryTooLarge(f"relative asymmetry {op.asymmetry:.3g} of the "
                                "constrained form; is the condition self-adjoint?")
    if window is not None:
        a, b = float(window[0]), float(window[1])
        if a > b:
            raise ValueError("window must satisfy a <= b")
        radius = max(abs(a), abs(b))
    else:
        radius = 1.0
    n = op.K.shape[0]
    while True:
        p = pad if pad is not None else max(0.75, 0.3 * radius)
        upper = (radius + p) ** 2
        w, Y = _low_eigs(op.Q, upper, dense_threshold)
        keep = _cut_at_gap(w, (radius + 0.3 * p) ** 2)
        w, Y = w[:keep], Y[:, :keep]
        if window is not None or len(w) >= count + 4 or len(w) >= n:
            break
        radius *= 2.0
    theta, X = _ritz(op, w, Y) if len(w) else (np.zeros(0), np.zeros((n, 0)))
    if window is not None:
        sel = np.flatnonzero((theta >= a) & (theta <= b))
    else:
        sel = np.sort(np.argsort(np.abs(theta), kind="stable")[:count])
        a, b = (float(theta[sel].min()), float(theta[sel].max())) if len(sel) else (0.0, 0.0)
    mu = theta[sel]
    Xh = X[:, sel]
    rK = np.linalg.norm(op.K @ Xh - Xh * mu, axis=0)
    rQ = np.linalg.norm(op.Q @ Xh - Xh * mu ** 2, axis=0)
    full = op.P @ (op.S[:, None] * Xh)
    vecs = full.reshape(system.n, 4, len(sel))
    return Spectrum(mu, vecs, (a, b), op.asymmetry, rK, rQ, len(w),
                    True, Xh)


# ------------------------------------------------------------- kernels

def _stacked(system: DiracSystem, basis: ConstraintBasis, stabilization: float):
    P = basis.P
    mc = (P.T @ sp.diags(system.M) @ P).diagonal()
    Sd = sp.diags(1.0 / np.sqrt(mc))
    top = sp.diags(1.0 / np.sqrt(system.M)) @ system.K @ P @ Sd
    if stabilization == 0:
        return top.tocsr()
    bottom = (stabilization * system.h) * sp.diags(np.sqrt(system.W)) @ system.B @ P @ Sd
    return sp.vstack([top, bottom]).tocsr()


def _smallest_singular(A, k, dense_threshold):
    n = A.shape[1]
    if n <= dense_threshold:
        if A.shape[0] * n <= 4e6:
            s = la.svdvals(A.toarray())[::-1]
        else:
            G = (A.T @ A).toarray()
            s = np.sqrt(np.clip(la.eigvalsh(G), 0, None))
        return s[:min(k, n)]
    G = (A.T @ A).tocsc()
    k = min(k, n - 2)
    try:
        w = spla.eigsh(G, k=k, sigma=-1e-6, which="LM", tol=1e-12,
                       v0=np.random.default_rng(0).standard_normal(n),
                       return_eigenvectors=False, ncv=min(n, 2 * k + 20))
    except spla.ArpackNoConvergence as exc:
        raise SolverFailure("singular value iteration did not converge") from exc
    return np.sqrt(np.clip(np.sort(w), 0, None))


def kernel_dim(system: DiracSystem, basis: ConstraintBasis, threshold: float = 0.1,
               gap: float = 100.0, n_values: int = 12, stabilization: float = 1.0,
               dense_threshold: int = DENSE_THRESHOLD,
               noise_floor: float = NOISE_FLOOR) -> KernelReport:
    """Numerical kernel dimension with a certified singular-value gap.

    The kernel is read from the smallest singular values of the stacked
    operator ``[M^{-1/2} K P ; c h W^{1/2} B P] M_c^{-1/2}`` (``c`` is
    ``stabilization``, ``h`` the mean edge length).  ``accepted_dim``
    counts singular values below ``threshold``; the decision is accepted
    only if ``sigma_{d+1} / max(sigma_d, noise_floor) >= gap``.

    Raises
    ------
    AmbiguousRank
        When the gap certificate fails; the report is attached.
    """
    A = _stacked(system, basis, stabilization)
    n = A.shape[1]
    k = min(n_values, n)
    while True:
        s = _smallest_singular(A, k, dense_threshold)
        d = int(np.sum(s < threshold))
        if d < len(s) or len(s) >= n - 2:
            break
        k = min(2 * k, n)
    below = s[d - 1] if d > 0 else 0.0
    above = s[d] if d < len(s) else np.inf
    ratio = float(above / max(below, noise_floor))
    rep = KernelReport(s, d, ratio, threshold, noise_floor, stabilization)
    if ratio < gap:
        raise AmbiguousRank(f"no certified gap: sigma_{d + 1}/sigma_{d} = {ratio:.3g} "
                            f"< {gap:g}", rep)
    return rep


def fredholm_index(mesh: TriMesh, bc: BoundaryCondition, system: DiracSystem | None = None,
                   **kw) -> IndexReport:
    """Kernel, cokernel (kernel of the adjoint condition), index and degree."""
    rep = check_elliptic(mesh, bc)
    if not rep.ok:
        raise NotElliptic(f"not elliptic, margin {rep.margin:.3g}")
    if system is None:
        system = assemble(mesh)
    ker = kernel_dim(system, constraint_basis(mesh, bc), **kw)
    cok = kernel_dim(system, constraint_basis(mesh, adjoint_bc(mesh, bc)), **kw)
    return IndexReport(ker.accepted_dim, cok.accepted_dim,
                       ker.accepted_dim - cok.accepted_dim, deg_V(mesh, bc), ker, cok)


# --------------------------------------------------------- spectral flow

def _match(v0, v1, lo, hi, band, jump):
    """Match window populations, allowing entries/exits near the edges.

    Returns ``(i0, i1)`` index arrays or ``None``.
    """
    best = None
    n0, n1 = len(v0), len(v1)
    for a0 in range(3):
        for b0 in range(3):
            for a1 in range(3):
                for b1 in range(3):
                    m = n0 - a0 - b0
                    if m < 0 or m != n1 - a1 - b1:
                        continue
                    if a0 and a1 or b0 and b1:
                        continue
                    if np.any(v0[:a0] > lo + band) or np.any(v1[:a1] > lo + band):
                        continue
                    if b0 and np.any(v0[n0 - b0:] < hi - band):
                        continue
                    if b1 and np.any(v1[n1 - b1:] < hi - band):
                        continue
                    i0 = np.arange(a0, n0 - b0)
                    i1 = np.arange(a1, n1 - b1)
                    mj = float(np.abs(v1[i1] - v0[i0]).max()) if m else 0.0
                    if mj >= jump:
                        continue
                    cost = (a0 + b0 + a1 + b1, mj)
                    if best is None or cost < best[0]:
                        best = (cost, i0, i1)
    return None if best is None else (best[1], best[2])


def spectral_flow(mesh: TriMesh, family: BCFamily, level: float = -1.0,
                  halfwidth: float = 0.5, system: DiracSystem | None = None,
                  min_step: float | None = None, dense_threshold: int = DENSE_THRESHOLD,
                  flag_tol: float = 1e-3) -> FlowResult:
    """Net number of eigenvalues crossing ``level`` along a family.

    Eigenvalues in ``[level - halfwidth, level + halfwidth]`` are computed at
    every sample.  Consecutive samples are matched by sorted order; an
    eigenvalue may enter or leave only through the outer half of the
    window.  Intervals that cannot be matched are bisected (values between
    samples come from spherical interpolation of the family) down to
    ``min_step`` (default ``2^-10`` of the parameter range).  A crossing
    from ``< level`` to ``>= level`` counts ``+1``.

    Raises
    ------
    NotSelfAdjoint, NotElliptic
        If some evaluated condition fails certification.
    WindowLeak
        If populations cannot be matched at the minimum step.
    """
    if system is None:
        system = assemble(mesh)
    Q = system.Q
    lo, hi = level - halfwidth, level + halfwidth
    span = abs(family.t[-1] - family.t[0])
    if min_step is None:
        min_step = span * 2.0 ** -10
    band, jump = halfwidth / 2, halfwidth / 2
    solves = [0]

    def evaluate(t):
        bc = family.at(t)
        sa = check_selfadjoint(mesh, bc)
        if not sa.ok:
            raise NotSelfAdjoint(f"t={t:.6g}: self-adjointness defect {sa.defect:.3g}")
        el = check_elliptic(mesh, bc)
        if not el.ok:
            raise NotElliptic(f"t={t:.6g}: ellipticity margin {el.margin:.3g}")
        op = constrained_operator(system, constraint_basis(mesh, bc), Q)
        spec = eigen_constrained(system, None, window=(lo, hi), op=op,
                                 dense_threshold=dense_threshold)
        solves[0] += 1
        return spec.eigenvalues

    samples = {}
    crossings = []
    max_jump = 0.0

    def interval(t0, v0, t1, v1):
        nonlocal max_jump
        m = _match(v0, v1, lo, hi, band, jump)
        if m is None:
            if abs(t1 - t0) <= min_step:
                raise WindowLeak(f"cannot match window populations on "
                                 f"[{t0:.6g}, {t1:.6g}]: {v0} vs {v1}")
            tm = 0.5 * (t0 + t1)
            vm = evaluate(tm)
            samples[tm] = vm
            interval(t0, v0, tm, vm)
            interval(tm, vm, t1, v1)
            return
        i0, i1 = m
        a, b = v0[i0], v1[i1]
        if len(a):
            max_jump = max(max_jump, float(np.abs(b - a).max()))
        up = np.flatnonzero((a < level) & (b >= level))
        down = np.flatnonzero((a >= level) & (b < level))
        events = [(k, +1) for k in up] + [(k, -1) for k in down]
        many = len(events) > 1
        for k, sgn in events:
            frac = (level - a[k]) / (b[k] - a[k])
            near = np.sum(np.abs(a - a[k]) < flag_tol) > 1 or np.sum(np.abs(b - b[k]) < flag_tol) > 1
            crossings.append(Crossing(float(t0 + frac * (t1 - t0)), sgn, bool(many or near)))

    ts = family.t
    vals = [evaluate(t) for t in ts]
    for t, v in zip(ts, vals):
        samples[float(t)] = v
    for k in range(len(ts) - 1):
        interval(ts[k], vals[k], ts[k + 1], vals[k + 1])
    backward = bool(ts[-1] < ts[0])
    order = sorted(samples, reverse=backward)
    crossings.sort(key=lambda c: c.t, reverse=backward)
    sf = int(sum(c.direction for c in crossings))
    return FlowResult(np.array(order), [samples[t] for t in order], crossings, sf,
                      level, halfwidth, max_jump, solves[0])


# ------------------------------------------------------------- Fourier

def rotation_action(mesh: TriMesh, right: bool = True, gauge=None):
    """Sparse matrix of ``lam -> e^{i th/2} lam(r p) [g e^{-i th/2} g^{-1}]``.

    The optional unit quaternion ``g`` (default 1) accounts for boundary
    conditions conjugated by a constant, whose eigenspinors are those of the
    symmetric condition multiplied by ``g^{-1}`` from the right.

    Raises
    ------
    NoSymmetry
        If the mesh does not carry an exact rotational symmetry about the
        i-axis.
    """
    if mesh.rotation is None or not mesh.n_s:
        raise NoSymmetry("mesh carries no rotational symmetry")
    th = 2 * np.pi / mesh.n_s
    a = qexp([1.0, 0.0, 0.0], th / 2)
    abar = qconj(a)
    pos = mesh.positions
    expect = imag(qmul(qmul(abar, pos), a))
    err = np.abs(pos[mesh.rotation] - expect).max()
    scale = max(np.abs(pos).max(), 1.0)
    if err > 1e-9 * scale:
        raise NoSymmetry(f"rotation permutation is not a symmetry (error {err:.2e})")
    blk = left_mul_matrix(a)
    if right:
        g = np.array([1.0, 0, 0, 0]) if gauge is None else np.asarray(gauge, float)
        g = g / np.linalg.norm(g)
        blk = blk @ right_mul_matrix(qmul(qmul(g, abar), qconj(g)))
    n = mesh.n_vertices
    return block_sparse(np.arange(n), mesh.rotation, np.broadcast_to(blk, (n, 4, 4)),
                        (4 * n, 4 * n))


def fourier_decompose(mesh: TriMesh, spectrum: Spectrum, mu: float,
                      cluster_tol: float = 0.25, mass=None, gauge=None) -> FourierModes:
    """Rotation eigen-angles on the eigenspace near ``mu``.

    Parameters
    ----------
    mesh : TriMesh
        Disc-based mesh with exact ``n_s``-fold symmetry.
    spectrum : Spectrum
        Must contain the whole cluster and its neighbors.
    mu : float
    cluster_tol : float
        Eigenvalues within this distance of ``mu`` form the cluster.
    mass : ndarray, optional
        Lumped mass (length ``4n``); defaults to the assembled one.
    gauge : array_like, shape (4,), optional
        Constant right gauge of the boundary condition (see
        ``rotation_action``).

    Raises
    ------
    ClusterSplit
        If the cluster is not separated from the rest of the spectrum by ten
        times its width.
    """
    ev = spectrum.eigenvalues
    inside = np.abs(ev - mu) <= cluster_tol
    if not inside.any():
        raise ClusterSplit(f"no eigenvalue within {cluster_tol} of {mu}")
    cl = ev[inside]
    width = float(cl.max() - cl.min())
    others = ev[~inside]
    if others.size:
        sep = float(np.min(np.abs(others[:, None] - cl[None, :])))
        if sep < 10 * width:
            raise ClusterSplit(f"cluster width {width:.3g} vs separation {sep:.3g}")
    if mass is None:
        mass = assemble(mesh).M
    X = spectrum.flat(np.flatnonzero(inside))
    th = 2 * np.pi / mesh.n_s
    U = rotation_action(mesh, right=True, gauge=gauge)
    UX = U @ X
    C = X.T @ (mass[:, None] * UX)
    res = float(np.linalg.norm(np.sqrt(mass)[:, None] * (UX - X @ C)))
    if res > 1e-6 * max(1.0, np.sqrt(X.shape[1])):
        raise NoSymmetry(f"eigenspace not invariant under rotation (residual {res:.2e})")
    angles = np.sort(np.angle(np.linalg.eigvals(C)))
    qangles = None
    modes = {}
    if not mesh.boundary_loops:
        L = rotation_action(mesh, right=False)
        CL = X.T @ (mass[:, None] * (L @ X))
        qangles = np.sort(np.angle(np.linalg.eigvals(CL)))
        ls = np.rint(np.abs(qangles) / th - 0.5).astype(int)
        for l in ls:
            modes[int(l)] = modes.get(int(l), 0) + 1
    else:
        ls = np.rint(np.abs(angles) / th).astype(int)
        for l in ls:
            modes[int(l)] = modes.get(int(l), 0) + 1
    return FourierModes(float(mu), cl, th, angles, qangles, dict(sorted(modes.items())), res)


# -------------------------------------------------------- block lemma

def _rank(M) -> int:
    import sympy
    if M.shape[0] == 0 or M.shape[1] == 0:
        return 0
    return int(sympy.Matrix(M.tolist()).rank())


def index_lemma_dims(dim_H: int, dim_H1: int, dim_H2: int, seed: int, B=None, C=None):
    """Kernel/cokernel dimensions of ``A = (B, C)`` and of ``C`` on ``ker B``.

    ``B: H -> H1`` is a random integer matrix, repaired to full row rank;
    ``C: H -> H2`` is a random integer matrix of random rank.  Ranks are
    exact (rational arithmetic).

    Returns
    -------
    dict
        ``{"A": (ker, coker), "C|kerB": (ker, coker)}``
    """
    import sympy
    if dim_H1 > dim_H:
        raise ValueError("B cannot be surjective when dim H1 > dim H")
    rng = np.random.default_rng(seed)
    if B is None:
        B = rng.integers(-3, 4, size=(dim_H1, dim_H))
        while _rank(B) < dim_H1:
            B[rng.integers(dim_H1), rng.integers(dim_H)] += 1
    if C is None:
        r = int(rng.integers(0, min(dim_H2, dim_H) + 1))
        C = rng.integers(-3, 4, size=(dim_H2, r)) @ rng.integers(-3, 4, size=(r, dim_H))
    B = np.asarray(B, dtype=np.int64).reshape(dim_H1, dim_H)
    C = np.asarray(C, dtype=np.int64).reshape(dim_H2, dim_H)
    rA = _rank(np.vstack([B, C]))
    ns = sympy.Matrix(B.tolist()).nullspace() if dim_H1 else \
        [sympy.Matrix.eye(dim_H)[:, i] for i in range(dim_H)]
    k = len(ns)
    if k:
        Nb = sympy.Matrix.hstack(*ns)
        rC = int((sympy.Matrix(C.tolist()) * Nb).rank()) if dim_H2 else 0
    else:
        rC = 0
    return {"A": (dim_H - rA, dim_H1 + dim_H2 - rA), "C|kerB": (k - rC, dim_H2 - rC)}


def index_lemma_check(dim_H: int, dim_H1: int, dim_H2: int, seed: int, B=None, C=None) -> bool:
    """Whether kernels and cokernels of ``A`` and ``C|ker B`` have equal dimensions."""
    d = index_lemma_dims(dim_H, dim_H1, dim_H2, seed, B, C)
    return d["A"] == d["C|kerB"]
