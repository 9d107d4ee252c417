"""Quaternion algebra on numpy arrays.

Quaternions are stored as arrays whose last axis holds the coordinates
``(w, x, y, z)`` of ``w + x i + y j + z k``.  Imaginary quaternions
(points and directions of 3-space) are stored as ``(x, y, z)``.  Every
function broadcasts over leading axes.
"""

from __future__ import annotations

import numpy as np

from .errors import ZeroSpinor

__all__ = [
    "ONE", "I", "J", "K",
    "as_quat", "imag", "qmul", "qconj", "qnorm", "qinv", "qexp",
    "complex_to_quat", "left_mul_matrix", "right_mul_matrix",
    "similarity", "conjugate_by", "unit_imvec", "plane_basis",
    "plane_membership", "slerp",
]

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])

_CONJ = np.array([1.0, -1.0, -1.0, -1.0])


def as_quat(v):
    """Embed imaginary vectors ``(..., 3)`` as quaternions with ``w = 0``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] == 4:
        return v
    if v.shape[-1] != 3:
        raise ValueError(f"expected last axis 3 or 4, got {v.shape}")
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


def imag(q):
    """Imaginary part of quaternions as ``(..., 3)`` vectors."""
    return np.asarray(q, dtype=float)[..., 1:]


def qmul(a, b):
    """Hamilton product ``a b`` with ``ij = k`` and ``i^2 = j^2 = k^2 = -1``.

    Either argument may be given as an imaginary 3-vector.
    """
    a = as_quat(a)
    b = as_quat(b)
    w1, x1, y1, z1 = np.moveaxis(a, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(b, -1, 0)
    return np.stack([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ], axis=-1)


def qconj(q):
    """Quaternion conjugate."""
    return as_quat(q) * _CONJ


def qnorm(q):
    """Euclidean norm in R^4."""
    return np.linalg.norm(as_quat(q), axis=-1)


def qinv(q, tol: float = 1e-14):
    """Multiplicative inverse; raises :class:`ZeroSpinor` near zero."""
    q = as_quat(q)
    n2 = np.sum(q * q, axis=-1, keepdims=True)
    if np.any(np.sqrt(n2) < tol):
        raise ZeroSpinor("cannot invert a (numerically) zero quaternion")
    return qconj(q) / n2


def qexp(axis, angle):
    """``exp(angle * axis)`` for a unit imaginary ``axis``: ``cos + axis sin``."""
    axis = np.asarray(axis, dtype=float)
    angle = np.asarray(angle, dtype=float)
    c = np.cos(angle)[..., None]
    s = np.sin(angle)[..., None]
    return np.concatenate([c, s * axis * np.ones_like(c)], axis=-1)


def complex_to_quat(z):
    """Embed complex numbers ``a + b sqrt(-1)`` as ``a + b i``."""
    z = np.asarray(z, dtype=complex)
    zero = np.zeros(z.shape)
    return np.stack([z.real, z.imag, zero, zero], axis=-1)


def left_mul_matrix(q):
    """Real 4x4 matrix ``M_L(q)`` with ``M_L(q) p = q p`` in coordinates."""
    w, x, y, z = np.moveaxis(as_quat(q), -1, 0)
    return np.stack([
        np.stack([w, -x, -y, -z], axis=-1),
        np.stack([x, w, -z, y], axis=-1),
        np.stack([y, z, w, -x], axis=-1),
        np.stack([z, -y, x, w], axis=-1),
    ], axis=-2)


def right_mul_matrix(q):
    """Real 4x4 matrix ``M_R(q)`` with ``M_R(q) p = p q`` in coordinates."""
    w, x, y, z = np.moveaxis(as_quat(q), -1, 0)
    return np.stack([
        np.stack([w, -x, -y, -z], axis=-1),
        np.stack([x, w, z, -y], axis=-1),
        np.stack([y, -z, w, x], axis=-1),
        np.stack([z, y, -x, w], axis=-1),
    ], axis=-2)


def similarity(lam, x, tol: float = 1e-14):
    """Apply the orientation preserving similarity ``x -> conj(lam) x lam``.

    Parameters
    ----------
    lam : array_like, shape (..., 4)
        Nonzero quaternion(s).
    x : array_like, shape (..., 3)
        Imaginary quaternion(s).

    Returns
    -------
    ndarray, shape (..., 3)
        The image, scaled by ``|lam|^2`` and rotated.
    """
    lam = as_quat(lam)
    if np.any(qnorm(lam) < tol):
        raise ZeroSpinor("similarity needs a nonzero spinor")
    return imag(qmul(qmul(qconj(lam), x), lam))


def conjugate_by(q, x):
    """Rotation-style conjugation ``q x q^{-1}`` returning imaginary parts."""
    return imag(qmul(qmul(q, x), qinv(q)))


def unit_imvec(v, tol: float = 1e-12):
    """Validate unit imaginary vectors and return them as float arrays."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise ValueError("unit imaginary vectors need three components")
    dev = np.abs(np.linalg.norm(v, axis=-1) - 1.0)
    if np.any(dev > tol):
        raise ValueError(f"not unit length (deviation {dev.max():.3e})")
    return v


def plane_basis(V, Vt):
    """Orthonormal real basis of ``E' = {lam : V lam = lam Vt}``.

    ``b1`` is the normalized imaginary quaternion ``V + Vt``; when
    ``V + Vt`` (nearly) vanishes, the coordinate axis least aligned with
    ``V`` is used after projecting out ``V``.  ``b2 = V b1``.

    Parameters
    ----------
    V, Vt : array_like, shape (..., 3)
        Unit imaginary quaternions.

    Returns
    -------
    b1, b2 : ndarray, shape (..., 4)
    """
    V = np.asarray(V, dtype=float)
    Vt = np.asarray(Vt, dtype=float)
    V, Vt = np.broadcast_arrays(V, Vt)
    w = V + Vt
    nw = np.linalg.norm(w, axis=-1)
    bad = nw <= 1e-8
    if np.any(bad):
        Vb = V[bad]
        axis = np.eye(3)[np.argmin(np.abs(Vb), axis=-1)]
        w = w.copy()
        w[bad] = axis - Vb * np.sum(axis * Vb, axis=-1, keepdims=True)
        nw = np.linalg.norm(w, axis=-1)
    b1 = as_quat(w / nw[..., None])
    b2 = qmul(V, b1)
    b2 = b2 / qnorm(b2)[..., None]
    return b1, b2


def plane_membership(V, Vt, lam):
    """Residual ``|V lam - lam Vt|``; zero exactly on ``E'``."""
    return qnorm(qmul(V, lam) - qmul(lam, Vt))


def slerp(a, b, s):
    """Spherical linear interpolation between unit vectors (last axis).

    Falls back to normalized linear interpolation for (nearly) parallel
    inputs.  Antipodal inputs have no unique geodesic and raise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = np.clip(np.sum(a * b, axis=-1, keepdims=True), -1.0, 1.0)
    if np.any(dot < -1.0 + 1e-12):
        raise ValueError("slerp between antipodal points is undefined")
    om = np.arccos(dot)
    so = np.sin(om)
    small = so < 1e-9
    safe = np.where(small, 1.0, so)
    wa = np.where(small, 1.0 - s, np.sin((1.0 - s) * om) / safe)
    wb = np.where(small, s, np.sin(s * om) / safe)
    out = wa * a + wb * b
    return out / np.linalg.norm(out, axis=-1, keepdims=True)
