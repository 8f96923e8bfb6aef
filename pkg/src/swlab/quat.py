"""Quaternion arithmetic on numpy arrays.

A quaternion is stored along the last axis as (w, x, y, z) = w + xi + yj + zk
with the Hamilton convention ij = k.  All functions broadcast over leading
axes.
"""
from dataclasses import dataclass

import numpy as np

ONE = np.array([1.0, 0.0, 0.0, 0.0])
QI = np.array([0.0, 1.0, 0.0, 0.0])
QJ = np.array([0.0, 0.0, 1.0, 0.0])
QK = np.array([0.0, 0.0, 0.0, 1.0])
UNITS = np.stack([ONE, QI, QJ, QK])


def quat(w=0.0, x=0.0, y=0.0, z=0.0):
    return np.array([w, x, y, z], dtype=float)


def qmul(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def qconj(a):
    a = np.asarray(a, dtype=float)
    out = -a.copy()
    out[..., 0] = a[..., 0]
    return out


def qnorm2(a):
    return np.sum(np.asarray(a, dtype=float) ** 2, axis=-1)


def qnorm(a):
    return np.sqrt(qnorm2(a))


def qinv(a):
    return qconj(a) / qnorm2(a)[..., None]


def qdot(a, b):
    """Real inner product Re(a conj(b))."""
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def embed_imag(v):
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (4,))
    out[..., 1:] = v
    return out


def imag(q):
    return np.asarray(q, dtype=float)[..., 1:]


def qexp_imag(xi):
    """exp of a purely imaginary quaternion given as a 3-vector."""
    xi = np.asarray(xi, dtype=float)
    t = np.linalg.norm(xi, axis=-1)
    out = np.zeros(xi.shape[:-1] + (4,))
    out[..., 0] = np.cos(t)
    safe = np.where(t > 0, t, 1.0)
    out[..., 1:] = (np.where(t > 0, np.sin(t) / safe, 1.0))[..., None] * xi
    return out


def apply_I(xi, v):
    """Right action v -> v conj(xi) of H on H^n.

    For imaginary units this gives complex structures I_i, I_j, I_k with
    I_i I_j = I_k, and xi -> apply_I(xi, .) is an algebra homomorphism.
    ``xi`` broadcasts against the quaternion axis of ``v``.
    """
    return qmul(v, qconj(xi))


def covector_from_basis(mu):
    """Quaternion attached to the coordinate covector dx_mu: 1, -i, -j, -k."""
    if mu not in (0, 1, 2, 3):
        raise IndexError(f"direction index {mu} outside 0..3")
    if mu == 0:
        return ONE.copy()
    return -UNITS[mu].copy()


COVECTORS = np.stack([covector_from_basis(m) for m in range(4)])
# frame used to assemble the Dirac operator: sum_mu D_mu u * EBAR[mu]
EBAR = UNITS.copy()


@dataclass
class CliffordModuleElement:
    """Element of W+ (+) W-, each factor an array of quaternions."""

    plus: np.ndarray
    minus: np.ndarray


def clifford_mul(h, s):
    """Clifford multiplication by the covector with quaternion value h.

    Maps (plus, minus) to (-minus h, plus conj(h)); squares to -|h|^2.
    """
    h = np.asarray(h, dtype=float)
    return CliffordModuleElement(
        plus=-qmul(s.minus, h), minus=qmul(s.plus, qconj(h))
    )


def random_quat(rng, shape=(), unit=False):
    q = rng.standard_normal(tuple(shape) + (4,))
    if unit:
        q /= qnorm(q)[..., None]
    return q


def right_mul_matrix(q):
    """4x4 real matrix of h -> h q on coordinates (w,x,y,z)."""
    return np.stack([qmul(UNITS[c], q) for c in range(4)], axis=-1)


def left_mul_matrix(q):
    return np.stack([qmul(q, UNITS[c]) for c in range(4)], axis=-1)


def rotate_imag(q, v):
    """Rotate a 3-vector v by the unit quaternion q: q v conj(q)."""
    return imag(qmul(qmul(q, embed_imag(v)), qconj(q)))


def base_rotation_matrix(q):
    """Matrix M with y = M x when h = sum x_mu c_mu is mapped to h conj(q),
    c_mu the covectors above.  These rotations act on self-dual forms by
    xi -> q xi conj(q)."""
    q = np.asarray(q, dtype=float)
    cols = [qmul(COVECTORS[m], qconj(q)) @ COVECTORS.T for m in range(4)]
    return np.stack(cols, axis=-1)
