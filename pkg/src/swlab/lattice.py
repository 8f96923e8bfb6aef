"""Periodic 4D lattices, gauge fields and discrete differential operators.

Fields are numpy arrays whose first four axes are the lattice dimensions.
Derivatives are second-order central differences with periodic wrap.
"""
from dataclasses import dataclass

import numpy as np

from .quat import QI, qmul

# self-dual basis: dx0^dx1 + dx2^dx3, dx0^dx2 + dx3^dx1, dx0^dx3 + dx1^dx2
SD_PAIRS = (((0, 1), (2, 3)), ((0, 2), (3, 1)), ((0, 3), (1, 2)))
PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _beta_matrices():
    B = np.zeros((3, 4, 4))
    for l, pairs in enumerate(SD_PAIRS):
        for a, b in pairs:
            B[l, a, b] = 1.0
            B[l, b, a] = -1.0
    return B


def _asd_matrices():
    G = np.zeros((3, 4, 4))
    for l, ((a, b), (c, d)) in enumerate(SD_PAIRS):
        G[l, a, b], G[l, b, a] = 1.0, -1.0
        G[l, c, d], G[l, d, c] = -1.0, 1.0
    return G


BETA = _beta_matrices()
GAMMA = _asd_matrices()
# [B_l, B_m] = sum_k STRUCT[l, m, k] B_k
STRUCT = np.einsum("lab,mbc,kac->lmk", BETA, BETA, BETA) / 4.0
STRUCT = STRUCT - STRUCT.transpose(1, 0, 2)


@dataclass
class Lattice4:
    dims: tuple
    spacing: float
    origin: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 4:
            raise ValueError("a 4D lattice needs four dimensions")

    @classmethod
    def cubic(cls, n, length):
        return cls((n,) * 4, length / n)

    def coords(self):
        """Coordinate arrays x_0..x_3, each of shape dims."""
        axes = [o + self.spacing * np.arange(d) for o, d in zip(self.origin, self.dims)]
        return np.meshgrid(*axes, indexing="ij")

    @property
    def volume_element(self):
        return self.spacing**4

    @property
    def lengths(self):
        return tuple(d * self.spacing for d in self.dims)


@dataclass
class GaugeField:
    """Imaginary-valued 1-forms: ``structure`` has shape dims+(4,),
    ``aux`` has shape dims+(4, m)."""

    structure: np.ndarray
    aux: np.ndarray

    @classmethod
    def zeros(cls, lattice, m=0):
        return cls(np.zeros(lattice.dims + (4,)), np.zeros(lattice.dims + (4, m)))


def central_diff(field, mu, h):
    return (np.roll(field, -1, axis=mu) - np.roll(field, 1, axis=mu)) / (2.0 * h)


def gradient(field, h):
    """Stack of central differences along a new axis 4."""
    return np.stack([central_diff(field, mu, h) for mu in range(4)], axis=4)


def compact_laplacian(field, h):
    out = -8.0 * field
    for mu in range(4):
        out = out + np.roll(field, -1, axis=mu) + np.roll(field, 1, axis=mu)
    return out / h**2


def connection_weights(A, action):
    """Per-factor connection coefficients, shape dims+(4, n)."""
    c = A.structure[..., None] * action.weights
    if action.m:
        c = c + np.einsum("...mr,rn->...mn", A.aux, action.aux_weights)
    return c


def covariant_derivative(u, A, action, lattice):
    """D_mu u = d_mu u + a_mu(x) i u, returned with shape dims+(4, n, 4)."""
    c = connection_weights(A, action)
    iu = qmul(QI, u)
    out = []
    for mu in range(4):
        out.append(central_diff(u, mu, lattice.spacing) + c[..., mu, :, None] * iu)
    return np.stack(out, axis=4)


def curvature(A, lattice, aux_index=None):
    """Field strength F_{mu nu} of a U(1) gauge field listed in PAIRS order,
    shape dims+(6,)."""
    a = A.structure if aux_index is None else A.aux[..., aux_index]
    h = lattice.spacing
    return np.stack(
        [central_diff(a[..., n], m, h) - central_diff(a[..., m], n, h) for m, n in PAIRS],
        axis=-1,
    )


def _pair_value(F, a, b):
    idx = PAIRS.index((min(a, b), max(a, b)))
    return F[..., idx] if a < b else -F[..., idx]


def selfdual_part(F):
    """Coefficients of the orthogonal projection onto the self-dual basis."""
    return np.stack(
        [0.5 * (_pair_value(F, *p) + _pair_value(F, *q)) for p, q in SD_PAIRS], axis=-1
    )


def antiselfdual_part(F):
    return np.stack(
        [0.5 * (_pair_value(F, *p) - _pair_value(F, *q)) for p, q in SD_PAIRS], axis=-1
    )


def from_sd_asd(sd, asd):
    """Rebuild PAIRS-ordered components from self-dual and anti-self-dual
    coefficients."""
    F = np.zeros(np.shape(sd)[:-1] + (6,))
    for l, (p, q) in enumerate(SD_PAIRS):
        for pair, sgn in ((p, 1.0), (q, -1.0)):
            a, b = pair
            val = sd[..., l] + sgn * asd[..., l]
            if a < b:
                F[..., PAIRS.index((a, b))] = val
            else:
                F[..., PAIRS.index((b, a))] = -val
    return F


def selfdual_project(F):
    return from_sd_asd(selfdual_part(F), np.zeros(np.shape(F)[:-1] + (3,)))


def l2_inner(a, b, lattice, weight=None):
    prod = np.asarray(a) * np.asarray(b)
    prod = prod.reshape(lattice.dims + (-1,)).sum(axis=-1)
    if weight is not None:
        prod = prod * weight
    return lattice.volume_element * prod.sum()


def l2_norm(a, lattice, weight=None):
    return float(np.sqrt(l2_inner(a, a, lattice, weight)))


def so4_connection(grad_f):
    """Levi-Civita connection of exp(2f) * flat in the orthonormal coframe
    exp(f) dx: (W_mu)[a, b] = f_b delta_{a mu} - f_a delta_{b mu}.
    Returned as its self-dual coefficients, shape dims+(4, 3)."""
    g = np.asarray(grad_f)
    W = np.zeros(g.shape[:-1] + (4, 4, 4))
    for mu in range(4):
        W[..., mu, mu, :] += g
        W[..., mu, :, mu] -= g
    return np.einsum("...mab,lab->...ml", W, BETA) / 4.0


def twoform_covariant_derivative(omega, lattice, grad_f=None):
    """D_mu of a field of self-dual coefficients, shape dims+(4, 3).

    With a conformal factor the coefficients are taken in the orthonormal
    coframe and D_mu includes the rotation [W_mu, .]."""
    d = gradient(omega, lattice.spacing)
    if grad_f is not None:
        s = so4_connection(grad_f)
        d = d + np.einsum("...ml,...k,lkj->...mj", s, omega, STRUCT)
    return d


def rough_laplacian(omega, lattice, f=None):
    """Connection Laplacian on self-dual 2-forms, flat or for exp(2f) * flat."""
    if f is None:
        D = twoform_covariant_derivative(omega, lattice)
        return -sum(central_diff(D[..., mu, :], mu, lattice.spacing) for mu in range(4))
    grad_f = gradient(f, lattice.spacing)
    s = so4_connection(grad_f)
    D = twoform_covariant_derivative(omega, lattice, grad_f)
    e2 = np.exp(2 * f)[..., None]
    out = 0.0
    for mu in range(4):
        Y = e2 * D[..., mu, :]
        out = out + central_diff(Y, mu, lattice.spacing)
        out = out + np.einsum("...l,...k,lkj->...j", s[..., mu, :], Y, STRUCT)
    return -np.exp(-4 * f)[..., None] * out
