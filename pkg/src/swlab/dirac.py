"""Generalized Dirac operator on maps into H^n, its adjoint, the Weitzenbock
identity and conformal covariance checks.

Spinors ``u`` have shape dims+(n, 4).  The negative spinor bundle is
identified with H via D u = sum_mu D_mu u * e_mu with e = (1, i, j, k).
"""
from dataclasses import dataclass

import numpy as np

from .lattice import (
    Lattice4,
    central_diff,
    connection_weights,
    covariant_derivative,
    curvature,
    gradient,
    l2_norm,
    selfdual_part,
)
from .quat import COVECTORS, EBAR, QI, embed_imag, qconj, qmul

# sum_mu<nu F_mu nu e_mu c_nu collapses to -2 (F+_0 i + F+_1 j + F+_2 k)


def dirac(u, A, action, lattice):
    Du = covariant_derivative(u, A, action, lattice)
    return sum(qmul(Du[..., mu, :, :], EBAR[mu]) for mu in range(4))


def _cov_deriv_single(v, A, action, lattice, mu):
    c = connection_weights(A, action)[..., mu, :, None]
    return central_diff(v, mu, lattice.spacing) + c * qmul(QI, v)


def dirac_adjoint(v, A, action, lattice):
    """Formal L2 adjoint: -sum_mu D_mu(v) c_mu with c = (1, -i, -j, -k)."""
    return -sum(
        qmul(_cov_deriv_single(v, A, action, lattice, mu), COVECTORS[mu])
        for mu in range(4)
    )


def connection_laplacian(u, A, action, lattice):
    return -sum(
        _cov_deriv_single(
            _cov_deriv_single(u, A, action, lattice, mu), A, action, lattice, mu
        )
        for mu in range(4)
    )


def curvature_action(A, u, action, lattice):
    """Zeroth-order Weitzenbock term 2 sum_l F+_l I_l (K_i u), summed over
    structure and auxiliary curvatures with their weights."""
    Fp = selfdual_part(curvature(A, lattice))[..., None, :] * action.weights[:, None]
    for r in range(action.m):
        Fr = selfdual_part(curvature(A, lattice, aux_index=r))
        Fp = Fp + Fr[..., None, :] * action.aux_weights[r][:, None]
    iu = qmul(QI, u)
    return -2.0 * qmul(iu, embed_imag(Fp))


def weitzenbock_residual(u, A, action, lattice):
    """Sitewise D*D u - nabla*nabla u - F+ . u."""
    lhs = dirac_adjoint(dirac(u, A, action, lattice), A, action, lattice)
    return lhs - connection_laplacian(u, A, action, lattice) - curvature_action(
        A, u, action, lattice
    )


@dataclass
class ConformalData:
    """Conformal factor f with metric exp(2f) * flat, and its gradient."""

    f: np.ndarray
    grad_f: np.ndarray

    @classmethod
    def from_scalar(cls, f, lattice):
        f = np.asarray(f, dtype=float)
        return cls(f, gradient(f, lattice.spacing))

    @classmethod
    def from_function(cls, func, dfunc, lattice):
        """Build from a callable and its exact gradient on the coordinates."""
        X = lattice.coords()
        return cls(np.asarray(func(*X), float), np.stack(dfunc(*X), axis=-1))


def clifford_dot(df, u):
    """df . u for a real 1-form df (dims+(4,)) acting on W+: u * sum df_mu e_mu."""
    return qmul(u, np.einsum("...m,mq->...q", df, EBAR)[..., None, :])


def conformal_correction(cd):
    """Correction 1-form alpha_mu, a quaternion per direction: the real part
    is the R+ generator, the imaginary part acts on W+ on the right."""
    g = cd.grad_f
    cbar = qconj(COVECTORS)
    r = np.zeros(g.shape[:-1] + (4, 4))
    for mu in range(4):
        for i in range(4):
            t = -qmul(cbar[mu], COVECTORS[i]) + qmul(cbar[i], COVECTORS[mu])
            r[..., mu, :] += 0.25 * g[..., i, None] * t
    r[..., :, 0] += g
    return r


def dirac_conformal(u, A, action, lattice, cd):
    """Dirac operator for exp(2f) * flat, with the correction 1-form folded in."""
    Du = covariant_derivative(u, A, action, lattice)
    alpha = conformal_correction(cd)
    out = 0.0
    for mu in range(4):
        term = Du[..., mu, :, :] + qmul(u, alpha[..., mu, None, :])
        out = out + qmul(term, EBAR[mu])
    return np.exp(-cd.f)[..., None, None] * out


def scaling_lemma_residual(u, A, action, lattice, cd):
    """D(e^-f u) - e^-f D u + df . (e^-f u), sitewise."""
    ef = np.exp(-cd.f)[..., None, None]
    return (
        dirac(ef * u, A, action, lattice)
        - ef * dirac(u, A, action, lattice)
        + clifford_dot(cd.grad_f, ef * u)
    )


def theorem1_residual(u, A, action, lattice, cd):
    """Conformal covariance of the Dirac operator.

    Compares the conformal Dirac operator on the R+-rescaled spinor
    exp(-f) u with exp(-7f/2) D(exp(3f/2) u).  Returns the L2 norm of the
    difference and the sitewise difference."""
    f = cd.f[..., None, None]
    lhs = dirac_conformal(np.exp(-f) * u, A, action, lattice, cd)
    rhs = np.exp(-3.5 * f) * dirac(np.exp(1.5 * f) * u, A, action, lattice)
    diff = lhs - rhs
    return l2_norm(diff, lattice), diff


def dirac_matrix(A, action, lattice):
    """Dense real matrix of the Dirac operator (small lattices only)."""
    n = action.n
    size = int(np.prod(lattice.dims)) * n * 4
    cols = []
    for k in range(size):
        e = np.zeros(size)
        e[k] = 1.0
        cols.append(dirac(e.reshape(lattice.dims + (n, 4)), A, action, lattice).ravel())
    return np.array(cols).T
