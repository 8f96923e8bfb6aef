"""Residuals of the generalized Seiberg-Witten system and its lifted,
constrained and conformally rescaled variants; recovery of the connections
determined by a spinor."""
import numpy as np

from .dirac import dirac
from .errors import ConstraintViolated, DegenerateFiber, FixedPointOnImage, SingularSet
from .lattice import GaugeField, curvature, gradient, l2_norm, selfdual_part
from .quat import COVECTORS, QI, qconj, qmul, qnorm2
from .target import TorusAction, aux_moment, fundamental_vector, moment

SINGULAR_FLOOR = 1e-6
FIXED_POINT_FLOOR = 1e-8
CONSTRAINT_LIMIT = 0.1


def sw_residual(u, b, action, lattice):
    """(||D_b u||, ||F+_b - mu(u)||) in the discrete L2 norm."""
    d = l2_norm(dirac(u, b, action, lattice), lattice)
    c = l2_norm(selfdual_part(curvature(b, lattice)) - moment(u, action), lattice)
    return d, c


def connection_from_constraint(u, action, lattice, rank_tol=1e-10):
    """Auxiliary connection with K_{A(v)} = -(projection of du(v) onto the
    span of the auxiliary fundamental vectors).  Shape dims+(4, m)."""
    m = action.m
    if m == 0:
        return np.zeros(lattice.dims + (4, 0))
    eye = np.eye(1 + m)[1:]
    K = np.stack([fundamental_vector(e, u, action) for e in eye], axis=-3)  # dims+(m,n,4)
    G = np.einsum("...rnq,...snq->...rs", K, K)
    if np.min(np.abs(np.linalg.det(G))) < rank_tol:
        raise DegenerateFiber("auxiliary fundamental vectors degenerate")
    du = gradient(u, lattice.spacing)  # dims+(4,n,4)
    rhs = np.einsum("...rnq,...mnq->...mr", K, du)
    coeff = np.linalg.solve(G[..., None, :, :], rhs[..., None])[..., 0]
    return -coeff


def modified_sw_residual(u, b, action, lattice):
    """Residuals (dirac, curvature, constraint) of the lifted system with the
    auxiliary connection recovered from the spinor."""
    mg = aux_moment(u, action)
    if action.m and np.max(np.linalg.norm(mg, axis=-1)) > CONSTRAINT_LIMIT:
        raise ConstraintViolated("spinor is far from the auxiliary zero level")
    A = GaugeField(b.structure, connection_from_constraint(u, action, lattice))
    d = l2_norm(dirac(u, A, action, lattice), lattice)
    c = l2_norm(selfdual_part(curvature(b, lattice)) - moment(u, action), lattice)
    g = l2_norm(mg, lattice) if action.m else 0.0
    return d, c, g


def connection_from_spinor(u, A0, action, lattice):
    """Structure 1-form a0 (dims+(4,)) with D_{A0 + a0} u = 0.

    Writing a0 . K = K conj(alpha) with alpha = sum a0_mu c_mu, alpha is
    found by quaternionic division (least squares over the n factors)."""
    K = action.weights[:, None] * qmul(QI, u)
    k2 = qnorm2(K).sum(axis=-1)
    if np.min(np.sqrt(qnorm2(K)).max(axis=-1)) < FIXED_POINT_FLOOR:
        raise FixedPointOnImage("spinor meets a fixed point of the circle action")
    rhs = -dirac(u, A0, action, lattice)
    alpha_bar = np.einsum("...nq->...q", qmul(qconj(K), rhs)) / k2[..., None]
    alpha = qconj(alpha_bar)
    # alpha = a0 . COVECTORS  ->  a0 = alpha . COVECTORS (orthonormal rows)
    return alpha @ COVECTORS.T


def rescale_to_unit_moment(u, action):
    """u |mu(u)|^{-1/2} and the conformal factor f = -(2/3) ln|mu(u)|."""
    r = np.linalg.norm(moment(u, action), axis=-1)
    if np.min(r) < SINGULAR_FLOOR:
        raise SingularSet("moment map vanishes on the lattice")
    return u / np.sqrt(r)[..., None, None], -(2.0 / 3.0) * np.log(r)


def rescaled_sw_residual(u, b, action, lattice):
    """Residuals of the system with curvature equation F+ = lambda mu(u),
    lambda = 1/|mu(u)|, plus sup| |mu(u)| - 1 |."""
    mu = moment(u, action)
    r = np.linalg.norm(mu, axis=-1)
    if np.min(r) < SINGULAR_FLOOR:
        raise SingularSet("moment map vanishes on the lattice")
    A = GaugeField(b.structure, connection_from_constraint(u, action, lattice))
    d = l2_norm(dirac(u, A, action, lattice), lattice)
    c = l2_norm(selfdual_part(curvature(b, lattice)) - mu / r[..., None], lattice)
    g = l2_norm(aux_moment(u, action), lattice) if action.m else 0.0
    return d, c, g, float(np.max(np.abs(r - 1.0)))


def residual_report(lattice, residuals, floors=None, flags=None):
    d, c, g = (list(residuals) + [0.0, 0.0])[:3]
    return {
        "grid": list(lattice.dims),
        "h": lattice.spacing,
        "residuals": {"dirac": float(d), "curvature": float(c), "constraint": float(g)},
        "floors": floors or {"moment": SINGULAR_FLOOR, "fundamental": FIXED_POINT_FLOOR},
        "flags": flags or [],
    }
