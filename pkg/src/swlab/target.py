"""Flat hyperkahler target H^n with a triholomorphic torus action.

Points are arrays of shape (..., n, 4).  The structure U(1) and every
auxiliary circle act by left multiplication with exp(i theta * weight) on
each quaternionic factor.  Complex structures act on the right, see
``quat.apply_I``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFiber, NoConvergence
from .quat import QI, apply_I, embed_imag, imag, qconj, qmul, UNITS


@dataclass
class TorusAction:
    """Weights of the structure circle (length n) and the auxiliary torus
    (shape (m, n))."""

    weights: np.ndarray
    aux_weights: np.ndarray = field(default=None)

    def __post_init__(self):
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        n = self.weights.shape[0]
        if self.aux_weights is None:
            self.aux_weights = np.zeros((0, n))
        self.aux_weights = np.asarray(self.aux_weights, dtype=float).reshape(-1, n)

    @property
    def n(self):
        return self.weights.shape[0]

    @property
    def m(self):
        return self.aux_weights.shape[0]

    @classmethod
    def standard(cls, n=1):
        return cls(np.ones(n))

    def all_weights(self):
        """(1+m, n) weight matrix, structure generator first."""
        return np.vstack([self.weights[None, :], self.aux_weights])


def from_complex(v, w):
    """Quaternion v - k w for complex v, w (complex coordinates on H)."""
    v = np.asarray(v, dtype=complex)
    w = np.asarray(w, dtype=complex)
    # -k (a + ib) = -a k - b j
    return np.stack([v.real, v.imag, -w.imag, -w.real], axis=-1)


def to_complex(q):
    q = np.asarray(q, dtype=float)
    return q[..., 0] + 1j * q[..., 1], -q[..., 3] - 1j * q[..., 2]


def kahler_form(xi, X, Y):
    """omega_xi(X, Y) = <I_xi X, Y> with the real Euclidean metric."""
    return np.sum(apply_I(xi, X) * Y, axis=(-1, -2))


def _phase(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta), 0 * theta, 0 * theta], axis=-1)


def group_act(angles, p, action):
    """Act by the torus element with the given angles (structure first)."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    W = action.all_weights()[: angles.shape[-1]]
    theta = np.einsum("...r,rn->...n", angles, W)
    return qmul(_phase(theta), p)


def fundamental_vector(eta, p, action):
    """Infinitesimal action K_eta(p) = (sum_r eta_r W_r,a) i p_a."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    W = action.all_weights()[: eta.shape[-1]]
    c = np.einsum("...r,rn->...n", eta, W)
    return c[..., None] * qmul(QI, p)


def _moment_single(p):
    return 0.5 * imag(qmul(qmul(qconj(p), QI), p))


def moment(p, action):
    """Structure-circle moment map, an array (..., 3) in sp(1)* = Im H."""
    return np.einsum("n,...nl->...l", action.weights, _moment_single(p))


def aux_moment(p, action):
    """Auxiliary moment maps, shape (..., m, 3)."""
    return np.einsum("rn,...nl->...rl", action.aux_weights, _moment_single(p))


def hk_potential(p):
    return 0.5 * np.sum(np.asarray(p) ** 2, axis=(-1, -2))


def euler_field(p):
    return np.array(p, dtype=float)


def permuting_act(q, p):
    """Sp(1) rotation of the complex structures: p -> p conj(q)."""
    return qmul(p, qconj(q))


def rplus_act(c, p):
    return np.asarray(c)[..., None, None] * p


def _aux_gradients(p, action):
    """Gradients of <mu_r, xi> for r auxiliary, xi = i, j, k; shape (3m, n*4)."""
    rows = []
    for r in range(action.m):
        K = fundamental_vector(np.eye(1 + action.m)[1 + r], p, action)
        for xi in UNITS[1:]:
            rows.append(apply_I(xi, K).ravel())
    return np.array(rows).reshape(3 * action.m, -1)


def project_zero_level(p, action, tol=1e-12, max_iter=50):
    """Move a single point p (n, 4) onto the zero set of the auxiliary moment
    map by minimum-norm Newton steps."""
    q = np.array(p, dtype=float)
    if action.m == 0:
        return q
    res = np.linalg.norm(aux_moment(q, action))
    for _ in range(max_iter):
        if res < tol:
            return q
        Jm = _aux_gradients(q, action)
        g = aux_moment(q, action).ravel()
        try:
            step = Jm.T @ np.linalg.solve(Jm @ Jm.T, g)
        except np.linalg.LinAlgError:
            raise NoConvergence("singular Jacobian on the level set")
        t = 1.0
        while True:
            cand = q - t * step.reshape(q.shape)
            new = np.linalg.norm(aux_moment(cand, action))
            if new < res or t < 1e-6:
                break
            t *= 0.5
        q, res = cand, new
    if res < tol:
        return q
    raise NoConvergence(f"residual {res:.3e} after {max_iter} iterations")


def vertical_basis(p, action):
    """Quaternionic span of the auxiliary fundamental vectors at p, (4m, n*4)."""
    vecs = []
    for r in range(action.m):
        K = fundamental_vector(np.eye(1 + action.m)[1 + r], p, action)
        for xi in UNITS:
            vecs.append(apply_I(xi, K).ravel())
    return np.array(vecs).reshape(4 * action.m, -1)


def horizontal_project(p, Y, action, rank_tol=1e-10):
    """Orthogonal projection of the tangent vector Y onto the horizontal space
    at a point of the zero level set."""
    Y = np.asarray(Y, dtype=float)
    if action.m == 0:
        return Y.copy()
    V = vertical_basis(p, action)
    Q, R = np.linalg.qr(V.T)
    d = np.abs(np.diag(R))
    if d.size == 0 or d.min() < rank_tol * max(1.0, d.max()):
        raise DegenerateFiber("auxiliary action not free at this point")
    y = Y.ravel()
    return (y - Q @ (Q.T @ y)).reshape(Y.shape)
