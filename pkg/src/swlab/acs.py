"""Almost complex structures from unit self-dual 2-forms.

A twistor field is an array dims+(3,) of self-dual coefficients of unit
length.  Its covariant derivative splits, in a frame adapted to Omega, into a
Nijenhuis part and a d(Omega) part.  This module evaluates that split, the
Euler-Lagrange residual and inequality for the induced structure, the
equation with unnormalized Omega, local jet identities, the scalar curvature
of a conformally flat metric, and a gradient flow for the energy.
"""
from dataclasses import dataclass

import numpy as np

from .errors import JetConstraintViolated, SingularSet, StepTooLarge
from .lattice import (
    central_diff,
    compact_laplacian,
    gradient,
    l2_norm,
    rough_laplacian,
    twoform_covariant_derivative,
)
from .quat import QI, QJ, base_rotation_matrix, embed_imag, imag, qconj, qmul, qnorm
from .target import moment

ANTIPODAL_TOL = 1e-8
SQRT2 = np.sqrt(2.0)


def normalize(omega):
    return omega / np.linalg.norm(omega, axis=-1, keepdims=True)


def omega_from_spinor(u, action, floor=1e-6):
    """Unit self-dual form along mu(u) and the norm |mu(u)|."""
    mu = moment(u, action)
    r = np.linalg.norm(mu, axis=-1)
    if np.min(r) < floor:
        raise SingularSet("moment map vanishes on the lattice")
    return mu / r[..., None], r


def adapted_rotation(omega):
    """Unit quaternion q with q Omega conj(q) = i (Omega as imaginary
    quaternion), by the shortest rotation; antipodal points rotate by pi about
    the second axis.  Returns (q, antipodal_mask)."""
    om = embed_imag(omega)
    q = -qmul(QI, om)
    q[..., 0] += 1.0
    nq = qnorm(q)
    antipodal = nq < ANTIPODAL_TOL
    q = np.where(antipodal[..., None], QJ, q / np.where(antipodal, 1.0, nq)[..., None])
    return q, antipodal


@dataclass
class NablaOmegaSplit:
    """Split of the Omega-perpendicular covariant derivative.

    ``nijenhuis`` and ``dpart`` hold two complex numbers per site in the
    adapted frame; ``rotation`` is the adapted-frame quaternion and
    ``antipodal`` flags the tie-break zone."""

    nijenhuis: np.ndarray
    dpart: np.ndarray
    rotation: np.ndarray
    antipodal: np.ndarray
    grad_norm2: np.ndarray

    @property
    def nijenhuis_norm2(self):
        return np.sum(np.abs(self.nijenhuis) ** 2, axis=-1)

    @property
    def dpart_norm2(self):
        return np.sum(np.abs(self.dpart) ** 2, axis=-1)


def project_perp(omega, X):
    """Remove the Omega component from X (..., 3) or (..., k, 3)."""
    if X.ndim == omega.ndim:
        return X - np.sum(X * omega, axis=-1, keepdims=True) * omega
    om = omega[..., None, :]
    return X - np.sum(X * om, axis=-1, keepdims=True) * om


def split_pointwise(omega, deriv):
    """Split frame derivatives ``deriv`` (..., 4, 3) of a unit form.

    In the adapted frame, with z = y0 + i y1, w = y2 + i y3 and
    c = Omega_1 + i Omega_2, the Nijenhuis part is sqrt2 (c_zbar, c_wbar) and
    the d(Omega) part is sqrt2 (c_z, c_w)."""
    q, antipodal = adapted_rotation(omega)
    A = project_perp(omega, deriv)
    Aq = imag(qmul(qmul(q[..., None, :], embed_imag(A)), qconj(q)[..., None, :]))
    # base coordinates rotate by h -> h conj(q); dy_nu = sum_mu M[nu, mu] dx_mu
    M = base_rotation_matrix(q)
    Ay = np.einsum("...nm,...mk->...nk", M, Aq)
    c = Ay[..., 1] + 1j * Ay[..., 2]
    cz, czb = 0.5 * (c[..., 0] - 1j * c[..., 1]), 0.5 * (c[..., 0] + 1j * c[..., 1])
    cw, cwb = 0.5 * (c[..., 2] - 1j * c[..., 3]), 0.5 * (c[..., 2] + 1j * c[..., 3])
    return NablaOmegaSplit(
        nijenhuis=SQRT2 * np.stack([czb, cwb], axis=-1),
        dpart=SQRT2 * np.stack([cz, cw], axis=-1),
        rotation=q,
        antipodal=antipodal,
        grad_norm2=np.sum(A**2, axis=(-1, -2)),
    )


def frame_derivative(omega, lattice, cd=None):
    """Orthonormal-frame covariant derivative of Omega, dims+(4, 3)."""
    if cd is None:
        return twoform_covariant_derivative(omega, lattice)
    D = twoform_covariant_derivative(omega, lattice, cd.grad_f)
    return np.exp(-cd.f)[..., None, None] * D


def split_nabla_omega(omega, lattice, cd=None):
    return split_pointwise(omega, frame_derivative(omega, lattice, cd))


def pairing(split):
    """<d(Omega), N> as a vector in the Omega-perpendicular plane, rotated
    back to the lattice frame; shape (..., 3)."""
    n, d = split.nijenhuis, split.dpart
    p = 0.5j * (n[..., 0] * np.conj(d[..., 1]) - n[..., 1] * np.conj(d[..., 0]))
    v = np.stack([np.zeros(p.shape), p.real, p.imag], axis=-1)
    q = split.rotation
    return imag(qmul(qmul(qconj(q), embed_imag(v)), q))


def scalar_curvature_conformal(cd, lattice):
    """s = -6 exp(-2f) (Lap f + |grad f|^2) for the metric exp(2f) * flat."""
    lap = compact_laplacian(cd.f, lattice.spacing)
    return -6.0 * np.exp(-2 * cd.f) * (lap + np.sum(cd.grad_f**2, axis=-1))


def scalar_curvature_riemann(metric, lattice):
    """Scalar curvature of a general metric field dims+(4, 4) from Christoffel
    symbols and the Riemann tensor, all by central differences."""
    h = lattice.spacing
    ginv = np.linalg.inv(metric)
    dg = gradient(metric, h)  # dims+(4,4,c): d_c g_ab, axis 4 is c
    dg = np.moveaxis(dg, 4, -1)
    # Gamma^k_ij = 1/2 g^kl (d_i g_lj + d_j g_li - d_l g_ij)
    low = 0.5 * (
        np.einsum("...lji->...lij", dg)
        + np.einsum("...lij->...lij", dg)
        - np.einsum("...ijl->...lij", dg)
    )
    gam = np.einsum("...kl,...lij->...kij", ginv, low)
    dgam = np.moveaxis(gradient(gam, h), 4, -1)  # d_m Gamma^k_ij as [...,k,i,j,m]
    # R^k_{i m j} = d_m G^k_ij - d_j G^k_im + G^k_ml G^l_ij - G^k_jl G^l_im
    ric = (
        np.einsum("...kijk->...ij", dgam)
        - np.einsum("...kikj->...ij", dgam)
        + np.einsum("...kkl,...lij->...ij", gam, gam)
        - np.einsum("...kjl,...lik->...ij", gam, gam)
    )
    return np.einsum("...ij,...ij->...", ginv, ric)


def conformal_metric(f):
    return np.exp(2 * f)[..., None, None] * np.eye(4)


def _volume_weight(cd):
    return None if cd is None else np.exp(4 * cd.f)


def _l2(x, lattice, cd=None):
    return l2_norm(x, lattice, _volume_weight(cd))


@dataclass
class Theorem2Report:
    residual: float
    inequality: np.ndarray
    violations: int
    antipodal_sites: int
    vector_residual: np.ndarray

    def summary(self):
        return {
            "residual": self.residual,
            "violations": self.violations,
            "inequality_min": float(self.inequality.min()),
            "inequality_max": float(self.inequality.max()),
            "antipodal_sites": self.antipodal_sites,
        }


def theorem2_residual(omega, lattice, cd=None, coeffs=(1.5, 0.5, 0.5)):
    """Residual of (rough Laplacian)^perp + 2 <dOmega, N> and the pointwise
    inequality field a|N|^2 + b|dOmega|^2 + c s, with a violation count of
    the strict inequality < 0."""
    split = split_nabla_omega(omega, lattice, cd)
    lap = rough_laplacian(omega, lattice, None if cd is None else cd.f)
    vec = project_perp(omega, lap) + 2.0 * pairing(split)
    s = 0.0 if cd is None else scalar_curvature_conformal(cd, lattice)
    a, b, c = coeffs
    ineq = a * split.nijenhuis_norm2 + b * split.dpart_norm2 + c * s
    ineq = np.broadcast_to(ineq, lattice.dims).copy()
    return Theorem2Report(
        residual=_l2(vec, lattice, cd),
        inequality=ineq,
        violations=int(np.count_nonzero(ineq >= 0)),
        antipodal_sites=int(np.count_nonzero(split.antipodal)),
        vector_residual=vec,
    )


def _tangent_coords(split, X):
    """Complex adapted-frame coordinates (z(X), w(X)) of tangent vectors X
    given in the lattice frame, (..., 4)."""
    M = base_rotation_matrix(split.rotation)
    y = np.einsum("...nm,...m->...n", M, X)
    return np.stack([y[..., 0] + 1j * y[..., 1], y[..., 2] + 1j * y[..., 3]], axis=-1)


def _from_tangent_coords(split, zw):
    y = np.stack([zw[..., 0].real, zw[..., 0].imag, zw[..., 1].real, zw[..., 1].imag], -1)
    M = base_rotation_matrix(split.rotation)
    return np.einsum("...mn,...m->...n", M, y)


def donaldson_full_residual(omega, lattice, cd=None, floor=1e-6, return_field=False):
    """Residual of the equation for a nonvanishing, not necessarily unit,
    self-dual form.  d|Omega| and *d|Omega| enter through the adapted frame:
    *d|Omega| is J grad|Omega| and d(Omega) is read as the tangent vector
    with adapted coordinates given by its dpart."""
    r = np.linalg.norm(omega, axis=-1)
    if np.min(r) < floor:
        raise SingularSet("self-dual form vanishes on the lattice")
    unit = omega / r[..., None]
    D = frame_derivative(omega, lattice, cd)
    split = split_pointwise(unit, D / r[..., None, None])
    if cd is None:
        grad_r, s = gradient(r, lattice.spacing), 0.0
    else:
        grad_r = np.exp(-cd.f)[..., None] * gradient(r, lattice.spacing)
        s = scalar_curvature_conformal(cd, lattice)
    # J acts as multiplication by i on the adapted coordinates
    star_dr = 1j * _tangent_coords(split, grad_r)
    n, d = split.nijenhuis, split.dpart
    dtot = d + star_dr
    pvec = 0.5j * (n[..., 0] * np.conj(dtot[..., 1]) - n[..., 1] * np.conj(dtot[..., 0]))
    v = np.stack([np.zeros(pvec.shape), pvec.real, pvec.imag], axis=-1)
    q = split.rotation
    pair = r[..., None] * imag(qmul(qmul(qconj(q), embed_imag(v)), q))
    star_dom = _from_tangent_coords(split, 1j * d)
    n2 = split.nijenhuis_norm2 * r**2
    d2 = split.dpart_norm2 * r**2
    lap = rough_laplacian(omega, lattice, None if cd is None else cd.f)
    dr2 = np.sum(grad_r**2, axis=-1)
    cross = np.sum(grad_r * star_dom, axis=-1) * r
    field = (
        lap
        + ((s / 2 + r**2)[..., None]) * omega
        + 2.0 * pair
        - 0.5 * (d2 / r**2 - n2)[..., None] * omega
        - 0.5 * ((dr2 + 2 * cross) / r**2)[..., None] * omega
    )
    res = _l2(field, lattice, cd)
    return (res, field) if return_field else res


def twistor_energy(omega, lattice, cd=None):
    """Integral of |nabla Omega|^2 with respect to the metric volume."""
    D = frame_derivative(omega, lattice, cd)
    dens = np.sum(D**2, axis=(-1, -2))
    if cd is not None:
        dens = dens * np.exp(4 * cd.f)
    return float(lattice.volume_element * dens.sum())


def energy_gradient(omega, lattice, cd=None):
    """Sphere-constrained gradient 2 (rough Laplacian)^perp, with respect to
    the metric L2 pairing."""
    lap = rough_laplacian(omega, lattice, None if cd is None else cd.f)
    return 2.0 * project_perp(omega, lap)


def flow_step(omega, lattice, step, cd=None, max_halvings=20, energy=None):
    """Projected explicit Euler step with backtracking.  Returns
    (new_omega, new_energy, accepted_step)."""
    e0 = twistor_energy(omega, lattice, cd) if energy is None else energy
    g = energy_gradient(omega, lattice, cd)
    t = step
    for _ in range(max_halvings + 1):
        cand = normalize(omega - t * g)
        e1 = twistor_energy(cand, lattice, cd)
        if e1 < e0:
            return cand, e1, t
        t *= 0.5
    raise StepTooLarge(f"energy did not decrease after {max_halvings} halvings")


def flow(omega, lattice, steps, step, cd=None, tol=0.0, callback=None):
    """Run up to ``steps`` accepted steps; stop when max |gradient| < tol."""
    e = twistor_energy(omega, lattice, cd)
    history = [(0, e, float(np.max(np.linalg.norm(energy_gradient(omega, lattice, cd), axis=-1))))]
    for k in range(1, steps + 1):
        gmax = history[-1][2]
        if gmax < tol:
            break
        try:
            omega, e, _ = flow_step(omega, lattice, step, cd, energy=e)
        except StepTooLarge:
            # no descent left at a numerically critical field
            if e == 0.0 or gmax < 1e-10:
                break
            raise
        gmax = float(np.max(np.linalg.norm(energy_gradient(omega, lattice, cd), axis=-1)))
        history.append((k, e, gmax))
        if callback is not None:
            callback(k, omega, e, gmax)
    return omega, history


def constant_profile(lattice, direction=(1.0, 0.0, 0.0)):
    return np.broadcast_to(normalize(np.asarray(direction, float)), lattice.dims + (3,)).copy()


def rotation_profile(lattice, wobble=0.0, tilt=0.0):
    """Omega = (cos phi, sin phi, t) normalized, phi = 2 pi x0 / L plus an
    optional modulation in x1 and a tilt out of the rotation plane."""
    X = lattice.coords()
    L0, L1 = lattice.lengths[0], lattice.lengths[1]
    phi = 2 * np.pi * X[0] / L0 + wobble * np.sin(2 * np.pi * X[1] / L1)
    t = tilt * np.sin(2 * np.pi * X[2] / lattice.lengths[2])
    return normalize(np.stack([np.cos(phi), np.sin(phi), t], axis=-1))


# ---------------------------------------------------------------- jets

@dataclass
class Jet:
    """First-order jet of a complex function at the origin: value and
    Wirtinger derivatives d/dz, d/dzbar, d/dw, d/dwbar."""

    value: complex
    dz: complex = 0j
    dzb: complex = 0j
    dw: complex = 0j
    dwb: complex = 0j

    def real_partials(self):
        """Derivatives along x0..x3 with z = x0 + i x1, w = x2 + i x3."""
        return np.array(
            [self.dz + self.dzb, 1j * (self.dz - self.dzb), self.dw + self.dwb, 1j * (self.dw - self.dwb)]
        )

    @classmethod
    def from_polynomial(cls, coeffs):
        """Jet at 0 of sum c * z^a zbar^b w^c wbar^d, keyed by (a, b, c, d)."""
        val = coeffs.get((0, 0, 0, 0), 0j)
        return cls(
            val,
            coeffs.get((1, 0, 0, 0), 0j),
            coeffs.get((0, 1, 0, 0), 0j),
            coeffs.get((0, 0, 1, 0), 0j),
            coeffs.get((0, 0, 0, 1), 0j),
        )


def admissible_jet(g_dz, g_dzb, g_dw, g_dwb):
    """(f, g) with f(0) = 1, g(0) = 0 and f fixed by the Dirac relations and
    the purely imaginary normalization."""
    g = Jet(0j, g_dz, g_dzb, g_dw, g_dwb)
    f = Jet(1 + 0j, -np.conj(g_dw), g_dw, np.conj(g_dz), -g_dz)
    return f, g


def check_jet(f, g, tol=1e-12):
    if abs(f.value - 1) > tol or abs(g.value) > tol:
        raise JetConstraintViolated("need f(0) = 1 and g(0) = 0")
    if abs(f.dzb - g.dw) > tol or abs(f.dwb + g.dz) > tol:
        raise JetConstraintViolated("Dirac relations fail")
    if abs(f.dz + np.conj(f.dzb)) > tol or abs(f.dw + np.conj(f.dwb)) > tol:
        raise JetConstraintViolated("real derivatives of f are not purely imaginary")


def local_model_identities(f, g):
    """Both sides of the perpendicular and parallel identities for a local
    model (f, g) with Omega = (|f|^2 - |g|^2)/2, f conj(g).

    Nijenhuis part (g_z, g_w)/2, d(Omega) part (g_zbar, g_wbar)/2."""
    check_jet(f, g)
    fp, gp = f.real_partials(), g.real_partials()
    perp_lhs = np.sum(fp * np.conj(gp)) / 8.0
    par_lhs = np.sum(np.abs(fp) ** 2 - np.abs(gp) ** 2) / 32.0
    N = 0.5 * np.array([g.dz, g.dw])
    dO = 0.5 * np.array([g.dzb, g.dwb])
    perp_rhs = N[1] * np.conj(dO[0]) - N[0] * np.conj(dO[1])
    par_rhs = 0.25 * (np.sum(np.abs(N) ** 2) - np.sum(np.abs(dO) ** 2))
    return {
        "perp": (complex(perp_lhs), complex(perp_rhs)),
        "parallel": (float(par_lhs), float(par_rhs)),
        "nijenhuis_norm2": float(np.sum(np.abs(N) ** 2)),
        "d_norm2": float(np.sum(np.abs(dO) ** 2)),
    }


def local_model_omega(f_func, g_func, lattice):
    """Unit form (|f|^2 - |g|^2)/2, Re f conj(g), Im f conj(g) on a patch."""
    X = lattice.coords()
    z, w = X[0] + 1j * X[1], X[2] + 1j * X[3]
    f, g = f_func(z, w), g_func(z, w)
    c = f * np.conj(g)
    om = np.stack([0.5 * (abs(f) ** 2 - abs(g) ** 2), c.real, c.imag], axis=-1)
    return normalize(om)
