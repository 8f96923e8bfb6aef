"""Verification suites.  Each suite returns a dict with a boolean ``pass``,
the measured residuals and, for refinement studies, convergence ratios."""
import numpy as np

from . import acs, dirac as dops, lattice as lat_mod, quat, sw, target
from .dirac import ConformalData
from .lattice import GaugeField, Lattice4, l2_inner, l2_norm
from .target import TorusAction

RATIO_WINDOW = (3.5, 4.5)
LENGTH = 2 * np.pi


def in_window(r, window=RATIO_WINDOW):
    return bool(window[0] <= r <= window[1])


# ------------------------------------------------------------ test data

def trig_spinor(lattice, n=1, offset=0.0):
    """Smooth periodic H^n-valued field built from lowest Fourier modes."""
    x = lattice.coords()
    k = 2 * np.pi / np.array(lattice.lengths)
    u = np.zeros(lattice.dims + (n, 4))
    for a in range(n):
        s = 1.0 + 0.5 * a
        u[..., a, 0] = offset + s * (1.0 + 0.3 * np.sin(k[0] * x[0]))
        u[..., a, 1] = 0.4 * np.cos(k[1] * x[1] + a)
        u[..., a, 2] = 0.2 * np.sin(k[3] * x[3])
        u[..., a, 3] = 0.3 * np.cos(k[2] * x[2] - a)
    return u


def trig_gauge(lattice, m=0, amp=1.0):
    x = lattice.coords()
    k = 2 * np.pi / np.array(lattice.lengths)
    a = amp * np.stack(
        [
            0.3 * np.sin(k[1] * x[1]),
            0.2 * np.cos(k[2] * x[2]),
            0.1 * np.sin(k[3] * x[3]),
            0.25 * np.cos(k[0] * x[0]),
        ],
        axis=-1,
    )
    aux = np.zeros(lattice.dims + (4, m))
    for r in range(m):
        aux[..., r] = 0.15 * np.roll(a, r + 1, axis=-1)
    return GaugeField(a, aux)


def trig_conformal(lattice, amp=1.0, exact=True):
    """f = amp (0.2 sin x0 + 0.1 cos x2) in units of the box length, with the
    exact gradient (or the central difference when ``exact`` is false)."""
    k = 2 * np.pi / np.array(lattice.lengths)

    def f(*x):
        return amp * (0.2 * np.sin(k[0] * x[0]) + 0.1 * np.cos(k[2] * x[2]))

    def df(*x):
        z = 0 * x[0]
        return (
            amp * 0.2 * k[0] * np.cos(k[0] * x[0]),
            z,
            -amp * 0.1 * k[2] * np.sin(k[2] * x[2]),
            z,
        )

    if exact:
        return ConformalData.from_function(f, df, lattice)
    return ConformalData.from_scalar(f(*lattice.coords()), lattice)


def smooth_twistor(lattice, seed=0):
    """Random smooth unit self-dual field from a few low Fourier modes."""
    rng = np.random.default_rng(seed)
    x = lattice.coords()
    k = 2 * np.pi / np.array(lattice.lengths)
    om = np.zeros(lattice.dims + (3,))
    om[..., 0] = 1.0
    for l in range(3):
        for _ in range(2):
            mu = rng.integers(0, 4)
            om[..., l] += 0.6 * rng.standard_normal() * np.sin(k[mu] * x[mu] + rng.uniform(0, 2 * np.pi))
    return acs.normalize(om)


# ------------------------------------------------------------ suites

def suite_algebra(rng, samples=1000, tol=1e-12):
    worst = 0.0
    for _ in range(samples):
        s = quat.CliffordModuleElement(quat.random_quat(rng), quat.random_quat(rng))
        for a in range(4):
            ea = quat.covector_from_basis(a)
            for b in range(4):
                eb = quat.covector_from_basis(b)
                ab = quat.clifford_mul(ea, quat.clifford_mul(eb, s))
                ba = quat.clifford_mul(eb, quat.clifford_mul(ea, s))
                target_val = -2.0 * (a == b)
                worst = max(
                    worst,
                    np.abs(ab.plus + ba.plus - target_val * s.plus).max(),
                    np.abs(ab.minus + ba.minus - target_val * s.minus).max(),
                )
        v = quat.random_quat(rng)
        for x, y, z in ((quat.QI, quat.QJ, quat.QK), (quat.QJ, quat.QK, quat.QI), (quat.QK, quat.QI, quat.QJ)):
            worst = max(worst, np.abs(quat.apply_I(x, quat.apply_I(y, v)) - quat.apply_I(z, v)).max())
        h, g = quat.random_quat(rng), quat.random_quat(rng)
        lhs = quat.apply_I(h, quat.apply_I(g, v))
        worst = max(worst, np.abs(lhs - quat.apply_I(quat.qmul(h, g), v)).max() / (1 + np.abs(lhs).max()))
    return {"pass": bool(worst <= tol), "residuals": {"max_error": float(worst)}}


def moment_identity_error(rng, action, step=1e-4):
    n = action.n
    p = rng.standard_normal((n, 4))
    Y = rng.standard_normal((n, 4))
    xi = rng.standard_normal(3)
    xi /= np.linalg.norm(xi)
    eta = rng.standard_normal(1 + action.m)

    def pairing(q):
        mus = np.concatenate([target.moment(q, action)[None], target.aux_moment(q, action)])
        return float(eta @ (mus @ xi))

    fd = (pairing(p + step * Y) - pairing(p - step * Y)) / (2 * step)
    K = target.fundamental_vector(eta, p, action)
    return abs(fd - target.kahler_form(quat.embed_imag(xi), K, Y))


def suite_moment(rng, samples=1000, tol=1e-6):
    actions = [TorusAction.standard(1), TorusAction([1, 1], [[1, -1]])]
    worst = 0.0
    for k in range(samples):
        worst = max(worst, moment_identity_error(rng, actions[k % 2]))
    return {"pass": bool(worst <= tol), "residuals": {"max_error": float(worst)}}


def suite_dirac(rng, tol=1e-10):
    lattice = Lattice4((4,) * 4, LENGTH / 4)
    action = TorusAction.standard(1)
    A = GaugeField(rng.standard_normal(lattice.dims + (4,)), np.zeros(lattice.dims + (4, 0)))
    u = rng.standard_normal(lattice.dims + (1, 4))
    v = rng.standard_normal(lattice.dims + (1, 4))
    lhs = l2_inner(dops.dirac(u, A, action, lattice), v, lattice)
    rhs = l2_inner(u, dops.dirac_adjoint(v, A, action, lattice), lattice)
    M = dops.dirac_matrix(A, action, lattice)
    oracle = (M.T @ v.ravel()).reshape(v.shape)
    mat_err = np.abs(oracle - dops.dirac_adjoint(v, A, action, lattice)).max()
    scale = max(abs(lhs), 1.0)
    ok = abs(lhs - rhs) <= tol * scale and mat_err <= tol
    return {
        "pass": bool(ok),
        "residuals": {"inner_product_gap": float(abs(lhs - rhs)), "matrix_transpose_error": float(mat_err)},
    }


def _ratio_study(func, grids):
    vals = [func(Lattice4.cubic(N, LENGTH)) for N in grids]
    ratios = [vals[i] / vals[i + 1] for i in range(len(vals) - 1)]
    return vals, ratios


def suite_weitzenbock(grids=(8, 16)):
    action = TorusAction.standard(1)

    def res(lattice, gauge=True, drop=False):
        u = trig_spinor(lattice)
        A = trig_gauge(lattice, amp=1.0 if gauge else 0.0)
        r = dops.weitzenbock_residual(u, A, action, lattice)
        if drop:
            r = r + dops.curvature_action(A, u, action, lattice)
        return l2_norm(r, lattice)

    gauged, ratios = _ratio_study(res, grids)
    flat, flat_ratios = _ratio_study(lambda L: res(L, gauge=False), grids)
    control = [res(Lattice4.cubic(N, LENGTH), drop=True) for N in grids]
    ok = all(in_window(r) for r in ratios) and all(v < 1e-10 for v in flat)
    ok = ok and control[-1] > 10 * gauged[-1] and control[-1] / control[0] > 0.5
    return {
        "pass": bool(ok),
        "residuals": {"gauged": gauged, "ungauged": flat, "without_curvature": control},
        "ratios": {"gauged": ratios},
    }


def suite_theorem1(grids=(8, 16), tol=1e-12):
    action = TorusAction.standard(1)

    def res(lattice, which):
        u = trig_spinor(lattice)
        A = trig_gauge(lattice)
        cd = trig_conformal(lattice)
        if which == "theorem1":
            return dops.theorem1_residual(u, A, action, lattice, cd)[0]
        return l2_norm(dops.scaling_lemma_residual(u, A, action, lattice, cd), lattice)

    lattice = Lattice4.cubic(8, LENGTH)
    u, A = trig_spinor(lattice), trig_gauge(lattice)
    const = ConformalData.from_scalar(np.full(lattice.dims, 0.7), lattice)
    c1 = dops.theorem1_residual(u, A, action, lattice, const)[0]
    c2 = l2_norm(dops.scaling_lemma_residual(u, A, action, lattice, const), lattice)
    t_vals, t_ratios = _ratio_study(lambda L: res(L, "theorem1"), grids)
    s_vals, s_ratios = _ratio_study(lambda L: res(L, "scaling"), grids)
    ok = c1 <= tol and c2 <= tol and all(in_window(r) for r in t_ratios + s_ratios)
    return {
        "pass": bool(ok),
        "residuals": {"constant_f": c1, "constant_f_scaling": c2, "theorem1": t_vals, "scaling": s_vals},
        "ratios": {"theorem1": t_ratios, "scaling": s_ratios},
    }


def random_admissible_jet(rng):
    g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    return acs.admissible_jet(*g)


def suite_theorem2_local(rng, jets=100, tol=1e-10, pyth_tol=1e-9, N=8):
    worst = 0.0
    for _ in range(jets):
        out = acs.local_model_identities(*random_admissible_jet(rng))
        worst = max(worst, abs(out["perp"][0] - out["perp"][1]), abs(out["parallel"][0] - out["parallel"][1]))
    lattice = Lattice4.cubic(N, LENGTH)
    pyth = 0.0
    for seed in range(3):
        om = smooth_twistor(lattice, seed=int(rng.integers(1 << 30)))
        for cd in (None, trig_conformal(lattice)):
            s = acs.split_nabla_omega(om, lattice, cd)
            pyth = max(pyth, np.abs(s.nijenhuis_norm2 + s.dpart_norm2 - s.grad_norm2).max())
    ok = worst <= tol and pyth <= pyth_tol
    return {"pass": bool(ok), "residuals": {"jet_identities": float(worst), "pythagoras": float(pyth)}}


def curvature_gap(lattice):
    cd = trig_conformal(lattice, exact=False)
    closed = acs.scalar_curvature_conformal(cd, lattice)
    oracle = acs.scalar_curvature_riemann(acs.conformal_metric(cd.f), lattice)
    return l2_norm(closed - oracle, lattice)


def suite_curvature(grids=(8, 16)):
    lattice = Lattice4.cubic(8, LENGTH)
    zero = ConformalData.from_scalar(np.zeros(lattice.dims), lattice)
    const = ConformalData.from_scalar(np.full(lattice.dims, 0.4), lattice)
    exact0 = np.abs(acs.scalar_curvature_conformal(zero, lattice)).max()
    exactc = np.abs(acs.scalar_curvature_conformal(const, lattice)).max()
    vals, ratios = _ratio_study(curvature_gap, grids)
    ok = exact0 == 0.0 and exactc <= 1e-12 and all(in_window(r) for r in ratios)
    return {
        "pass": bool(ok),
        "residuals": {"flat": float(exact0), "constant": float(exactc), "oracle_gap": vals},
        "ratios": {"oracle_gap": ratios},
    }


def suite_energy(rng, N=8, perturbations=50, tol=1e-5, flow_steps=500):
    lattice = Lattice4.cubic(N, LENGTH)
    worst = 0.0
    for cd in (None, trig_conformal(lattice, exact=False)):
        om = smooth_twistor(lattice, seed=int(rng.integers(1 << 30)))
        g = acs.energy_gradient(om, lattice, cd)
        w = None if cd is None else np.exp(4 * cd.f)
        for _ in range(perturbations // 2):
            d = acs.project_perp(om, rng.standard_normal(om.shape))
            t = 1e-5
            ep = acs.twistor_energy(acs.normalize(om + t * d), lattice, cd)
            em = acs.twistor_energy(acs.normalize(om - t * d), lattice, cd)
            fd = (ep - em) / (2 * t)
            an = l2_inner(g, d, lattice, w)
            worst = max(worst, abs(fd - an) / abs(an))
    om = acs.rotation_profile(lattice, wobble=0.3, tilt=0.1)
    _, hist = acs.flow(om, lattice, flow_steps, lattice.spacing**2 / 8)
    energies = np.array([h[1] for h in hist])
    monotone = bool(np.all(np.diff(energies) < 0))
    ok = worst <= tol and monotone and len(hist) - 1 >= flow_steps
    return {
        "pass": bool(ok),
        "residuals": {"gradient_relative_error": float(worst), "initial_energy": float(energies[0]),
                      "final_energy": float(energies[-1]), "accepted_steps": len(hist) - 1},
    }


def suite_connection_recovery(tol=1e-10, N=8):
    lattice = Lattice4.cubic(N, LENGTH)
    action = TorusAction.standard(1)
    u = trig_spinor(lattice)
    A0 = trig_gauge(lattice)
    A1 = trig_gauge(lattice, amp=-2.0)
    out = []
    for A in (A0, A1):
        a0 = sw.connection_from_spinor(u, A, action, lattice)
        full = GaugeField(A.structure + a0, A.aux)
        out.append((full, l2_norm(dops.dirac(u, full, action, lattice), lattice)))
    scale = l2_norm(u, lattice)
    uniq = np.abs(out[0][0].structure - out[1][0].structure).max()
    ok = max(out[0][1], out[1][1]) <= tol * scale and uniq <= tol
    return {
        "pass": bool(ok),
        "residuals": {"dirac_after": [out[0][1], out[1][1]], "uniqueness": float(uniq), "scale": scale},
    }


def lifted_example(lattice):
    """Weight (1, -1) auxiliary circle on H^2 and a gauge-rotated lift of an
    H-valued spinor through the horizontal section q -> (q, q)/sqrt2."""
    action2 = TorusAction([1, 1], [[1, -1]])
    action1 = TorusAction.standard(1)
    u = trig_spinor(lattice)
    b = trig_gauge(lattice)
    x = lattice.coords()
    k = 2 * np.pi / np.array(lattice.lengths)
    theta = 0.25 * np.sin(k[1] * x[1]) + 0.15 * np.cos(k[3] * x[3])
    base = np.concatenate([u, u], axis=-2) / np.sqrt(2)
    angles = np.stack([np.zeros_like(theta), theta], axis=-1)
    uhat = target.group_act(angles, base, action2)
    return action1, action2, u, b, uhat, angles


def lifted_quotient_gap(lattice):
    action1, action2, u, b, uhat, angles = lifted_example(lattice)
    aux = sw.connection_from_constraint(uhat, action2, lattice)
    lifted = dops.dirac(uhat, GaugeField(b.structure, aux), action2, lattice)
    down = dops.dirac(u, b, action1, lattice)
    oracle = target.group_act(angles, np.concatenate([down, down], axis=-2) / np.sqrt(2), action2)
    return l2_norm(lifted - oracle, lattice)


def suite_lifted_quotient(grids=(8, 16)):
    vals, ratios = _ratio_study(lifted_quotient_gap, grids)
    lattice = Lattice4.cubic(grids[0], LENGTH)
    _, action2, _, _, uhat, _ = lifted_example(lattice)
    constraint = float(np.abs(target.aux_moment(uhat, action2)).max())
    ok = all(in_window(r) for r in ratios) and constraint <= 1e-12
    return {"pass": bool(ok), "residuals": {"gap": vals, "constraint": constraint}, "ratios": {"gap": ratios}}


SUITES = {
    "algebra": lambda cfg, rng: suite_algebra(rng, cfg.get("samples", 1000)),
    "moment": lambda cfg, rng: suite_moment(rng, cfg.get("samples", 1000)),
    "dirac": lambda cfg, rng: suite_dirac(rng),
    "weitzenbock": lambda cfg, rng: suite_weitzenbock(cfg.get("grids", (8, 16))),
    "theorem1": lambda cfg, rng: suite_theorem1(cfg.get("grids", (8, 16))),
    "theorem2-local": lambda cfg, rng: suite_theorem2_local(rng, cfg.get("jets", 100)),
    "curvature": lambda cfg, rng: suite_curvature(cfg.get("grids", (8, 16))),
    "energy": lambda cfg, rng: suite_energy(rng, flow_steps=cfg.get("flow_steps", 500)),
    "connection-recovery": lambda cfg, rng: suite_connection_recovery(),
    "lifted-quotient": lambda cfg, rng: suite_lifted_quotient(cfg.get("grids", (8, 16))),
}
DEFAULT_SUITES = ("algebra", "moment", "dirac", "weitzenbock", "theorem1", "theorem2-local", "curvature")
