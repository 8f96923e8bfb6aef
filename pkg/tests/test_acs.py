import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swlab import acs, checks
from swlab.dirac import ConformalData
from swlab.errors import JetConstraintViolated, SingularSet, StepTooLarge
from swlab.lattice import Lattice4, l2_inner, l2_norm, rough_laplacian, twoform_covariant_derivative
from swlab.quat import EBAR, QI, QJ, QK, base_rotation_matrix, embed_imag, imag, qconj, qmul, rotate_imag
from swlab.target import TorusAction, from_complex

L = 2 * np.pi
STD = TorusAction.standard(1)
seeds = st.integers(0, 2**31 - 1)


def test_omega_from_spinor_examples():
    lat = Lattice4((2,) * 4, 1.0)
    u = np.broadcast_to(from_complex(1, 0), lat.dims + (1, 4)).copy()
    om, r = acs.omega_from_spinor(u, STD)
    assert np.allclose(om, [1, 0, 0]) and np.allclose(r, 0.5)
    om3, r3 = acs.omega_from_spinor(3 * u, STD)
    assert np.allclose(om3, om) and np.allclose(r3, 9 * r)
    with pytest.raises(SingularSet):
        acs.omega_from_spinor(0 * u, STD)


@given(seeds)
def test_adapted_rotation_aligns(seed):
    rng = np.random.default_rng(seed)
    om = acs.normalize(rng.standard_normal(3))
    q, anti = acs.adapted_rotation(om)
    assert not anti
    assert np.allclose(rotate_imag(q, om), [1, 0, 0])


def test_adapted_rotation_tie_break():
    q, anti = acs.adapted_rotation(np.array([-1.0, 0, 0]))
    assert anti and np.allclose(rotate_imag(q, [-1.0, 0, 0]), [1, 0, 0])
    q, anti = acs.adapted_rotation(np.array([1.0, 0, 0]))
    assert not anti and np.allclose(q, [1, 0, 0, 0])


def test_constant_field_splits_to_zero():
    lat = Lattice4.cubic(4, L)
    s = acs.split_nabla_omega(acs.constant_profile(lat, (0.2, -1, 0.4)), lat)
    assert np.abs(s.nijenhuis).max() == 0 and np.abs(s.dpart).max() == 0


@pytest.mark.parametrize("holomorphic", [False, True])
def test_local_model_patch_split(holomorphic):
    lat = Lattice4((9,) * 4, 1e-3, origin=(-4e-3,) * 4)
    c = 0.7 + 0.2j
    g = (lambda z, w: c * z) if holomorphic else (lambda z, w: c * np.conj(z))
    om = acs.local_model_omega(lambda z, w: 1 + 0 * z, g, lat)
    s = acs.split_nabla_omega(om, lat)
    n, d = s.nijenhuis[4, 4, 4, 4], s.dpart[4, 4, 4, 4]
    zero, nonzero = (d, n) if holomorphic else (n, d)
    assert np.abs(zero).max() < 1e-5
    assert np.isclose(np.sum(np.abs(nonzero) ** 2), 8 * abs(c) ** 2, rtol=1e-4)


@given(seeds)
def test_pythagoras_pointwise(seed):
    rng = np.random.default_rng(seed)
    om = acs.normalize(rng.standard_normal(3))
    s = acs.split_pointwise(om, rng.standard_normal((4, 3)))
    assert np.isclose(s.nijenhuis_norm2 + s.dpart_norm2, s.grad_norm2, atol=1e-12)


def test_pythagoras_on_lattice():
    res = checks.suite_theorem2_local(np.random.default_rng(4), jets=10)
    assert res["residuals"]["pythagoras"] <= 1e-9


@settings(max_examples=50)
@given(seeds)
def test_split_frame_covariance(seed):
    rng = np.random.default_rng(seed)
    om = acs.normalize(rng.standard_normal(3))
    D = rng.standard_normal((4, 3))
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    s = acs.split_pointwise(om, D)
    om2 = rotate_imag(q, om)
    D2 = base_rotation_matrix(q) @ rotate_imag(q, D)
    s2 = acs.split_pointwise(om2, D2)
    assert np.isclose(s2.nijenhuis_norm2, s.nijenhuis_norm2)
    assert np.isclose(s2.dpart_norm2, s.dpart_norm2)
    assert np.allclose(acs.pairing(s2), rotate_imag(q, acs.pairing(s)), atol=1e-12)


def _spinor_jet(rng):
    """Base value and derivatives of a linear H-valued map solving the Dirac
    equation at the origin with |u| stationary there (unit-moment gauge)."""
    u0 = rng.standard_normal(4)
    rows = []
    for k in range(16):
        P = np.zeros(16)
        P[k] = 1.0
        P = P.reshape(4, 4)
        dirac = sum(qmul(P[m], EBAR[m]) for m in range(4))
        rows.append(np.concatenate([dirac, P @ u0]))
    A = np.array(rows).T
    null = np.linalg.svd(A)[2][np.linalg.matrix_rank(A):]
    P = (rng.standard_normal(len(null)) @ null).reshape(4, 4)
    return u0, P


def _bilinear(p, q):
    return 0.25 * imag(qmul(qmul(qconj(p), QI), q) + qmul(qmul(qconj(q), QI), p))


@settings(max_examples=50)
@given(seeds)
def test_spinor_jets_against_split(seed):
    """For Dirac jets the second fundamental term B(Du, Du)/|mu| has
    perpendicular part <dOmega, N> and parallel part (|dOmega|^2 - |N|^2)/4
    in the adapted-frame convention used here."""
    rng = np.random.default_rng(seed)
    u0, P = _spinor_jet(rng)
    mu0 = _bilinear(u0, u0)
    r = np.linalg.norm(mu0)
    om = mu0 / r
    dmu = np.array([2 * _bilinear(u0, P[m]) for m in range(4)])
    D = (dmu - np.outer(dmu @ om, om)) / r
    s = acs.split_pointwise(om, D)
    Bt = sum(_bilinear(P[m], P[m]) for m in range(4)) / r
    assert np.allclose(acs.project_perp(om, Bt), acs.pairing(s), atol=1e-10)
    assert np.isclose(Bt @ om, 0.25 * (s.dpart_norm2 - s.nijenhuis_norm2), atol=1e-10)


def test_local_model_examples():
    f, g = acs.admissible_jet(0, 0, 0, 0)
    out = acs.local_model_identities(f, g)
    assert out["perp"] == (0j, 0j) and out["parallel"] == (0.0, 0.0)
    f, g = acs.admissible_jet(0, 0, 0, 1.3 - 0.4j)
    out = acs.local_model_identities(f, g)
    assert np.isclose(out["parallel"][0], -0.25 * out["d_norm2"])
    assert out["nijenhuis_norm2"] == 0


@given(st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5))
def test_local_model_holomorphic_plus_antiholomorphic_in_z(a, b):
    out = acs.local_model_identities(*acs.admissible_jet(a, b, 0, 0))
    assert abs(out["perp"][0] - out["perp"][1]) <= 1e-10
    assert abs(out["parallel"][0] - out["parallel"][1]) <= 1e-10


def test_local_model_random_jets():
    rng = np.random.default_rng(0)
    for _ in range(100):
        out = acs.local_model_identities(*checks.random_admissible_jet(rng))
        assert abs(out["perp"][0] - out["perp"][1]) <= 1e-10
        assert abs(out["parallel"][0] - out["parallel"][1]) <= 1e-10


def test_local_model_rejects_bad_jets():
    f, g = acs.admissible_jet(1, 2, 3, 4)
    with pytest.raises(JetConstraintViolated):
        acs.local_model_identities(acs.Jet(2.0, f.dz, f.dzb, f.dw, f.dwb), g)
    with pytest.raises(JetConstraintViolated):
        acs.local_model_identities(acs.Jet(1.0, f.dz, f.dzb + 1, f.dw, f.dwb), g)
    with pytest.raises(JetConstraintViolated):
        acs.local_model_identities(acs.Jet(1.0, f.dz + 1, f.dzb, f.dw, f.dwb), g)


def test_jet_from_polynomial():
    jet = acs.Jet.from_polynomial({(0, 0, 0, 0): 1.0, (1, 0, 0, 0): 2j, (0, 0, 0, 1): -1.0, (2, 0, 0, 0): 5.0})
    assert jet.value == 1.0 and jet.dz == 2j and jet.dwb == -1.0 and jet.dzb == 0
    # real partials of 2i z: d/dx0 = 2i, d/dx1 = -2
    assert np.allclose(jet.real_partials()[:2], [2j, -2])


def test_theorem2_constant_field():
    lat = Lattice4.cubic(4, L)
    rep = acs.theorem2_residual(acs.constant_profile(lat), lat)
    assert rep.residual == 0.0
    assert np.all(rep.inequality == 0) and rep.violations == np.prod(lat.dims)


def test_theorem2_integrable_point_reduces_to_laplacian():
    """At the centre of the local model with antiholomorphic g the Nijenhuis
    part vanishes, so the residual vector is the perpendicular Laplacian."""
    lat = Lattice4((9,) * 4, 1e-3, origin=(-4e-3,) * 4)
    om = acs.local_model_omega(lambda z, w: 1 + 0 * z, lambda z, w: 0.5 * np.conj(z) + 0.3j * np.conj(w), lat)
    s = acs.split_nabla_omega(om, lat)
    c = (4, 4, 4, 4)
    assert np.abs(s.nijenhuis[c]).max() < 1e-5 * np.abs(s.dpart[c]).max()
    rep = acs.theorem2_residual(om, lat)
    lap = acs.project_perp(om, rough_laplacian(om, lat))
    assert np.allclose(rep.vector_residual[c], lap[c], atol=1e-4 * np.abs(lap[c]).max())


def _rotate_field(om, q):
    """Global rotation by h -> h conj(q) of base and fiber on a cubic lattice
    centred at the origin; q must map lattice axes to lattice axes."""
    M = np.rint(base_rotation_matrix(q)).astype(int)
    N = om.shape[0]
    idx = np.indices(om.shape[:4]).reshape(4, -1)
    src = (M.T @ idx) % N
    out = om[tuple(src)].reshape(om.shape)
    return rotate_imag(q, out), M


@pytest.mark.parametrize("q", [QI, QJ, QK])
def test_theorem2_frame_independence(q):
    lat = Lattice4.cubic(8, L)
    om = checks.smooth_twistor(lat, seed=3)
    rep = acs.theorem2_residual(om, lat)
    om2, M = _rotate_field(om, q)
    rep2 = acs.theorem2_residual(om2, lat)
    assert abs(rep.residual - rep2.residual) <= 1e-9
    back, _ = _rotate_field(rep.vector_residual, q)
    assert np.allclose(back, rep2.vector_residual, atol=1e-9)


def test_donaldson_unit_field_matches_theorem2():
    lat = Lattice4.cubic(8, L)
    om = checks.smooth_twistor(lat, seed=5)
    for cd in (None, checks.trig_conformal(lat, exact=False)):
        _, field = acs.donaldson_full_residual(om, lat, cd, return_field=True)
        rep = acs.theorem2_residual(om, lat, cd)
        assert np.allclose(acs.project_perp(om, field), rep.vector_residual, atol=1e-10)


def test_donaldson_unnormalized_smoke_and_continuity():
    lat = Lattice4.cubic(8, L)
    x = lat.coords()
    om = checks.smooth_twistor(lat, seed=6)
    r = 1.25 + 0.75 * np.sin(x[0]) * np.cos(x[3])
    field = om * r[..., None]
    res = acs.donaldson_full_residual(field, lat)
    assert np.isfinite(res)
    near = acs.donaldson_full_residual(field * (1 + 1e-7), lat)
    assert abs(near - res) < 1e-4 * res
    with pytest.raises(SingularSet):
        acs.donaldson_full_residual(0 * field, lat)


def test_scalar_curvature_examples():
    lat = Lattice4.cubic(8, L)
    zero = ConformalData.from_scalar(np.zeros(lat.dims), lat)
    assert np.array_equal(acs.scalar_curvature_conformal(zero, lat), np.zeros(lat.dims))
    const = ConformalData.from_scalar(np.full(lat.dims, 1.3), lat)
    assert np.abs(acs.scalar_curvature_conformal(const, lat)).max() < 1e-12
    assert np.abs(acs.scalar_curvature_riemann(acs.conformal_metric(const.f), lat)).max() < 1e-12


def test_riemann_oracle_on_round_sphere_patch():
    """Stereographic metric 4/(1+|x|^2)^2 dx^2 of the unit 4-sphere: s = 12."""
    lat = Lattice4((7,) * 4, 0.01, origin=(0.2 - 0.03, -0.1 - 0.03, 0.05 - 0.03, 0.3 - 0.03))
    x = np.stack(lat.coords(), -1)
    f = np.log(2.0 / (1 + np.sum(x**2, -1)))
    s = acs.scalar_curvature_riemann(acs.conformal_metric(f), lat)
    assert abs(s[3, 3, 3, 3] - 12.0) < 1e-2
    cd = ConformalData.from_scalar(f, lat)
    assert abs(acs.scalar_curvature_conformal(cd, lat)[3, 3, 3, 3] - 12.0) < 1e-2


def test_scalar_curvature_against_oracle_converges():
    res = checks.suite_curvature()
    assert res["pass"], res


def test_energy_examples():
    lat = Lattice4.cubic(8, L)
    const = acs.constant_profile(lat)
    assert acs.twistor_energy(const, lat) == 0.0
    assert np.abs(acs.energy_gradient(const, lat)).max() == 0.0
    errs = []
    for N in (8, 16):
        lat = Lattice4.cubic(N, L)
        exact = (2 * np.pi / L) ** 2 * L**4
        errs.append(abs(acs.twistor_energy(acs.rotation_profile(lat), lat) - exact))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_sphere_constraint_identity():
    lat = Lattice4.cubic(8, L)
    om = checks.smooth_twistor(lat, seed=9)
    D = twoform_covariant_derivative(om, lat)
    assert np.isclose(l2_inner(rough_laplacian(om, lat), om, lat), l2_inner(D, D, lat), rtol=1e-12)


def test_gradient_check_and_monotone_flow():
    res = checks.suite_energy(np.random.default_rng(2))
    assert res["pass"], res


def test_pure_rotation_profile_is_critical():
    lat = Lattice4.cubic(8, L)
    g = acs.energy_gradient(acs.rotation_profile(lat), lat)
    assert np.abs(g).max() < 1e-12


def test_constant_profile_flow_stops_immediately():
    lat = Lattice4.cubic(4, L)
    om, hist = acs.flow(acs.constant_profile(lat), lat, 10, 0.1)
    assert len(hist) == 1 and hist[0][1] == 0.0


def test_flow_step_too_large():
    lat = Lattice4.cubic(4, L)
    om = checks.smooth_twistor(lat, seed=1)
    with pytest.raises(StepTooLarge):
        acs.flow_step(om, lat, 1e12, max_halvings=2)


@settings(max_examples=30)
@given(seeds)
def test_split_matches_intrinsic_nijenhuis_and_exterior_derivative(seed):
    """Nijenhuis tensor of J = Omega^T and d of the form, built directly from
    the derivative of the structure, are proportional to the two parts."""
    from swlab.lattice import BETA

    rng = np.random.default_rng(seed)
    om = acs.normalize(rng.standard_normal(3))
    D = acs.project_perp(om, rng.standard_normal((4, 3)))
    J = -np.einsum("l,lab->ab", om, BETA)
    dJ = -np.einsum("ml,lab->mab", D, BETA)
    N = (np.einsum("li,lkj->kij", J, dJ) - np.einsum("lj,lki->kij", J, dJ)
         - np.einsum("kl,ilj->kij", J, dJ) + np.einsum("kl,jli->kij", J, dJ))
    T = np.einsum("cl,lab->abc", D, BETA)
    d_form = T + T.transpose(1, 2, 0) + T.transpose(2, 0, 1)
    s = acs.split_pointwise(om, D)
    assert np.isclose(np.sum(N**2), 16 * s.nijenhuis_norm2)
    assert np.isclose(np.sum(d_form**2), 12 * s.dpart_norm2)
