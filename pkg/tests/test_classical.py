import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from spincorr import classical as cl
from spincorr.rng import uniforms

P = cl.ClassicalParams(5.0, 2.835, 1.1)


def random_points(rng, n):
    u = rng.random((4, n))
    return np.hstack([cl.sample_uniform_sphere(u[0], u[1]), cl.sample_uniform_sphere(u[2], u[3])])


def test_params_validation():
    with pytest.raises(ValueError):
        cl.ClassicalParams(5, 1, 0.9)
    with pytest.raises(ValueError):
        cl.ClassicalParams(float("nan"), 1)


def test_angles_roundtrip():
    ang = (0.3, -1.2, 2.0, 2.9)
    np.testing.assert_allclose(cl.point_to_angles(cl.angles_to_point(*ang)), ang, atol=1e-14)


def test_map_preserves_spheres_and_kick_invariants(rng):
    pts = random_points(rng, 1000)
    out = cl.map_step(pts, P)
    np.testing.assert_allclose(np.linalg.norm(out[:, :3], axis=1), 1, atol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(out[:, 3:], axis=1), 1, atol=1e-14)
    # with a = 0 the kick alone keeps both x components fixed
    k = cl.map_step(pts, cl.ClassicalParams(0.0, 2.835, 1.1))
    np.testing.assert_allclose(k[:, [0, 3]], pts[:, [0, 3]], atol=1e-15)
    # gamma = 0 is a pure rotation and keeps z components
    z = cl.map_step(pts, cl.ClassicalParams(5.0, 0.0))
    np.testing.assert_allclose(z[:, [2, 5]], pts[:, [2, 5]], atol=1e-15)


def test_jacobian_is_volume_preserving(rng):
    for p in random_points(rng, 20):
        assert abs(np.linalg.det(cl.jacobian(p, P)) - 1) < 1e-10


def test_jacobian_matches_finite_differences(rng):
    pts = random_points(rng, 100)
    h = 1e-6
    for p in pts:
        J = cl.jacobian(p, P)
        fd = np.empty((6, 6))
        for i in range(6):
            e = np.zeros(6); e[i] = h
            fd[:, i] = (cl.map_step(p + e, P) - cl.map_step(p - e, P)) / (2 * h)
        assert np.abs(J - fd).max() / np.abs(J).max() < 1e-7


def test_compiled_step_and_tangent_match_reference(rng):
    pts = random_points(rng, 5)
    np.testing.assert_allclose(cl.evolve_points(pts, P, 1), cl.map_step(pts, P), atol=1e-15)
    v = rng.normal(size=6)
    x = pts[0].copy(); w = v.copy()
    cl._tangent_inplace(x, w, math.cos(P.a), math.sin(P.a), P.gamma, P.gamma * P.r)
    np.testing.assert_allclose(w, cl.tangent_step(pts[0], v, P), atol=1e-13)


def test_trajectory_equals_repeated_steps():
    p0 = cl.angles_to_point(*np.radians([45, 70, 135, 70]))
    tr = cl.trajectory(p0, P, 30)
    p = p0
    for n in range(1, 31):
        p = cl.map_step(p, P)
        assert np.array_equal(tr[n], p)
    assert tr.shape == (31, 6)


def test_evolve_points_long_run_stays_normalised(rng):
    out = cl.evolve_points(random_points(rng, 10), P, 2500)
    np.testing.assert_allclose(np.linalg.norm(out[:, 3:], axis=1), 1, atol=1e-12)


def test_lyapunov_values():
    chaotic = cl.angles_to_point(*np.radians([20, 40, 160, 130]))
    assert 0.40 < cl.lyapunov_max(chaotic, P, 10_000) < 0.50
    # the pure rotation has zero exponent up to the ln(n)/n shear term
    assert abs(cl.lyapunov_max(chaotic, cl.ClassicalParams(5.0, 0.0), 10_000)) < 3 * math.log(1e4) / 1e4


def test_lyapunov_many_matches_single(rng):
    pts = random_points(rng, 4)
    many = cl.lyapunov_many(pts, P, 2000)
    for p, lam in zip(pts, many):
        assert lam == pytest.approx(cl.lyapunov_max(p, P, 2000), abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_regular_rotation_exponent_bound(t, ph, ph2):
    p = cl.angles_to_point(t, ph, math.pi - t, ph2)
    lam = cl.lyapunov_max(p, cl.ClassicalParams(2.3, 0.0), 3000)
    assert abs(lam) < 3 * math.log(3000) / 3000


def test_fixed_point_eigs_unit_circle_below_threshold():
    eigs = cl.fixed_point_eigs(cl.ClassicalParams(5.0, 1.0))
    np.testing.assert_allclose(np.abs(eigs), 1, atol=1e-12)
    assert np.max(np.abs(cl.fixed_point_eigs(cl.ClassicalParams(5.0, 1.6)))) > 1
    zero = cl.fixed_point_eigs(cl.ClassicalParams(5.0, 0.0))
    np.testing.assert_allclose(np.sort_complex(zero),
                               np.sort_complex(np.exp([5j, 5j, -5j, -5j])), atol=1e-14)


@pytest.mark.parametrize("branch,lz", [("parallel", 1.0), ("antiparallel", -1.0)])
@pytest.mark.parametrize("gamma", [0.4, 1.3, 2.835])
def test_fixed_point_eigs_against_jacobian(branch, lz, gamma):
    # both spins on the z poles are fixed; the tangent map there has the four
    # quartic roots plus two unit eigenvalues from the radial directions
    params = cl.ClassicalParams(5.0, gamma, 1.1)
    pole = np.array([0, 0, 1.0, 0, 0, lz])
    assert np.array_equal(cl.map_step(pole, params), pole)
    ev = np.linalg.eigvals(cl.jacobian(pole, params))
    quartic = cl.fixed_point_eigs(params, branch)
    for e in quartic:
        assert np.min(np.abs(ev - e)) < 1e-9
    rest = [e for e in ev if np.min(np.abs(quartic - e)) > 1e-9]
    np.testing.assert_allclose(rest, [1, 1], atol=1e-9)


def test_stability_threshold():
    assert abs(cl.stability_threshold(5.0, 1.1) - 1.42) < 0.01
    with pytest.raises(ValueError):
        cl.characteristic_poly(P, "sideways")


def test_matched_sampling_ks_and_moments():
    j = 154
    spec = cl.MatchedDensitySpec.for_spin(j, 0.0, 0.0)
    u = uniforms(3, np.arange(200_000), 2)
    v = cl.sample_matched(spec, u[0], u[1])
    ks = stats.kstest(v[:, 2], lambda z: cl.matched_cdf(z, spec.sigma2)).statistic
    assert ks < 5e-3
    g = cl.G(spec.sigma2)
    se = v[:, 2].std() / math.sqrt(len(v))
    assert abs(v[:, 2].mean() - g) < 4 * se
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1, atol=1e-12)


def test_matched_sampling_rotation():
    spec = cl.MatchedDensitySpec.for_spin(1000, math.radians(60), math.radians(30))
    u = uniforms(1, np.arange(50_000), 2)
    m = cl.sample_matched(spec, u[0], u[1]).mean(axis=0)
    target = cl.angles_to_point(math.radians(60), math.radians(30), 0, 0)[:3]
    np.testing.assert_allclose(m / np.linalg.norm(m), target, atol=2e-3)


@pytest.mark.parametrize("s2", [0.5, 0.05, 1 / (2 * math.sqrt(154 * 155))])
def test_G_and_cdf_against_quadrature(s2):
    from scipy.integrate import quad
    w = lambda z: math.exp(-(1 - z) / s2)
    norm = quad(w, -1, 1)[0]
    assert cl.G(s2) == pytest.approx(quad(lambda z: z * w(z), -1, 1)[0] / norm, rel=1e-10)
    for z in (-0.5, 0.9, 0.999):
        assert cl.matched_cdf(z, s2) == pytest.approx(quad(w, -1, z)[0] / norm, rel=1e-9, abs=1e-14)


def test_matched_width_reproduces_coherent_ratio():
    # the quantum ratio <J_z>/<J_x^2> is 2 for every j, and so is the matched one
    for j in (20, 154, 1000):
        s2 = cl.matched_sigma2(j)
        mag = math.sqrt(j * (j + 1))
        x2 = s2 * cl.G(s2)  # <x^2> = (1 - <z^2>) / 2 = sigma2 <z> for this density
        assert (mag * cl.G(s2)) / (mag * mag * x2) == pytest.approx(2, rel=1e-12)


def test_uniform_sphere():
    u = uniforms(0, np.arange(100_000), 2)
    v = cl.sample_uniform_sphere(u[0], u[1])
    assert stats.kstest(v[:, 2], stats.uniform(-1, 2).cdf).statistic < 6e-3


def test_ensemble_is_chunk_invariant():
    ang = np.radians([45, 70, 135, 70])
    a = cl.make_ensemble(10, 11, ang, 1000, master_seed=7, chunk_size=64).points
    b = cl.make_ensemble(10, 11, ang, 1000, master_seed=7, chunk_size=999).points
    c = cl.make_ensemble(10, 11, ang, 1000, master_seed=8, chunk_size=64).points
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        cl.make_ensemble(10, 11, ang, 0)


def test_observe_matches_direct_evolution_and_is_worker_invariant():
    ang = np.radians([45, 70, 135, 70])
    ens = cl.make_ensemble(10, 11, ang, 3000, master_seed=1, chunk_size=512)
    o1 = cl.observe_ensemble(ens, P, 8, 10, 11, workers=1)
    o4 = cl.observe_ensemble(ens, P, 8, 10, 11, workers=4)
    assert np.array_equal(o1.mean, o4.mean) and np.array_equal(o1.hist_jz, o4.hist_jz)
    end = cl.evolve_ensemble(ens, P, 8)
    np.testing.assert_allclose(o1.mean[8], end.mean(axis=0), atol=1e-13)
    np.testing.assert_allclose(o1.p_lz[8], cl.binned_marginal_Lz(end, 11), atol=1e-15)
    np.testing.assert_allclose(o1.p_jz[8], cl.binned_marginal_Jz(end, 10, 11), atol=1e-15)
    assert o1.p_lz.sum(axis=1) == pytest.approx(np.ones(9))


def test_bin_edges_go_to_lower_m():
    l = 2
    mag = math.sqrt(6)
    # L_z exactly on the edge between m = 1 and m = 0 lands in m = 0
    pts = np.zeros((3, 6))
    pts[:, 5] = np.array([0.5, 1.49, 2.6]) / mag
    p = cl.binned_marginal_Lz(pts, l)
    # labels run 2, 1, 0, -1, -2; 2.6 overflows into the top bin
    np.testing.assert_array_equal(p * 3, [1, 1, 1, 0, 0])
    assert cl._bin_index(0.5, 1.0, 2.0, 5) == 2


def test_vector_model_moments():
    for j in (0.5, 3, 100):
        assert cl.vector_model_moment(j, 2) == pytest.approx(j / 2, rel=1e-13)
        assert cl.vector_model_moment(j, 4) == pytest.approx(3 * j * j / 8, rel=1e-13)
        assert cl.vector_model_moment(j, 3) == 0.0
    with pytest.raises(ValueError):
        cl.vector_model_moment(2, 1.5)
