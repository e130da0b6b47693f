import numpy as np
import pytest

from rsamp.exceptions import DimensionError, DomainError
from rsamp.models import (
    ARMA11Model,
    ExponentialModel,
    MixtureModel,
    NormalMeanModel,
    NormalModel,
    QuantileModel,
    ShockPack,
    exponential_quantile,
    get_model,
    make_shockpack,
    normal_location_quantile,
    simulate_dataset,
)


def test_shockpack_is_deterministic_and_distinct():
    m = NormalModel(20)
    a, b = make_shockpack(m, 7, 3), make_shockpack(m, 7, 3)
    assert a == b
    assert a != make_shockpack(m, 7, 4)
    assert a != make_shockpack(m, 8, 3)
    assert a.normals.shape == (20,) and a.uniforms.shape == (0,)


def test_shockpack_is_read_only():
    pack = make_shockpack(ExponentialModel(5), 1, 0)
    with pytest.raises(ValueError):
        pack.uniforms[0] = 0.5


def test_dataset_stream_differs_from_draw_streams():
    m = NormalModel(20)
    y = simulate_dataset(m, [0.0, 1.0], 0)
    for b in range(5):
        assert not np.allclose(y, m.simulate([0.0, 1.0], make_shockpack(m, 0, b)))


def test_normal_statistics_use_divisor_T():
    m = NormalModel(4)
    y = np.array([1.0, 2.0, 3.0, 6.0])
    np.testing.assert_allclose(m.aux_stats(y), [3.0, 3.5])


def test_normal_oi_statistics():
    m = NormalModel(4, over_identified=True)
    y = np.array([1.0, 2.0, 3.0, 6.0])
    d = y - 3.0
    s2 = np.mean(d**2)
    np.testing.assert_allclose(m.aux_stats(y), [3.0, s2, np.mean(d**3) / s2, np.mean(d**4) / s2**2])


def test_normal_simulation_is_location_scale():
    m = NormalModel(20)
    pack = make_shockpack(m, 2, 0)
    np.testing.assert_allclose(m.simulate([1.0, 4.0], pack), 1.0 + 2.0 * pack.normals)


def test_normal_domain():
    m = NormalModel(20)
    pack = make_shockpack(m, 0, 0)
    with pytest.raises(DomainError):
        m.psi([0.0, -1.0], pack)
    with pytest.raises(DimensionError):
        m.psi([0.0], pack)


def test_exponential_matches_inverse_cdf():
    m = ExponentialModel(5)
    pack = make_shockpack(m, 3, 1)
    np.testing.assert_allclose(m.simulate([2.0], pack), -np.log(1 - pack.uniforms) / 2.0)
    np.testing.assert_allclose(m.simulate([2.0], pack), exponential_quantile(pack.uniforms, 2.0))


def test_exponential_statistics_scale_inversely():
    m = ExponentialModel(5, over_identified=True)
    pack = make_shockpack(m, 3, 1)
    a, b = m.psi([1.0], pack), m.psi([2.0], pack)
    np.testing.assert_allclose(b, [a[0] / 2, a[1] / 4])


def test_analytic_jacobians_match_finite_differences():
    for m, theta in [(NormalModel(20), [0.3, 1.7]), (NormalModel(20, True), [0.3, 1.7]),
                     (ExponentialModel(5), [1.3]), (ExponentialModel(5, True), [1.3])]:
        pack = make_shockpack(m, 11, 2)
        J = m.analytic_jacobian(theta, pack)
        h = 1e-6
        cols = []
        for j in range(len(theta)):
            up, dn = np.array(theta, float), np.array(theta, float)
            up[j] += h
            dn[j] -= h
            cols.append((m.psi(up, pack) - m.psi(dn, pack)) / (2 * h))
        np.testing.assert_allclose(J, np.column_stack(cols), rtol=1e-6, atol=1e-8)


def test_arma_simulation_recursion():
    m = ARMA11Model(30)
    pack = make_shockpack(m, 4, 0)
    a, b, s = 0.5, 0.3, 1.2
    e = s * pack.normals
    y = np.zeros(30)
    for t in range(30):
        y[t] = (a * y[t - 1] if t else 0.0) + e[t] + (b * e[t - 1] if t else 0.0)
    np.testing.assert_allclose(m.simulate([a, b, s], pack), y, atol=1e-12)


def test_arma_statistics_are_lag_regression():
    m = ARMA11Model(200)
    y = simulate_dataset(m, [0.5, 0.5, 1.0], 1)
    X = np.column_stack([y[3 - j:199 - j] for j in range(4)])
    coef = np.linalg.lstsq(X, y[4:], rcond=None)[0]
    stats = m.aux_stats(y)
    np.testing.assert_allclose(stats[:4], coef, rtol=1e-10)
    assert stats[4] == pytest.approx(np.mean((y[4:] - X @ coef) ** 2))


def test_arma_start_point_in_stationary_region():
    m = ARMA11Model(200)
    start = m.start_point(m.aux_stats(simulate_dataset(m, [0.5, 0.5, 1.0], 0)))
    assert abs(start[0]) < 1 and abs(start[1]) < 1 and start[2] > 0


def test_mixture_components():
    m = MixtureModel()
    pack = ShockPack(0, 0, np.array([1.0]), np.array([0.2]))
    assert m.psi([0.5], pack)[0] == pytest.approx(1.5)
    pack = ShockPack(0, 0, np.array([1.0]), np.array([0.7]))
    assert m.psi([0.5], pack)[0] == pytest.approx(0.6)


def test_normal_mean_model():
    m = NormalMeanModel(1)
    pack = make_shockpack(m, 0, 0)
    assert m.psi([2.0], pack)[0] == pytest.approx(2.0 + pack.normals[0])


def test_quantile_model_reproduces_location_model():
    qm = QuantileModel(normal_location_quantile, 10)
    pack = make_shockpack(qm, 0, 0)
    from scipy.stats import norm

    np.testing.assert_allclose(qm.simulate([1.5], pack), 1.5 + norm.ppf(pack.uniforms))


def test_quantile_model_non_finite_raises():
    qm = QuantileModel(lambda u, t: u / t, 3)
    with pytest.raises(DomainError), np.errstate(divide="ignore"):
        qm.simulate([0.0], make_shockpack(qm, 0, 0))


def test_psi_batch_matches_loop():
    m = NormalModel(20, over_identified=True)
    rng = np.random.default_rng(0)
    thetas = np.column_stack([rng.standard_normal(5), [1.0, 2.0, -1.0, 0.5, 3.0]])
    normals = rng.standard_normal((5, 20))
    batch = m.psi_batch(thetas, normals, np.empty((5, 0)))
    for i in range(5):
        if thetas[i, 1] > 0:
            ref = m.psi(thetas[i], ShockPack(0, i, normals[i].copy(), np.empty(0)))
            np.testing.assert_allclose(batch[i], ref, rtol=1e-12)
        else:
            assert np.all(np.isnan(batch[i]))


def test_registry():
    assert get_model("normal-ji").n_obs == 20
    assert get_model("exponential-oi", 7).aux_dim == 2
    assert get_model("arma11").aux_dim == 5
    with pytest.raises(KeyError):
        get_model("garch")
    with pytest.raises(DimensionError):
        get_model("normal-ji", 1)
