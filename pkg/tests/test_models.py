import numpy as np
import pytest

from osculator import (
    FirstOrderState,
    ForceSpec,
    InvalidSpec,
    ModelSpec,
    build_force,
    build_model,
    metric_tensor,
    spray_coefficients,
)
from osculator.geom_core import FORCED_FD


def test_euclidean_lagrangian():
    m = build_model(ModelSpec("euclidean", 2))
    assert m.lagrangian(np.array([5.0, 1.0]), np.array([3.0, 4.0])) == pytest.approx(25.0)


def test_sphere_lagrangian():
    m = build_model({"kind": "sphere", "params": {"radius": 1.0}})
    x, y = np.array([np.pi / 6, 0.3]), np.array([0.5, 2.0])
    assert m.lagrangian(x, y) == pytest.approx(0.25 + 0.25 * 4)


def test_flat_polar_geodesics_are_straight_lines():
    from osculator import IntegratorConfig, integrate_trajectory
    from osculator.geom_core import zero_force
    m = build_model(ModelSpec("flat_polar", 2))
    tr = integrate_trajectory(m, zero_force(2), FirstOrderState([1.0, 0.0], [0.0, 1.0]), IntegratorConfig(1e-3, 2.0))
    X, Y = tr.x[:, 0] * np.cos(tr.x[:, 1]), tr.x[:, 0] * np.sin(tr.x[:, 1])
    np.testing.assert_allclose(X, 1.0, atol=1e-10)
    np.testing.assert_allclose(Y, tr.t, atol=1e-10)


def test_analytic_flags():
    for kind in ("euclidean", "flat_polar", "sphere", "hyperbolic_half_plane", "minkowski_norm"):
        m = build_model(ModelSpec(kind, 2))
        assert m.spray_jet is not None and m.is_spray_homogeneous
    r = build_model(ModelSpec("randers", 2))
    assert r.spray_jet is None and r.y_min == 1e-8


@pytest.mark.parametrize("bnorm", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("base", ["euclidean", "sphere"])
def test_randers_positive_definite(bnorm, base):
    m = build_model(ModelSpec("randers", 2, {"base": base, "b": [bnorm, 0.0]}))
    rng = np.random.default_rng(2)
    x = np.column_stack([rng.uniform(0.3, 2.8, 30), rng.uniform(-3, 3, 30)])
    ang = rng.uniform(0, 2 * np.pi, 30)
    y = np.column_stack([np.cos(ang), np.sin(ang)])
    assert np.all(m.lagrangian(x, y) > 0)
    g = metric_tensor(m, FirstOrderState(x, y))
    assert np.all(np.linalg.eigvalsh(g) > 0)


@pytest.mark.parametrize("spec, fragment", [
    (ModelSpec("torus", 2), "unknown model kind"),
    (ModelSpec("sphere", 3), "two-dimensional"),
    (ModelSpec("sphere", 2, {"radius": -1}), "radius"),
    (ModelSpec("randers", 2, {"base": "euclidean", "b": [1.0, 0.0]}), "|b|_a < 1"),
    (ModelSpec("randers", 2, {"b": [0.0, 0.1]}), "|b|_a < 1"),
    (ModelSpec("randers", 2, {"b": [0.1]}), "components"),
    (ModelSpec("riemannian_callback", 2), "metric"),
    (ModelSpec("minkowski_norm", 2, {"lagrangian": "no_such_module:f"}), "cannot import"),
])
def test_invalid_specs(spec, fragment):
    with pytest.raises(InvalidSpec, match=fragment.replace("|", r"\|")):
        build_model(spec)


def _round_metric(x):
    g = np.zeros(np.shape(x)[:-1] + (2, 2))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = np.sin(x[..., 0]) ** 2
    return g


def _quartic_norm(y):
    return np.sqrt(y[..., 0] ** 4 + y[..., 1] ** 4)


def test_callback_models_match_presets():
    cb = build_model(ModelSpec("riemannian_callback", 2, {"metric": _round_metric}))
    sph = build_model(ModelSpec("sphere", 2))
    s = FirstOrderState([1.0, 0.4], [0.3, -0.7])
    np.testing.assert_allclose(spray_coefficients(cb, s), spray_coefficients(sph, s), atol=1e-8)
    by_name = build_model(ModelSpec("riemannian_callback", 2, {"metric": "test_models:_round_metric"}))
    np.testing.assert_allclose(spray_coefficients(by_name, s), spray_coefficients(sph, s), atol=1e-8)


def test_nonquadratic_minkowski_callback_has_zero_spray():
    m = build_model(ModelSpec("minkowski_norm", 2, {"lagrangian": _quartic_norm}))
    s = FirstOrderState([0.3, 0.2], [1.0, 0.5])
    assert np.max(np.abs(spray_coefficients(m, s, FORCED_FD))) < 1e-10


def test_force_presets():
    x, y = np.array([0.5, -1.0]), np.array([2.0, 3.0])
    z = build_force(ForceSpec("zero"), 2)
    assert np.all(z(x, y) == 0) and np.all(z.dF_dx(x, y) == 0) and np.all(z.dF_dy(x, y) == 0)
    d = build_force(ForceSpec("linear_drag", {"k": 1.0}), 2)
    np.testing.assert_array_equal(d(x, y), -y)
    np.testing.assert_array_equal(d.dF_dy(x, y), -np.eye(2))
    np.testing.assert_array_equal(d.dF_dx(x, y), np.zeros((2, 2)))
    K = np.array([[2.0, 1.0], [1.0, 3.0]])
    s = build_force(ForceSpec("position_spring", {"K": K.tolist()}), 2)
    np.testing.assert_array_equal(s(x, y), -K @ x)
    np.testing.assert_array_equal(s.dF_dx(x, y), -K)


def test_force_callback_by_string():
    f = build_force(ForceSpec("callback", {"force": "test_models:_twist"}), 2)
    np.testing.assert_allclose(f(np.zeros(2), np.array([1.0, 2.0])), [-2.0, 1.0])


def _twist(x, y):
    return np.stack([-y[..., 1], y[..., 0]], axis=-1)


@pytest.mark.parametrize("spec", [ForceSpec("linear_drag", {"k": -1}), ForceSpec("position_spring", {"K": [[1, 2]]}),
                                  ForceSpec("position_spring", {"K": float("inf")}), ForceSpec("gravity")])
def test_invalid_forces(spec):
    with pytest.raises(InvalidSpec):
        build_force(spec, 2)


def test_spec_dict_round_trip():
    m = ModelSpec("randers", 2, {"b": [0.2, 0.0], "base": "euclidean"})
    assert ModelSpec.from_dict(m.to_dict()) == m
    f = ForceSpec("linear_drag", {"k": 0.5})
    assert ForceSpec.from_dict(f.to_dict()) == f
