import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geolorenz.errors import BlowUpError, ParameterError, SingularLeafError
from geolorenz.geo_model import (
    GeoParams,
    OdeParams,
    SectionPoint,
    attractor_sample,
    flight_time,
    g_eval,
    l_map,
    ode_ensemble,
    ode_orbit,
    poincare,
    poincare_jacobian,
    poincare_orbit,
    validate_params,
)
from geolorenz.one_d import f_eval

xs = st.floats(1e-6, 0.5).flatmap(lambda v: st.sampled_from([v, -v]))
ys = st.floats(-0.5, 0.5)


def test_ode_eigenvalues_match_quadratic_roots():
    # oracle: roots of l^2 + 11 l - 270 = 0 and l3 = -b (mpmath, 30 digits)
    p = GeoParams.from_ode(OdeParams())
    assert p.lambda1 == pytest.approx(11.8277234511634563, abs=1e-12)
    assert p.lambda2 == pytest.approx(-22.8277234511634563, abs=1e-12)
    assert p.alpha == pytest.approx(0.225458997048527963, abs=1e-12)
    assert p.beta == pytest.approx(1.93001836282517785, abs=1e-12)
    assert validate_params(p) == [] or "f maps into [-1/2,1/2]" in validate_params(p)


def test_validate_rounded_lorenz_eigenvalues():
    p = GeoParams(lambda1=11.8277, lambda2=-22.8277, lambda3=-2.6667)
    bad = validate_params(p)
    assert not {"0<-lambda3", "-lambda3<lambda1", "lambda1<-lambda2"} & set(bad)
    assert p.alpha == pytest.approx(0.22546, abs=1e-5)
    assert p.beta == pytest.approx(1.93002, abs=1e-5)


def test_validate_simple_ratios():
    # with alpha = 0.5 the default theta pushes f(1/2) above 1/2, so theta is lowered
    p = GeoParams(lambda1=1, lambda2=-2, lambda3=-0.5, theta=1.4)
    assert (p.alpha, p.beta) == (0.5, 2.0)
    assert validate_params(p) == []
    assert validate_params(GeoParams(lambda1=1, lambda2=-2, lambda3=-0.5)) == ["f maps into [-1/2,1/2]"]


def test_validate_broken_ordering():
    p = GeoParams(lambda1=1, lambda2=-0.5, lambda3=-2)
    assert set(validate_params(p)) == {"-lambda3<lambda1", "lambda1<-lambda2"}


def test_default_params_valid(geo):
    assert validate_params(geo) == []
    assert (geo.alpha, geo.beta) == (0.75, 3.75)


def test_params_json_roundtrip(tmp_path, geo):
    path = tmp_path / "p.json"
    import json
    path.write_text(json.dumps(geo.to_dict()))
    assert GeoParams.from_json(path) == geo
    with pytest.raises(ParameterError):
        GeoParams.from_dict({"lambda9": 1.0})


def test_flight_time_examples():
    p = GeoParams()
    assert flight_time(p, math.exp(-1)) == pytest.approx(1.0, abs=1e-15)
    assert flight_time(p, 0.5) == pytest.approx(0.693147180559945, abs=1e-14)
    with pytest.raises(SingularLeafError):
        flight_time(p, 0.0)


def test_flight_time_affine_in_decades(geo):
    t = [flight_time(geo, 10.0 ** -k) for k in range(1, 12)]
    assert np.allclose(np.diff(t), math.log(10) / geo.lambda1)


@given(st.floats(1e-9, 0.5), st.floats(1e-9, 0.5))
def test_flight_time_decreasing(a, b):
    p = GeoParams()
    if a < b:
        assert flight_time(p, a) > flight_time(p, b)
    assert flight_time(p, a) >= math.log(2) / p.lambda1 - 1e-15


def test_l_map_example():
    p = GeoParams(lambda1=1, lambda2=-2, lambda3=-0.5)
    assert tuple(l_map(p, 0.25, 0.5)) == pytest.approx((1.0, 0.03125, 0.5), abs=1e-15)
    with pytest.raises(SingularLeafError):
        l_map(p, 0.0, 0.2)


@given(xs)
def test_l_map_zero_y(x):
    p = GeoParams()
    q = l_map(p, x, 0.0)
    assert q == (math.copysign(1.0, x), 0.0, abs(x) ** p.alpha)


def test_poincare_example(geo):
    # oracle: 1.65 * 0.25^0.75 - 0.5 evaluated with mpmath
    q = poincare(geo, SectionPoint(0.25, 0.0))
    assert q.x == pytest.approx(0.0833630944789017, abs=1e-13)
    assert q.y == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(SingularLeafError):
        poincare(geo, SectionPoint(0.0, 0.1))


def test_poincare_leaves_section_with_bad_g():
    p = GeoParams(g_offset=0.49, g_gain=1.0)
    with pytest.raises(ParameterError):
        poincare(p, SectionPoint(0.5, 0.5))
    assert "g maps S into S" in validate_params(p)


@given(xs, ys, ys)
def test_poincare_fibre_contraction(x, y, y2):
    p = GeoParams()
    a, b = poincare(p, (x, y)), poincare(p, (x, y2))
    assert a.x == b.x == f_eval(p.map_model(), x)
    assert abs(a.y - b.y) == pytest.approx(abs(x) ** p.beta * abs(y - y2), abs=1e-15)
    assert abs(x) ** p.beta <= 2.0 ** -p.beta
    assert abs(a.x) <= 0.5 and abs(a.y) <= 0.5


@given(xs, ys)
def test_poincare_jacobian_matches_difference(x, y):
    p = GeoParams()
    h = 1e-7 * abs(x)
    J = poincare_jacobian(p, (x, y))
    assert J[1, 1] == abs(x) ** p.beta
    dgdx = (g_eval(p, x + h, y) - g_eval(p, x - h, y)) / (2 * h)
    assert J[1, 0] == pytest.approx(float(dgdx), rel=1e-5, abs=1e-7)
    fx = (p.map_model().f(x + h) - p.map_model().f(x - h)) / (2 * h)
    assert J[0, 0] == pytest.approx(float(fx), rel=1e-5)


def test_poincare_orbit_batch_matches_scalar(geo):
    seeds = np.array([[0.3, 0.1], [-0.2, -0.4]])
    orb = poincare_orbit(geo, seeds, 5)
    q = SectionPoint(0.3, 0.1)
    for i in range(1, 6):
        q = poincare(geo, q)
        assert orb[i, 0] == pytest.approx(q, abs=1e-14)


def test_ode_bounded_cloud():
    pts = ode_orbit(OdeParams(), (1, 1, 1), 0.005, 100_000)
    assert np.abs(pts[:, 2]).max() < 60


def test_ode_subcritical_converges():
    pts = ode_orbit(OdeParams(r=0.5), (1, 1, 1), 0.005, 100_000)
    assert np.linalg.norm(pts[-1]) < 1e-3


def test_ode_blowup_and_bad_dt():
    with pytest.raises(ParameterError):
        ode_orbit(OdeParams(), (1, 1, 1), 1.0, 10)
    with pytest.raises(BlowUpError):
        # stiff parameters push fixed-step RK4 out of its stability region
        ode_orbit(OdeParams(a=500), (1, 1, 1), 0.02, 1000)


def test_ode_deterministic_and_ensemble_agrees():
    a = ode_orbit(OdeParams(), (1, 1, 1), 0.01, 500, transient=100)
    b = ode_orbit(OdeParams(), (1, 1, 1), 0.01, 500, transient=100)
    assert np.array_equal(a, b)
    e = ode_ensemble(OdeParams(), [(1, 1, 1), (2, 0, 5)], 0.01, 500, transient=100)
    assert np.allclose(e[:, 0], a, atol=1e-8)


def test_attractor_sample_shape_and_bounds():
    pts = attractor_sample(OdeParams(), 20_000, n_ic=200)
    assert pts.shape == (20_000, 3)
    assert np.abs(pts[:, 2]).max() < 60 and np.all(np.isfinite(pts))
