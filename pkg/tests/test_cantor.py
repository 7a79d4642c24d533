import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geolorenz.cantor import (
    Branch,
    CantorSpec,
    build_direct_cantor,
    build_theorem_cantor,
    distortion_H,
    distortion_ratio,
    log_derivative,
    nested_gaps_ok,
    orbit_points,
)
from geolorenz.errors import ConstructionError, EmptySpecError
from geolorenz.one_d import Interval, MapModel


def test_H_closed_form(model):
    # oracle: mpmath exp(-(2/3) C C1 sqrt2 (sqrt2 + 1)) with C = 1.2375, C1 = 0.309375
    H = distortion_H(model)
    assert H == pytest.approx(0.418355108725483, abs=1e-12)
    assert 1 / H == pytest.approx(2.3903, abs=1e-4)


def test_direct_spec_valid(model, direct_spec):
    assert len(direct_spec) >= 1
    assert direct_spec.validate(model) == []
    for b in direct_spec.branches:
        assert b.lambda_min > model.eta ** 0 and b.lambda_min <= b.lambda_max
        assert not b.domain.contains_zero()


def test_direct_markov_property(model, direct_spec):
    for b in direct_spec.branches:
        img = b.image(model)
        assert abs(img.lo - direct_spec.base.lo) < 1e-9 and abs(img.hi - direct_spec.base.hi) < 1e-9
        xs = np.linspace(b.domain.lo, b.domain.hi, 200)
        ys = orbit_points(model, xs, b.sides)[-1]
        assert np.all(np.diff(ys) > 0)


def test_direct_delta_swallows_base(model):
    with pytest.raises(EmptySpecError):
        build_direct_cantor(model, 0.4, 4)


def test_direct_bad_ranges(model):
    with pytest.raises(ValueError):
        build_direct_cantor(model, 0.0, 4)
    with pytest.raises(ValueError):
        build_direct_cantor(model, 0.01, 13)


def test_direct_branch_count_monotone_in_delta(model):
    counts = [len(build_direct_cantor(model, d, 6)) for d in (1e-2, 1e-3, 1e-4)]
    assert counts == sorted(counts)


@given(st.floats(1e-4, 0.04), st.floats(1e-4, 0.04), st.integers(1, 6))
def test_direct_survival_monotone(d1, d2, depth):
    m = MapModel().with_cut()
    small, big = sorted((d1, d2))

    def domains(delta):
        try:
            return {b.domain for b in build_direct_cantor(m, delta, depth).branches}
        except EmptySpecError:
            return set()

    assert domains(big) <= domains(small)


def test_spec_json_roundtrip(model, direct_spec):
    d = json.loads(direct_spec.to_json())
    assert set(d) >= {"base", "branches"}
    assert set(d["branches"][0]) >= {"domain", "iterates", "lambda_min", "lambda_max"}
    back = CantorSpec.from_dict(d)
    assert back.to_dict() == direct_spec.to_dict()


def test_validate_flags_problems(model):
    bad = CantorSpec(Interval(-0.3, -0.1), [
        Branch(Interval(-0.2, 0.1), 1, (), 0.5, 2.0),
        Branch(Interval(0.0, 0.2), 1, (), 3.0, 2.0),
    ])
    problems = " ".join(bad.validate())
    assert "overlap" in problems and "contains 0" in problems
    assert "lambda_min 0.5" in problems and "lambda_min > lambda_max" in problems


def test_log_derivative_matches_chain_rule(model):
    x = np.array([0.3, -0.2])
    sides = (1, -1)
    ld = log_derivative(model, x, sides)
    # x[0] = 0.3 is right, f(0.3) lands left; evaluate the product directly on the first point
    y = float(model.f_closed(0.3, 1))
    expect = math.log(float(model.df(0.3)) * float(model.df(y)))
    assert ld[0] == pytest.approx(expect, abs=1e-12)


def test_theorem_mode_k2(model, theorem_run):
    spec, log = theorem_run
    assert len(spec) >= 1 and spec.mode == "theorem"
    assert spec.validate(model) == []
    assert spec.base.lo == pytest.approx(-0.369284144204349, abs=1e-12) and spec.base.hi == 0.0
    assert log.m_k == min(log.m_uncapped, 10)
    c = log.counts
    assert c["sampled"] >= c["claim1"] >= c["claim2"] >= c["claim3"] >= c["aleo"] >= 1
    assert log.claim1_fraction >= 0.5
    assert log.slack["ok"]


def test_theorem_mode_branches_have_distortion_bound(model, theorem_run):
    spec, log = theorem_run
    H = log.H
    rng = np.random.default_rng(3)
    for b in spec.branches[:50]:
        x, y = rng.uniform(b.domain.lo, b.domain.hi, 2)
        assert H <= distortion_ratio(model, b, x, y) <= 1 / H
        assert distortion_ratio(model, b, x, x) == 1.0


def test_theorem_k1_fails_with_stage(model, mu1024):
    with pytest.raises(ConstructionError) as ei:
        build_theorem_cantor(model, 1, m_cap=10, measure=mu1024)
    assert ei.value.stage is not None
    log = ei.value.log
    assert log.k == 1 and len(log.core_intervals) == 1 and log.core_intervals[0]["n"] >= 1


def test_nested_family(model, mu1024, theorem_run):
    with pytest.raises(ConstructionError) as ei:
        build_theorem_cantor(model, 1, m_cap=10, measure=mu1024)
    log1 = ei.value.log
    log2 = theorem_run[1]
    assert nested_gaps_ok(log1, log2)


def test_theorem_bad_args(model, mu1024):
    with pytest.raises(ValueError):
        build_theorem_cantor(model, 0, measure=mu1024)
    with pytest.raises(ValueError):
        build_theorem_cantor(model, 2, m_cap=30, measure=mu1024)


def test_theorem_deterministic(model, mu1024, theorem_run):
    spec2, _ = build_theorem_cantor(model, 2, m_cap=10, measure=mu1024)
    assert spec2.to_dict() == theorem_run[0].to_dict()
