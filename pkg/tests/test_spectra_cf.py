import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from geolorenz.errors import DomainError, ResourceError, UnsupportedError
from geolorenz.io import emit_plot_data
from geolorenz.spectra_cf import (
    CFWord,
    cf_value,
    cylinder_interval,
    enumerate_head,
    freiman_constant,
    hall_sum_check,
    perron_k,
    rational_square,
)

SQRT5, SQRT2 = math.sqrt(5), math.sqrt(2)
K3 = math.sqrt(221) / 5
words = st.lists(st.integers(1, 6), min_size=1, max_size=7)


def test_cf_value_examples():
    assert cf_value(CFWord.parse("[;(1)]")) == pytest.approx((1 + SQRT5) / 2, abs=1e-14)
    assert cf_value(CFWord.parse("[;(2)]")) == pytest.approx(1 + SQRT2, abs=1e-14)
    assert cf_value(CFWord.parse("[0;(2)]")) == pytest.approx(SQRT2 - 1, abs=1e-14)


def test_cf_value_errors():
    with pytest.raises(ValueError):
        cf_value(CFWord((), (1,)), terms=10)
    with pytest.raises(DomainError):
        CFWord((1, 0), (2,))
    with pytest.raises(DomainError):
        CFWord((), (2, -1))
    with pytest.raises(DomainError):
        CFWord.parse("[1;2,x]")


@given(st.lists(st.integers(1, 9), max_size=4), words)
def test_cf_value_converges(pre, per):
    w = CFWord(tuple(pre), tuple(per))
    assert abs(cf_value(w, 40) - cf_value(w, 80)) < 1e-10


@pytest.mark.parametrize("text", ["[;(1)]", "[0;(2)]", "[2;(2,1,1,2)]", "[3;1,2]", "[5;]"])
def test_parse_roundtrip(text):
    w = CFWord.parse(text)
    assert CFWord.parse(str(w)) == w


def test_parse_parts():
    w = CFWord.parse("[2;(2,1,1,2)]")
    assert w.preperiod == (2,) and w.period == (2, 1, 1, 2)
    w = CFWord.parse("[0;3,(1,4)]")
    assert w.preperiod == (0, 3) and w.period == (1, 4)


def test_perron_examples():
    assert perron_k(CFWord((), (1,))).value == pytest.approx(SQRT5, abs=1e-12)
    assert perron_k(CFWord((), (2,))).value == pytest.approx(2 * SQRT2, abs=1e-12)
    assert perron_k(CFWord((), (2, 2, 1, 1))).value == pytest.approx(K3, abs=1e-12)
    with pytest.raises(UnsupportedError):
        perron_k(CFWord((3, 1), ()))


def test_k3_word_by_brute_force():
    vals = set()
    for p in range(1, 5):
        for w in itertools.product((1, 2), repeat=p):
            vals.add(round(perron_k(CFWord((), w)).value, 9))
    third = sorted(vals)[2]
    assert third == pytest.approx(K3, abs=1e-9)
    assert perron_k(CFWord((), (2, 2, 1, 1))).value == pytest.approx(third, abs=1e-9)


@given(words, st.integers(0, 6), st.lists(st.integers(1, 9), max_size=3))
def test_perron_rotation_invariant(w, r, pre):
    r %= len(w)
    a = perron_k(CFWord((), tuple(w))).value
    b = perron_k(CFWord(tuple(pre), tuple(w[r:] + w[:r]))).value
    assert a == b


@given(words)
def test_hurwitz_floor(w):
    assert perron_k(CFWord((), tuple(w))).value >= SQRT5 - 1e-12


def test_head_markov_list():
    head = enumerate_head(4, 2)
    vals = [sv.value for sv in head]
    assert vals[:3] == pytest.approx([SQRT5, 2 * SQRT2, K3], abs=1e-9)
    for sv in head:
        q = rational_square(sv.value)
        assert q.denominator <= 10 ** 4 and abs(float(q) - sv.value ** 2) < 1e-8


def test_head_single_letters():
    # a + 2 (sqrt(a^2 + 4) - a) / 2 = sqrt(a^2 + 4): only a = 1, 2 fall below 3
    vals = [sv.value for sv in enumerate_head(1, 4)]
    assert vals == pytest.approx([SQRT5, 2 * SQRT2], abs=1e-12)
    assert [sv.value for sv in enumerate_head(8, 1)] == pytest.approx([SQRT5], abs=1e-12)


def test_head_larger_enumeration_is_discrete():
    head = enumerate_head(8, 2)
    vals = [sv.value for sv in head]
    assert vals == sorted(vals) and all(v < 3 for v in vals)
    assert all(b - a > 1e-9 for a, b in zip(vals, vals[1:]))
    for sv in head:
        q = rational_square(sv.value)
        assert abs(float(q) - sv.value ** 2) < 1e-8


def test_head_argument_ranges():
    with pytest.raises(ValueError):
        enumerate_head(9, 2)
    with pytest.raises(ValueError):
        enumerate_head(4, 5)


def test_hall_cover():
    res = hall_sum_check(1e-3)
    assert res.verified and res.max_gap <= 0.0
    assert res.target[0] == pytest.approx(0.41521, abs=1e-5)
    assert res.target[1] == pytest.approx(1.65585, abs=1e-5)
    assert res.contains(1.0)
    assert not res.contains(0.3) and not res.contains(1.7)
    assert "not a proof" in res.note


def test_hall_coarse():
    res = hall_sum_check(1e-2)
    assert res.verified


def test_hall_errors():
    with pytest.raises(ValueError):
        hall_sum_check(0.1)
    with pytest.raises(ResourceError):
        hall_sum_check(1e-5, budget=1000)


@given(st.lists(st.integers(1, 4), max_size=6), st.integers(1, 4))
def test_cylinders_nested_and_shrinking(w, a):
    lo, hi = cylinder_interval(w)
    l2, h2 = cylinder_interval(w + [a])
    assert lo - 1e-15 <= l2 and h2 <= hi + 1e-15
    assert (h2 - l2) < 0.5 * (hi - lo)


def test_freiman():
    v = freiman_constant()
    assert v == pytest.approx(4.5278295661609, abs=1e-12)
    assert 3 < v < 6


def test_head_csv(tmp_path):
    path = emit_plot_data(enumerate_head(4, 2), tmp_path / "head.csv", {"command": "test"})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# geolorenz test config=")
    assert lines[1] == "value,witness_word,shift"
    assert lines[2].split(",")[1] == "[;(1)]"
