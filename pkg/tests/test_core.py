import math

import pytest
from hypothesis import given, strategies as st

from propmeasure import INF, NEG_INF, ValidationError, build_instance, make_ext
from propmeasure.core import (
    ExtArithmeticError,
    LinearConstraint,
    VariableDomain,
    ext_add,
    ext_compare,
    ext_mul,
    format_ext,
)
from propmeasure.textformat import FormatError, dumps, loads

ext = st.one_of(st.floats(allow_nan=False), st.sampled_from([INF, NEG_INF]))


@pytest.mark.parametrize("raw, expected", [
    (1e20, INF), (-1e20, NEG_INF), (5e19, 5e19), ("inf", INF), ("-Infinity", NEG_INF),
    ("2.5", 2.5), (3, 3.0),
])
def test_make_ext(raw, expected):
    assert make_ext(raw) == expected


def test_make_ext_rejects_nan():
    with pytest.raises(ValueError):
        make_ext(float("nan"))


def test_ext_ops():
    assert ext_add(INF, 5) == INF
    with pytest.raises(ExtArithmeticError):
        ext_add(INF, NEG_INF)
    assert ext_mul(0.0, INF) == 0.0
    assert ext_mul(-2, INF) == NEG_INF
    assert format_ext(NEG_INF) == "-inf"
    assert format_ext(0.1) == "0.1"


@given(ext, ext, ext)
def test_ext_compare_is_a_total_order(a, b, c):
    assert ext_compare(a, b) == -ext_compare(b, a)
    if ext_compare(a, b) <= 0 and ext_compare(b, c) <= 0:
        assert ext_compare(a, c) <= 0


@given(st.floats(allow_nan=False))
def test_make_ext_idempotent(x):
    assert make_ext(make_ext(x)) == make_ext(x)


def test_fix1_columns(fix):
    assert fix["FIX1"].columns == ((0,), (0,))
    assert fix["FIX3"].columns == ((0,), (0, 1, 2))


@pytest.mark.parametrize("domains, cons, row, col", [
    ([(0, 1)], [([(0, 0.0)], 0, 1)], 0, 0),           # zero coefficient
    ([(0, 1)], [([(3, 1.0)], 0, 1)], 0, 3),           # unknown variable
    ([(0, 1)], [([(0, 1.0)], 2, 1)], 0, None),        # lhs > rhs
    ([(0, 1)], [([(0, 1.0)], NEG_INF, INF)], 0, None),
    ([(2, 1)], [], None, 0),                          # empty domain
    ([(0.5, 2, True)], [], None, 0),                  # fractional integer bound
])
def test_build_instance_errors(domains, cons, row, col):
    with pytest.raises(ValidationError) as err:
        build_instance(domains, cons)
    assert err.value.row == row
    assert err.value.col == col


def test_duplicate_terms_rejected():
    with pytest.raises(ValidationError):
        LinearConstraint.from_terms([(0, 1), (0, 2)], 0, 1)


def test_domain_defaults():
    d = VariableDomain()
    assert (d.lower, d.upper, d.is_integer) == (0.0, INF, False)


def test_text_round_trip(fix):
    for inst in fix.values():
        back = loads(dumps(inst))
        assert (back.domains, back.constraints, back.name) == (inst.domains, inst.constraints, inst.name)
        assert back.columns == inst.columns
        assert dumps(back) == dumps(inst)


def test_text_round_trip_random():
    import random
    from generators import random_instance
    rng = random.Random(7)
    for k in range(50):
        inst = random_instance(rng, name=f"t{k}")
        back = loads(dumps(inst))
        assert (back.domains, back.constraints) == (inst.domains, inst.constraints)


def test_text_format_errors():
    with pytest.raises(FormatError) as err:
        loads("problem p\nvariables 1\n0 x C 0 banana\nconstraints 0\nend\n")
    assert err.value.line == 3
    with pytest.raises(FormatError) as err:
        loads("problem p\nvariables 1\n0 x C 0 1\nconstraints 1\n0 c 0 1 2 0 1.0\nend\n")
    assert err.value.line == 5
    with pytest.raises(FormatError):
        loads("problem p\nvariables 1\n0 x C 0 1\nconstraints 1\n0 c 0 1 1 5 1.0\nend\n")


def test_infinity_threshold_canonicalized():
    inst = build_instance([(-1e30, 1e21)], [([(0, 1)], 0, 1e25)])
    assert inst.start_lower == [NEG_INF]
    assert inst.start_upper == [INF]
    assert inst.constraints[0].rhs == INF
    assert math.isinf(inst.constraints[0].rhs)
