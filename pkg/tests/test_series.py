"""Sparse series ring: exactness, truncation, and the substitution homomorphism."""

from fractions import Fraction

import pytest

from hodgeflow.series import (
    Monomial,
    PARAM_HBAR,
    PARAM_U,
    Series,
    Truncation,
    TruncationError,
    exp_nilpotent,
    q_var,
    random_series,
    t_var,
)
from hodgeflow.special import b_omega

TR = Truncation(3, 8, 6, 2, 4)


def u_pow(n, coeff=1):
    return Series.of_monomial(TR, Monomial.build((), {PARAM_U: n}), coeff)


def test_add_cancellation():
    s = Series.of_var(TR, t_var(0))
    assert s.add(s.neg()).is_zero()


def test_add_like_terms():
    a = u_pow(2, Fraction(1, 2))
    b = u_pow(2, Fraction(1, 3))
    assert a.add(b) == u_pow(2, Fraction(5, 6))


def test_add_respects_u_window():
    narrow = Truncation(3, 8, 0, 2, 4)
    t1 = Series.of_var(narrow, t_var(1))
    with_u = Series.of_monomial(
        narrow, Monomial.build({t_var(1): 1}, {PARAM_U: 1})
    )
    assert with_u.is_zero()
    assert t1.add(with_u) == t1


def test_mul_difference_of_squares():
    one = Series.one(TR)
    assert one.add(u_pow(1)).mul(one.sub(u_pow(1))) == one.sub(u_pow(2))


def test_mul_degree_window_drops():
    narrow = Truncation(1, 8, 6, 2, 4)
    t0 = Series.of_var(narrow, t_var(0))
    assert t0.mul(t0).is_zero()


def test_mul_exponential_inverse():
    b = b_omega(TR)
    assert exp_nilpotent(b).mul(exp_nilpotent(b.neg())) == Series.one(TR)


def test_log_inverts_exp():
    from hodgeflow.series import log_one_plus

    b = b_omega(TR)
    assert log_one_plus(exp_nilpotent(b).sub(Series.one(TR))) == b
    with pytest.raises(ValueError):
        log_one_plus(Series.one(TR))


def test_policy_mismatch_raises():
    other = Truncation(2, 8, 6, 2, 4)
    with pytest.raises(TruncationError):
        Series.one(TR).add(Series.one(other))


def test_coefficient_queries():
    s = Series.one(TR).add(Series.of_var(TR, t_var(0), 2))
    assert s.coefficient(Monomial.build({t_var(0): 1})) == 2
    assert Series.zero(TR).coefficient(Monomial.build({t_var(5): 1})) == 0


def test_ring_axioms_on_random_series():
    for seed in range(6):
        f = random_series(seed, TR, 8, max_hbar=1, max_u=2)
        g = random_series(seed + 50, TR, 8, max_hbar=1, max_u=2)
        h = random_series(seed + 100, TR, 8, max_hbar=1, max_u=2)
        assert f.mul(g) == g.mul(f)
        assert f.mul(g).mul(h) == f.mul(g.mul(h))
        assert f.mul(g.add(h)) == f.mul(g).add(f.mul(h))
        assert f.add(g) == g.add(f)


def test_truncation_idempotent():
    s = random_series(3, TR, 10, max_hbar=2, max_u=4)
    narrow = Truncation(2, 5, 2, 1, 2)
    once = s.truncated(narrow)
    assert once.truncated(narrow) == once


def test_substitute_is_homomorphism():
    rule = {
        t_var(1): Series.of_var(TR, q_var(3)).add(
            Series.of_monomial(TR, Monomial.build({q_var(1): 1}, {PARAM_U: 2}))
        ),
        t_var(0): Series.of_var(TR, q_var(1)),
    }
    for seed in (1, 2, 3):
        f = random_series(seed, TR, 6, variables=[t_var(0), t_var(1), t_var(2)])
        g = random_series(seed + 9, TR, 6, variables=[t_var(0), t_var(1), t_var(2)])
        assert f.mul(g).substitute(rule) == f.substitute(rule).mul(g.substitute(rule))


def test_substitute_fixes_constants_and_unlisted_vars():
    c = Series.constant(TR, Fraction(7, 3))
    assert c.substitute({t_var(0): Series.of_var(TR, q_var(1))}) == c
    s = Series.of_var(TR, t_var(2))
    assert s.substitute({t_var(0): Series.zero(TR)}) == s


def test_substitute_trinomial_example():
    target = (
        Series.of_var(TR, q_var(3))
        .add(Series.of_monomial(TR, Monomial.build({q_var(2): 1}, {PARAM_U: 1})))
        .add(Series.of_monomial(TR, Monomial.build({q_var(1): 1}, {PARAM_U: 2})))
    )
    got = Series.of_var(TR, t_var(1)).substitute({t_var(1): target})
    assert got == target


def test_substitute_policy_mismatch():
    narrow = Truncation(3, 4, 6, 2, 4)
    repl = Series.of_var(narrow, q_var(3))
    with pytest.raises(TruncationError):
        Series.of_var(TR, t_var(1)).substitute({t_var(1): repl})


def test_random_series_determinism():
    a = random_series(7, TR, 20)
    b = random_series(7, TR, 20)
    assert a == b and len(a.terms) == 20
    assert random_series(1, TR, 0).is_zero()
    assert not random_series(8, TR, 20) == random_series(9, TR, 20)


def test_render_canonical():
    s = Series.of_monomial(
        TR, Monomial.build({t_var(2): 1}, {PARAM_U: 2}), Fraction(-1, 12)
    )
    assert s.render() == "-1/12 * u^2 * t[2,0]"
    assert s.to_json_obj() == [{"monomial": "u^2 * t[2,0]", "coefficient": "-1/12"}]


def test_q_var_positivity():
    with pytest.raises(ValueError):
        q_var(0)
    with pytest.raises(ValueError):
        t_var(-1)


def test_hbar_window():
    s = Series.of_monomial(TR, Monomial.build((), {PARAM_HBAR: 3}))
    assert s.is_zero()


def test_truncation_validates_bounds():
    with pytest.raises(ValueError):
        Truncation(-1, 8, 6, 2, 4)
