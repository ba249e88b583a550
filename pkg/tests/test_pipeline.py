"""Change of variables, the bridge identity, the main identity, the runner."""

from fractions import Fraction

import pytest

from hodgeflow.hodge import build_w_u
from hodgeflow.pairing import hyperbolic2_pairing, point_pairing
from hodgeflow.pipeline import (
    SubstitutionPlan,
    VerificationConfig,
    change_vars,
    log_true_coefficient,
    run_suite,
    to_q_world,
    u_zero_substitute,
    verify_hodge_to_gw,
    verify_kernel_match,
    verify_substitution_bridge,
    verify_theta_recoloring,
)
from hodgeflow.operators import Operator, OperatorClassError
from hodgeflow.series import (
    Monomial,
    PARAM_HBAR,
    PARAM_U,
    Series,
    Truncation,
    TruncationError,
    q_var,
    random_series,
    t_var,
)
from hodgeflow.special import c_const
from hodgeflow.witten import default_hbar_offset, z_point

PT = point_pairing()
H2 = hyperbolic2_pairing()


def test_u_zero_substitution_examples():
    tr = Truncation(3, 8, 6, 2, 0)
    s = Series.of_var(tr, t_var(0, 1))
    assert u_zero_substitute(s) == Series.of_var(tr, q_var(1, 1))
    s2 = Series.of_monomial(tr, Monomial.build({t_var(2): 1, t_var(0): 1}))
    want = Series.of_monomial(tr, Monomial.build({q_var(5): 1, q_var(1): 1}), 3)
    assert u_zero_substitute(s2) == want


def test_u_zero_substitution_overflow():
    tr = Truncation(3, 8, 6, 2, 0)
    with pytest.raises(TruncationError):
        u_zero_substitute(Series.of_var(tr, t_var(4)))


def test_change_vars_examples():
    tr = Truncation(3, 8, 6, 2, 0)
    plan = SubstitutionPlan("full", PT, tr)
    assert change_vars(Series.of_var(tr, t_var(0)), plan) == Series.of_var(
        tr, q_var(1)
    )
    got1 = change_vars(Series.of_var(tr, t_var(1)), plan)
    assert got1.coefficient(Monomial.build({q_var(1): 1}, {PARAM_U: 2})) == 1
    assert got1.coefficient(Monomial.build({q_var(2): 1}, {PARAM_U: 1})) == 2
    assert got1.coefficient(Monomial.build({q_var(3): 1})) == 1
    got2 = change_vars(Series.of_var(tr, t_var(2)), plan)
    assert got2.coefficient(Monomial.build((), {PARAM_U: 2})) == c_const(1)
    assert got2.coefficient(Monomial.build({q_var(5): 1})) == 3
    assert got2.coefficient(Monomial.build({q_var(3): 1}, {PARAM_U: 2})) == 12


def test_change_vars_constant_shift_sign_alternates():
    tr = Truncation(3, 11, 8, 2, 0)
    plan = SubstitutionPlan("full", PT, tr)
    got3 = change_vars(Series.of_var(tr, t_var(3)), plan)
    assert got3.coefficient(Monomial.build((), {PARAM_U: 4})) == -c_const(2)
    got4 = change_vars(Series.of_var(tr, t_var(4)), plan)
    assert got4.coefficient(Monomial.build((), {PARAM_U: 6})) == c_const(3)


def test_change_vars_nonzero_color_has_no_shift():
    tr = Truncation(3, 8, 6, 2, 0)
    plan = SubstitutionPlan("full", H2, tr)
    got = change_vars(Series.of_var(tr, t_var(2, 1)), plan)
    assert got.coefficient(Monomial.build((), {PARAM_U: 2})) == 0


def test_full_plan_degenerates_to_u_zero():
    tr = Truncation(3, 9, 0, 2, 0)  # u window closed
    plan = SubstitutionPlan("full", PT, tr)
    for n in range(0, 5):
        s = Series.of_var(tr, t_var(n))
        assert change_vars(s, plan) == u_zero_substitute(s), n


def test_change_vars_is_multiplicative():
    # replacements for deep zero-color coordinates carry constants, so the
    # window must hold f*g whole for the homomorphism statement to be exact
    narrow = Truncation(3, 9, 6, 2, 0)
    tr = narrow.replace(max_t_degree=6)
    plan = SubstitutionPlan("full", PT, tr)
    f = random_series(3, narrow, 5, variables=[t_var(i) for i in range(4)]).truncated(tr)
    g = random_series(44, narrow, 5, variables=[t_var(i) for i in range(4)]).truncated(tr)
    assert change_vars(f.mul(g), plan) == change_vars(f, plan).mul(
        change_vars(g, plan)
    )


def test_to_q_world_chain_rule():
    tr = Truncation(2, 8, 6, 2, 0)
    op = Operator.atom(1, deriv=[t_var(1, 0), t_var(2, 1)])
    got = to_q_world(op, tr)
    want = Operator.atom(
        Fraction(1, 3), deriv=[q_var(3, 0), q_var(5, 1)]
    )
    assert got == want
    with pytest.raises(OperatorClassError):
        to_q_world(Operator.atom(1, mult=[t_var(0)], deriv=[t_var(1)]), tr)


def test_substitution_bridge_small():
    r = verify_substitution_bridge(
        PT, Truncation(2, 9, 10, 0, 0), n_max=4, seed=1, random_count=3
    )
    assert r.passed
    r2 = verify_substitution_bridge(
        H2, Truncation(2, 7, 8, 0, 0), n_max=3, seed=2, random_count=3
    )
    assert r2.passed


def test_kernel_match_both_pairings():
    for pairing in (PT, H2):
        assert verify_kernel_match(pairing, Truncation(1, 8, 6, 0, 0)).passed


def test_bridge_closed_form_for_deep_coordinate():
    # both sides of the bridge on t[2,0] equal sum_i C_i u^{2i} phi~_{2-i}
    from hodgeflow.hodge import build_p_u, build_shift_u
    from hodgeflow.special import phi_tilde

    tr = Truncation(1, 9, 6, 0, 0)
    plan = SubstitutionPlan("full", PT, tr)
    g = Series.of_var(tr, t_var(2))
    lhs = change_vars(build_shift_u(PT, tr).exp_apply(build_p_u(tr).exp_apply(g)), plan)
    want = Series.zero(tr)
    for i in range(0, 3):
        piece = phi_tilde(2 - i, 0, tr)
        if i:
            piece = piece.mul_monomial(Monomial.build((), {PARAM_U: 2 * i}), c_const(i))
        else:
            piece = piece.scale(c_const(0))
        want = want.add(piece)
    assert lhs == want


def test_theta_recoloring():
    assert verify_theta_recoloring(H2, Truncation(1, 9, 0, 0, 0)).passed


def test_main_identity_trivial_input():
    tr = Truncation(2, 7, 4, 2, 0)
    assert verify_hodge_to_gw(Series.one(tr), PT, label="z=1").passed


def test_main_identity_single_variable_inputs():
    tr = Truncation(2, 9, 4, 2, 0)
    for n in (0, 1, 2):
        z = Series.of_var(tr, t_var(n))
        assert verify_hodge_to_gw(z, PT).passed, n


def test_main_identity_random_inputs():
    tr = Truncation(3, 7, 4, 2, 0)
    pool = [t_var(i, a) for i in range(4) for a in range(2)]
    for seed in range(3):
        z = random_series(seed + 200, tr, 6, variables=pool, max_hbar=2)
        assert verify_hodge_to_gw(z, H2).passed, seed


def test_main_identity_rejects_narrow_window():
    tr = Truncation(2, 7, 4, 2, 0)
    with pytest.raises(ValueError):
        verify_hodge_to_gw(Series.of_var(tr, t_var(5)), PT)


def test_point_case_log_coefficient():
    trunc = Truncation(4, 15, 6, 2, 0)
    z_trunc = trunc.replace(max_var_index=7)
    offset = default_hbar_offset(z_trunc)
    z = z_point(z_trunc, genus_max=2, offset=offset).truncated(trunc)
    flowed = build_w_u(PT, trunc).exp_apply(z)
    got = log_true_coefficient(
        flowed, offset, Monomial.build({t_var(0): 1}, {PARAM_U: 2})
    )
    assert got == Fraction(-1, 24)


def test_genus_two_single_lambda_value_from_flow():
    # the flow's log reproduces the classical genus-2 one-lambda integral 1/480
    trunc = Truncation(4, 15, 6, 3, 0)
    z_trunc = trunc.replace(max_var_index=7)
    offset = default_hbar_offset(z_trunc)
    z = z_point(z_trunc, genus_max=3, offset=offset).truncated(trunc)
    flowed = build_w_u(PT, trunc).exp_apply(z)
    got = log_true_coefficient(
        flowed, offset, Monomial.build({t_var(3): 1}, {PARAM_U: 2, PARAM_HBAR: 1})
    )
    assert got == Fraction(-1, 480)


def test_log_coefficient_recovers_plain_potential():
    # with no flow applied, the log gives back the genus potentials
    tr = Truncation(4, 7, 0, 2, 0)
    offset = default_hbar_offset(tr)
    z = z_point(tr, genus_max=2, offset=offset)
    got = log_true_coefficient(z, offset, Monomial.build({t_var(1): 1}))
    assert got == Fraction(1, 24)
    got0 = log_true_coefficient(z, offset, Monomial.build({t_var(0): 3, t_var(1): 1}))
    assert got0 == 0  # true hbar^0 has no such connected term


def test_run_suite_smoke():
    cfg = VerificationConfig(
        pairing_spec="point",
        max_t_degree=2,
        max_var_index=5,
        max_u_degree=4,
        max_hbar_degree=2,
        max_omega_weight=3,
        suites=("constants", "hat-t", "brackets"),
    )
    reports = run_suite(cfg)
    assert len(reports) == 3
    assert all(r.passed for r in reports)


def test_run_suite_rejects_unknown_suite():
    with pytest.raises(ValueError):
        run_suite(VerificationConfig(suites=("nonsense",)))


def test_run_suite_rejects_singular_pairing(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"rank": 2, "eta": [["1", "1"], ["1", "1"]]}')
    with pytest.raises(ValueError):
        run_suite(VerificationConfig(pairing_spec=str(bad), suites=("constants",)))


def test_run_suite_rejects_asymmetric_pairing(tmp_path):
    bad = tmp_path / "asym.json"
    bad.write_text('{"rank": 2, "eta": [["0", "1"], ["2", "0"]]}')
    with pytest.raises(ValueError):
        run_suite(VerificationConfig(pairing_spec=str(bad), suites=("constants",)))


def test_pairing_file_roundtrip(tmp_path):
    good = tmp_path / "eta.json"
    good.write_text('{"rank": 2, "eta": [["0", "1/2"], ["1/2", "0"]]}')
    cfg = VerificationConfig(
        pairing_spec=str(good),
        max_t_degree=2,
        max_var_index=5,
        max_u_degree=2,
        max_hbar_degree=1,
        max_omega_weight=2,
        suites=("brackets",),
    )
    reports = run_suite(cfg)
    assert all(r.passed for r in reports)


def test_rank_three_pairing_with_rational_entries():
    # exercises exact inversion with pivot swaps and non-unit inverse entries
    from hodgeflow.pairing import Pairing
    from hodgeflow.virasoro import verify_bracket

    eta3 = Pairing("rank3", [[0, 0, 1], [0, 2, 0], [1, 0, 0]])
    assert eta3.eta_inv[1][1] == Fraction(1, 2)
    tr = Truncation(2, 6, 3, 2, 0)
    assert verify_bracket(1, 2, eta3, tr).passed
    assert verify_kernel_match(eta3, Truncation(1, 7, 4, 0, 0)).passed
    pool = [t_var(i, a) for i in range(3) for a in range(3)]
    z = random_series(71, tr, 6, variables=pool, max_hbar=2)
    assert verify_hodge_to_gw(z, eta3).passed


def test_report_json_schema():
    r = verify_kernel_match(PT, Truncation(1, 6, 4, 0, 0))
    d = r.as_dict()
    assert set(d) == {"identity", "pairing", "truncation", "status", "cases", "mismatches"}
    assert d["status"] == "pass"
