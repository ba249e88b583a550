"""End-to-end wiring: change of variables, the substitution bridge, the main identity.

The two variable worlds stay distinct throughout: flow operators act on t-world
series, the raising operators act on q-world series, and the only crossings are
the two substitutions below (full, and its u = 0 degeneration).  Substituting
first and acting after is never confused with acting first and substituting
after; that separation is exactly what the bridge identity certifies.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .hodge import (
    build_p_u,
    build_shift_u,
    build_w_u,
    theta_map,
)
from .operators import Operator, OperatorClassError
from .pairing import Pairing, point_pairing
from .rationals import odd_double_factorial
from .report import MAX_RECORDED_MISMATCHES, Mismatch, Report, combine_reports
from .series import (
    Monomial,
    PARAM_HBAR,
    PARAM_U,
    PARAM_X,
    PARAM_Y,
    Series,
    Truncation,
    TruncationError,
    q_var,
    random_series,
    t_var,
)
from .special import (
    c_const,
    phi_tilde,
    q_u,
    rhs_target,
    flow_expansion,
    solve_a_coeffs,
)
from .virasoro import (
    VirasoroBundle,
    build_virasoro,
    delta_map,
    verify_bracket,
    verify_raised_odd_variable,
    verify_virasoro_split,
)
from .witten import default_hbar_offset, z_point
from . import hodge as _hodge

__all__ = [
    "SubstitutionPlan",
    "u_zero_substitute",
    "change_vars",
    "to_q_world",
    "verify_substitution_bridge",
    "verify_kernel_match",
    "verify_theta_recoloring",
    "verify_hodge_to_gw",
    "log_true_coefficient",
    "VerificationConfig",
    "ALL_SUITES",
    "run_suite",
]


@dataclass(frozen=True)
class SubstitutionPlan:
    """How t-world series cross into the q-world.

    full:   t[n,a] -> (shift polynomial in q, u) plus the alternating constant
            (-1)^n C_{n-1} u^{2(n-1)} when a = 0 and n >= 2;
    u_zero: t[k,a] -> (2k-1)!! q[2k+1,a].

    The full plan with the u-window closed to zero degenerates to u_zero.
    """

    mode: str
    pairing: Pairing
    trunc: Truncation

    def __post_init__(self) -> None:
        if self.mode not in ("full", "u_zero"):
            raise ValueError("mode must be 'full' or 'u_zero'")


def u_zero_substitute(s: Series) -> Series:
    """t[k,a] -> (2k-1)!! q[2k+1,a], term by term; raises if an index overflows."""
    trunc = s.trunc
    out: dict[Monomial, Fraction] = {}
    for m, c in s.terms.items():
        factor = Fraction(1)
        new_vars = []
        for v, e in m.vars:
            if v.kind != "t":
                raise ValueError("u_zero substitution expects a t-world series")
            if 2 * v.index + 1 > trunc.max_var_index:
                raise TruncationError("q-index 2k+1 exceeds the window")
            factor *= Fraction(odd_double_factorial(v.index)) ** e
            new_vars.append((q_var(2 * v.index + 1, v.color), e))
        mono = Monomial(tuple(sorted(new_vars)), m.params)
        acc = out.get(mono, Fraction(0)) + c * factor
        if acc:
            out[mono] = acc
        elif mono in out:
            del out[mono]
    return Series(trunc, out, _clean=True)


def _full_replacement(n: int, alpha: int, trunc: Truncation) -> Series:
    repl = phi_tilde(n, alpha, trunc)
    if alpha == 0 and n >= 2:
        const = Monomial.build((), {PARAM_U: 2 * (n - 1)})
        if trunc.admits(const):
            repl = repl.add(
                Series.of_monomial(trunc, const, Fraction((-1) ** n) * c_const(n - 1))
            )
    return repl


def change_vars(s: Series, plan: SubstitutionPlan) -> Series:
    """Apply the plan's substitution to a t-world series (exact in the window)."""
    if plan.trunc != s.trunc:
        raise TruncationError("plan and series windows differ")
    if plan.mode == "u_zero":
        return u_zero_substitute(s)
    rule: dict = {}
    for v in s.variables():
        if v.kind != "t":
            raise ValueError("change of variables expects a t-world series")
        rule[v] = _full_replacement(v.index, v.color, s.trunc)
    return s.substitute(rule)


def to_q_world(op: Operator, trunc: Truncation) -> Operator:
    """Chain rule of the u_zero substitution on constant pure-derivative operators:

    d/dt[k,a] -> 1/(2k-1)!! d/dq[2k+1,a].  Indices beyond the window drop.
    """
    out = Operator.zero()
    for (params, mult, deriv), c in op.atoms.items():
        if mult:
            raise OperatorClassError("q-world transport needs pure-derivative atoms")
        factor = Fraction(1)
        new_deriv = []
        ok = True
        for v, e in deriv:
            if v.kind != "t":
                raise OperatorClassError("q-world transport expects t-derivatives")
            if 2 * v.index + 1 > trunc.max_var_index:
                ok = False
                break
            factor /= Fraction(odd_double_factorial(v.index)) ** e
            new_deriv.append((q_var(2 * v.index + 1, v.color), e))
        if not ok:
            continue
        out = out.add(
            Operator({(params, (), tuple(sorted(new_deriv))): c * factor})
        )
    return out


def _diff_mismatch(tag: str, lhs: Series, rhs: Series) -> Mismatch:
    bad = lhs.sub(rhs).sorted_terms()[0][0]
    return Mismatch(
        monomial=f"{tag} at {bad.render()}",
        lhs=str(lhs.coefficient(bad)),
        rhs=str(rhs.coefficient(bad)),
    )


def verify_substitution_bridge(
    pairing: Pairing,
    trunc: Truncation,
    n_max: int,
    seed: int = 0,
    random_count: int = 10,
    random_degree: int = 2,
) -> Report:
    """{exp(shift_u) exp(p_u) . G}|_full  =  exp(X+) . {G}|_u_zero.

    Driven on every coordinate t[n,a] for n <= n_max and on seeded random G.
    Needs max_var_index >= 2 n_max + 1.
    """
    if 2 * n_max + 1 > trunc.max_var_index:
        raise ValueError("bridge check needs max_var_index >= 2 n_max + 1")
    shift_u = build_shift_u(pairing, trunc)
    p_u = build_p_u(trunc)
    x_plus = build_virasoro(pairing, trunc).x_plus
    plan = SubstitutionPlan("full", pairing, trunc)

    def bridge_pair(g: Series) -> tuple[Series, Series]:
        lhs = change_vars(shift_u.exp_apply(p_u.exp_apply(g)), plan)
        rhs = x_plus.exp_apply(u_zero_substitute(g))
        return lhs, rhs

    mismatches: list[Mismatch] = []
    cases = 0
    for n in range(0, n_max + 1):
        for a in pairing.colors():
            cases += 1
            lhs, rhs = bridge_pair(Series.of_var(trunc, t_var(n, a)))
            if lhs != rhs:
                mismatches.append(_diff_mismatch(f"bridge t[{n},{a}]", lhs, rhs))
    max_random_index = (trunc.max_var_index - 1) // 2
    pool = [
        t_var(i, a) for i in range(max_random_index + 1) for a in pairing.colors()
    ]
    for i in range(random_count):
        cases += 1
        g = random_series(
            seed + i,
            trunc.replace(max_t_degree=min(random_degree, trunc.max_t_degree)),
            term_count=6,
            variables=pool,
            max_u=min(2, trunc.max_u_degree),
        ).truncated(trunc)
        lhs, rhs = bridge_pair(g)
        if lhs != rhs:
            mismatches.append(_diff_mismatch(f"bridge random seed={seed + i}", lhs, rhs))
        if len(mismatches) >= MAX_RECORDED_MISMATCHES:
            break
    return Report(
        identity="bridge",
        pairing=pairing.name,
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=cases,
        mismatches=mismatches,
    )


def verify_kernel_match(
    pairing: Pairing, trunc: Truncation, bundle: VirasoroBundle | None = None
) -> Report:
    """The quantized kernel transported to the q-world equals the odd ad-tower.

    Atom-by-atom operator equality; the linchpin connecting the flow side to
    the raising-operator side.
    """
    if bundle is None:
        bundle = build_virasoro(pairing, trunc)
    transported = to_q_world(theta_map(q_u(trunc), pairing, trunc), trunc)
    mismatches: list[Mismatch] = []
    if transported != bundle.q_plus_odd:
        diff = transported.sub(bundle.q_plus_odd)
        for key, c in diff.sorted_atoms()[:MAX_RECORDED_MISMATCHES]:
            mismatches.append(
                Mismatch(
                    monomial=f"kernel atom {Operator({key: Fraction(1)}).render()}",
                    lhs=str(transported.atoms.get(key, 0)),
                    rhs=str(bundle.q_plus_odd.atoms.get(key, 0)),
                )
            )
    return Report(
        identity="kernel-match",
        pairing=pairing.name,
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=1,
        mismatches=mismatches,
    )


def verify_theta_recoloring(
    pairing: Pairing, trunc: Truncation, max_power: int = 4
) -> Report:
    """Transporting the colored kernel map commutes with coloring the point kernel map."""
    pt = point_pairing()
    mismatches: list[Mismatch] = []
    cases = 0
    for i in range(0, max_power + 1):
        for j in range(0, max_power + 1):
            if 2 * max(i, j) + 1 > trunc.max_var_index:
                continue
            cases += 1
            xy = Series.of_monomial(
                trunc, Monomial.build((), {PARAM_X: i, PARAM_Y: j})
            )
            colored = to_q_world(theta_map(xy, pairing, trunc), trunc)
            recolored = delta_map(
                to_q_world(theta_map(xy, pt, trunc), trunc), pairing
            )
            if colored != recolored:
                mismatches.append(
                    Mismatch(
                        monomial=f"x^{i} y^{j}",
                        lhs=colored.render(),
                        rhs=recolored.render(),
                    )
                )
    return Report(
        identity="theta-recoloring",
        pairing=pairing.name,
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=cases,
        mismatches=mismatches[:MAX_RECORDED_MISMATCHES],
    )


def verify_hodge_to_gw(
    z: Series,
    pairing: Pairing,
    label: str = "theorem",
    bundle: VirasoroBundle | None = None,
) -> Report:
    """The main identity on a concrete input series:

    {exp(flow_u) . z}|_full substitution  =  exp(sum a_m u^m L_m) . {z}|_u_zero.

    Exact within the window provided max_var_index >= 2 * (largest t-index of z) + 1.
    """
    trunc = z.trunc
    support = max((v.index for v in z.variables()), default=0)
    if 2 * support + 1 > trunc.max_var_index:
        raise ValueError("window too narrow: need max_var_index >= 2*support+1")
    if bundle is None:
        bundle = build_virasoro(pairing, trunc)
    plan = SubstitutionPlan("full", pairing, trunc)
    lhs = change_vars(build_w_u(pairing, trunc).exp_apply(z), plan)
    rhs = bundle.l_weighted.exp_apply(u_zero_substitute(z))
    mismatches: list[Mismatch] = []
    if lhs != rhs:
        mismatches.append(_diff_mismatch("main identity", lhs, rhs))
    return Report(
        identity=label,
        pairing=pairing.name,
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=1,
        mismatches=mismatches,
    )


def log_true_coefficient(stored: Series, offset: int, target: Monomial) -> Fraction:
    """[target] of log Z where stored = hbar^offset * Z and target carries the
    true (un-offset) hbar exponent.

    Correct whenever every product contributing to the target either lies in
    the stored window or is excluded by the degree window (the caller's side of
    the bargain; holds for offset = max_t_degree // 3 exponentials).
    """
    trunc0 = stored.trunc
    k_max = trunc0.max_t_degree
    target_h = Monomial(target.vars, target.params).hbar_degree()
    big = trunc0.replace(
        max_hbar_degree=trunc0.max_hbar_degree + k_max * max(offset, 1) + target_h
    )
    x = stored.truncated(big).sub(
        Series.of_monomial(big, Monomial.build((), {PARAM_HBAR: offset} if offset else ()))
    )
    base_params = [(p, e) for p, e in target.params if p.kind != "hbar"]
    total = Fraction(0)
    power = Series.one(big)
    for k in range(1, k_max + 1):
        power = power.mul(x)
        if power.is_zero():
            break
        h = target_h + k * offset
        probe = Monomial.build(
            dict(target.vars), dict(base_params) | ({PARAM_HBAR: h} if h else {})
        )
        total += Fraction((-1) ** (k + 1), k) * power.coefficient(probe)
    return total


# -- suite runner ------------------------------------------------------------


ALL_SUITES = (
    "constants",
    "w-factorization",
    "hat-t",
    "brackets",
    "virasoro-split",
    "ex-closed-form",
    "bridge",
    "theorem",
)


@dataclass
class VerificationConfig:
    """Window budgets, pairing, seed, and the suites to run."""

    pairing_spec: str = "point"
    max_t_degree: int = 3
    max_var_index: int = 8
    max_u_degree: int = 6
    max_hbar_degree: int = 2
    max_omega_weight: int = 4
    seed: int = 0
    suites: tuple[str, ...] = ALL_SUITES

    def truncation(self) -> Truncation:
        return Truncation(
            self.max_t_degree,
            self.max_var_index,
            self.max_u_degree,
            self.max_hbar_degree,
            self.max_omega_weight,
        )


def _constants_report(trunc: Truncation) -> Report:
    mismatches: list[Mismatch] = []
    a = solve_a_coeffs(10)
    expected_a = [Fraction(2, 3), Fraction(-1, 12), Fraction(7, 540)]
    for m, want in enumerate(expected_a, start=1):
        if a[m - 1] != want:
            mismatches.append(Mismatch(f"a_{m}", str(a[m - 1]), str(want)))
    if flow_expansion(a, 10) != rhs_target(10):
        mismatches.append(Mismatch("flow round trip (order 10)", "lhs", "rhs"))
    expected_c = [
        Fraction(1),
        Fraction(1, 12),
        Fraction(1, 288),
        Fraction(-139, 51840),
    ]
    for i, want in enumerate(expected_c):
        if c_const(i) != want:
            mismatches.append(Mismatch(f"C_{i}", str(c_const(i)), str(want)))
    for n in range(1, 11):
        acc = sum(
            Fraction((-1) ** (n - i)) * c_const(i) * c_const(n - i)
            for i in range(n + 1)
        )
        if acc != 0:
            mismatches.append(Mismatch(f"alternating C identity n={n}", str(acc), "0"))
    return Report(
        identity="constants",
        pairing="-",
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=10 + len(expected_a) + len(expected_c) + 1,
        mismatches=mismatches[:MAX_RECORDED_MISMATCHES],
    )


def run_suite(config: VerificationConfig) -> list[Report]:
    """Run the selected suites; pairing problems are rejected before anything runs."""
    pairing = (
        point_pairing()
        if config.pairing_spec == "point"
        else _load_pairing(config.pairing_spec)
    )
    unknown = set(config.suites) - set(ALL_SUITES)
    if unknown:
        raise ValueError(f"unknown suites: {sorted(unknown)}")
    trunc = config.truncation()
    reports: list[Report] = []
    for suite in config.suites:
        if suite == "constants":
            reports.append(_constants_report(trunc))
        elif suite == "w-factorization":
            reports.append(_hodge.verify_w_factorization(pairing, trunc))
            reports.append(_hodge.verify_w_factorization(pairing, trunc, mode="from_u"))
        elif suite == "hat-t":
            n_max = min(trunc.max_var_index, max(trunc.max_omega_weight, 1))
            reports.append(_hodge.verify_hat_t(pairing, trunc, n_max))
        elif suite == "brackets":
            m_hi = max(1, trunc.max_var_index // 2)
            subs = [
                verify_bracket(m, n, pairing, trunc)
                for m in range(1, m_hi + 1)
                for n in range(1, m_hi + 1)
            ]
            reports.append(combine_reports(f"brackets(m,n<={m_hi})", subs))
        elif suite == "virasoro-split":
            reports.append(verify_virasoro_split(build_virasoro(pairing, trunc)))
        elif suite == "ex-closed-form":
            n_hi = min((trunc.max_var_index - 1) // 2, trunc.max_u_degree // 2)
            subs = [
                verify_raised_odd_variable(n, a, pairing, trunc)
                for n in range(0, n_hi + 1)
                for a in pairing.colors()
            ]
            reports.append(combine_reports(f"ex-closed-form(n<={n_hi})", subs))
        elif suite == "bridge":
            n_max = (trunc.max_var_index - 1) // 2
            reports.append(
                verify_substitution_bridge(pairing, trunc, n_max, seed=config.seed)
            )
            reports.append(verify_kernel_match(pairing, trunc))
            reports.append(verify_theta_recoloring(pairing, trunc))
        elif suite == "theorem":
            reports.extend(_theorem_suite(pairing, config))
    return reports


def _load_pairing(spec: str) -> Pairing:
    from .pairing import pairing_from_spec

    return pairing_from_spec(spec)


def _theorem_suite(pairing: Pairing, config: VerificationConfig) -> list[Report]:
    reports: list[Report] = []
    trunc = config.truncation()
    support = (trunc.max_var_index - 1) // 2
    if pairing.rank == 1 and pairing.eta[0][0] == 1:
        z_trunc = trunc.replace(max_var_index=support)
        offset = default_hbar_offset(z_trunc)
        z = z_point(z_trunc, genus_max=2, offset=offset).truncated(trunc)
        reports.append(verify_hodge_to_gw(z, pairing, label="theorem[point-dvv]"))
        flowed = build_w_u(pairing, trunc).exp_apply(z)
        got = log_true_coefficient(
            flowed, offset, Monomial.build({t_var(0): 1}, {PARAM_U: 2})
        )
        ok = got == Fraction(-1, 24)
        reports.append(
            Report(
                identity="theorem[one-point genus-1 log coefficient]",
                pairing=pairing.name,
                truncation=trunc.as_dict(),
                passed=ok,
                cases=1,
                mismatches=[]
                if ok
                else [Mismatch("u^2 t[0,0] log coefficient", str(got), "-1/24")],
            )
        )
    pool = [t_var(i, a) for i in range(support + 1) for a in pairing.colors()]
    bundle = build_virasoro(pairing, trunc)
    subs = []
    for i in range(10):
        z = random_series(
            config.seed + 100 + i,
            trunc,
            term_count=8,
            variables=pool,
            max_hbar=trunc.max_hbar_degree,
        )
        subs.append(
            verify_hodge_to_gw(z, pairing, label="theorem[random]", bundle=bundle)
        )
    reports.append(combine_reports("theorem[random x10]", subs))
    reports.append(verify_kernel_match(pairing, trunc, bundle=bundle))
    return reports
