"""Flow operators on the descendant variables and their exact factorization.

The flow generator splits into three graded pieces:

* an index-shifting part (one variable in, one derivative out) that acts as a
  change of coordinates under exponentiation;
* a constant-derivative part;
* a second-order contraction part pairing two derivatives through the inverse
  pairing matrix.

Exponentials of the whole generator factor exactly into the exponentials of
the shift part, a quantized kernel, and a shift of coordinates; everything
here is verified by applying both sides to the full monomial basis of the
window.
"""

from __future__ import annotations

import math

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .operators import Operator
from .pairing import Pairing
from .rationals import bernoulli
from .report import MAX_RECORDED_MISMATCHES, Mismatch, Report
from .series import (
    Monomial,
    PARAM_HBAR,
    PARAM_U,
    PARAM_X,
    PARAM_Y,
    ParamId,
    Series,
    Truncation,
    basis_monomials,
    multi_u_param,
    omega_param,
    s_param,
    t_var,
)
from .special import omega_bernoulli, q_omega, q_u, r_poly

__all__ = [
    "WOmegaParts",
    "build_d",
    "w_omega_parts",
    "build_w_omega",
    "build_w_u",
    "build_shift_u",
    "build_p_u",
    "omega_instantiation_rule",
    "instantiate_omega",
    "theta_map",
    "build_p",
    "hat_t",
    "t_variables",
    "verify_w_factorization",
    "verify_hat_t",
    "hodge_flow",
]


def t_variables(pairing: Pairing, trunc: Truncation) -> list:
    return [
        t_var(i, a)
        for i in range(trunc.max_var_index + 1)
        for a in pairing.colors()
    ]


def build_d(l: int, pairing: Pairing, trunc: Truncation) -> Operator:
    """The l-th flow generator:

    d/dt[2l,0] - sum_{i,a} t[i,a] d/dt[i+2l-1,a]
    + (hbar/2) sum_{i+j=2l-2} (-1)^i eta^{mn} d2/dt[i,m] dt[j,n],

    with variable indices capped by the window (dropped atoms annihilate every
    retained monomial).
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    op = Operator.zero()
    if 2 * l <= trunc.max_var_index:
        op = op.add(Operator.atom(1, deriv=[t_var(2 * l, 0)]))
    for a in pairing.colors():
        for i in range(0, trunc.max_var_index - (2 * l - 1) + 1):
            op = op.add(
                Operator.atom(-1, mult=[t_var(i, a)], deriv=[t_var(i + 2 * l - 1, a)])
            )
    for i in range(0, 2 * l - 1):
        j = 2 * l - 2 - i
        if i > trunc.max_var_index or j > trunc.max_var_index:
            continue
        for mu, nu, v in pairing.inverse_entries():
            op = op.add(
                Operator.atom(
                    Fraction((-1) ** i, 2) * v,
                    params={PARAM_HBAR: 1},
                    deriv=[t_var(i, mu), t_var(j, nu)],
                )
            )
    return op


@dataclass(frozen=True)
class WOmegaParts:
    """The three graded summands of the coupled flow generator."""

    shift: Operator        # variable-shift family, lowers indices by 2l-1
    derivative: Operator   # constant first-order derivatives
    contraction: Operator  # second-order, enters with an explicit hbar/2

    def total(self) -> Operator:
        return self.shift.add(self.derivative).add(
            self.contraction.scale(Fraction(1, 2), {PARAM_HBAR: 1})
        )


def w_omega_parts(pairing: Pairing, trunc: Truncation) -> WOmegaParts:
    shift = Operator.zero()
    derivative = Operator.zero()
    contraction = Operator.zero()
    for l in range(1, (trunc.max_omega_weight + 1) // 2 + 1):
        w = {omega_param(l): 1}
        for a in pairing.colors():
            for i in range(0, trunc.max_var_index - (2 * l - 1) + 1):
                shift = shift.add(
                    Operator.atom(
                        -1, params=w, mult=[t_var(i, a)], deriv=[t_var(i + 2 * l - 1, a)]
                    )
                )
        if 2 * l <= trunc.max_var_index:
            derivative = derivative.add(
                Operator.atom(1, params=w, deriv=[t_var(2 * l, 0)])
            )
        for i in range(0, 2 * l - 1):
            j = 2 * l - 2 - i
            if i > trunc.max_var_index or j > trunc.max_var_index:
                continue
            for mu, nu, v in pairing.inverse_entries():
                contraction = contraction.add(
                    Operator.atom(
                        Fraction((-1) ** i) * v,
                        params=w,
                        deriv=[t_var(i, mu), t_var(j, nu)],
                    )
                )
    return WOmegaParts(shift, derivative, contraction)


def build_w_omega(pairing: Pairing, trunc: Truncation) -> Operator:
    """sum_l w[l] D_l with l capped by the coupling-weight window."""
    op = Operator.zero()
    for l in range(1, (trunc.max_omega_weight + 1) // 2 + 1):
        op = op.add(build_d(l, pairing, trunc).scale(1, {omega_param(l): 1}))
    return op


def build_w_u(pairing: Pairing, trunc: Truncation) -> Operator:
    """The single-lambda flow generator: -sum_l B_{2l}/(2l(2l-1)) u^{2(2l-1)} D_l."""
    op = Operator.zero()
    l = 1
    while 2 * (2 * l - 1) <= trunc.max_u_degree:
        op = op.add(
            build_d(l, pairing, trunc).scale(
                omega_bernoulli(l), {PARAM_U: 2 * (2 * l - 1)}
            )
        )
        l += 1
    return op


def _u_wide(trunc: Truncation) -> Truncation:
    # a coupling of weight w instantiates to u^{2w}
    return trunc.replace(
        max_omega_weight=max(trunc.max_omega_weight, trunc.max_u_degree // 2)
    )


def build_shift_u(pairing: Pairing, trunc: Truncation) -> Operator:
    """The index-shifting part at the single-lambda couplings, ranged by the u window."""
    wide = _u_wide(trunc)
    return instantiate_omega(w_omega_parts(pairing, wide).shift, "from_u", wide)


def build_p_u(trunc: Truncation) -> Operator:
    """The coordinate-shift generator at the single-lambda couplings."""
    wide = _u_wide(trunc)
    return instantiate_omega(build_p(wide), "from_u", wide)


def omega_instantiation_rule(
    levels: Iterable[int], mode: str, trunc: Truncation, k: int = 1
) -> dict[ParamId, Series]:
    """Replacement series for w[l], l in levels, under the named instantiation.

    from_u:        w[l] -> -B_{2l}/(2l(2l-1)) u^{2(2l-1)}
    from_s:        w[l] ->  B_{2l}/(2l)!      s[2l-1]
    from_multi_u:  w[l] -> -B_{2l}/(2l(2l-1)) (v1^{2(2l-1)} + ... + vk^{2(2l-1)})
    """
    rule: dict[ParamId, Series] = {}
    for l in set(levels):
        p = omega_param(l)
        if mode == "from_u":
            rule[p] = Series.of_monomial(
                trunc,
                Monomial.build((), {PARAM_U: 2 * (2 * l - 1)}),
                omega_bernoulli(l),
            )
        elif mode == "from_s":
            rule[p] = Series.of_monomial(
                trunc,
                Monomial.build((), {s_param(2 * l - 1): 1}),
                bernoulli(2 * l) / math.factorial(2 * l),
            )
        elif mode == "from_multi_u":
            if k < 1:
                raise ValueError("from_multi_u needs k >= 1")
            rule[p] = Series(
                trunc,
                {
                    Monomial.build((), {multi_u_param(j): 2 * (2 * l - 1)}):
                        omega_bernoulli(l)
                    for j in range(1, k + 1)
                },
            )
        else:
            raise ValueError(f"unknown instantiation mode: {mode}")
    return rule


def _omega_levels(obj: Operator | Series) -> set[int]:
    levels: set[int] = set()
    if isinstance(obj, Operator):
        for (params, _, _) in obj.atoms:
            levels.update(p.index for p, _ in params if p.kind == "w")
    else:
        for m in obj.terms:
            levels.update(p.index for p, _ in m.params if p.kind == "w")
    return levels


def instantiate_omega(
    obj: Operator | Series,
    mode: str,
    trunc: Truncation | None = None,
    k: int = 1,
):
    """Replace every coupling w[l] in an operator or series per the named mode."""
    if isinstance(obj, Series):
        trunc = obj.trunc if trunc is None else trunc
        rule = omega_instantiation_rule(_omega_levels(obj), mode, trunc, k)
        return obj.substitute_params(rule)
    if trunc is None:
        raise ValueError("operator instantiation needs an explicit truncation")
    rule = omega_instantiation_rule(_omega_levels(obj), mode, trunc, k)
    return obj.substitute_params(rule, trunc)


def theta_map(b: Series, pairing: Pairing, trunc: Truncation) -> Operator:
    """Linear extension of x^i y^j -> sum eta^{mn} d2/dt[i,m] dt[j,n].

    Non-(x,y) parameters in a term ride along as atom coefficients; variable
    content is rejected.  Target indices beyond the window are dropped.
    """
    op = Operator.zero()
    for m, c in b.terms.items():
        if m.vars:
            raise ValueError("theta map expects a parameter-only series")
        i = j = 0
        rest: list[tuple[ParamId, int]] = []
        for p, e in m.params:
            if p == PARAM_X:
                i = e
            elif p == PARAM_Y:
                j = e
            else:
                rest.append((p, e))
        if i > trunc.max_var_index or j > trunc.max_var_index:
            continue
        for mu, nu, v in pairing.inverse_entries():
            op = op.add(
                Operator.atom(
                    c * v, params=rest, deriv=[t_var(i, mu), t_var(j, nu)]
                )
            )
    return op


def build_p(trunc: Truncation) -> Operator:
    """-sum_{i>=1} R_i d/dt[1+i, 0], indices and weights capped by the window."""
    op = Operator.zero()
    for i in range(1, trunc.max_omega_weight + 1):
        if 1 + i > trunc.max_var_index:
            continue
        for m, c in r_poly(i, trunc).terms.items():
            op = op.add(
                Operator.atom(-c, params=m.params, deriv=[t_var(1 + i, 0)])
            )
    return op


def hat_t(n: int, alpha: int, trunc: Truncation) -> Series:
    """Closed form of the shifted coordinate:

    sum_{i=0}^{n} R_i t[n-i, alpha], minus R_{n-1} exactly when alpha = 0, n >= 2.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    out = Series.zero(trunc)
    for i in range(0, n + 1):
        out = out.add(
            r_poly(i, trunc).mul_monomial(Monomial.build({t_var(n - i, alpha): 1}))
        )
    if alpha == 0 and n >= 2:
        out = out.sub(r_poly(n - 1, trunc))
    return out


def _first_mismatch(tag: str, lhs: Series, rhs: Series) -> Mismatch:
    diff = lhs.sub(rhs)
    bad = diff.sorted_terms()[0][0]
    return Mismatch(
        monomial=f"{tag} at {bad.render()}",
        lhs=str(lhs.coefficient(bad)),
        rhs=str(rhs.coefficient(bad)),
    )


def verify_w_factorization(
    pairing: Pairing,
    trunc: Truncation,
    mode: str | None = None,
) -> Report:
    """exp(total) = exp(shift) exp((hbar/2) kernel) exp(coordinate shift) on the basis.

    Both factor orders of the two commuting right factors are checked.  With
    mode="from_u" all operators are instantiated at the single-lambda couplings
    first and the identity is checked in the u-graded window.
    """
    if mode == "from_u":
        whole = build_w_u(pairing, trunc)
        shift = build_shift_u(pairing, trunc)
        q_kernel = theta_map(q_u(trunc), pairing, trunc)
        p_shift = build_p_u(trunc)
    elif mode is None:
        parts = w_omega_parts(pairing, trunc)
        whole = parts.total()
        shift = parts.shift
        q_kernel = theta_map(q_omega(trunc), pairing, trunc)
        p_shift = build_p(trunc)
    else:
        raise ValueError("mode must be None or 'from_u'")
    q_half = q_kernel.scale(Fraction(1, 2), {PARAM_HBAR: 1})

    label = "w-factorization" + (f"[{mode}]" if mode else "")
    mismatches: list[Mismatch] = []
    cases = 0
    for mono in basis_monomials(t_variables(pairing, trunc), trunc.max_t_degree):
        cases += 1
        start = Series.of_monomial(trunc, mono)
        lhs = whole.exp_apply(start)
        rhs1 = exp_chain(start, [shift, q_half, p_shift])
        if rhs1 != lhs:
            mismatches.append(_first_mismatch(f"q.p order . {mono.render()}", lhs, rhs1))
        else:
            rhs2 = exp_chain(start, [shift, p_shift, q_half])
            if rhs2 != lhs:
                mismatches.append(
                    _first_mismatch(f"p.q order . {mono.render()}", lhs, rhs2)
                )
        if len(mismatches) >= MAX_RECORDED_MISMATCHES:
            break
    return Report(
        identity=label,
        pairing=pairing.name,
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=cases,
        mismatches=mismatches,
    )


def exp_chain(start: Series, ops: list[Operator]) -> Series:
    """exp(ops[0]) exp(ops[1]) ... exp(ops[-1]) applied to the series.

    The rightmost operator acts first, matching the written product order.
    """
    out = start
    for op in reversed(ops):
        out = op.exp_apply(out)
    return out


def verify_hat_t(pairing: Pairing, trunc: Truncation, n_max: int) -> Report:
    """Shifted coordinates: operator action vs closed form, and the z-packaged identity.

    (a) exp(shift) exp(coordinate shift) . t[n,a] equals the closed form;
    (b) the generating identity z g_0 + sum (-z)^n sum_a hat_t[n,a] g_a =
        (z g_0 + sum (-z)^n sum_a t[n,a] g_a) . sum_i R_i (-z)^i, compared
        coefficientwise in (z-power, color).

    Needs max_omega_weight >= n_max for the windowed check to be exact.
    """
    parts = w_omega_parts(pairing, trunc)
    p_shift = build_p(trunc)
    mismatches: list[Mismatch] = []
    cases = 0
    for n in range(0, n_max + 1):
        for a in pairing.colors():
            cases += 1
            start = Series.of_var(trunc, t_var(n, a))
            via_ops = parts.shift.exp_apply(p_shift.exp_apply(start))
            closed = hat_t(n, a, trunc)
            if via_ops != closed:
                mismatches.append(
                    _first_mismatch(f"coordinate shift t[{n},{a}]", via_ops, closed)
                )
    # (b) compare per z-power and color
    for n in range(0, n_max + 1):
        for a in pairing.colors():
            cases += 1
            lhs = hat_t(n, a, trunc).scale(Fraction((-1) ** n))
            if n == 1 and a == 0:
                lhs = lhs.add(Series.one(trunc))
            rhs = Series.zero(trunc)
            for i in range(0, n + 1):
                factor = r_poly(i, trunc).scale(Fraction((-1) ** i))
                bracket = Series.of_var(trunc, t_var(n - i, a), Fraction((-1) ** (n - i)))
                if n - i == 1 and a == 0:
                    bracket = bracket.add(Series.one(trunc))
                rhs = rhs.add(factor.mul(bracket))
            if lhs != rhs:
                mismatches.append(
                    _first_mismatch(f"z-series column (n={n}, a={a})", lhs, rhs)
                )
    return Report(
        identity="hat-t",
        pairing=pairing.name,
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=cases,
        mismatches=mismatches[:MAX_RECORDED_MISMATCHES],
    )


def hodge_flow(
    z: Series, mode: str, pairing: Pairing, k: int = 1
) -> Series:
    """exp of the instantiated flow generator applied to a descendant series.

    from_u and from_multi_u range the generator sum by the u window (weight w
    instantiates to u^{2w}); from_s keeps the coupling-weight window, since the
    s-parameters are graded exactly like the couplings they replace.
    """
    trunc = z.trunc
    if mode == "from_u":
        op = build_w_u(pairing, trunc)
    elif mode == "from_multi_u":
        wide = _u_wide(trunc)
        op = instantiate_omega(build_w_omega(pairing, wide), mode, wide, k).truncate(
            trunc
        )
    else:
        op = instantiate_omega(build_w_omega(pairing, trunc), mode, trunc, k)
    return op.exp_apply(z)
