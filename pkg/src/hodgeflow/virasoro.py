"""The graded family of raising operators on q-variables and its split.

L_m = X_m + (hbar/2) Y_m with

    X_m = sum_{k>0} sum_a (k+m) q[k,a] d/dq[k+m,a]
    Y_m = sum_{a+b=m} sum_{mn} a b eta^{mn} d2/dq[a,m] dq[b,n]

for m >= 1 only; q[n] and d/dq[n] vanish for n <= 0 by convention, which the
builders realize by their index ranges.  The u-weighted sums X+ and Y+ drive
the split exp(sum a_m u^m L_m) = exp(X+) exp((hbar/2) Q+), with Q+ the
alternating ad-tower of Y+ under X+.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .operators import Operator, OperatorClassError, zassenhaus_tail
from .pairing import Pairing, point_pairing
from .rationals import odd_double_factorial
from .report import MAX_RECORDED_MISMATCHES, Mismatch, Report
from .series import (
    Monomial,
    PARAM_HBAR,
    PARAM_U,
    Series,
    Truncation,
    basis_monomials,
    q_var,
)
from .special import c_const, phi_tilde, solve_a_coeffs

__all__ = [
    "build_x",
    "build_y",
    "build_l",
    "VirasoroBundle",
    "build_virasoro",
    "verify_bracket",
    "delta_map",
    "odd_part",
    "verify_virasoro_split",
    "verify_raised_odd_variable",
    "q_variables",
]


def q_variables(pairing: Pairing, trunc: Truncation) -> list:
    return [
        q_var(k, a)
        for k in range(1, trunc.max_var_index + 1)
        for a in pairing.colors()
    ]


def build_x(m: int, pairing: Pairing, trunc: Truncation) -> Operator:
    if m < 1:
        raise ValueError("m must be >= 1")
    op = Operator.zero()
    for a in pairing.colors():
        for k in range(1, trunc.max_var_index - m + 1):
            op = op.add(
                Operator.atom(k + m, mult=[q_var(k, a)], deriv=[q_var(k + m, a)])
            )
    return op


def build_y(m: int, pairing: Pairing, trunc: Truncation) -> Operator:
    if m < 1:
        raise ValueError("m must be >= 1")
    op = Operator.zero()
    for a in range(1, m):
        b = m - a
        if a > trunc.max_var_index or b > trunc.max_var_index:
            continue
        for mu, nu, v in pairing.inverse_entries():
            op = op.add(
                Operator.atom(
                    Fraction(a * b) * v, deriv=[q_var(a, mu), q_var(b, nu)]
                )
            )
    return op


def build_l(m: int, pairing: Pairing, trunc: Truncation) -> Operator:
    return build_x(m, pairing, trunc).add(
        build_y(m, pairing, trunc).scale(Fraction(1, 2), {PARAM_HBAR: 1})
    )


@dataclass(frozen=True)
class VirasoroBundle:
    """All window-bounded raising operators plus their u-weighted aggregates."""

    pairing: Pairing
    trunc: Truncation
    a: tuple[Fraction, ...]
    m_max: int
    x_plus: Operator       # sum a_m u^m X_m
    y_plus: Operator       # sum a_m u^m Y_m
    l_weighted: Operator   # sum a_m u^m L_m
    q_plus: Operator       # alternating ad-tower of y_plus under x_plus
    q_plus_odd: Operator   # q_plus restricted to odd q-indices

    def x(self, m: int) -> Operator:
        return build_x(m, self.pairing, self.trunc)

    def y(self, m: int) -> Operator:
        return build_y(m, self.pairing, self.trunc)

    def l(self, m: int) -> Operator:
        return build_l(m, self.pairing, self.trunc)


def build_virasoro(
    pairing: Pairing, trunc: Truncation, m_max: int | None = None
) -> VirasoroBundle:
    """Operators up to m_max (default: the u-degree window, since X_m carries u^m)."""
    if m_max is None:
        m_max = trunc.max_u_degree
    if m_max < 1:
        raise ValueError("need m_max >= 1")
    a = tuple(solve_a_coeffs(m_max))
    x_plus = Operator.zero()
    y_plus = Operator.zero()
    for m in range(1, m_max + 1):
        u_m = {PARAM_U: m}
        x_plus = x_plus.add(build_x(m, pairing, trunc).scale(a[m - 1], u_m))
        y_plus = y_plus.add(build_y(m, pairing, trunc).scale(a[m - 1], u_m))
    l_weighted = x_plus.add(y_plus.scale(Fraction(1, 2), {PARAM_HBAR: 1}))
    q_plus = zassenhaus_tail(x_plus, y_plus, trunc)
    return VirasoroBundle(
        pairing=pairing,
        trunc=trunc,
        a=a,
        m_max=m_max,
        x_plus=x_plus,
        y_plus=y_plus,
        l_weighted=l_weighted,
        q_plus=q_plus,
        q_plus_odd=odd_part(q_plus),
    )


def odd_part(op: Operator) -> Operator:
    """Atoms touching only odd q-indices (in derivatives and multiplications)."""
    out: dict = {}
    for key, c in op.atoms.items():
        _, mult, deriv = key
        if all(v.index % 2 == 1 for v, _ in mult) and all(
            v.index % 2 == 1 for v, _ in deriv
        ):
            out[key] = c
    return Operator(out, _clean=True)


def verify_bracket(m: int, n: int, pairing: Pairing, trunc: Truncation) -> Report:
    """[L_m, L_n] = (m-n) L_{m+n} symbolically, plus its two graded halves.

    Exact on the windowed ring provided m + n <= max_var_index.
    """
    if m + n > trunc.max_var_index:
        raise ValueError("bracket check needs max_var_index >= m + n")
    mismatches: list[Mismatch] = []
    lm, ln = build_l(m, pairing, trunc), build_l(n, pairing, trunc)
    whole = lm.commutator(ln).sub(build_l(m + n, pairing, trunc).scale(m - n))
    if not whole.is_zero():
        key, c = whole.sorted_atoms()[0]
        mismatches.append(
            Mismatch(monomial=f"[L{m},L{n}] atom {key}", lhs=str(c), rhs="0")
        )
    xm, xn = build_x(m, pairing, trunc), build_x(n, pairing, trunc)
    ym, yn = build_y(m, pairing, trunc), build_y(n, pairing, trunc)
    xx = xm.commutator(xn).sub(build_x(m + n, pairing, trunc).scale(m - n))
    if not xx.is_zero():
        key, c = xx.sorted_atoms()[0]
        mismatches.append(
            Mismatch(monomial=f"[X{m},X{n}] atom {key}", lhs=str(c), rhs="0")
        )
    xy = (
        xm.commutator(yn)
        .add(ym.commutator(xn))
        .sub(build_y(m + n, pairing, trunc).scale(m - n))
    )
    if not xy.is_zero():
        key, c = xy.sorted_atoms()[0]
        mismatches.append(
            Mismatch(monomial=f"[X{m},Y{n}]+[Y{m},X{n}] atom {key}", lhs=str(c), rhs="0")
        )
    return Report(
        identity=f"bracket({m},{n})",
        pairing=pairing.name,
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=3,
        mismatches=mismatches,
    )


def delta_map(op_pt: Operator, pairing: Pairing) -> Operator:
    """Color a colorless second-order pure-derivative operator through the pairing:

    d2/dq[m] dq[n] -> sum eta^{mn} d2/dq[m,mu] dq[n,nu], extended linearly.
    """
    out = Operator.zero()
    for (params, mult, deriv), c in op_pt.atoms.items():
        if mult:
            raise OperatorClassError("delta map expects pure-derivative atoms")
        flat: list = []
        for v, e in deriv:
            if v.kind != "q" or v.color != 0:
                raise OperatorClassError("delta map expects colorless q-derivatives")
            flat.extend([v] * e)
        if len(flat) != 2:
            raise OperatorClassError("delta map expects exactly second order")
        va, vb = flat
        for mu, nu, v in pairing.inverse_entries():
            out = out.add(
                Operator.atom(
                    c * v,
                    params=params,
                    deriv=[q_var(va.index, mu), q_var(vb.index, nu)],
                )
            )
    return out


def verify_virasoro_split(bundle: VirasoroBundle, max_degree: int | None = None) -> Report:
    """exp(sum a_m u^m L_m) = exp(X+) exp((hbar/2) Q+) on the q-monomial basis,
    plus the colored-vs-point compatibility Q+_odd = Delta(Q+^pt_odd)."""
    trunc = bundle.trunc
    pairing = bundle.pairing
    q_half = bundle.q_plus.scale(Fraction(1, 2), {PARAM_HBAR: 1})
    mismatches: list[Mismatch] = []
    cases = 0
    degree = trunc.max_t_degree if max_degree is None else max_degree
    for mono in basis_monomials(q_variables(pairing, trunc), degree):
        cases += 1
        start = Series.of_monomial(trunc, mono)
        lhs = bundle.l_weighted.exp_apply(start)
        rhs = bundle.x_plus.exp_apply(q_half.exp_apply(start))
        if lhs != rhs:
            diff = lhs.sub(rhs)
            bad = diff.sorted_terms()[0][0]
            mismatches.append(
                Mismatch(
                    monomial=f"split . {mono.render()} at {bad.render()}",
                    lhs=str(lhs.coefficient(bad)),
                    rhs=str(rhs.coefficient(bad)),
                )
            )
            if len(mismatches) >= MAX_RECORDED_MISMATCHES:
                break
    cases += 1
    pt_bundle = (
        bundle
        if bundle.pairing.rank == 1 and bundle.pairing.eta[0][0] == 1
        else build_virasoro(point_pairing(), trunc, bundle.m_max)
    )
    recolored = delta_map(pt_bundle.q_plus_odd, pairing)
    if recolored != bundle.q_plus_odd:
        mismatches.append(
            Mismatch(monomial="odd tower vs recolored point tower", lhs="...", rhs="...")
        )
    return Report(
        identity="virasoro-split",
        pairing=pairing.name,
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=cases,
        mismatches=mismatches,
    )


def verify_raised_odd_variable(
    n: int,
    alpha: int,
    pairing: Pairing,
    trunc: Truncation,
    bundle: VirasoroBundle | None = None,
) -> Report:
    """exp(X+) . q[2n+1, a] = 1/(2n-1)!! sum_i C_i u^{2i} (shift polynomial)_{n-i}.

    Exact once the u-window reaches 2n (the full polynomial degree).
    """
    if 2 * n + 1 > trunc.max_var_index:
        raise ValueError("need max_var_index >= 2n+1")
    if bundle is None:
        bundle = build_virasoro(pairing, trunc)
    start = Series.of_var(trunc, q_var(2 * n + 1, alpha))
    lhs = bundle.x_plus.exp_apply(start)
    rhs = Series.zero(trunc)
    for i in range(0, n + 1):
        piece = phi_tilde(n - i, alpha, trunc)
        if 2 * i:
            piece = piece.mul_monomial(Monomial.build((), {PARAM_U: 2 * i}), c_const(i))
        else:
            piece = piece.scale(c_const(i))
        rhs = rhs.add(piece)
    rhs = rhs.scale(Fraction(1, odd_double_factorial(n)))
    mismatches: list[Mismatch] = []
    if lhs != rhs:
        diff = lhs.sub(rhs)
        bad = diff.sorted_terms()[0][0]
        mismatches.append(
            Mismatch(
                monomial=f"raise q[{2*n+1},{alpha}] at {bad.render()}",
                lhs=str(lhs.coefficient(bad)),
                rhs=str(rhs.coefficient(bad)),
            )
        )
    return Report(
        identity=f"ex-closed-form(n={n},a={alpha})",
        pairing=pairing.name,
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=1,
        mismatches=mismatches,
    )
