"""Independent point-case oracle: psi-class intersection numbers and their tau series.

Values come from the standard recursion on the largest insertion (the n-point
loop equation), normalized by <tau_0^3>_0 = 1.  The genus-one constant
<tau_1>_1 = 1/24 enters through the recursion's dilaton-sector central term;
that it is forced by the base normalization is checked in the test suite by
eliminating it between the recursion and the string equation.

The exponential is assembled genus by genus with an explicit hbar offset so
the series ring never needs negative exponents: the returned series equals
hbar^offset * exp(sum_g hbar^{g-1} F_g) inside the window.

The memo table is filled idempotently (same key, same value), so concurrent
readers racing through a cold cache at worst duplicate work.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterator

from .rationals import odd_double_factorial
from .series import (
    Monomial,
    PARAM_HBAR,
    Series,
    Truncation,
    t_var,
)

__all__ = [
    "intersection",
    "correlator_dimension_ok",
    "genus_potential",
    "z_point",
    "default_hbar_offset",
]

_MEMO: dict[tuple[int, tuple[int, ...]], Fraction] = {}


def _dfac(k: int) -> int:
    # (2k+1)!!
    return odd_double_factorial(k + 1)


def correlator_dimension_ok(g: int, ks: tuple[int, ...]) -> bool:
    return sum(ks) == 3 * g - 3 + len(ks)


def _sub_multisets(items: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], int]]:
    """(subset, complement, multiplicity) over sub-multisets of a sorted tuple."""
    distinct: list[tuple[int, int]] = []
    for v in items:
        if distinct and distinct[-1][0] == v:
            distinct[-1] = (v, distinct[-1][1] + 1)
        else:
            distinct.append((v, 1))

    def rec(idx: int, chosen: list[int], left: list[int], ways: int) -> Iterator:
        if idx == len(distinct):
            yield tuple(chosen), tuple(left), ways
            return
        v, m = distinct[idx]
        for take in range(m + 1):
            yield from rec(
                idx + 1,
                chosen + [v] * take,
                left + [v] * (m - take),
                ways * math.comb(m, take),
            )

    yield from rec(0, [], [], 1)


def intersection(g: int, ks: tuple[int, ...] | list[int]) -> Fraction:
    """<tau_{k_1} ... tau_{k_n}>_g for the point target; 0 off the dimension shell."""
    if g < 0 or any(k < 0 for k in ks):
        raise ValueError("invalid correlator key")
    key = (g, tuple(sorted(ks)))
    ks = key[1]
    n = len(ks)
    if 2 * g - 2 + n <= 0:
        return Fraction(0)
    if not correlator_dimension_ok(g, ks):
        return Fraction(0)
    got = _MEMO.get(key)
    if got is not None:
        return got
    if g == 0 and ks == (0, 0, 0):
        value = Fraction(1)
        _MEMO[key] = value
        return value
    k = ks[-1]
    rest = ks[:-1]
    if k == 0:
        # only the base case passes the dimension shell with all-zero insertions
        return Fraction(0)
    total = Fraction(0)
    # transfer onto each remaining insertion
    for j, d in enumerate(rest):
        new = rest[:j] + rest[j + 1 :] + (d + k - 1,)
        total += Fraction(_dfac(d + k - 1), _dfac(d - 1)) * intersection(g, new)
    # boundary terms: one handle less, or a stable split
    for a in range(0, k - 1):
        b = k - 2 - a
        w = Fraction(_dfac(a) * _dfac(b), 2)
        if g >= 1:
            total += w * intersection(g - 1, rest + (a, b))
        for g1 in range(0, g + 1):
            g2 = g - g1
            for left, right, ways in _sub_multisets(rest):
                if 2 * g1 - 2 + len(left) + 1 <= 0:
                    continue
                if 2 * g2 - 2 + len(right) + 1 <= 0:
                    continue
                total += (
                    w
                    * ways
                    * intersection(g1, left + (a,))
                    * intersection(g2, right + (b,))
                )
    # central constant of the dilaton-sector equation
    if k == 1 and not rest and g == 1:
        total += Fraction(1, 8)
    value = total / _dfac(k)
    _MEMO[key] = value
    return value


def _insertion_multisets(
    n: int, total: int, max_index: int
) -> Iterator[tuple[int, ...]]:
    for combo in combinations_with_replacement(range(min(total, max_index) + 1), n):
        if sum(combo) == total:
            yield combo


def genus_potential(g: int, trunc: Truncation) -> Series:
    """F_g: sum over insertions of the correlator times the t-monomial / automorphisms."""
    terms: dict[Monomial, Fraction] = {}
    for n in range(1, trunc.max_t_degree + 1):
        want = 3 * g - 3 + n
        if want < 0:
            continue
        for ks in _insertion_multisets(n, want, trunc.max_var_index):
            value = intersection(g, ks)
            if not value:
                continue
            counts: dict[int, int] = {}
            for k in ks:
                counts[k] = counts.get(k, 0) + 1
            denom = 1
            for c in counts.values():
                denom *= math.factorial(c)
            mono = Monomial.build({t_var(k): e for k, e in counts.items()})
            if trunc.admits(mono):
                terms[mono] = value / denom
    return Series(trunc, terms)


def default_hbar_offset(trunc: Truncation) -> int:
    # one inverse power of hbar per genus-0 factor; each needs t-degree >= 3
    return trunc.max_t_degree // 3


def z_point(
    trunc: Truncation, genus_max: int, offset: int | None = None
) -> Series:
    """hbar^offset * exp(sum_{g<=genus_max} hbar^{g-1} F_g), exact in the window.

    The offset (default max_t_degree // 3) makes every representable term's
    hbar exponent non-negative; anything needing a lower exponent would exceed
    the t-degree window and is provably absent.
    """
    if offset is None:
        offset = default_hbar_offset(trunc)
    # per-genus exponentials stratified by the true hbar exponent
    strata: dict[int, Series] = {0: Series.one(trunc)}
    for g in range(0, genus_max + 1):
        f_g = genus_potential(g, trunc)
        if f_g.is_zero():
            continue
        expo: dict[int, Series] = {}
        power = Series.one(trunc)  # F_g^k / k!, incrementally
        k = 0
        while not power.is_zero():
            e = k * (g - 1)
            expo[e] = expo.get(e, Series.zero(trunc)).add(power)
            k += 1
            if k > trunc.max_t_degree + 1:
                break
            power = power.mul(f_g).scale(Fraction(1, k))
        merged: dict[int, Series] = {}
        for e1, s1 in strata.items():
            for e2, s2 in expo.items():
                prod = s1.mul(s2)
                if prod.is_zero():
                    continue
                e = e1 + e2
                merged[e] = merged.get(e, Series.zero(trunc)).add(prod)
        strata = merged
    out = Series.zero(trunc)
    for e, s in strata.items():
        if s.is_zero():
            continue
        stored = e + offset
        if stored < 0:
            raise ValueError(
                "hbar offset too small for the window: raise offset or shrink degree"
            )
        out = out.add(
            s.mul_monomial(Monomial.build((), {PARAM_HBAR: stored}))
        )
    return out
