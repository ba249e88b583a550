"""Sparse truncated multivariate formal power series over exact rationals.

Variables come in two worlds that are never aliased:

* ``t[n,a]`` with n >= 0 — the descendant variables the flow operators act on;
* ``q[n,a]`` with n >= 1 — the variables living downstream of the change of
  variables (q with n <= 0 is identically zero and may not be constructed).

Formal parameters ride along in every monomial: ``u``, ``hbar``, the weighted
couplings ``w[l]`` (weight 2l-1) and ``s[n]`` (weight n), the multi-parameter
family ``v[j]`` (graded with u), and the expansion letters ``z``, ``x``, ``y``.
The letters z, x, y are stored with non-negative exponents; which power
orientation an exponent encodes (z vs 1/z) is documented at each producing
site, and they carry no truncation weight of their own.

Truncation is a hard window: any monomial exceeding a bound is dropped by
every ring operation.  All operations are pure; Series values are treated as
immutable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Mapping, NamedTuple

__all__ = [
    "VarId",
    "ParamId",
    "Monomial",
    "Truncation",
    "Series",
    "TruncationError",
    "t_var",
    "q_var",
    "PARAM_U",
    "PARAM_HBAR",
    "PARAM_Z",
    "PARAM_X",
    "PARAM_Y",
    "omega_param",
    "s_param",
    "multi_u_param",
    "basis_monomials",
    "random_series",
    "exp_nilpotent",
    "log_one_plus",
]


class TruncationError(ValueError):
    """Raised on truncation-policy mismatch or an unrepresentable overflow."""


class VarId(NamedTuple):
    kind: str  # "t" or "q"
    index: int
    color: int

    def render(self) -> str:
        return f"{self.kind}[{self.index},{self.color}]"


def t_var(index: int, color: int = 0) -> VarId:
    if index < 0:
        raise ValueError("t-variables need index >= 0")
    return VarId("t", index, color)


def q_var(index: int, color: int = 0) -> VarId:
    if index < 1:
        raise ValueError("q-variables vanish for index <= 0")
    return VarId("q", index, color)


class ParamId(NamedTuple):
    kind: str  # "u", "hbar", "w", "s", "v", "z", "x", "y"
    index: int

    def render(self) -> str:
        if self.kind in ("u", "hbar", "z", "x", "y"):
            return self.kind
        return f"{self.kind}[{self.index}]"


PARAM_U = ParamId("u", 0)
PARAM_HBAR = ParamId("hbar", 0)
PARAM_Z = ParamId("z", 0)
PARAM_X = ParamId("x", 0)
PARAM_Y = ParamId("y", 0)


def omega_param(l: int) -> ParamId:
    """Coupling w[l], carrying weight 2l-1."""
    if l < 1:
        raise ValueError("omega parameters start at l = 1")
    return ParamId("w", l)


def s_param(n: int) -> ParamId:
    """Coupling s[n] for odd n, carrying weight n."""
    if n < 1 or n % 2 == 0:
        raise ValueError("s parameters are indexed by odd n >= 1")
    return ParamId("s", n)


def multi_u_param(j: int) -> ParamId:
    """j-th member of the multi-parameter family; graded together with u."""
    if j < 1:
        raise ValueError("multi-u parameters start at j = 1")
    return ParamId("v", j)


class Monomial(NamedTuple):
    """Canonical sparse monomial: sorted ((id, exp), ...) tuples, no zero exps."""

    vars: tuple[tuple[VarId, int], ...]
    params: tuple[tuple[ParamId, int], ...]

    @staticmethod
    def build(
        vars: Mapping[VarId, int] | Iterable[tuple[VarId, int]] = (),
        params: Mapping[ParamId, int] | Iterable[tuple[ParamId, int]] = (),
    ) -> "Monomial":
        vd: dict[VarId, int] = {}
        for v, e in dict(vars).items() if isinstance(vars, Mapping) else vars:
            if e:
                vd[v] = vd.get(v, 0) + e
        pd: dict[ParamId, int] = {}
        for p, e in dict(params).items() if isinstance(params, Mapping) else params:
            if e:
                pd[p] = pd.get(p, 0) + e
        if any(e < 0 for e in vd.values()) or any(e < 0 for e in pd.values()):
            raise ValueError("negative exponents are not representable")
        return Monomial(tuple(sorted(vd.items())), tuple(sorted(pd.items())))

    def mul(self, other: "Monomial") -> "Monomial":
        if not other.vars and not other.params:
            return self
        if not self.vars and not self.params:
            return other
        return Monomial.build(
            tuple(self.vars) + tuple(other.vars),
            tuple(self.params) + tuple(other.params),
        )

    def degree(self) -> int:
        return sum(e for _, e in self.vars)

    def u_degree(self) -> int:
        return sum(e for p, e in self.params if p.kind in ("u", "v"))

    def hbar_degree(self) -> int:
        return sum(e for p, e in self.params if p.kind == "hbar")

    def omega_weight(self) -> int:
        w = 0
        for p, e in self.params:
            if p.kind == "w":
                w += (2 * p.index - 1) * e
            elif p.kind == "s":
                w += p.index * e
        return w

    def max_index(self) -> int:
        return max((v.index for v, _ in self.vars), default=0)

    def render(self) -> str:
        parts = [p.render() + (f"^{e}" if e > 1 else "") for p, e in self.params]
        parts += [v.render() + (f"^{e}" if e > 1 else "") for v, e in self.vars]
        return " * ".join(parts) if parts else "1"


MONOMIAL_ONE = Monomial((), ())


@dataclass(frozen=True)
class Truncation:
    """Finite window: everything outside it is identically dropped.

    max_t_degree bounds total degree in t/q variables jointly; max_var_index
    bounds every variable index; u and multi-u exponents count together
    against max_u_degree; w[l]/s[n] weights count together against
    max_omega_weight.  z, x, y are not windowed here.
    """

    max_t_degree: int
    max_var_index: int
    max_u_degree: int
    max_hbar_degree: int
    max_omega_weight: int

    def __post_init__(self) -> None:
        for name in (
            "max_t_degree",
            "max_var_index",
            "max_u_degree",
            "max_hbar_degree",
            "max_omega_weight",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def admits(self, m: Monomial) -> bool:
        deg = 0
        for v, e in m.vars:
            if v.index > self.max_var_index:
                return False
            deg += e
        if deg > self.max_t_degree:
            return False
        u = h = w = 0
        for p, e in m.params:
            k = p.kind
            if k == "u" or k == "v":
                u += e
            elif k == "hbar":
                h += e
            elif k == "w":
                w += (2 * p.index - 1) * e
            elif k == "s":
                w += p.index * e
        return (
            u <= self.max_u_degree
            and h <= self.max_hbar_degree
            and w <= self.max_omega_weight
        )

    def as_dict(self) -> dict[str, int]:
        return {
            "max_t_degree": self.max_t_degree,
            "max_var_index": self.max_var_index,
            "max_u_degree": self.max_u_degree,
            "max_hbar_degree": self.max_hbar_degree,
            "max_omega_weight": self.max_omega_weight,
        }

    def replace(self, **kw: int) -> "Truncation":
        d = self.as_dict()
        d.update(kw)
        return Truncation(**d)


class Series:
    """Sparse map Monomial -> Fraction under a fixed Truncation.

    Stored terms never contain zero coefficients or out-of-window monomials.
    """

    __slots__ = ("terms", "trunc")

    def __init__(
        self,
        trunc: Truncation,
        terms: Mapping[Monomial, Fraction] | Iterable[tuple[Monomial, Fraction]] = (),
        _clean: bool = False,
    ) -> None:
        self.trunc = trunc
        if _clean:
            self.terms: dict[Monomial, Fraction] = dict(terms)
            return
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[Monomial, Fraction] = {}
        for m, c in items:
            if c == 0 or not trunc.admits(m):
                continue
            acc = clean.get(m)
            c = Fraction(c)
            if acc is None:
                clean[m] = c
            else:
                acc += c
                if acc:
                    clean[m] = acc
                else:
                    del clean[m]
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(trunc: Truncation) -> "Series":
        return Series(trunc, (), _clean=True)

    @staticmethod
    def constant(trunc: Truncation, value: Fraction | int) -> "Series":
        value = Fraction(value)
        if value == 0:
            return Series.zero(trunc)
        return Series(trunc, {MONOMIAL_ONE: value})

    @staticmethod
    def one(trunc: Truncation) -> "Series":
        return Series.constant(trunc, 1)

    @staticmethod
    def of_monomial(
        trunc: Truncation, m: Monomial, coeff: Fraction | int = 1
    ) -> "Series":
        return Series(trunc, {m: Fraction(coeff)})

    @staticmethod
    def of_var(trunc: Truncation, v: VarId, coeff: Fraction | int = 1) -> "Series":
        return Series.of_monomial(trunc, Monomial.build({v: 1}), coeff)

    @staticmethod
    def of_param(trunc: Truncation, p: ParamId, exp: int = 1, coeff: Fraction | int = 1) -> "Series":
        return Series.of_monomial(trunc, Monomial.build((), {p: exp}), coeff)

    # -- ring operations ----------------------------------------------------

    def _check_policy(self, other: "Series") -> None:
        if self.trunc != other.trunc:
            raise TruncationError("mismatched truncation policies")

    def add(self, other: "Series") -> "Series":
        self._check_policy(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            acc = out.get(m)
            if acc is None:
                out[m] = c
            else:
                acc += c
                if acc:
                    out[m] = acc
                else:
                    del out[m]
        return Series(self.trunc, out, _clean=True)

    def neg(self) -> "Series":
        return Series(self.trunc, {m: -c for m, c in self.terms.items()}, _clean=True)

    def sub(self, other: "Series") -> "Series":
        return self.add(other.neg())

    def scale(self, value: Fraction | int) -> "Series":
        value = Fraction(value)
        if value == 0:
            return Series.zero(self.trunc)
        return Series(
            self.trunc, {m: c * value for m, c in self.terms.items()}, _clean=True
        )

    def mul(self, other: "Series") -> "Series":
        self._check_policy(other)
        if not self.terms or not other.terms:
            return Series.zero(self.trunc)
        a, b = self.terms, other.terms
        if len(a) > len(b):
            a, b = b, a
        admits = self.trunc.admits
        out: dict[Monomial, Fraction] = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                m = ma.mul(mb)
                if not admits(m):
                    continue
                c = ca * cb
                acc = out.get(m)
                if acc is None:
                    out[m] = c
                else:
                    acc += c
                    if acc:
                        out[m] = acc
                    else:
                        del out[m]
        return Series(self.trunc, out, _clean=True)

    def mul_monomial(self, m: Monomial, coeff: Fraction | int = 1) -> "Series":
        coeff = Fraction(coeff)
        admits = self.trunc.admits
        out: dict[Monomial, Fraction] = {}
        for mm, c in self.terms.items():
            prod = mm.mul(m)
            if admits(prod):
                out[prod] = c * coeff
        return Series(self.trunc, out, _clean=True)

    def power(self, n: int) -> "Series":
        if n < 0:
            raise ValueError("negative powers are not representable")
        out = Series.one(self.trunc)
        base = self
        while n:
            if n & 1:
                out = out.mul(base)
            n >>= 1
            if n:
                base = base.mul(base)
        return out

    # -- queries ------------------------------------------------------------

    def coefficient(self, m: Monomial) -> Fraction:
        return self.terms.get(m, Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:  # pragma: no cover - Series is not meant as a key
        return hash(frozenset(self.terms.items()))

    def variables(self) -> set[VarId]:
        return {v for m in self.terms for v, _ in m.vars}

    def truncated(self, trunc: Truncation) -> "Series":
        return Series(trunc, self.terms)

    # -- substitution ---------------------------------------------------------

    def substitute(self, rule: Mapping[VarId, "Series"]) -> "Series":
        """Ring homomorphism sending each mapped variable to its replacement.

        Unlisted variables map to themselves.  Replacements share this series'
        policy, so they carry only admissible monomials; whatever a product
        pushes outside the window is dropped like any other ring operation.
        """
        for repl in rule.values():
            self._check_policy(repl)
        powers: dict[tuple[VarId, int], Series] = {}

        def replacement_power(v: VarId, e: int) -> Series:
            key = (v, e)
            got = powers.get(key)
            if got is None:
                got = rule[v].power(e)
                powers[key] = got
            return got

        out = Series.zero(self.trunc)
        for m, c in self.terms.items():
            kept: list[tuple[VarId, int]] = []
            factors: list[Series] = []
            for v, e in m.vars:
                if v in rule:
                    factors.append(replacement_power(v, e))
                else:
                    kept.append((v, e))
            term = Series.of_monomial(self.trunc, Monomial(tuple(kept), m.params), c)
            for f in factors:
                term = term.mul(f)
                if term.is_zero():
                    break
            out = out.add(term)
        return out

    def substitute_params(self, rule: Mapping[ParamId, "Series"]) -> "Series":
        """Same homomorphism on formal parameters (replacements are parameter-only)."""
        for repl in rule.values():
            self._check_policy(repl)
            if any(m.vars for m in repl.terms):
                raise ValueError("parameter replacements must be variable-free")
        powers: dict[tuple[ParamId, int], Series] = {}

        def replacement_power(p: ParamId, e: int) -> Series:
            key = (p, e)
            got = powers.get(key)
            if got is None:
                got = rule[p].power(e)
                powers[key] = got
            return got

        out = Series.zero(self.trunc)
        for m, c in self.terms.items():
            kept: list[tuple[ParamId, int]] = []
            factors: list[Series] = []
            for p, e in m.params:
                if p in rule:
                    factors.append(replacement_power(p, e))
                else:
                    kept.append((p, e))
            term = Series.of_monomial(self.trunc, Monomial(m.vars, tuple(kept)), c)
            for f in factors:
                term = term.mul(f)
                if term.is_zero():
                    break
            out = out.add(term)
        return out

    # -- rendering ------------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    def render(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c} * {m.render()}" for m, c in self.sorted_terms())

    def to_json_obj(self) -> list[dict[str, str]]:
        return [
            {"monomial": m.render(), "coefficient": str(c)}
            for m, c in self.sorted_terms()
        ]

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Series({self.render()})"


def exp_nilpotent(s: Series, max_steps: int = 10_000) -> Series:
    """exp of a series with no constant term that dies under the window.

    Each power is computed under the series' truncation; iteration stops at the
    first vanishing power, which the caller guarantees by grading (every term
    must carry positive weight in some windowed quantity or positive degree).
    """
    if s.coefficient(MONOMIAL_ONE) != 0:
        raise ValueError("exp_nilpotent needs a series without constant term")
    out = Series.one(s.trunc)
    term = Series.one(s.trunc)
    k = 0
    while True:
        k += 1
        if k > max_steps:
            raise TruncationError("exp did not terminate under the window")
        term = term.mul(s).scale(Fraction(1, k))
        if term.is_zero():
            return out
        out = out.add(term)


def log_one_plus(s: Series, max_steps: int = 10_000) -> Series:
    """log(1 + s) for s with no constant term, truncation-graded like exp_nilpotent."""
    if s.coefficient(MONOMIAL_ONE) != 0:
        raise ValueError("log_one_plus needs a series without constant term")
    out = Series.zero(s.trunc)
    power = Series.one(s.trunc)
    k = 0
    while True:
        k += 1
        if k > max_steps:
            raise TruncationError("log did not terminate under the window")
        power = power.mul(s)
        if power.is_zero():
            return out
        out = out.add(power.scale(Fraction((-1) ** (k + 1), k)))


def basis_monomials(
    variables: Iterable[VarId], max_degree: int, include_one: bool = True
) -> Iterator[Monomial]:
    """All monomials of total degree <= max_degree over the given variables."""
    pool = sorted(set(variables))
    lo = 0 if include_one else 1
    for d in range(lo, max_degree + 1):
        for combo in combinations_with_replacement(pool, d):
            counts: dict[VarId, int] = {}
            for v in combo:
                counts[v] = counts.get(v, 0) + 1
            yield Monomial.build(counts)


def random_series(
    seed: int,
    trunc: Truncation,
    term_count: int,
    variables: Iterable[VarId] | None = None,
    max_hbar: int = 0,
    max_u: int = 0,
) -> Series:
    """Deterministic pseudo-random series inside the window.

    Same seed, same bounds: identical output.  Coefficients are small nonzero
    rationals; monomials are drawn over `variables` (default: colorless t-vars
    up to the window's index bound) with optional hbar / u powers.
    """
    rng = random.Random(seed)
    pool = (
        sorted(set(variables))
        if variables is not None
        else [t_var(i) for i in range(trunc.max_var_index + 1)]
    )
    if not pool and term_count:
        raise ValueError("empty variable pool")
    terms: dict[Monomial, Fraction] = {}
    attempts = 0
    while len(terms) < term_count:
        attempts += 1
        if attempts > 200 * (term_count + 1):
            raise ValueError("window too small for the requested term count")
        deg = rng.randint(0, trunc.max_t_degree)
        counts: dict[VarId, int] = {}
        for _ in range(deg):
            v = rng.choice(pool)
            counts[v] = counts.get(v, 0) + 1
        params: dict[ParamId, int] = {}
        if max_hbar:
            h = rng.randint(0, max_hbar)
            if h:
                params[PARAM_HBAR] = h
        if max_u:
            uu = rng.randint(0, max_u)
            if uu:
                params[PARAM_U] = uu
        m = Monomial.build(counts, params)
        if not trunc.admits(m) or m in terms:
            continue
        num = rng.randint(-9, 9)
        if num == 0:
            num = 1
        terms[m] = Fraction(num, rng.randint(1, 4))
    return Series(trunc, terms)
