"""Polynomial-coefficient differential operators in normal-ordered form.

An operator is a finite sum of atoms

    coeff * (parameter monomial) * (product of variables) * (product of d/dv)

with every multiplication standing to the left of every derivative.  Products
of operators are normal-ordered symbolically (Leibniz rewriting), so
commutators are again closed-form operators and can feed further brackets.

Exponentials act on Series values only: ``exp_apply`` sums op^k(s)/k!, which
is a finite sum whenever every atom strictly increases a windowed parameter
weight or strictly decreases variable degree or index-sum.  That witness is
checked up front; operators violating it are rejected rather than iterated.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping

from .report import Mismatch, Report, MAX_RECORDED_MISMATCHES
from .series import (
    Monomial,
    ParamId,
    Series,
    Truncation,
    VarId,
)

__all__ = [
    "Operator",
    "GradingError",
    "OperatorClassError",
    "zassenhaus_tail",
    "verify_zassenhaus_factorization",
]

ExpTuple = tuple[tuple[VarId, int], ...]
ParamTuple = tuple[tuple[ParamId, int], ...]
AtomKey = tuple[ParamTuple, ExpTuple, ExpTuple]


class GradingError(ValueError):
    """Operator exponential would not terminate under the given window."""


class OperatorClassError(ValueError):
    """Operator is outside the Lie-algebra class a construction requires."""


def _pack(entries: Iterable[tuple] | Mapping) -> tuple:
    d: dict = {}
    for k, e in dict(entries).items() if isinstance(entries, Mapping) else entries:
        if e:
            d[k] = d.get(k, 0) + e
    if any(e < 0 for e in d.values()):
        raise ValueError("multiplicities must be positive")
    return tuple(sorted(d.items()))


class Operator:
    __slots__ = ("atoms",)

    def __init__(
        self,
        atoms: Mapping[AtomKey, Fraction] | Iterable[tuple[AtomKey, Fraction]] = (),
        _clean: bool = False,
    ) -> None:
        if _clean:
            self.atoms: dict[AtomKey, Fraction] = dict(atoms)
            return
        items = atoms.items() if isinstance(atoms, Mapping) else atoms
        clean: dict[AtomKey, Fraction] = {}
        for key, c in items:
            if c == 0:
                continue
            acc = clean.get(key)
            c = Fraction(c)
            if acc is None:
                clean[key] = c
            else:
                acc += c
                if acc:
                    clean[key] = acc
                else:
                    del clean[key]
        self.atoms = clean

    # -- construction --------------------------------------------------------

    @staticmethod
    def zero() -> "Operator":
        return Operator((), _clean=True)

    @staticmethod
    def atom(
        coeff: Fraction | int,
        params: Mapping[ParamId, int] | Iterable[tuple[ParamId, int]] = (),
        mult: Iterable[VarId] = (),
        deriv: Iterable[VarId] = (),
    ) -> "Operator":
        """Single normal-ordered atom; mult/deriv are variable multisets."""
        key = (
            _pack(params),
            _pack((v, 1) for v in mult),
            _pack((v, 1) for v in deriv),
        )
        return Operator({key: Fraction(coeff)})

    # -- linear structure ------------------------------------------------------

    def add(self, other: "Operator") -> "Operator":
        out = dict(self.atoms)
        for key, c in other.atoms.items():
            acc = out.get(key)
            if acc is None:
                out[key] = c
            else:
                acc += c
                if acc:
                    out[key] = acc
                else:
                    del out[key]
        return Operator(out, _clean=True)

    def neg(self) -> "Operator":
        return Operator({k: -c for k, c in self.atoms.items()}, _clean=True)

    def sub(self, other: "Operator") -> "Operator":
        return self.add(other.neg())

    def scale(
        self,
        value: Fraction | int,
        extra_params: Mapping[ParamId, int] | Iterable[tuple[ParamId, int]] = (),
    ) -> "Operator":
        value = Fraction(value)
        if value == 0:
            return Operator.zero()
        extra = _pack(extra_params)
        if not extra:
            return Operator(
                {k: c * value for k, c in self.atoms.items()}, _clean=True
            )
        out: dict[AtomKey, Fraction] = {}
        for (params, mult, deriv), c in self.atoms.items():
            merged = _pack(tuple(params) + extra)
            out[(merged, mult, deriv)] = out.get((merged, mult, deriv), Fraction(0)) + c * value
        return Operator(out)

    def is_zero(self) -> bool:
        return not self.atoms

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Operator):
            return NotImplemented
        return self.atoms == other.atoms

    def __hash__(self) -> int:  # pragma: no cover - not used as a key
        return hash(frozenset(self.atoms.items()))

    # -- composition and brackets ----------------------------------------------

    def compose(self, other: "Operator") -> "Operator":
        """Normal-ordered product self . other (self acts after other)."""
        out: dict[AtomKey, Fraction] = {}
        for (pa, ma, da), ca in self.atoms.items():
            for (pb, mb, db), cb in other.atoms.items():
                base = ca * cb
                params = _pack(tuple(pa) + tuple(pb))
                # move the left derivatives through the right multiplications
                mb_d = dict(mb)
                shared = [v for v, _ in da if v in mb_d]
                choices: list[list[tuple[int, Fraction, VarId]]] = []
                for v in shared:
                    a_e = dict(da)[v]
                    b_e = mb_d[v]
                    opts = []
                    for j in range(0, min(a_e, b_e) + 1):
                        w = Fraction(
                            math.comb(a_e, j) * math.perm(b_e, j)
                        )
                        opts.append((j, w, v))
                    choices.append(opts)

                def emit(idx: int, factor: Fraction, taken: dict[VarId, int]) -> None:
                    if idx == len(choices):
                        new_mult = dict(ma)
                        for v, e in mb:
                            e2 = e - taken.get(v, 0)
                            if e2:
                                new_mult[v] = new_mult.get(v, 0) + e2
                        new_deriv = dict(db)
                        for v, e in da:
                            e2 = e - taken.get(v, 0)
                            if e2:
                                new_deriv[v] = new_deriv.get(v, 0) + e2
                        key = (
                            params,
                            tuple(sorted(new_mult.items())),
                            tuple(sorted(new_deriv.items())),
                        )
                        acc = out.get(key)
                        if acc is None:
                            out[key] = base * factor
                        else:
                            acc += base * factor
                            if acc:
                                out[key] = acc
                            else:
                                del out[key]
                        return
                    for j, w, v in choices[idx]:
                        if j:
                            taken[v] = j
                            emit(idx + 1, factor * w, taken)
                            del taken[v]
                        else:
                            emit(idx + 1, factor, taken)

                emit(0, Fraction(1), {})
        return Operator(out, _clean=True)

    def commutator(self, other: "Operator") -> "Operator":
        return self.compose(other).sub(other.compose(self))

    # -- action on series ---------------------------------------------------------

    def apply(self, s: Series) -> Series:
        trunc = s.trunc
        admits = trunc.admits
        out: dict[Monomial, Fraction] = {}
        atoms = self.atoms.items()
        for mono, coeff in s.terms.items():
            var_d = dict(mono.vars)
            for (params, mult, deriv), acoeff in atoms:
                factor = coeff * acoeff
                new_vars = None
                ok = True
                for v, k in deriv:
                    e = var_d.get(v, 0)
                    if e < k:
                        ok = False
                        break
                    if new_vars is None:
                        new_vars = dict(var_d)
                    factor *= math.perm(e, k)
                    if e == k:
                        del new_vars[v]
                    else:
                        new_vars[v] = e - k
                if not ok:
                    continue
                if new_vars is None:
                    new_vars = dict(var_d)
                for v, k in mult:
                    new_vars[v] = new_vars.get(v, 0) + k
                if params:
                    new_params = dict(mono.params)
                    for p, k in params:
                        new_params[p] = new_params.get(p, 0) + k
                    packed_params = tuple(sorted(new_params.items()))
                else:
                    packed_params = mono.params
                new_mono = Monomial(tuple(sorted(new_vars.items())), packed_params)
                if not admits(new_mono):
                    continue
                acc = out.get(new_mono)
                if acc is None:
                    out[new_mono] = factor
                else:
                    acc += factor
                    if acc:
                        out[new_mono] = acc
                    else:
                        del out[new_mono]
        return Series(trunc, out, _clean=True)

    def _check_termination(self, trunc: Truncation) -> None:
        for (params, mult, deriv) in self.atoms:
            weight = 0
            for p, e in params:
                k = p.kind
                if k in ("u", "v", "hbar"):
                    weight += e
                elif k == "w":
                    weight += (2 * p.index - 1) * e
                elif k == "s":
                    weight += p.index * e
            if weight >= 1:
                continue
            mult_deg = sum(e for _, e in mult)
            deriv_deg = sum(e for _, e in deriv)
            if deriv_deg > mult_deg:
                continue
            if deriv_deg == mult_deg:
                mult_idx = sum(v.index * e for v, e in mult)
                deriv_idx = sum(v.index * e for v, e in deriv)
                if deriv_idx > mult_idx:
                    continue
            raise GradingError(
                "atom with no strict gain in any windowed grading: "
                f"{Operator({(params, mult, deriv): Fraction(1)}).render()}"
            )

    def exp_apply(self, s: Series) -> Series:
        """Sum_{k>=0} op^k(s)/k!, exact and finite under the window's grading."""
        if self.is_zero():
            return s
        trunc = s.trunc
        self._check_termination(trunc)
        param_budget = (
            trunc.max_u_degree + trunc.max_hbar_degree + trunc.max_omega_weight
        )
        step_bound = (
            (param_budget + 1)
            * (trunc.max_t_degree + 1)
            * (trunc.max_var_index * trunc.max_t_degree + 2)
            + 8
        )
        out = s
        term = s
        k = 0
        while True:
            k += 1
            if k > step_bound:
                raise GradingError("exp_apply exceeded its termination bound")
            term = self.apply(term).scale(Fraction(1, k))
            if term.is_zero():
                return out
            out = out.add(term)

    # -- window pruning -------------------------------------------------------

    def truncate(self, trunc: Truncation) -> "Operator":
        """Drop atoms that cannot act within the window (sound on the truncated ring)."""
        out: dict[AtomKey, Fraction] = {}
        for key, c in self.atoms.items():
            params, mult, deriv = key
            m = Monomial((), params)
            if (
                m.u_degree() > trunc.max_u_degree
                or m.hbar_degree() > trunc.max_hbar_degree
                or m.omega_weight() > trunc.max_omega_weight
            ):
                continue
            if any(v.index > trunc.max_var_index for v, _ in mult):
                continue
            if any(v.index > trunc.max_var_index for v, _ in deriv):
                continue
            out[key] = c
        return Operator(out, _clean=True)

    # -- parameter substitution ---------------------------------------------------

    def substitute_params(
        self, rule: Mapping[ParamId, Series], trunc: Truncation
    ) -> "Operator":
        """Replace formal parameters in every atom (replacements parameter-only)."""
        out = Operator.zero()
        for (params, mult, deriv), c in self.atoms.items():
            carrier = Series.of_monomial(trunc, Monomial((), params), c)
            replaced = carrier.substitute_params(rule)
            for m, cc in replaced.terms.items():
                out = out.add(
                    Operator({(m.params, mult, deriv): cc})
                )
        return out

    # -- shape queries ------------------------------------------------------------

    def is_var_shift_family(self) -> bool:
        """One variable in, one derivative out, same kind and color per atom."""
        for (_, mult, deriv) in self.atoms:
            if len(mult) != 1 or len(deriv) != 1:
                return False
            (mv, me), (dv, de) = mult[0], deriv[0]
            if me != 1 or de != 1:
                return False
            if mv.kind != dv.kind or mv.color != dv.color:
                return False
        return True

    def is_pure_derivative(self, max_order: int = 2) -> bool:
        """No multiplication part; derivative order between 1 and max_order."""
        for (_, mult, deriv) in self.atoms:
            if mult:
                return False
            order = sum(e for _, e in deriv)
            if order < 1 or order > max_order:
                return False
        return True

    # -- rendering -----------------------------------------------------------------

    def sorted_atoms(self) -> list[tuple[AtomKey, Fraction]]:
        return sorted(self.atoms.items(), key=lambda kv: kv[0])

    def render(self) -> str:
        if not self.atoms:
            return "0"
        chunks = []
        for (params, mult, deriv), c in self.sorted_atoms():
            bits = [str(c)]
            bits += [p.render() + (f"^{e}" if e > 1 else "") for p, e in params]
            bits += [v.render() + (f"^{e}" if e > 1 else "") for v, e in mult]
            body = " * ".join(bits)
            for v, e in deriv:
                body += f" d/d{v.render()}" + (f"^{e}" if e > 1 else "")
            chunks.append(body)
        return "  +  ".join(chunks)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Operator({self.render()})"


def zassenhaus_tail(
    x_op: Operator, y_op: Operator, trunc: Truncation, max_depth: int = 64
) -> Operator:
    """Sum_{n>=1} (-1)^{n-1}/n! ad_x^{n-1} y, pruned to the window.

    Valid as the right exponent of exp(x + y) = exp(x) exp(tail) whenever the
    pair satisfies [x, y]-stability with abelian y-class.
    """
    tail = Operator.zero()
    term = y_op.truncate(trunc)
    n = 1
    while not term.is_zero():
        if n > max_depth:
            raise GradingError("ad-tower did not die out within the window")
        tail = tail.add(term.scale(Fraction((-1) ** (n - 1), math.factorial(n))))
        term = x_op.commutator(term).truncate(trunc)
        n += 1
    return tail


def verify_zassenhaus_factorization(
    x_op: Operator,
    y_op: Operator,
    trunc: Truncation,
    variables: Iterable[VarId],
    identity: str = "zassenhaus-special",
    pairing: str = "-",
    max_degree: int | None = None,
) -> Report:
    """Check exp(x+y) = exp(x) exp(tail) on every basis monomial in the window.

    Preconditions (checked): x is a variable-shift family, y is pure-derivative
    of order <= 2, and [x, y] stays pure-derivative (abelian class).
    """
    from .series import basis_monomials

    if not x_op.is_var_shift_family():
        raise OperatorClassError("left factor must be a variable-shift family")
    if not (y_op.is_zero() or y_op.is_pure_derivative(max_order=2)):
        raise OperatorClassError("right summand must be pure-derivative of order <= 2")
    bracket = x_op.commutator(y_op)
    if not (bracket.is_zero() or bracket.is_pure_derivative(max_order=2)):
        raise OperatorClassError("[x, y] left the abelian class")

    whole = x_op.add(y_op)
    tail = zassenhaus_tail(x_op, y_op, trunc)
    mismatches: list[Mismatch] = []
    cases = 0
    degree = trunc.max_t_degree if max_degree is None else max_degree
    for mono in basis_monomials(variables, degree):
        cases += 1
        start = Series.of_monomial(trunc, mono)
        lhs = whole.exp_apply(start)
        rhs = x_op.exp_apply(tail.exp_apply(start))
        if lhs != rhs:
            diff = lhs.sub(rhs)
            for bad, _ in diff.sorted_terms()[:1]:
                mismatches.append(
                    Mismatch(
                        monomial=f"exp(...) . {mono.render()} at {bad.render()}",
                        lhs=str(lhs.coefficient(bad)),
                        rhs=str(rhs.coefficient(bad)),
                    )
                )
            if len(mismatches) >= MAX_RECORDED_MISMATCHES:
                break
    return Report(
        identity=identity,
        pairing=pairing,
        truncation=trunc.as_dict(),
        passed=not mismatches,
        cases=cases,
        mismatches=mismatches,
    )
