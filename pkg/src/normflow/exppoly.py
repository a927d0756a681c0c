"""Exact arithmetic for finite sums  sum c * delta^s * exp(-nu * delta).

Every coefficient of the averaging flow is such a sum with s a nonnegative
integer and nu >= 0, so the flow can be integrated exactly degree by degree.
The decay rates nu are exact ``Fraction`` values when the frequency vector is
rational and floats otherwise; in either case the flow constructs each nu
structurally (never by subtracting nearly-equal numbers), so equal rates
collide on the dict key.  Float rates that differ by <= 1e-12 are merged as
roundoff duplicates of one rate, except that nothing merges into nu = 0:
limits at infinity are read off the nu = 0 terms and must stay exact.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

from .errors import NoLimitError, TermBudgetError

TERM_CAP_DEFAULT = 10_000
_FLOAT_NU_MERGE_TOL = 1e-12


def _canonical_terms(raw: Iterable[tuple[int, object, complex]],
                     term_cap: int) -> dict[tuple[int, object], complex]:
    by_key: dict[tuple[int, object], complex] = {}
    float_nus: list[float] = []
    for s, nu, c in raw:
        s = int(s)
        if s < 0:
            raise ValueError(f"negative power s={s}")
        if nu == 0:
            nu = 0  # one canonical zero-rate key across int/Fraction/float
        elif isinstance(nu, float):
            if nu < 0.0:
                raise ValueError(f"negative rate nu={nu}")
            nu = _snap_float_nu(nu, float_nus)
        else:
            nu = Fraction(nu)
            if nu < 0:
                raise ValueError(f"negative rate nu={nu}")
        key = (s, nu)
        acc = by_key.get(key, 0j) + complex(c)
        if acc == 0:
            by_key.pop(key, None)
        else:
            by_key[key] = acc
    if len(by_key) > term_cap:
        raise TermBudgetError(f"{len(by_key)} terms exceed the cap {term_cap}")
    return by_key


def _snap_float_nu(nu: float, seen: list[float]) -> float:
    # Merge roundoff duplicates of one rate; never bridge a positive rate to 0.
    for other in seen:
        if abs(nu - other) <= _FLOAT_NU_MERGE_TOL:
            return other
    seen.append(nu)
    return nu


class ExpPoly:
    """Finite sum of terms  c * delta^s * exp(-nu * delta).

    ``terms`` maps (s, nu) -> c with zero coefficients dropped.  The zero
    rate is stored as the int ``0`` regardless of mode so that rational and
    float pipelines agree on which terms survive at infinity.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None, *, term_cap: int = TERM_CAP_DEFAULT):
        if terms is None:
            raw: Iterable = ()
        elif isinstance(terms, dict):
            raw = ((s, nu, c) for (s, nu), c in terms.items())
        else:
            raw = terms
        self.terms = _canonical_terms(raw, term_cap)

    @classmethod
    def zero(cls) -> "ExpPoly":
        return cls()

    @classmethod
    def constant(cls, c: complex) -> "ExpPoly":
        return cls([(0, 0, c)])

    @classmethod
    def term(cls, c: complex, s: int = 0, nu=0) -> "ExpPoly":
        return cls([(s, nu, c)])

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        """True when the value does not depend on delta."""
        return not self.terms or set(self.terms) == {(0, 0)}

    def __eq__(self, other) -> bool:
        return isinstance(other, ExpPoly) and self.terms == other.terms

    def __repr__(self) -> str:
        bits = [f"({c!r})*d^{s}*e^(-{nu}d)" for (s, nu), c in sorted(self.terms.items(),
                                                                     key=_term_order)]
        return "ExpPoly(" + " + ".join(bits) + ")" if bits else "ExpPoly(0)"

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        raw = [(s, nu, c) for (s, nu), c in self.terms.items()]
        raw += [(s, nu, c) for (s, nu), c in other.terms.items()]
        return ExpPoly(raw)

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + (-other)

    def __neg__(self) -> "ExpPoly":
        return ExpPoly([(s, nu, -c) for (s, nu), c in self.terms.items()])

    def __mul__(self, other):
        if isinstance(other, ExpPoly):
            return ep_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, factor: complex) -> "ExpPoly":
        return ExpPoly([(s, nu, factor * c) for (s, nu), c in self.terms.items()])

    def differentiate(self) -> "ExpPoly":
        """d/d delta, term by term:  s delta^{s-1} - nu delta^s  (times e^{-nu delta})."""
        raw = []
        for (s, nu), c in self.terms.items():
            if s > 0:
                raw.append((s - 1, nu, s * c))
            if nu != 0:
                raw.append((s, nu, -nu * c if isinstance(nu, float) else -float(nu) * c))
        return ExpPoly(raw)

    def to_debug_list(self) -> list[list]:
        """[s, nu, re, im] quadruples, sorted; nu rendered as float."""
        return [[s, float(nu), c.real, c.imag]
                for (s, nu), c in sorted(self.terms.items(), key=_term_order)]


def _term_order(item):
    (s, nu), _ = item
    return (float(nu), s)


def ep_mul(A: ExpPoly, B: ExpPoly) -> ExpPoly:
    """Product: (s1, nu1) x (s2, nu2) -> (s1 + s2, nu1 + nu2)."""
    raw = []
    for (s1, nu1), c1 in A.terms.items():
        for (s2, nu2), c2 in B.terms.items():
            raw.append((s1 + s2, nu1 + nu2, c1 * c2))
    return ExpPoly(raw)


def ep_integrate(A: ExpPoly, weight_nu=0) -> ExpPoly:
    """Exact integral  int_0^delta A(lam) e^{-weight_nu lam} d lam.

    For a term c lam^s with zero total rate the antiderivative is
    c delta^{s+1}/(s+1); with rate nu > 0 repeated integration by parts gives

        int_0^delta lam^s e^{-nu lam} d lam
            = s!/nu^{s+1} - e^{-nu delta} sum_{t<=s} (s!/t!) delta^t / nu^{s-t+1}.

    The constant s!/nu^{s+1} lands on the (0, 0) key, which is where limits
    at infinity are read from.
    """
    if weight_nu < 0:
        raise ValueError("weight_nu must be >= 0")
    raw = []
    for (s, nu), c in A.terms.items():
        total_nu = nu + weight_nu
        if total_nu == 0:
            raw.append((s + 1, 0, c / (s + 1)))
            continue
        inv = 1.0 / float(total_nu)
        raw.append((0, 0, c * math.factorial(s) * inv ** (s + 1)))
        coef = 1  # s!/t! for t = s, then built up as t decreases
        for t in range(s, -1, -1):
            raw.append((t, total_nu, -c * coef * inv ** (s - t + 1)))
            coef *= t
    return ExpPoly(raw)


def ep_eval(A: ExpPoly, delta: float) -> complex:
    """Numerically stable evaluation: one exponential per distinct rate."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    by_nu: dict[float, list[tuple[int, complex]]] = {}
    for (s, nu), c in A.terms.items():
        by_nu.setdefault(float(nu), []).append((s, c))
    total = 0j
    for nu, powers in sorted(by_nu.items()):
        poly = 0j
        for s, c in sorted(powers):
            poly += c * delta ** s
        total += poly * math.exp(-nu * delta)
    return total


def ep_limit_infinity(A: ExpPoly) -> complex:
    """Limit as delta -> infinity.

    Exists iff every term decays (nu > 0) or is the constant (s = 0, nu = 0);
    the limit is then the constant term's coefficient.
    """
    for (s, nu), c in A.terms.items():
        if nu == 0 and s > 0:
            raise NoLimitError(f"term delta^{s} (coefficient {c}) grows without bound")
    return A.terms.get((0, 0), 0j)
