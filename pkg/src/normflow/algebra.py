"""Sparse truncated power series in (z, zbar) with the canonical bracket.

A Hamiltonian near an elliptic equilibrium is a formal series

    H = sum_k H_k z^k zbar^kbar,   k = (k, kbar) in Z_+^{2n},

and near-identity normalization manipulates these series through the
Poisson bracket

    {F, G} = i sum_j (dF/dzbar_j dG/dz_j - dF/dz_j dG/dzbar_j).

This module holds the sparse representation, the bracket, sign-class
projections with respect to a frequency vector, and elementary coefficient
and norm bounds on polydisks.  Everything is immutable after construction
and all reductions run in a deterministic (lexicographic) order.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import DimensionMismatchError
from .resonance import Frequency, sigma_omega


class MultiIndex(NamedTuple):
    """Exponent pair of a monomial z^k zbar^kbar."""

    k: tuple[int, ...]
    kbar: tuple[int, ...]

    @classmethod
    def make(cls, k: Sequence[int], kbar: Sequence[int]) -> "MultiIndex":
        """Validated constructor; direct tuple construction skips the checks."""
        k = tuple(int(a) for a in k)
        kbar = tuple(int(a) for a in kbar)
        if len(k) != len(kbar):
            raise DimensionMismatchError(f"len(k)={len(k)} != len(kbar)={len(kbar)}")
        if any(a < 0 for a in k + kbar):
            raise ValueError(f"negative exponent in ({k}, {kbar})")
        return cls(k, kbar)

    @classmethod
    def unit(cls, n: int, j: int) -> "MultiIndex":
        """e_j, the index of z_j zbar_j."""
        e = tuple(1 if i == j else 0 for i in range(n))
        return cls(e, e)

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def degree(self) -> int:
        return sum(self.k) + sum(self.kbar)

    @property
    def kprime(self) -> tuple[int, ...]:
        """kbar - k, the integer vector whose divisor <omega, k'> decides resonance."""
        return tuple(b - a for a, b in zip(self.k, self.kbar))

    def star(self) -> "MultiIndex":
        """Index of the conjugate monomial: (k, kbar) -> (kbar, k)."""
        return MultiIndex(self.kbar, self.k)

    def multinomial(self) -> int:
        """|k|! / (k! kbar!), the count of ways zeta^{|k|} produces this monomial."""
        out = math.factorial(self.degree)
        for a in self.k + self.kbar:
            out //= math.factorial(a)
        return out


class FormalSeries:
    """Sparse formal power series truncated at total degree K.

    Parameters
    ----------
    n : int
        Degrees of freedom (2n complex variables).
    K : int
        Hard truncation degree; terms of degree > K are dropped at
        construction and by every operation, and the drop is recorded in
        ``truncation_touched``.
    coeffs : mapping, optional
        MultiIndex -> complex.  Plain ``((k...), (kbar...))`` tuple pairs are
        accepted and validated.  Exact zeros are pruned.

    Instances are immutable by convention: no method mutates ``coeffs``.
    """

    __slots__ = ("n", "K", "coeffs", "truncation_touched", "_min_degree")

    def __init__(self, n: int, K: int, coeffs: Mapping | None = None, *,
                 truncation_touched: bool = False):
        if n < 1:
            raise ValueError("need n >= 1")
        if K < 0:
            raise ValueError("need K >= 0")
        self.n = int(n)
        self.K = int(K)
        clean: dict[MultiIndex, complex] = {}
        touched = bool(truncation_touched)
        for idx, c in (coeffs or {}).items():
            if not isinstance(idx, MultiIndex):
                idx = MultiIndex.make(idx[0], idx[1])
            if idx.n != self.n:
                raise DimensionMismatchError(f"index {idx} has n={idx.n}, series has n={self.n}")
            c = complex(c)
            if c == 0:
                continue
            if idx.degree > self.K:
                touched = True
                continue
            clean[idx] = c
        self.coeffs = clean
        self.truncation_touched = touched
        self._min_degree = min((i.degree for i in clean), default=None)

    # -- inspection ----------------------------------------------------------

    @property
    def min_degree(self) -> int | None:
        """Smallest stored degree, or None for the zero series."""
        return self._min_degree

    @property
    def in_diamond(self) -> bool:
        """True when every stored term has degree >= 3."""
        return self._min_degree is None or self._min_degree >= 3

    def coeff(self, idx: MultiIndex) -> complex:
        return self.coeffs.get(idx, 0j)

    def sorted_items(self) -> list[tuple[MultiIndex, complex]]:
        return sorted(self.coeffs.items())

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def reality_defect(self) -> float:
        """max_k |conj(H_k) - H_{k*}| over the symmetrized support.

        Zero exactly when the series is invariant under the real structure
        (swapping z and zbar together with complex conjugation).
        """
        worst = 0.0
        for idx in set(self.coeffs) | {i.star() for i in self.coeffs}:
            defect = abs(self.coeff(idx).conjugate() - self.coeff(idx.star()))
            if defect > worst:
                worst = defect
        return worst

    def __eq__(self, other) -> bool:
        return (isinstance(other, FormalSeries)
                and self.n == other.n and self.coeffs == other.coeffs)

    def __repr__(self) -> str:
        return f"FormalSeries(n={self.n}, K={self.K}, terms={len(self.coeffs)})"

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "FormalSeries") -> "FormalSeries":
        return series_add(self, other)

    def __sub__(self, other: "FormalSeries") -> "FormalSeries":
        return series_add(self, -other)

    def __neg__(self) -> "FormalSeries":
        return FormalSeries(self.n, self.K, {i: -c for i, c in self.coeffs.items()},
                            truncation_touched=self.truncation_touched)

    def __mul__(self, other):
        if isinstance(other, FormalSeries):
            return series_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, factor: complex) -> "FormalSeries":
        return FormalSeries(self.n, self.K,
                            {i: factor * c for i, c in self.coeffs.items()},
                            truncation_touched=self.truncation_touched)

    def pruned(self, eps: float) -> "FormalSeries":
        """Copy without coefficients of modulus <= eps.  For reports only;
        arithmetic never prunes beyond exact zeros."""
        return FormalSeries(self.n, self.K,
                            {i: c for i, c in self.coeffs.items() if abs(c) > eps},
                            truncation_touched=self.truncation_touched)

    # -- serialization -------------------------------------------------------

    def to_json_terms(self) -> list[dict]:
        return [{"k": list(i.k), "kbar": list(i.kbar), "re": c.real, "im": c.imag}
                for i, c in self.sorted_items()]

    @classmethod
    def from_json_terms(cls, n: int, K: int, terms: Iterable[Mapping]) -> "FormalSeries":
        coeffs: dict[MultiIndex, complex] = {}
        for t in terms:
            idx = MultiIndex.make(t["k"], t["kbar"])
            coeffs[idx] = coeffs.get(idx, 0j) + complex(float(t.get("re", 0.0)),
                                                        float(t.get("im", 0.0)))
        return cls(n, K, coeffs)


def _require_same_n(A: FormalSeries, B: FormalSeries) -> None:
    if A.n != B.n:
        raise DimensionMismatchError(f"series have n={A.n} and n={B.n}")


def series_add(A: FormalSeries, B: FormalSeries) -> FormalSeries:
    """Coefficient-wise sum, truncated at min(K_A, K_B)."""
    _require_same_n(A, B)
    out = dict(A.coeffs)
    for idx, c in B.coeffs.items():
        out[idx] = out.get(idx, 0j) + c
    return FormalSeries(A.n, min(A.K, B.K), out,
                        truncation_touched=A.truncation_touched or B.truncation_touched)


def series_mul(A: FormalSeries, B: FormalSeries) -> FormalSeries:
    """Cauchy product truncated at min(K_A, K_B).

    Contributions to each output coefficient are accumulated in lexicographic
    order over index pairs, so results are bit-reproducible.
    """
    _require_same_n(A, B)
    K = min(A.K, B.K)
    out: dict[MultiIndex, complex] = {}
    touched = A.truncation_touched or B.truncation_touched
    b_items = sorted(B.coeffs.items())
    for ia, ca in sorted(A.coeffs.items()):
        da = ia.degree
        for ib, cb in b_items:
            if da + ib.degree > K:
                touched = True
                continue
            idx = MultiIndex(tuple(x + y for x, y in zip(ia.k, ib.k)),
                             tuple(x + y for x, y in zip(ia.kbar, ib.kbar)))
            out[idx] = out.get(idx, 0j) + ca * cb
    return FormalSeries(A.n, K, out, truncation_touched=touched)


def poisson_bracket(F: FormalSeries, G: FormalSeries) -> FormalSeries:
    """{F, G} = i sum_j (dF/dzbar_j dG/dz_j - dF/dz_j dG/dzbar_j).

    On monomials this is

        {z^k, z^l} = i sum_j (kbar_j l_j - k_j lbar_j) z^{k + l - e_j},

    so every term of a product of degrees p and q has degree p + q - 2.
    The result is truncated at min(K_F, K_G).
    """
    _require_same_n(F, G)
    n = F.n
    K = min(F.K, G.K)
    out: dict[MultiIndex, complex] = {}
    touched = F.truncation_touched or G.truncation_touched
    g_items = sorted(G.coeffs.items())
    for kf, cf in sorted(F.coeffs.items()):
        df = kf.degree
        for kg, cg in g_items:
            within = df + kg.degree - 2 <= K
            base = 1j * cf * cg
            for j in range(n):
                pre = kf.kbar[j] * kg.k[j] - kf.k[j] * kg.kbar[j]
                if pre == 0:
                    continue
                if not within:
                    touched = True
                    continue
                idx = MultiIndex(
                    tuple(a + b - (1 if i == j else 0)
                          for i, (a, b) in enumerate(zip(kf.k, kg.k))),
                    tuple(a + b - (1 if i == j else 0)
                          for i, (a, b) in enumerate(zip(kf.kbar, kg.kbar))))
                out[idx] = out.get(idx, 0j) + pre * base
    return FormalSeries(F.n, K, out, truncation_touched=touched)


def project_sign_class(H: FormalSeries, omega: Frequency, sign_class: str) -> FormalSeries:
    """Monomials of H whose divisor sign matches ``sign_class``.

    ``sign_class`` is one of ``"plus"``, ``"minus"``, ``"zero"``; the three
    projections partition the stored support exactly (class zero is the
    resonant part).  Float-mode sign ambiguity propagates from
    :func:`normflow.resonance.sigma_omega`.
    """
    try:
        want = {"plus": 1, "minus": -1, "zero": 0}[sign_class]
    except KeyError:
        raise ValueError(f"sign_class must be plus/minus/zero, got {sign_class!r}") from None
    if omega.n != H.n:
        raise DimensionMismatchError(f"omega has n={omega.n}, series has n={H.n}")
    kept = {idx: c for idx, c in H.coeffs.items()
            if sigma_omega(omega, idx.kprime)[0] == want}
    return FormalSeries(H.n, H.K, kept, truncation_touched=H.truncation_touched)


def cauchy_coeff_bound(c: float, rho: float, idx: MultiIndex) -> float:
    """Coefficient bound c * rho^(-|k|) for a series with sup-norm <= c on
    the polydisk of radius rho."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    return c * rho ** (-idx.degree)


def check_cauchy_bounds(H: FormalSeries, c: float, rho: float) -> bool:
    """True iff every stored coefficient obeys :func:`cauchy_coeff_bound`."""
    return all(abs(coeff) <= cauchy_coeff_bound(c, rho, idx)
               for idx, coeff in H.coeffs.items())


def norm_upper_estimate(H: FormalSeries, rho: float) -> float:
    """sum_k |H_k| rho^{|k|}, an upper bound for the sup-norm on the polydisk
    of radius rho (not the exact sup)."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    return math.fsum(abs(c) * rho ** idx.degree for idx, c in H.coeffs.items())
