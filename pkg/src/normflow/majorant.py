"""Majorant calculus for the averaging flow.

Every majorant here is a one-variable series in zeta = sum_j (z_j + zbar_j)
with nonnegative coefficients.  A zeta-series M = sum M_j zeta^j dominates a
2n-variable series F when |F_k| <= M_{|k|} multinomial(k) for every index:
zeta^j expands to sum_{|k|=j} multinomial(k) z^k, and this "share" reading is
the one closed under sums, products and derivatives (the identity
sum_{l+m=k, |l|=p} multinomial(l) multinomial(m) = multinomial(k) turns a
product of shares into the share of the product).

The flow's majorant side replaces every coefficient of the quadratic source
by its modulus and drops the decaying exponentials, which in zeta variables
collapses to dH/d delta = 4n (dH/d zeta)^2; its coefficients stay polynomial
in delta and are computed exactly over the rationals.  The generating
function of that system solves an inviscid Burgers equation with an explicit
quadratic-formula solution, which yields closed-form analyticity radii.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from typing import Callable, Mapping, NamedTuple, Sequence

from .algebra import FormalSeries, MultiIndex
from .errors import BoundViolation, DomainError
from .flow import FlowSolution
from .exppoly import ep_eval


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)  # exact binary value
    raise TypeError(f"expected a real number, got {type(x).__name__}")


class MajorantFn:
    """One-variable majorant: either a/(b - zeta) * zeta^s or a plain series.

    Coefficients are kept as exact rationals so that domination checks never
    fail or pass through rounding.
    """

    def __init__(self, kind: str, *, rational=None, coeffs=None):
        if kind == "rational_form":
            a, b, s = rational
            a, b = _frac(a), _frac(b)
            if a < 0 or b <= 0 or s < 0:
                raise ValueError(f"need a >= 0, b > 0, s >= 0, got {(a, b, s)}")
            self.kind = kind
            self.rational = (a, b, int(s))
            self.coeffs = None
        elif kind == "series":
            vals = tuple(_frac(c) for c in coeffs)
            if any(c < 0 for c in vals):
                raise ValueError("majorant series coefficients must be nonnegative")
            self.kind = kind
            self.rational = None
            self.coeffs = vals
        else:
            raise ValueError(f"unknown majorant kind {kind!r}")

    @classmethod
    def rational_form(cls, a, b, s: int) -> "MajorantFn":
        return cls("rational_form", rational=(a, b, s))

    @classmethod
    def from_series(cls, coeffs: Sequence) -> "MajorantFn":
        return cls("series", coeffs=coeffs)

    @property
    def radius(self) -> float:
        return float(self.rational[1]) if self.kind == "rational_form" else math.inf

    def coefficient(self, j: int) -> Fraction:
        if j < 0:
            raise ValueError("negative degree")
        if self.kind == "series":
            return self.coeffs[j] if j < len(self.coeffs) else Fraction(0)
        a, b, s = self.rational
        if j < s:
            return Fraction(0)
        return a / b ** (j - s + 1)

    def series_coefficients(self, K: int) -> list[Fraction]:
        return [self.coefficient(j) for j in range(K + 1)]

    def expanded(self, K: int) -> "MajorantFn":
        return MajorantFn.from_series(self.series_coefficients(K))

    def _series_pair(self, other: "MajorantFn"):
        if self.kind != "series" or other.kind != "series":
            raise ValueError("expand rational forms to a common degree first")
        return self.coeffs, other.coeffs

    def __add__(self, other: "MajorantFn") -> "MajorantFn":
        a, b = self._series_pair(other)
        K = min(len(a), len(b))
        return MajorantFn.from_series([a[j] + b[j] for j in range(K)])

    def __mul__(self, other: "MajorantFn") -> "MajorantFn":
        a, b = self._series_pair(other)
        K = min(len(a), len(b))
        out = [Fraction(0)] * K
        for i, ci in enumerate(a[:K]):
            if ci == 0:
                continue
            for j in range(K - i):
                if b[j]:
                    out[i + j] += ci * b[j]
        return MajorantFn.from_series(out)

    def differentiate(self) -> "MajorantFn":
        if self.kind != "series":
            raise ValueError("expand rational forms to a common degree first")
        return MajorantFn.from_series(
            [(j + 1) * self.coeffs[j + 1] for j in range(len(self.coeffs) - 1)])


def dominates(F: FormalSeries, M: MajorantFn) -> bool:
    """|F_k| <= M_{|k|} multinomial(k) on every stored coefficient."""
    for k, c in F.coeffs.items():
        if _frac(abs(c)) > M.coefficient(k.degree) * k.multinomial():
            return False
    return True


def geometric_majorant(F: FormalSeries, a, rho, s: int) -> MajorantFn:
    """Package Cauchy-type data |F_k| <= a rho^{s-|k|} as a rho zeta^s/(rho-zeta).

    The hypothesis is verified exactly on the stored coefficients first.
    """
    a, rho = _frac(a), _frac(rho)
    if rho <= 0 or a < 0:
        raise ValueError("need rho > 0 and a >= 0")
    for k, c in F.coeffs.items():
        if _frac(abs(c)) > a * rho ** (s - k.degree):
            raise BoundViolation(
                "majorant", "geometric_majorant",
                {"k": list(k.k), "kbar": list(k.kbar), "coeff": abs(c),
                 "allowed": float(a * rho ** (s - k.degree))},
                "coefficient exceeds the geometric hypothesis")
    return MajorantFn.rational_form(a * rho, rho, s)


def derivative_majorant(rho, verify_to: int | None = None) -> MajorantFn:
    """Majorant of d/d zeta [rho zeta^3/(rho - zeta)]: the form 2 rho zeta^2/(rho/2 - zeta).

    With ``verify_to`` set, both sides are expanded and compared through that
    degree: the left coefficients (j+1) rho^{2-j} against 2^j rho^{2-j}.
    """
    rho = _frac(rho)
    if rho <= 0:
        raise ValueError("need rho > 0")
    result = MajorantFn.rational_form(2 * rho, rho / 2, 2)
    if verify_to is not None:
        base = MajorantFn.rational_form(rho, rho, 3).expanded(verify_to + 1)
        left = base.differentiate()
        for j in range(verify_to + 1):
            assert left.coefficient(j) <= result.coefficient(j), j
    return result


# -- Burgers closed form and its consequences ---------------------------------

def burgers_analyticity_radius(a: float, b: float, tau: float) -> float:
    return b / (1 + 2 * a * tau + 2 * math.sqrt(a * tau * (1 + a * tau)))


def burgers_solve(a: float, b: float, tau: float, zeta: complex) -> complex:
    """The characteristics fixed point G = a (zeta + tau G)^2 / (b - zeta - tau G).

    Quadratic-formula branch with G(0) = 0, written to stay finite at tau = 0:
    G = 2 a zeta^2 / (w + sqrt(w^2 - 4 a tau (1 + a tau) zeta^2)), w = b - zeta
    - 2 a tau zeta.  Principal square root; restricted to the open disk where
    the discriminant cannot vanish.
    """
    if a <= 0 or b <= 0 or tau < 0:
        raise ValueError("need a > 0, b > 0, tau >= 0")
    if abs(zeta) >= burgers_analyticity_radius(a, b, tau):
        raise DomainError(f"zeta={zeta} outside the analyticity disk")
    w = b - zeta - 2 * a * tau * zeta
    disc = w * w - 4 * a * tau * (1 + a * tau) * zeta * zeta
    return 2 * a * zeta * zeta / (w + cmath.sqrt(disc))


def analyticity_bounds(h: float, rho: float, n: int, delta: float) -> tuple[float, float]:
    """Closed-form (radius, sup-bound) for the flow started from norm h rho^3.

    radius = rho/(4(1+32 n h rho delta)), bound = h rho^3/(4(1+32 n h rho delta)^3);
    these equal b/(2(1+2 a tau)) and a b^2/(2(1+2 a tau)^3) under a = 2 h rho,
    b = rho/2, tau = 8 n delta (asserted).
    """
    if h <= 0 or rho <= 0 or n < 1 or delta < 0:
        raise ValueError("need h > 0, rho > 0, n >= 1, delta >= 0")
    g = 1 + 32 * n * h * rho * delta
    radius = rho / (4 * g)
    bound = h * rho ** 3 / (4 * g ** 3)
    a, b, tau = 2 * h * rho, rho / 2, 8 * n * delta
    assert abs(radius - b / (2 * (1 + 2 * a * tau))) <= 1e-13 * radius
    assert abs(bound - a * b * b / (2 * (1 + 2 * a * tau) ** 3)) <= 1e-13 * bound
    return radius, bound


def invert_near_identity(phi: Callable[[complex], complex], rho: float,
                         samples: int = 64) -> Callable[[complex], complex]:
    """Solve x = y + phi(y) for y = x + psi(x) on |x| <= rho.

    Requires |phi| <= rho/2 on |y| <= 6 rho, checked by circle sampling at
    radii {0.5, 0.9, 0.99} * 6 rho (evidence, not proof).  The returned psi
    is computed per point by the contraction psi <- -phi(x + psi).
    """
    if rho <= 0:
        raise ValueError("need rho > 0")
    cap = rho / 2
    for frac in (0.5, 0.9, 0.99):
        r = 6 * rho * frac
        for i in range(samples):
            y = r * cmath.exp(2j * math.pi * i / samples)
            if abs(phi(y)) > cap:
                raise ValueError(
                    f"|phi({y})| = {abs(phi(y))} exceeds rho/2 = {cap}; not near-identity")

    def psi(x: complex) -> complex:
        if abs(x) > rho:
            raise DomainError(f"|x| = {abs(x)} > rho = {rho}")
        p = 0j
        for _ in range(200):
            nxt = -phi(x + p)
            if abs(nxt - p) <= 1e-15 * max(1.0, abs(nxt)):
                return nxt
            p = nxt
        raise ValueError("fixed-point iteration failed to contract")

    return psi


class DegenerateBounds(NamedTuple):
    radius: float
    g_bound: float
    branch: str  # "small-tau" when b/12 is the binding radius


def degenerate_bounds(a: float, b: float, r: int, tau: float) -> DegenerateBounds:
    """Domination radius and G-bound when the normal form starts at order r.

    radius = min(b/12, (1/6)(b/(24 a tau))^{1/(r-2)}), G-bound = radius/(2 tau).
    The near-identity precondition chain
        a tau (6 rho)^{r-1}/(b - 6 rho) <= 2 a tau (6 rho)^{r-1}/b <= rho/2
    is re-verified numerically; the large-tau branch makes the second
    inequality an identity.
    """
    if a <= 0 or b <= 0 or tau <= 0 or r < 3:
        raise ValueError("need a, b, tau > 0 and r >= 3")
    large = (b / (24 * a * tau)) ** (1.0 / (r - 2)) / 6
    rho = min(b / 12, large)
    branch = "small-tau" if b / 12 <= large else "large-tau"
    first = a * tau * (6 * rho) ** (r - 1) / (b - 6 * rho)
    second = 2 * a * tau * (6 * rho) ** (r - 1) / b
    if not (first <= second * (1 + 1e-12) and second <= rho / 2 * (1 + 1e-12)):
        raise BoundViolation("majorant", "degenerate_bounds",
                             {"first": first, "second": second, "half_rho": rho / 2},
                             "near-identity precondition chain failed")
    return DegenerateBounds(rho, rho / (2 * tau), branch)


# -- the majorant side of the flow --------------------------------------------

class MajorantFlow:
    """Exact polynomial trajectories of the dominating zeta-system.

    ``polys[j]`` holds the delta-polynomial (ascending Fraction coefficients)
    of the degree-j zeta-coefficient; the per-index bound is its value times
    the multinomial share.
    """

    def __init__(self, n: int, K: int, h: Fraction, rho: Fraction,
                 polys: dict[int, list[Fraction]]):
        self.n = n
        self.K = K
        self.h = h
        self.rho = rho
        self.polys = polys

    def zeta_coefficient(self, j: int, delta) -> Fraction:
        poly = self.polys.get(j)
        if poly is None:
            return Fraction(0)
        d = _frac(delta)
        acc = Fraction(0)
        for c in reversed(poly):
            acc = acc * d + c
        return acc

    def bound(self, k: MultiIndex, delta) -> Fraction:
        return self.zeta_coefficient(k.degree, delta) * k.multinomial()

    def as_map(self, support: Sequence[MultiIndex]) -> dict[MultiIndex, Callable[[float], float]]:
        return {k: (lambda d, k=k: float(self.bound(k, d))) for k in support}


def majorant_flow(H: FormalSeries, rho, K: int, initial_scale=1) -> MajorantFlow:
    """Dominating system for the flow started from H, solved exactly.

    Initial data comes from the geometric majorant with h = (sum |H_k|
    rho^{|k|})/rho^3, so the degree-j zeta-coefficient starts at h rho^{3-j}
    and evolves by F_j' = 4n sum_{p+q=j+2} p q F_p F_q.  ``initial_scale``
    rescales h (scale < 1 deliberately breaks domination, for negative
    controls).
    """
    rho = _frac(rho)
    if rho <= 0:
        raise ValueError("need rho > 0")
    if H.min_degree is not None and H.min_degree < 3:
        raise ValueError("series must have minimum degree >= 3")
    h = Fraction(0)
    for k, c in H.coeffs.items():
        h += _frac(abs(c)) * rho ** k.degree
    h = h / rho ** 3 * _frac(initial_scale)
    n = H.n
    polys: dict[int, list[Fraction]] = {j: [h * rho ** (3 - j)] for j in range(3, K + 1)}
    for j in range(4, K + 1):
        # F_j' as a delta-polynomial from lower degrees (p, q < j since both >= 3)
        rhs: list[Fraction] = []
        for p in range(3, j):
            q = j + 2 - p
            if q < 3 or q > j - 1:
                continue
            fp, fq = polys[p], polys[q]
            for ip, cp in enumerate(fp):
                for iq, cq in enumerate(fq):
                    idx = ip + iq
                    if idx >= len(rhs):
                        rhs.extend([Fraction(0)] * (idx + 1 - len(rhs)))
                    rhs[idx] += 4 * n * p * q * cp * cq
        poly = polys[j]
        for i, c in enumerate(rhs):
            target = i + 1
            if target >= len(poly):
                poly.extend([Fraction(0)] * (target + 1 - len(poly)))
            poly[target] += c / target
    return MajorantFlow(H.n, K, h, rho, polys)


class DominationReport(NamedTuple):
    ok: bool
    rows: list[tuple]  # (k, delta, exact_abs, majorant, margin)
    witness: dict | None


def verify_domination(exact: FlowSolution, majorant_sol: Mapping[MultiIndex, Callable],
                      delta_grid: Sequence[float]) -> DominationReport:
    """Check |calH_k(delta)| <= majorant_k(delta) over the grid.

    Returns every comparison as a report row; the witness records the first
    violation (smallest delta, then index order).
    """
    rows = []
    witness = None
    ok = True
    for delta in delta_grid:
        for k in exact.support():
            val = abs(ep_eval(exact.calH[k], delta))
            bound_fn = majorant_sol.get(k)
            if bound_fn is None:
                raise ValueError(f"majorant map is missing index {k}")
            bnd = float(bound_fn(delta))
            rows.append((k, delta, val, bnd, bnd - val))
            if val > bnd and ok:
                ok = False
                witness = {"k": list(k.k), "kbar": list(k.kbar), "delta": delta,
                           "exact": val, "majorant": bnd}
    return DominationReport(ok, rows, witness)
