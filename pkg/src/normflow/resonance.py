"""Frequency vectors, resonance lattices, and small-divisor data.

A frequency vector ``omega`` classifies integer vectors q by the inner
product <omega, q>: sign zero means q belongs to the resonance lattice
L_omega = {q : <omega, q> = 0}.  Rational frequencies decide membership
exactly; float frequencies carry a user-declared generator list and a
tolerance, because resonance detection from floats alone is ill-posed.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import AmbiguousSignError, DegenerateLatticeError, NotCorankOneError


def _to_fraction(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("rational mode requires int, Fraction, or 'p/q' strings, not float")
    return Fraction(x)


def _rational_kernel_rank(rows: Sequence[Sequence[Fraction]], n: int) -> int:
    """Rank of the row space of a small rational matrix (exact elimination)."""
    mat = [list(row) for row in rows]
    rank = 0
    col = 0
    while rank < len(mat) and col < n:
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            col += 1
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        piv = mat[rank][col]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                factor = mat[r][col] / piv
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
        col += 1
    return rank


class Frequency:
    """Frequency vector with exact-rational or float representation.

    Parameters
    ----------
    values : sequence
        Entries of omega.  Ints, ``Fraction`` instances and strings like
        ``"1/2"`` select rational mode; floats select float mode.
    lattice : sequence of integer vectors, optional
        Declared resonance-lattice generators (float mode only).  They must
        be linearly independent and satisfy |<omega, g>| <= tol.
    tol : float
        Resonance tolerance in float mode.

    In float mode the declared lattice is authoritative: q is resonant iff
    it lies in the integer span of the generators.  An inner product below
    tol for a q outside that span raises :class:`AmbiguousSignError`.
    """

    def __init__(self, values: Sequence, lattice: Sequence[Sequence[int]] | None = None,
                 tol: float = 1e-9):
        values = tuple(values)
        if not values:
            raise ValueError("empty frequency vector")
        self.n = len(values)
        if any(isinstance(v, float) for v in values):
            self.mode = "float"
            self.values: tuple = tuple(float(v) for v in values)
            if tol <= 0:
                raise ValueError("tol must be positive")
            self.tol = float(tol)
            gens = tuple(tuple(int(g) for g in vec) for vec in (lattice or ()))
            for g in gens:
                if len(g) != self.n:
                    raise ValueError(f"lattice generator {g} has wrong dimension")
                if abs(self._dot_float(g)) > self.tol:
                    raise ValueError(f"declared generator {g} is not resonant: "
                                     f"|<omega,g>| = {abs(self._dot_float(g))} > tol")
            frac_rows = [[Fraction(x) for x in g] for g in gens]
            if gens and _rational_kernel_rank(frac_rows, self.n) != len(gens):
                raise ValueError("declared lattice generators must be linearly independent")
            self.declared_lattice = gens
        else:
            self.mode = "rational"
            self.values = tuple(_to_fraction(v) for v in values)
            if lattice:
                raise ValueError("rational mode decides the lattice exactly; do not declare one")
            self.tol = float(tol)
            self.declared_lattice = ()
        self._sigma_cache: dict[tuple[int, ...], tuple[int, object]] = {}

    @classmethod
    def from_json(cls, obj: dict) -> "Frequency":
        mode = obj.get("mode")
        if mode == "rational":
            return cls([Fraction(str(v)) for v in obj["values"]])
        if mode == "float":
            return cls([float(v) for v in obj["values"]],
                       lattice=obj.get("lattice") or None,
                       tol=float(obj.get("tol", 1e-9)))
        raise ValueError(f"unknown frequency mode {mode!r}")

    def to_json(self) -> dict:
        if self.mode == "rational":
            return {"mode": "rational", "values": [str(v) for v in self.values]}
        return {"mode": "float", "values": list(self.values),
                "lattice": [list(g) for g in self.declared_lattice], "tol": self.tol}

    def _dot_float(self, q: Sequence[int]) -> float:
        return math.fsum(float(w) * int(a) for w, a in zip(self.values, q))

    def inner(self, q: Sequence[int]):
        """<omega, q>, exact in rational mode."""
        if len(q) != self.n:
            raise ValueError(f"vector {tuple(q)} has dimension {len(q)}, expected {self.n}")
        if self.mode == "rational":
            return sum((w * int(a) for w, a in zip(self.values, q)), Fraction(0))
        return self._dot_float(q)

    def in_lattice(self, q: Sequence[int]) -> bool:
        """Exact resonance-lattice membership."""
        if self.mode == "rational":
            return self.inner(q) == 0
        if all(a == 0 for a in q):
            return True
        if not self.declared_lattice:
            return False
        return self._in_integer_span(q)

    def _in_integer_span(self, q: Sequence[int]) -> bool:
        # Solve sum_i x_i g_i = q exactly; membership needs an integer solution,
        # which is unique when it exists because the generators are independent.
        gens = self.declared_lattice
        rows = [[Fraction(g[c]) for g in gens] + [Fraction(int(q[c]))] for c in range(self.n)]
        ncols = len(gens)
        rank = 0
        for col in range(ncols):
            pivot = next((r for r in range(rank, self.n) if rows[r][col] != 0), None)
            if pivot is None:
                continue
            rows[rank], rows[pivot] = rows[pivot], rows[rank]
            piv = rows[rank][col]
            for r in range(self.n):
                if r != rank and rows[r][col] != 0:
                    f = rows[r][col] / piv
                    rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
            rank += 1
        sol = [Fraction(0)] * ncols
        used = 0
        for col in range(ncols):
            if used < rank and rows[used][col] != 0:
                sol[col] = rows[used][ncols] / rows[used][col]
                used += 1
        # consistency: rows below rank must have zero RHS
        for r in range(used, self.n):
            if rows[r][ncols] != 0:
                return False
        return all(x.denominator == 1 for x in sol)

    def audit_lattice(self, q_max: int) -> None:
        """Float-mode consistency check up to l1-norm q_max.

        Raises if some q outside the declared lattice has |<omega,q>| <= tol:
        the declaration is then inconsistent with the numeric values and every
        downstream sign classification would be suspect.
        """
        if self.mode == "rational":
            return
        offenders = []
        for q in l1_ball(self.n, q_max):
            if abs(self._dot_float(q)) <= self.tol and not self.in_lattice(q):
                offenders.append(q)
        if offenders:
            raise AmbiguousSignError(
                f"declared lattice inconsistent up to |q| <= {q_max}: "
                f"near-resonant undeclared vectors {offenders[:5]}")


def l1_ball(n: int, s: int) -> Iterable[tuple[int, ...]]:
    """All nonzero integer vectors q with |q|_1 <= s, in lexicographic order."""
    for q in itertools.product(range(-s, s + 1), repeat=n):
        if q != (0,) * n and sum(abs(a) for a in q) <= s:
            yield q


def sigma_omega(omega: Frequency, q: Sequence[int]) -> tuple[int, object]:
    """Sign and small divisor of q: (sign <omega,q>, |<omega,q>|).

    The divisor is a ``Fraction`` in rational mode and a float otherwise;
    it is exactly zero for lattice members.
    """
    key = tuple(int(a) for a in q)
    cached = omega._sigma_cache.get(key)
    if cached is not None:
        return cached
    if omega.mode == "rational":
        v = omega.inner(key)
        result = (0, Fraction(0)) if v == 0 else ((1, v) if v > 0 else (-1, -v))
    else:
        if omega.in_lattice(key):
            result = (0, 0.0)
        else:
            v = omega._dot_float(key)
            if abs(v) <= omega.tol:
                raise AmbiguousSignError(
                    f"|<omega,{key}>| = {abs(v)} <= tol but {key} is not in the declared lattice")
            result = (1, v) if v > 0 else (-1, -v)
    omega._sigma_cache[key] = result
    return result


def omega_capital(omega: Frequency, s: int) -> float:
    """Largest inverse divisor over nonresonant q with |q|_1 <= s.

    Brute force over the l1 ball; O(s^n 2^n) inner products, fine for the
    desk scales (n <= 4, s <= 40) this package targets.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    best = None
    for q in l1_ball(omega.n, s):
        sign, div = sigma_omega(omega, q)
        if sign == 0:
            continue
        if best is None or div < best:
            best = div
    if best is None:
        raise DegenerateLatticeError(f"every |q| <= {s} is resonant for omega = {omega.values}")
    return 1.0 / float(best)


def lattice_rank(omega: Frequency) -> int:
    """Rank of the resonance lattice.

    Rational mode is exact: the kernel of a nonzero rational functional on
    Z^n has rank n - 1.  Float mode reports the rank of the declared
    generator list (declared, not discovered).
    """
    if omega.mode == "rational":
        return omega.n if all(v == 0 for v in omega.values) else omega.n - 1
    if not omega.declared_lattice:
        return 0
    rows = [[Fraction(x) for x in g] for g in omega.declared_lattice]
    return _rational_kernel_rank(rows, omega.n)


class CorankOneData:
    """Primitive direction q and scale lambda/p of a corank-one frequency.

    omega = (lam / p) * q with q a primitive integer vector, p a positive
    integer, gcd(|q_1|, ..., |q_n|, p) = 1, and lam > 0.  Every nonresonant
    divisor is then >= lam / p.
    """

    def __init__(self, q: tuple[int, ...], p: int, lam):
        self.q = q
        self.p = int(p)
        self.lam = lam

    @property
    def lam_over_p(self) -> float:
        return float(self.lam) / self.p

    def __repr__(self) -> str:
        return f"CorankOneData(q={self.q}, p={self.p}, lam={self.lam})"


def corank1_decompose(omega: Frequency) -> CorankOneData:
    """Decompose a corank-one omega as (lam / p) q.

    The stated constraints do not pin (q, p, lam) alone (scaling q, p, lam
    together preserves them), so the result is normalized: q is the primitive
    integer direction of omega oriented so lam > 0, and lam/p is the minimal
    positive divisor in lowest terms.
    """
    if lattice_rank(omega) != omega.n - 1:
        raise NotCorankOneError(f"lattice rank is {lattice_rank(omega)}, expected {omega.n - 1}")
    if omega.mode == "rational":
        denom_lcm = math.lcm(*(v.denominator for v in omega.values))
        w = [int(v * denom_lcm) for v in omega.values]
        g = math.gcd(*(abs(a) for a in w))
        q = tuple(a // g for a in w)
        scale = Fraction(g, denom_lcm)  # omega = scale * q, scale > 0
        return CorankOneData(q, scale.denominator, Fraction(scale.numerator))
    # Float mode: the rational direction comes from the declared lattice. Its
    # orthogonal complement in Q^n is one-dimensional; take the primitive
    # integer generator, oriented along omega, and fit lam with p = 1.
    q = _primitive_orthogonal(omega.declared_lattice, omega.n)
    lam = omega._dot_float(q) / sum(a * a for a in q)
    if lam < 0:
        q = tuple(-a for a in q)
        lam = -lam
    for w, a in zip(omega.values, q):
        if abs(w - lam * a) > omega.tol * max(1.0, abs(w)):
            raise NotCorankOneError(
                f"omega is not proportional to the lattice complement {q} within tol")
    return CorankOneData(q, 1, lam)


def _primitive_orthogonal(gens: Sequence[Sequence[int]], n: int) -> tuple[int, ...]:
    """Primitive integer generator of the rank-one orthogonal complement."""
    rows = [[Fraction(x) for x in g] for g in gens]
    # Reduce and read a kernel vector of the (n-1) x n system <g, q> = 0.
    mat = [list(r) for r in rows]
    pivots: list[int] = []
    rank = 0
    for col in range(n):
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        piv = mat[rank][col]
        mat[rank] = [a / piv for a in mat[rank]]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[rank])]
        pivots.append(col)
        rank += 1
    free = [c for c in range(n) if c not in pivots]
    if len(free) != 1:
        raise NotCorankOneError(f"declared lattice has rank {rank}, expected {n - 1}")
    fcol = free[0]
    vec = [Fraction(0)] * n
    vec[fcol] = Fraction(1)
    for r, pcol in enumerate(pivots):
        vec[pcol] = -mat[r][fcol]
    denom_lcm = math.lcm(*(v.denominator for v in vec))
    ints = [int(v * denom_lcm) for v in vec]
    g = math.gcd(*(abs(a) for a in ints if a != 0))
    return tuple(a // g for a in ints)
