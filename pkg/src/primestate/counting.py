"""Prime counting functions and logarithmic integrals.

All counts are exact and read from a shared :class:`PrimeTable`.  The
asymptotic predictions use ``Li(x) = int_2^x dt/log t`` and
``Li2(x) = int_2^x dt/log^2 t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np
from scipy import integrate

from .errors import DomainError
from .primes import PrimeTable, table_for, totient

_LOG2 = math.log(2.0)


class Kind(str, Enum):
    PI = "pi"
    PI_AB = "pi_ab"
    PI2 = "pi2"
    PI_ABB = "pi_abb"


@dataclass(frozen=True)
class CountingQuery:
    kind: Kind
    a: int = 1
    b: int = 0
    b2: int = 0
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.PI_AB:
            _check_progression(self.a, self.b)
        elif self.kind is Kind.PI_ABB:
            _check_pair(self.a, self.b, self.b2)
        elif self.kind is Kind.PI2 and self.k < 1:
            raise DomainError("pi2 needs a positive gap k")


def _check_progression(a: int, b: int) -> None:
    if a < 1 or b < 0:
        raise DomainError(f"need a >= 1 and b >= 0, got a={a}, b={b}")
    if math.gcd(a, b) != 1:
        raise DomainError(f"gcd({a}, {b}) != 1")


def _check_pair(a: int, b: int, b2: int) -> None:
    if b == b2:
        raise DomainError("pi_abb needs two distinct residues")
    _check_progression(a, b)
    _check_progression(a, b2)


def _table(x: int, table: PrimeTable | None) -> PrimeTable:
    if table is not None and x < table.limit:
        return table
    return table_for(x)


def pi(x: int, table: PrimeTable | None = None) -> int:
    """Number of primes <= x."""
    x = int(x)
    if x < 0:
        raise DomainError("pi needs x >= 0")
    if x < 2:
        return 0
    return _table(x, table).count(x)


# Each helper below returns the sorted integers at which a counted object
# "enters" the count, so that count(x) = #{v <= x}.


def _progression_values(a: int, b: int, x: int, table) -> np.ndarray:
    if x < b:
        return np.zeros(0, dtype=np.int64)
    fl = _table(x, table).flags(0, x + 1)
    return np.flatnonzero(fl[b::a]).astype(np.int64) * a + b


def _gap_values(k: int, x: int, table) -> np.ndarray:
    if k % 2:
        return np.zeros(0, dtype=np.int64)
    if x < 2:
        return np.zeros(0, dtype=np.int64)
    fl = _table(x + k, table).flags(0, x + k + 1)
    return np.flatnonzero(fl[: x + 1] & fl[k : x + k + 1]).astype(np.int64)


def _pair_values(a: int, b: int, b2: int, x: int, table) -> np.ndarray:
    lo, hi = min(b, b2), max(b, b2)
    if x < hi:
        return np.zeros(0, dtype=np.int64)
    fl = _table(x, table).flags(0, x + 1)
    n_max = (x - hi) // a + 1  # both a*n + b <= x
    first = fl[lo : lo + a * n_max : a][:n_max]
    second = fl[hi : hi + a * n_max : a][:n_max]
    n = np.flatnonzero(first & second).astype(np.int64)
    return n * a + hi


def pi_ab(a: int, b: int, x: int, table: PrimeTable | None = None) -> int:
    """Primes p <= x of the form a*n + b with n >= 0."""
    _check_progression(a, b)
    return int(len(_progression_values(a, b, int(x), table)))


def pi2(k: int, x: int, table: PrimeTable | None = None) -> int:
    """Primes p <= x with p + k prime; p + k itself may exceed x.

    Odd gaps give 0, matching C(k) = 0 for odd k.
    """
    if k < 1:
        raise DomainError("pi2 needs k >= 1")
    return int(len(_gap_values(int(k), int(x), table)))


def pi_abb(a: int, b: int, b2: int, x: int, table: PrimeTable | None = None) -> int:
    """Number of n >= 0 with a*n + b and a*n + b2 both prime and both <= x."""
    _check_pair(a, b, b2)
    return int(len(_pair_values(a, b, b2, int(x), table)))


# -- logarithmic integrals ----------------------------------------------------


def _log_integral(x: float, power: int) -> float:
    x = float(x)
    if not x >= 2.0:
        raise DomainError(f"logarithmic integral needs x >= 2, got {x}")
    if x == 2.0:
        return 0.0
    # substitute t = e^u: int e^u / u^power du over [log 2, log x]
    lo, hi = _LOG2, math.log(x)
    # integrand grows like e^u, so split near the top for the adaptive rule
    cuts = [lo] + [u for u in np.linspace(lo, hi, 9)[1:-1]] + [hi]
    total = 0.0
    for u0, u1 in zip(cuts[:-1], cuts[1:]):
        val, _ = integrate.quad(lambda u: math.exp(u) / u**power, u0, u1, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
    return total


def li(x: float) -> float:
    """Li(x) = integral from 2 to x of dt / log t."""
    return _log_integral(x, 1)


def li2(x: float) -> float:
    """Li2(x) = integral from 2 to x of dt / log^2 t."""
    return _log_integral(x, 2)


def ell(N: float) -> float:
    """Ratio Li2(N)/Li(N), the pair-correlation strength at scale N."""
    return li2(N) / li(N)


def ell_limit(n: int) -> float:
    """Large-N limit of :func:`ell` for N = 2**n."""
    return 1.0 / (n * _LOG2)


# -- asymptotic series ----------------------------------------------------------


def _values(query: CountingQuery, x: int, table) -> np.ndarray:
    if query.kind is Kind.PI:
        return _table(x, table).primes(0, x + 1)
    if query.kind is Kind.PI_AB:
        return _progression_values(query.a, query.b, x, table)
    if query.kind is Kind.PI2:
        return _gap_values(query.k, x, table)
    return _pair_values(query.a, query.b, query.b2, x, table)


def predicted(query: CountingQuery, x: float) -> float:
    from .hardylittlewood import C

    if query.kind is Kind.PI:
        return li(x)
    if query.kind is Kind.PI_AB:
        return li(x) / totient(query.a)
    if query.kind is Kind.PI2:
        return C(query.k) * li2(x)
    return C(abs(query.b - query.b2)) * li2(x) / totient(query.a)


def count(query: CountingQuery, x: int, table: PrimeTable | None = None) -> int:
    return int(len(_values(query, int(x), table)))


def asymptotic_ratio(query: CountingQuery, grid: Iterable[int], table: PrimeTable | None = None):
    """Rows ``(X, exact, predicted, ratio)`` for each grid point."""
    grid = [int(x) for x in grid]
    if not grid:
        return []
    if min(grid) < 2:
        raise DomainError("grid points must be >= 2")
    vals = _values(query, max(grid), table)
    rows = []
    for x in grid:
        exact = int(np.searchsorted(vals, x, side="right"))
        pred = predicted(query, x)
        rows.append((x, exact, pred, exact / pred if pred else math.nan))
    return rows
