"""Hardy-Littlewood constants and the sum rules they satisfy.

``C(k) = C2 * prod_{p | k, p > 2} (p-1)/(p-2)`` for even k and 0 for odd k,
with ``C2 = 2 prod_{p>2} (1 - 1/(p-1)^2)`` the twin prime constant (also
written alpha).  Exact rationals are used wherever a quantity is a finite
product of rationals; the constant alpha itself is carried as a unit.
"""

from __future__ import annotations

import json
import math
import threading
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError, RangeError
from .primes import factorize, small_primes, table_for

TWIN_CONSTANT = 1.3203236316937391  # 2 * 0.66016181584686957...
ALPHA = TWIN_CONSTANT  # same constant, appendix notation

DEFAULT_CUTOFF = 10**6

# term name -> (prefactor, per-prime factor, leading exponent k so that
# |log factor| <= (p-1)^-k / (1 - eps))
_TERMS = {
    "twin": (2.0, lambda q: 1.0 - 1.0 / q**2, 2),
    "purity": (4.0, lambda q: 1.0 + 1.0 / q**3, 3),
    "alpha2": (2.0, lambda q: 1.0 + 1.0 / q**3, 3),
}


def _even_power_tail(E: int, k: int) -> float:
    # sum over even e >= E of e^-k, bounded by first term plus an integral
    E = E + (E & 1)
    return E ** (-k) + E ** (1 - k) / (2.0 * (k - 1))


def euler_product(term: str, cutoff: int = DEFAULT_CUTOFF, s: int | None = None) -> tuple[float, float]:
    """Truncated Euler product over odd primes <= cutoff and a tail bound.

    ``term`` is one of ``twin`` (2 prod(1 - 1/(p-1)^2)), ``purity``
    (4 prod(1 + 1/(p-1)^3)), ``alpha2`` (2 prod(1 + 1/(p-1)^3)) or ``zeta``
    (prod(1 + 1/(p-1)^(2s-1)), needs ``s >= 2``).  The bound covers every
    prime above the cutoff: ``|exact - value| <= tail_bound``.
    """
    if term == "zeta":
        if s is None or s < 2:
            raise DomainError("zeta product needs an integer s >= 2")
        k = 2 * s - 1
        pref, factor = 1.0, (lambda q: 1.0 + q ** (-float(k)))
    elif term in _TERMS:
        pref, factor, k = _TERMS[term]
    else:
        raise DomainError(f"unknown product {term!r}")
    cutoff = int(cutoff)
    if cutoff < 3:
        raise DomainError("cutoff must be at least 3")
    try:
        ps = table_for(cutoff).primes(3, cutoff + 1)
    except RangeError:
        raise RangeError(f"cutoff {cutoff} exceeds the largest prime table") from None
    q = (ps - 1).astype(np.float64)
    logs = np.log(factor(q))
    value = pref * math.exp(math.fsum(logs))
    # primes above the cutoff have p - 1 >= cutoff and p - 1 even
    E = cutoff if cutoff % 2 == 0 else cutoff + 1
    eps = float(E) ** (-k)
    T = _even_power_tail(E, k) / (1.0 - eps)
    return value, value * math.expm1(T)


def zeta_estimate(s: int) -> float:
    """1 + zeta(2s-1) / 2^(2s-1), the large-m trace estimate per level."""
    from scipy.special import zeta

    return 1.0 + float(zeta(2 * s - 1)) / 2.0 ** (2 * s - 1)


# -- C(k) -------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _odd_prime_divisors(k: int) -> tuple[int, ...]:
    return tuple(p for p in factorize(k) if p > 2)


def C(k: int) -> float:
    """Hardy-Littlewood constant for prime pairs at gap k."""
    k = int(k)
    if k < 1:
        raise DomainError("C(k) needs k >= 1")
    if k % 2:
        return 0.0
    out = TWIN_CONSTANT
    for p in _odd_prime_divisors(k):
        out *= (p - 1) / (p - 2)
    return out


def C_array(kmax: int) -> np.ndarray:
    """C(k) for k = 0..kmax (index 0 holds 0)."""
    kmax = int(kmax)
    out = np.ones(kmax + 1)
    for p in small_primes(kmax)[1:]:
        p = int(p)
        out[p::p] *= (p - 1) / (p - 2)
    out *= TWIN_CONSTANT
    out[1::2] = 0.0
    out[0] = 0.0
    return out


def beta(d: int) -> Fraction:
    """prod over primes p | d of 1/(p-2); zero for even or non-square-free d."""
    d = int(d)
    if d < 1:
        raise DomainError("beta needs d >= 1")
    if d % 2 == 0:
        return Fraction(0)
    f = factorize(d)
    if any(e > 1 for e in f.values()):
        return Fraction(0)
    out = Fraction(1)
    for p in f:
        out /= p - 2
    return out


def beta_array(D: int) -> np.ndarray:
    """Floating-point beta(d) for d = 0..D (index 0 holds 0)."""
    D = int(D)
    out = np.ones(D + 1)
    out[0::2] = 0.0
    for p in small_primes(D)[1:]:
        p = int(p)
        out[p::p] /= p - 2
        out[p * p :: p * p] = 0.0
    return out


def _divisors(m: int) -> list[int]:
    divs = [1]
    for p, e in factorize(m).items():
        divs = [d * p**j for d in divs for j in range(e + 1)]
    return divs


def alpha_m(m: int, method: str = "product") -> Fraction:
    """C(m) in units of alpha, as an exact rational.

    ``product`` multiplies (p-1)/(p-2) over the odd primes dividing m;
    ``divisor_sum`` adds beta(d) over the divisors d of m.  Both give 0 for
    odd m.
    """
    m = int(m)
    if m < 1:
        raise DomainError("alpha_m needs m >= 1")
    if m % 2:
        return Fraction(0)
    if method == "product":
        out = Fraction(1)
        for p in _odd_prime_divisors(m):
            out *= Fraction(p - 1, p - 2)
        return out
    if method == "divisor_sum":
        return sum((beta(d) for d in _divisors(m)), Fraction(0))
    raise DomainError(f"unknown method {method!r}")


def cumulative_alpha(X: int) -> list[Fraction]:
    """Partial sums of alpha(m) over m <= x, for x = 1..X (alpha units)."""
    out, acc = [], Fraction(0)
    for m in range(1, int(X) + 1):
        acc += alpha_m(m)
        out.append(acc)
    return out


# -- sum rules -------------------------------------------------------------------


def alpha_sq_over_alpha2(cutoff: int = DEFAULT_CUTOFF) -> float:
    return euler_product("alpha2", cutoff)[0]


def sum_C(K: int) -> tuple[float, float, float]:
    """(sum_{k<=K} C(k), K - log(K)/2, ratio)."""
    K = int(K)
    if K < 2:
        raise DomainError("sum_C needs K >= 2")
    exact = math.fsum(C_array(K))
    pred = K - 0.5 * math.log(K)
    return exact, pred, exact / pred


def offdiag_sum_C2(d: int) -> float:
    """sum of C^2(2|i-j|) over i != j in 1..d, grouped by gap."""
    d = int(d)
    if d < 1:
        raise DomainError("need d >= 1")
    if d == 1:
        return 0.0
    c = C_array(2 * (d - 1))
    g = np.arange(1, d)
    return math.fsum(2.0 * (d - g) * c[2 * g] ** 2)


def sum_C2(d_half: int, cutoff: int = DEFAULT_CUTOFF) -> dict:
    """Double sum of C^2(2|i-j|) over i != j in 1..d_half and its predictions.

    With X = 2 d_half the three reported ratios are

    * ``ratio_single``: sum_{m<=X} C(m)^2 / ((a2) X - log(X)^2 / 2)
    * ``ratio_weighted``: sum_{m<=X} m C(m)^2 / ((a2/2) X^2)
    * ``ratio_double``: exact / ((a2/2) X^2 - (X/2) log(X)^2)

    where a2 = alpha^2/alpha_2 = 2 prod(1 + 1/(p-1)^3).
    """
    d = int(d_half)
    if d < 2:
        raise DomainError("sum_C2 needs d_half >= 2")
    X = 2 * d
    c = C_array(X)
    c2 = c * c
    exact = offdiag_sum_C2(d)
    a2 = alpha_sq_over_alpha2(cutoff)
    logX = math.log(X)
    single = math.fsum(c2[1:])
    weighted = math.fsum(np.arange(X + 1) * c2)
    return {
        "d_half": d,
        "X": X,
        "exact": exact,
        "single": single,
        "weighted": weighted,
        "ratio_single": single / (a2 * X - 0.5 * logX**2),
        "ratio_weighted": weighted / (0.5 * a2 * X**2),
        "ratio_double": exact / (0.5 * a2 * X**2 - 0.5 * X * logX**2),
    }


def mean_d_beta(D: int) -> float:
    """Average of d * beta(d) over 1 <= d <= D; tends to 1/alpha."""
    b = beta_array(D)
    return float(np.dot(np.arange(D + 1), b) / D)


def beta_over_d(D: int) -> float:
    """Partial sum of beta(d)/d over d <= D; tends to 2/alpha."""
    b = beta_array(D)
    return math.fsum(b[1:] / np.arange(1, D + 1))


def beta_lcm_sum(D: int) -> float:
    """sum of beta(d1) beta(d2) / lcm(d1, d2) over d1, d2 <= D; tends to 2/alpha_2."""
    b = beta_array(D)
    idx = np.flatnonzero(b).astype(np.int64)
    w = b[idx] / idx
    rows = []
    for i, di in enumerate(idx):
        # 1/lcm = gcd / (d1 d2); int64 is ample since gcd <= D
        rows.append(b[di] / di * float(np.dot(w, np.gcd(di, idx))))
    return math.fsum(rows)


class HLConstants:
    """Write-once caches for C(k), beta(d) and Euler-product constants."""

    def __init__(self, cutoff: int = DEFAULT_CUTOFF):
        self.cutoff = int(cutoff)
        self._lock = threading.Lock()
        self._C: dict[int, float] = {}
        self._beta: dict[int, Fraction] = {}
        self._products: dict[tuple, tuple[float, float]] = {}

    @property
    def twin_constant(self) -> float:
        return TWIN_CONSTANT

    alpha = twin_constant

    def C(self, k: int) -> float:
        if k not in self._C:
            val = C(k)
            with self._lock:
                self._C.setdefault(k, val)
        return self._C[k]

    def beta(self, d: int) -> Fraction:
        if d not in self._beta:
            val = beta(d)
            with self._lock:
                self._beta.setdefault(d, val)
        return self._beta[d]

    def product(self, term: str, s: int | None = None) -> tuple[float, float]:
        key = (term, s)
        if key not in self._products:
            val = euler_product(term, self.cutoff, s)
            with self._lock:
                self._products.setdefault(key, val)
        return self._products[key]

    def alpha2_ratio(self, s: int = 2) -> float:
        """prod(1 + 1/(p-1)^(2s-1)); s = 2 gives alpha^2 / (2 alpha_2)."""
        return self.product("zeta", s)[0]

    def report(self) -> list[dict]:
        entries = []
        for name, term, s in [
            ("twin_constant", "twin", None),
            ("alpha_sq_over_alpha2", "alpha2", None),
            ("purity_constant", "purity", None),
        ] + [(f"zeta_product_s{s}", "zeta", s) for s in (2, 3, 4, 5)]:
            value, bound = self.product(term, s)
            entries.append({"name": name, "value": value, "cutoff": self.cutoff, "tail_bound": bound})
        return entries

    def report_json(self) -> str:
        return json.dumps(self.report(), indent=2)
