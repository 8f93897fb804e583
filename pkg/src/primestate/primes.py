"""Prime tables, Moebius values, Mertens sums and Miller-Rabin.

A :class:`PrimeTable` for ``n`` qubits holds one bit per odd integer below
``2**n`` (2 is special-cased), packed little-endian.  Tables are immutable
once built; Moebius values are filled in lazily on first use.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import struct
import threading
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DomainError, RangeError

log = logging.getLogger(__name__)

MIN_QUBITS = 2
MAX_QUBITS = 30

# Bases 2..17 classify every integer below this bound correctly.
MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17)
MR_EXACT_BELOW = 341_550_071_728_321

CACHE_ENV = "PRIMESTATE_CACHE_DIR"
CACHE_MAGIC = b"PST1"
_HEADER = struct.Struct("<4sIQ")

_SEGMENT = 1 << 20  # odd integers per sieve segment, multiple of 8
_BLOCK = 64  # bytes per prefix-count block
_POPCOUNT = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(1).astype(np.int64)

# Extra integers past the table limit that may be resolved with Miller-Rabin.
_HEADROOM = 1 << 12


class Verdict(str, Enum):
    COMPOSITE = "composite"
    PROBABLE_PRIME = "probable_prime"


def small_primes(limit: int) -> np.ndarray:
    """All primes <= limit by a plain sieve (for base primes only)."""
    if limit < 2:
        return np.array([], dtype=np.int64)
    s = np.ones(limit + 1, dtype=bool)
    s[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if s[p]:
            s[p * p :: p] = False
    return np.flatnonzero(s).astype(np.int64)


def _odd_bitmap(n_odds: int) -> np.ndarray:
    # bit i <-> odd integer 2i+1, i < n_odds
    top = 2 * n_odds
    base = small_primes(math.isqrt(top))[1:]
    out = np.zeros((n_odds + 7) // 8, dtype=np.uint8)
    for lo in range(0, n_odds, _SEGMENT):
        hi = min(lo + _SEGMENT, n_odds)
        seg = np.ones(hi - lo, dtype=bool)
        vmax = 2 * hi - 1
        for p in base:
            p = int(p)
            if p * p > vmax:
                break
            i0 = (p * p - 1) // 2
            if i0 < lo:
                i0 = lo + (((p - 1) // 2 - lo) % p)
            seg[i0 - lo :: p] = False
        if lo == 0:
            seg[0] = False
        out[lo // 8 : (hi + 7) // 8] = np.packbits(seg, bitorder="little")
    return out


def _moebius(upto: int) -> np.ndarray:
    """mu(v) for 0 <= v <= upto (mu(0) stored as 0)."""
    mu = np.empty(upto + 1, dtype=np.int8)
    base = small_primes(max(math.isqrt(upto), 2))
    for lo in range(0, upto + 1, _SEGMENT):
        hi = min(lo + _SEGMENT, upto + 1)
        m = np.ones(hi - lo, dtype=np.int8)
        # product of distinct small prime divisors; divides v, so fits int64
        rad = np.ones(hi - lo, dtype=np.int64)
        for p in base:
            p = int(p)
            start = (-lo) % p
            m[start::p] *= -1
            rad[start::p] *= p
            m[(-lo) % (p * p) :: p * p] = 0
        vals = np.arange(lo, hi, dtype=np.int64)
        # a square-free v not fully factored by small primes has one large prime
        m[rad != vals] *= -1
        if lo == 0:
            m[0] = 0
        mu[lo:hi] = m
    return mu


def _checksum(bits: np.ndarray) -> int:
    digest = hashlib.blake2b(memoryview(bits), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class PrimeTable:
    """Exact primality flags for every integer in ``[0, 2**n)``."""

    def __init__(self, n: int, bits: np.ndarray):
        self.n = n
        self.limit = 1 << n
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        bits.flags.writeable = False
        self.bits = bits
        self._lock = threading.Lock()
        self._block_prefix: np.ndarray | None = None
        self._mu: np.ndarray | None = None

    def __repr__(self) -> str:
        return f"PrimeTable(n={self.n}, limit={self.limit})"

    @classmethod
    def build(cls, n: int) -> "PrimeTable":
        _check_qubits(n)
        return cls(n, _odd_bitmap(1 << (n - 1)))

    # -- primality ---------------------------------------------------------

    def is_prime(self, x: int) -> bool:
        x = int(x)
        if x < self.limit:
            if x < 3:
                return x == 2
            if not x & 1:
                return False
            i = (x - 1) >> 1
            return bool((self.bits[i >> 3] >> (i & 7)) & 1)
        return is_prime(x)

    def flags(self, lo: int = 0, hi: int | None = None) -> np.ndarray:
        """Boolean primality array for the integers ``lo, ..., hi-1``.

        Up to a few thousand integers past the table limit are resolved with
        the deterministic Miller-Rabin test, which serves tuple headroom.
        """
        hi = self.limit if hi is None else int(hi)
        lo = max(int(lo), 0)
        if hi <= lo:
            return np.zeros(0, dtype=bool)
        if hi > self.limit + _HEADROOM:
            raise RangeError(f"range end {hi} exceeds table limit 2^{self.n}")
        out = np.zeros(hi - lo, dtype=bool)
        top = min(hi, self.limit)
        if top > lo:
            first_odd = lo | 1
            if first_odd < top:
                i_lo = (first_odd - 1) >> 1
                i_hi = top // 2  # odd integers below top
                byte_lo, byte_hi = i_lo >> 3, (i_hi + 7) >> 3
                unpacked = np.unpackbits(self.bits[byte_lo:byte_hi], bitorder="little")
                odd_flags = unpacked[i_lo - (byte_lo << 3) : i_hi - (byte_lo << 3)]
                out[first_odd - lo : top - lo : 2] = odd_flags.astype(bool)
            if lo <= 2 < top:
                out[2 - lo] = True
        for x in range(max(lo, self.limit), hi):
            out[x - lo] = is_prime(x)
        return out

    def primes(self, lo: int = 0, hi: int | None = None) -> np.ndarray:
        """Sorted primes in ``[lo, hi)`` as int64."""
        hi = self.limit if hi is None else hi
        return np.flatnonzero(self.flags(lo, hi)).astype(np.int64) + max(int(lo), 0)

    # -- counting ----------------------------------------------------------

    def _prefix(self) -> np.ndarray:
        if self._block_prefix is None:
            with self._lock:
                if self._block_prefix is None:
                    pop = _POPCOUNT[self.bits]
                    nblocks = (len(pop) + _BLOCK - 1) // _BLOCK
                    padded = np.zeros(nblocks * _BLOCK, dtype=np.int64)
                    padded[: len(pop)] = pop
                    sums = padded.reshape(nblocks, _BLOCK).sum(1)
                    self._block_prefix = np.concatenate([[0], np.cumsum(sums)])
        return self._block_prefix

    def count(self, x: int) -> int:
        """Number of primes ``<= x``."""
        x = int(x)
        if x < 2:
            return 0
        if x >= self.limit:
            raise RangeError(f"x={x} beyond sieve limit 2^{self.n}")
        n_odd = (x + 1) >> 1  # odd integers 1, 3, ..., <= x
        full, rem = divmod(n_odd, 8)
        block = full // _BLOCK
        total = int(self._prefix()[block])
        total += int(_POPCOUNT[self.bits[block * _BLOCK : full]].sum())
        if rem:
            total += int(_POPCOUNT[self.bits[full] & ((1 << rem) - 1)])
        return total + 1  # the prime 2

    # -- Moebius -----------------------------------------------------------

    @property
    def mu(self) -> np.ndarray:
        """Moebius values on ``0..limit`` inclusive; ``mu[0]`` is 0."""
        if self._mu is None:
            with self._lock:
                if self._mu is None:
                    mu = _moebius(self.limit)
                    mu.flags.writeable = False
                    self._mu = mu
        return self._mu

    def mertens(self, x: int) -> int:
        x = int(x)
        if x < 1:
            raise DomainError("Mertens function needs x >= 1")
        if x > self.limit:
            raise RangeError(f"x={x} beyond table limit 2^{self.n}")
        return int(self.mu[1 : x + 1].sum(dtype=np.int64))

    # -- persistence -------------------------------------------------------

    def save(self, path: str | os.PathLike) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(_HEADER.pack(CACHE_MAGIC, self.n, _checksum(self.bits)))
            fh.write(self.bits.tobytes())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike, n: int | None = None) -> "PrimeTable":
        """Read a cache file; raises ``ValueError`` on any inconsistency."""
        raw = Path(path).read_bytes()
        if len(raw) < _HEADER.size:
            raise ValueError("truncated header")
        magic, file_n, checksum = _HEADER.unpack_from(raw)
        if magic != CACHE_MAGIC:
            raise ValueError("bad magic")
        if n is not None and file_n != n:
            raise ValueError(f"cache holds n={file_n}, wanted {n}")
        _check_qubits(file_n)
        expected = ((1 << (file_n - 1)) + 7) // 8
        bits = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size)
        if len(bits) != expected:
            raise ValueError("bitmap length mismatch")
        if _checksum(bits) != checksum:
            raise ValueError("checksum mismatch")
        return cls(file_n, bits.copy())


def _check_qubits(n: int) -> None:
    if not MIN_QUBITS <= n <= MAX_QUBITS:
        raise RangeError(f"qubit count n={n} outside [{MIN_QUBITS}, {MAX_QUBITS}]")


_tables: dict[int, PrimeTable] = {}
_tables_lock = threading.Lock()


def cache_path(n: int, cache_dir: str | os.PathLike) -> Path:
    return Path(cache_dir) / f"sieve_{n}.bin"


def sieve(n: int, cache_dir: str | os.PathLike | None = None) -> PrimeTable:
    """Prime table for ``[0, 2**n)``, memoised in memory and on disk.

    The disk cache lives in ``cache_dir`` or ``$PRIMESTATE_CACHE_DIR``; with
    neither set only the in-memory cache is used.  Unreadable or corrupt cache
    files are rebuilt.
    """
    _check_qubits(n)
    cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    with _tables_lock:
        table = _tables.get(n)
    if table is not None:
        if cache_dir and not cache_path(n, cache_dir).exists():
            try:
                table.save(cache_path(n, cache_dir))
            except OSError as exc:
                log.warning("could not write sieve cache: %s", exc)
        return table
    if cache_dir:
        path = cache_path(n, cache_dir)
        if path.exists():
            try:
                table = PrimeTable.load(path, n)
            except (OSError, ValueError) as exc:
                log.debug("rebuilding %s: %s", path, exc)
        if table is None:
            table = PrimeTable.build(n)
            try:
                table.save(path)
            except OSError as exc:
                log.warning("could not write sieve cache %s: %s", path, exc)
    else:
        table = PrimeTable.build(n)
    with _tables_lock:
        return _tables.setdefault(n, table)


def table_for(x: int) -> PrimeTable:
    """Smallest shared table whose range contains ``x`` (reuses larger ones)."""
    x = int(x)
    with _tables_lock:
        for n in sorted(_tables):
            if _tables[n].limit > x:
                return _tables[n]
    n = max(MIN_QUBITS, x.bit_length() if x >= 1 else 1)
    if (1 << n) <= x:
        n += 1
    return sieve(n)


def clear_memory_cache() -> None:
    with _tables_lock:
        _tables.clear()


# -- scalar arithmetic -------------------------------------------------------


def miller_rabin(x: int, witnesses=MR_WITNESSES) -> Verdict:
    """Strong-pseudoprime test of odd ``x > 2`` against each witness.

    ``composite`` is returned only when some witness certifies it.  With the
    default witnesses the verdict is exact for every ``x`` below
    ``MR_EXACT_BELOW``.
    """
    x = int(x)
    if x <= 2 or not x & 1:
        raise DomainError(f"Miller-Rabin needs an odd integer > 2, got {x}")
    if witnesses is MR_WITNESSES:
        # bases at or above x are redundant for tiny x
        witnesses = [a for a in MR_WITNESSES if a < x]
    d, s = x - 1, 0
    while not d & 1:
        d >>= 1
        s += 1
    for a in witnesses:
        a = int(a)
        if not 1 <= a <= x:
            raise DomainError(f"witness {a} outside [1, {x}]")
        a %= x
        if a in (0, 1, x - 1):  # cannot certify anything
            continue
        y = pow(a, d, x)
        if y == 1 or y == x - 1:
            continue
        for _ in range(s - 1):
            y = y * y % x
            if y == x - 1:
                break
        else:
            return Verdict.COMPOSITE
    return Verdict.PROBABLE_PRIME


def is_prime(x: int) -> bool:
    """Exact primality for ``x < MR_EXACT_BELOW``."""
    x = int(x)
    if x < 2:
        return False
    if x < 4:
        return True
    if not x & 1:
        return False
    if x >= MR_EXACT_BELOW:
        raise RangeError(f"{x} is beyond the deterministic witness range")
    for p in MR_WITNESSES:
        if x == p:
            return True
        if x % p == 0:
            return False
    return miller_rabin(x) is Verdict.PROBABLE_PRIME


def factorize(a: int) -> dict[int, int]:
    """Prime factorisation by trial division (small arguments only)."""
    a = int(a)
    if a < 1:
        raise DomainError("factorize needs a >= 1")
    out: dict[int, int] = {}
    p = 2
    while p * p <= a:
        while a % p == 0:
            out[p] = out.get(p, 0) + 1
            a //= p
        p += 1 if p == 2 else 2
    if a > 1:
        out[a] = out.get(a, 0) + 1
    return out


def totient(a: int) -> int:
    a = int(a)
    if a < 1:
        raise DomainError("totient needs a >= 1")
    result = a
    for p in factorize(a):
        result -= result // p
    return result


def mobius(x: int) -> int:
    f = factorize(x)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def mertens(x: int, table: PrimeTable | None = None) -> int:
    """M(x) = sum of mu(a) for 1 <= a <= x, from a sieve table."""
    x = int(x)
    if x < 1:
        raise DomainError("Mertens function needs x >= 1")
    if table is None:
        table = table_for(x - 1)
    return table.mertens(x)
