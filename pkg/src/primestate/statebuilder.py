"""Amplitude vectors for arithmetic series and their reduced density matrices.

Basis states are the integers ``0 .. 2**n - 1``.  A state is stored sparsely
as the indices with nonzero amplitude, their integer coefficients and a
normalisation constant, so that ``amplitude = coeff / sqrt(norm)``.

A bipartition splits the bits of each index into a set A and its complement
B.  With ``Psi[b, a]`` the amplitude of the index whose A-bits spell ``a`` and
B-bits spell ``b``, the reduced density matrix is ``rho_A = Psi^T Psi``.
"""

from __future__ import annotations

import csv
import json
import math
import os
import struct
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.linalg import toeplitz

from .counting import ell, ell_limit
from .errors import DivergenceError, DomainError, RangeError
from .hardylittlewood import C_array
from .primes import sieve

DENSE_M_CEILING = 13


class Series(str, Enum):
    PRIME = "prime"
    TWIN = "twin"
    TRIPLET = "triplet"
    MOEBIUS = "moebius"
    HADAMARD = "hadamard"


class Flavor(str, Enum):
    FULL = "full"
    TRUNCATED = "truncated"
    ODD = "odd"
    MODEL = "model"
    TOY = "toy"


_FLAVOR_TAG = {f: i for i, f in enumerate(Flavor)}


class EllMode(str, Enum):
    EXACT = "exact_li_ratio"
    LIMIT = "limit_one_over_nlog2"


def ell_value(n: int, mode: EllMode | str = EllMode.EXACT) -> float:
    """Pair-correlation strength for N = 2**n under the chosen mode."""
    mode = _ell_mode(mode)
    if mode is EllMode.LIMIT:
        return ell_limit(n)
    return ell(2.0**n)


def _ell_mode(mode) -> EllMode:
    aliases = {"exact": EllMode.EXACT, "limit": EllMode.LIMIT}
    return aliases.get(mode, None) or EllMode(mode)


# -- states -------------------------------------------------------------------


@dataclass(frozen=True)
class AmplitudeVector:
    n: int
    series: Series
    support: np.ndarray  # sorted basis indices with nonzero amplitude
    coeffs: np.ndarray  # integer coefficient per support index
    norm_constant: int  # sum of coeffs**2

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def values(self) -> np.ndarray:
        """Nonzero amplitudes aligned with ``support``."""
        return self.coeffs / math.sqrt(self.norm_constant)

    @property
    def amplitudes(self) -> np.ndarray:
        """Dense amplitude vector of length 2**n."""
        out = np.zeros(self.dim)
        out[self.support] = self.values
        return out

    def __len__(self) -> int:
        return len(self.support)


def build_state(n: int, series: Series | str = Series.PRIME) -> AmplitudeVector:
    """Normalised superposition over the members of an arithmetic series.

    Members are indices below 2**n: primes, lower twins p (p + 2 prime),
    triplet starts p (p + 2 and p + 6 prime), every index weighted by its
    Moebius value, or all indices (Hadamard state).  Tuple partners may lie
    above 2**n.
    """
    series = Series(series)
    if n < 1:
        raise DomainError("need at least one qubit")
    N = 1 << n
    if series is Series.HADAMARD:
        support = np.arange(N, dtype=np.int64)
        coeffs = np.ones(N, dtype=np.int64)
    else:
        table = sieve(max(n, 2))
        if series is Series.MOEBIUS:
            mu = table.mu[:N].astype(np.int64)
            support = np.flatnonzero(mu).astype(np.int64)
            coeffs = mu[support]
        else:
            shift = {Series.PRIME: 0, Series.TWIN: 2, Series.TRIPLET: 6}[series]
            fl = table.flags(0, N + shift)
            mem = fl[:N].copy()
            if series is Series.TWIN:
                mem &= fl[2 : N + 2]
            elif series is Series.TRIPLET:
                mem &= fl[2 : N + 2] & fl[6 : N + 6]
            support = np.flatnonzero(mem).astype(np.int64)
            coeffs = np.ones(len(support), dtype=np.int64)
    if len(support) == 0:
        raise DomainError(f"no {series.value} members below 2^{n}")
    norm = int(np.dot(coeffs, coeffs))
    return AmplitudeVector(n, series, support, coeffs, norm)


@dataclass(frozen=True)
class PartitionMask:
    n: int
    A_bits: frozenset

    def __init__(self, n: int, A_bits):
        bits = frozenset(int(b) for b in A_bits)
        if not bits or len(bits) >= n:
            raise DomainError("subsystem A must be non-empty and proper")
        if min(bits) < 0 or max(bits) >= n:
            raise DomainError(f"bit positions must lie in [0, {n})")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "A_bits", bits)

    @classmethod
    def natural(cls, n: int, m: int) -> "PartitionMask":
        return cls(n, range(m))

    @classmethod
    def from_int(cls, n: int, bits: int) -> "PartitionMask":
        return cls(n, [j for j in range(n) if bits >> j & 1])

    @property
    def B_bits(self) -> frozenset:
        return frozenset(range(self.n)) - self.A_bits

    def complement(self) -> "PartitionMask":
        return PartitionMask(self.n, self.B_bits)

    def as_int(self) -> int:
        return sum(1 << b for b in self.A_bits)

    @property
    def size(self) -> int:
        return len(self.A_bits)


def _gather_bits(x: np.ndarray, bits) -> np.ndarray:
    out = np.zeros_like(x)
    for j, b in enumerate(sorted(bits)):
        out |= ((x >> b) & 1) << j
    return out


def schmidt_matrix(state: AmplitudeVector, mask: PartitionMask, integer: bool = False) -> np.ndarray:
    """Psi with rows labelled by the B bits and columns by the A bits.

    With ``integer=True`` the unnormalised coefficients are returned.
    """
    if mask.n != state.n:
        raise DomainError(f"mask is for {mask.n} qubits, state has {state.n}")
    rows = _gather_bits(state.support, mask.B_bits)
    cols = _gather_bits(state.support, mask.A_bits)
    psi = np.zeros((1 << (mask.n - mask.size), 1 << mask.size))
    psi[rows, cols] = state.coeffs if integer else state.values
    return psi


# -- density matrices ---------------------------------------------------------------


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray
    labels: tuple
    flavor: Flavor
    counts: np.ndarray | None = None  # integer numerators when exact
    denominator: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.float64)
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        object.__setattr__(self, "flavor", Flavor(self.flavor))
        if self.counts is not None:
            c = np.array(self.counts, dtype=np.int64)
            c.flags.writeable = False
            object.__setattr__(self, "counts", c)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return math.fsum(np.diag(self.entries))

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.entries, self.entries.T))

    def check(self, psd: bool = True) -> None:
        """Raise ``DomainError`` unless symmetric, unit trace and PSD."""
        if not self.is_symmetric():
            raise DomainError("density matrix is not symmetric")
        if abs(self.trace() - 1.0) > 1e-12:
            raise DomainError(f"trace {self.trace()!r} differs from 1")
        if psd:
            low = np.linalg.eigvalsh(self.entries)[0]
            if low < -1e-10 * self.dim:
                raise DomainError(f"negative eigenvalue {low!r}")

    def fraction(self, a: int, b: int) -> Fraction:
        """Exact entry for labels a, b (needs integer counts)."""
        if self.counts is None:
            raise DomainError("matrix carries no exact counts")
        i, j = self.labels.index(a), self.labels.index(b)
        return Fraction(int(self.counts[i, j]), self.denominator)

    def reorder(self, labels) -> "DensityMatrix":
        """Same matrix with rows and columns permuted to ``labels``."""
        pos = {lab: i for i, lab in enumerate(self.labels)}
        idx = np.array([pos[int(l)] for l in labels])
        counts = None if self.counts is None else self.counts[np.ix_(idx, idx)]
        return DensityMatrix(self.entries[np.ix_(idx, idx)], labels, self.flavor, counts, self.denominator, dict(self.meta))

    def submatrix(self, labels, flavor=None) -> "DensityMatrix":
        r = self.reorder(labels)
        if flavor is None:
            return r
        return DensityMatrix(r.entries, r.labels, flavor, r.counts, r.denominator, r.meta)

    # dumps

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in self.entries:
                w.writerow([repr(float(v)) for v in row])
        self.write_labels(Path(str(path) + ".labels.json"))

    def write_labels(self, path) -> None:
        Path(path).write_text(json.dumps(list(self.labels)))

    def to_binary(self, path) -> None:
        """Dimension, flavor tag and the lower triangle as float64, little-endian."""
        tri = self.entries[np.tril_indices(self.dim)].astype("<f8")
        tmp = Path(str(path) + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(struct.pack("<QI", self.dim, _FLAVOR_TAG[self.flavor]))
            fh.write(tri.tobytes())
        os.replace(tmp, path)
        self.write_labels(Path(str(path) + ".labels.json"))

    @classmethod
    def from_binary(cls, path) -> "DensityMatrix":
        raw = Path(path).read_bytes()
        dim, tag = struct.unpack_from("<QI", raw)
        tri = np.frombuffer(raw, dtype="<f8", offset=12)
        if len(tri) != dim * (dim + 1) // 2:
            raise ValueError("matrix file has the wrong length")
        e = np.zeros((dim, dim))
        e[np.tril_indices(dim)] = tri
        e = np.tril(e) + np.tril(e, -1).T
        lab_path = Path(str(path) + ".labels.json")
        labels = json.loads(lab_path.read_text()) if lab_path.exists() else list(range(dim))
        return cls(e, labels, list(Flavor)[tag])


def even_odd(m: int) -> list[int]:
    M = 1 << m
    return list(range(0, M, 2)) + list(range(1, M, 2))


def _check_nm(n: int, m: int, allow_large: bool) -> None:
    if not 1 <= m <= n - 1:
        raise DomainError(f"need 1 <= m <= n-1, got n={n}, m={m}")
    if m > DENSE_M_CEILING and not allow_large:
        raise RangeError(f"m={m} exceeds the dense ceiling {DENSE_M_CEILING}; pass allow_large")


def psi_matrix(n: int, m: int, order: str = "natural") -> np.ndarray:
    """0/1 matrix psi[b, a] = 1 iff a + 2**m b is prime, shape (2**(n-m), 2**m).

    ``order="even_odd"`` lists even labels before odd ones on both axes.
    """
    if not 1 <= m <= n - 1:
        raise DomainError(f"need 1 <= m <= n-1, got n={n}, m={m}")
    psi = sieve(n).flags().reshape(1 << (n - m), 1 << m).astype(np.int8)
    if order == "even_odd":
        psi = psi[np.ix_(even_odd(n - m), even_odd(m))]
    elif order != "natural":
        raise DomainError(f"unknown order {order!r}")
    return psi


def _gram(psi: np.ndarray) -> np.ndarray:
    # float matmul is exact for integer sums below 2**53
    f = psi.astype(np.float64)
    return np.rint(f.T @ f).astype(np.int64)


def rho_exact(n: int, m: int, allow_large: bool = False) -> DensityMatrix:
    """Reduced density matrix of the prime state on the low m bits.

    Labels run over even residues then odd residues.
    """
    _check_nm(n, m, allow_large)
    psi = psi_matrix(n, m)
    labels = even_odd(m)
    counts = _gram(psi)[np.ix_(labels, labels)]
    total = int(np.trace(counts))
    return DensityMatrix(counts / total, labels, Flavor.FULL, counts, total, {"n": n, "m": m})


def rho_truncated(n: int, m: int, allow_large: bool = False) -> DensityMatrix:
    """Rows and columns of the full matrix at label 2 and the odd labels."""
    if m < 2:
        raise DomainError("truncated matrix needs m >= 2")
    full = rho_exact(n, m, allow_large)
    labels = [2] + list(range(1, 1 << m, 2))
    return full.submatrix(labels, Flavor.TRUNCATED)


def rho_odd(n: int, m: int, allow_large: bool = False) -> DensityMatrix:
    """Odd-residue block renormalised by pi(N) - 1 (the prime 2 removed)."""
    if m < 2:
        raise DomainError("odd block needs m >= 2")
    _check_nm(n, m, allow_large)
    psi = psi_matrix(n, m)[:, 1::2]
    counts = _gram(psi)
    total = int(np.trace(counts))
    labels = list(range(1, 1 << m, 2))
    return DensityMatrix(counts / total, labels, Flavor.ODD, counts, total, {"n": n, "m": m})


def toeplitz_C(m: int) -> np.ndarray:
    """d x d matrix with entries C(2|i-j|) off the diagonal, d = 2**(m-1)."""
    if m < 2:
        raise DomainError("need m >= 2")
    d = 1 << (m - 1)
    c = C_array(2 * (d - 1) if d > 1 else 2)
    col = np.zeros(d)
    col[1:] = c[2 : 2 * d : 2]
    return toeplitz(col)


def rho_model(
    n: int, m: int, ell_mode: EllMode | str = EllMode.EXACT, allow_large: bool = False, uncorrelated: bool = False
) -> DensityMatrix:
    """(1 + ell_N C_m) / d over the odd residues, d = 2**(m-1).

    ``uncorrelated=True`` sets every C(k) to 1, the no-correlation baseline.
    """
    if m < 2:
        raise DomainError("model matrix needs m >= 2")
    if m > DENSE_M_CEILING and not allow_large:
        raise RangeError(f"m={m} exceeds the dense ceiling {DENSE_M_CEILING}; pass allow_large")
    d = 1 << (m - 1)
    lam = ell_value(n, ell_mode)
    e = (np.ones((d, d)) if uncorrelated else toeplitz_C(m)) * (lam / d)
    e[np.diag_indices(d)] = 1.0 / d
    labels = list(range(1, 1 << m, 2))
    return DensityMatrix(e, labels, Flavor.MODEL, meta={"n": n, "m": m, "ell": lam, "ell_mode": _ell_mode(ell_mode).value, "uncorrelated": uncorrelated})


def reduce_mask(state: AmplitudeVector, mask: PartitionMask) -> DensityMatrix:
    """Partial trace over the bits outside ``mask``; labels in natural order."""
    psi = schmidt_matrix(state, mask, integer=True)
    counts = _gram(psi)
    labels = list(range(1 << mask.size))
    return DensityMatrix(
        counts / state.norm_constant,
        labels,
        Flavor.FULL,
        counts,
        state.norm_constant,
        {"n": state.n, "series": state.series.value, "mask": sorted(mask.A_bits)},
    )


def toy_rho(d: int, c: float) -> DensityMatrix:
    """(1 + c P) / d with P the all-ones off-diagonal matrix."""
    if d < 2:
        raise DomainError("toy matrix needs d >= 2")
    if not 0.0 <= c <= 1.0:
        raise DomainError(f"coupling c={c} outside [0, 1]")
    e = np.full((d, d), c / d)
    e[np.diag_indices(d)] = 1.0 / d
    return DensityMatrix(e, range(d), Flavor.TOY, meta={"c": c})


def toy_eigenvalues(d: int, c: float) -> np.ndarray:
    """Closed-form spectrum of :func:`toy_rho`, descending."""
    out = np.full(d, (1.0 - c) / d)
    out[0] = (1.0 + c * (d - 1)) / d
    return out


# -- Moebius and Dirichlet ---------------------------------------------------------


def mertens_overlap(n: int) -> float:
    """Inner product of the Hadamard and Moebius states on n qubits."""
    mu = build_state(n, Series.MOEBIUS)
    return math.fsum(mu.values) / 2 ** (n / 2)


def recover_mertens(n: int) -> int:
    """Sum of mu(a) over 0 <= a < 2**n, read back from the overlap."""
    mu = build_state(n, Series.MOEBIUS)
    return int(round(mertens_overlap(n) * 2 ** (n / 2) * math.sqrt(mu.norm_constant)))


def dirichlet_norm(n: int, sigma: float) -> float:
    """Sum of a**(-2 sigma) over 1 <= a < 2**n."""
    if sigma <= 0.5:
        raise DivergenceError(f"normalisation diverges for sigma={sigma} <= 1/2")
    if n < 1:
        raise DomainError("need n >= 1")
    s = 2.0 * sigma
    if n <= 24:
        a = np.arange(1, 1 << n, dtype=np.float64)
        return math.fsum(a ** (-s))
    from scipy.special import zeta

    return float(zeta(s) - zeta(s, float(1 << n)))
