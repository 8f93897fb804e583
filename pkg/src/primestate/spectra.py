"""Spectra and entanglement functionals.

Entropies are measured in bits.  Eigenvalues below ``CLAMP`` are treated as
zero when summing ``-lambda log lambda``; anything below ``-NEG_TOL`` means
the input was not a density matrix.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np
from scipy import integrate, stats

from . import counting
from .errors import DomainError
from .hardylittlewood import euler_product, offdiag_sum_C2, zeta_estimate
from .primes import sieve
from .statebuilder import (
    AmplitudeVector,
    DensityMatrix,
    EllMode,
    Flavor,
    PartitionMask,
    Series,
    build_state,
    ell_value,
    rho_model,
    rho_odd,
    schmidt_matrix,
    toeplitz_C,
)

CLAMP = 1e-14
NEG_TOL = 1e-10
KAPPA0 = math.sqrt(3.0 / 8.0)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order, optionally with multiplicities."""

    eigenvalues: np.ndarray
    source_dim: int
    multiplicities: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=np.float64)
        order = np.argsort(-ev, kind="stable")
        object.__setattr__(self, "eigenvalues", ev[order])
        if self.multiplicities is not None:
            mult = np.asarray(self.multiplicities, dtype=np.int64)[order]
            object.__setattr__(self, "multiplicities", mult)

    @property
    def weights(self) -> np.ndarray:
        if self.multiplicities is None:
            return np.ones(len(self.eigenvalues), dtype=np.int64)
        return self.multiplicities

    def total(self) -> float:
        return math.fsum(self.eigenvalues * self.weights)

    def expanded(self) -> np.ndarray:
        """Every eigenvalue repeated by its multiplicity, descending."""
        if self.multiplicities is None:
            return self.eigenvalues
        return np.repeat(self.eigenvalues, self.multiplicities)

    def clamped(self) -> np.ndarray:
        """Eigenvalues with round-off negatives and sub-threshold values set to 0."""
        ev = self.eigenvalues
        if len(ev) and ev[-1] < -NEG_TOL:
            raise DomainError(f"eigenvalue {ev[-1]!r} is too negative for a density matrix")
        return np.where(ev < CLAMP, 0.0, ev)

    def __len__(self) -> int:
        return int(self.weights.sum())


def _as_array(matrix) -> np.ndarray:
    return matrix.entries if isinstance(matrix, DensityMatrix) else np.asarray(matrix, dtype=np.float64)


def eig_sym(matrix, check: bool = False) -> Spectrum:
    """All eigenvalues of a real symmetric matrix, descending.

    With ``check=True`` eigenvectors are computed too and the reconstruction
    error is verified against ``1e-10 * dim * max|entry|``.
    """
    a = _as_array(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("matrix must be square")
    scale = float(np.abs(a).max()) if a.size else 0.0
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * scale):
        raise DomainError("matrix is not symmetric")
    dim = a.shape[0]
    if check:
        w, v = np.linalg.eigh(a)
        err = float(np.abs((v * w) @ v.T - a).max())
        if err > 1e-10 * dim * max(scale, 1e-300):
            raise DomainError(f"eigendecomposition backward error {err:.3e}")
    else:
        w = np.linalg.eigvalsh(a)
    return Spectrum(w[::-1], dim)


# -- entropies --------------------------------------------------------------------


def vn_entropy(spec: Spectrum) -> float:
    """-sum lambda log2 lambda (bits)."""
    lam = spec.clamped()
    nz = lam > 0
    return max(0.0, -math.fsum(spec.weights[nz] * lam[nz] * np.log2(lam[nz])))


def renyi(spec: Spectrum, order: float) -> float:
    """Renyi entropy of the given order in bits; order 1 is :func:`vn_entropy`."""
    order = float(order)
    if order == 1.0:
        raise DomainError("Renyi order 1 is the von Neumann entropy; use vn_entropy")
    if not order > 0:
        raise DomainError("Renyi order must be positive")
    lam = spec.clamped()
    nz = lam > 0
    if math.isinf(order):
        return -math.log2(lam[nz].max())
    s = math.fsum(spec.weights[nz] * lam[nz] ** order)
    return max(0.0, math.log2(s) / (1.0 - order))


def purity(rho, check: bool = False) -> float:
    """Tr rho^2 from the entries.

    ``check=True`` compares with the closed forms: exact counts for the prime
    state matrices, the C^2 sum for the model matrix.
    """
    a = _as_array(rho)
    p = math.fsum((a * a).ravel())
    if check and isinstance(rho, DensityMatrix):
        other = None
        if rho.flavor in (Flavor.FULL, Flavor.TRUNCATED) and rho.counts is not None:
            c = rho.counts.astype(object)
            other = float(sum(int(x) for x in (c * c).ravel())) / rho.denominator**2
        elif rho.flavor is Flavor.MODEL and not rho.meta.get("uncorrelated"):
            other = model_purity(rho.meta["n"], rho.meta["m"], ell=rho.meta["ell"])
        if other is not None and abs(other - p) > 1e-12:
            raise DomainError(f"purity {p!r} disagrees with closed form {other!r}")
    return p


def purity_from_counts(n: int, m: int) -> float:
    """Tr rho_A^2 for the prime state from residue-class counting functions."""
    if not 2 <= m <= n - 1:
        raise DomainError("need 2 <= m <= n-1")
    N, M = 1 << n, 1 << m
    table = sieve(n)
    x = N - 1
    pN = counting.pi(x, table)
    odd = range(1, M, 2)
    diag = sum(counting.pi_ab(M, a, x, table) ** 2 for a in odd)
    off = sum(2 * counting.pi_abb(M, a, b, x, table) ** 2 for a, b in combinations(odd, 2))
    num = 2 * counting.pi(M, table) - 1 + diag + off
    return num / pN**2


def model_purity(n: int, m: int, ell_mode: EllMode | str = EllMode.EXACT, ell: float | None = None) -> float:
    """Closed-form Tr of the squared model matrix: (d + ell^2 sum C^2) / d^2."""
    if m < 2:
        raise DomainError("need m >= 2")
    d = 1 << (m - 1)
    lam = ell_value(n, ell_mode) if ell is None else ell
    return (d + lam * lam * offdiag_sum_C2(d)) / d**2


def ent_spectrum(spec: Spectrum, group_tol: float = 1e-6) -> list[tuple[float, int]]:
    """Entanglement energies -log2 lambda, ascending, grouped within ``group_tol``.

    Consecutive energies closer than the tolerance share a group; each group
    is reported as (lowest energy, total multiplicity).
    """
    lam = spec.clamped()
    w = spec.weights
    keep = lam > 0
    eps = -np.log2(lam[keep])
    mult = w[keep]
    order = np.argsort(eps, kind="stable")
    eps, mult = eps[order], mult[order]
    groups: list[list] = []
    for e, k in zip(eps, mult):
        if groups and e - groups[-1][2] <= group_tol:
            groups[-1][1] += int(k)
            groups[-1][2] = e
        else:
            groups.append([float(e), int(k), e])
    return [(g[0], g[1]) for g in groups]


# -- state entropies -------------------------------------------------------------------


def reduced_spectrum(state: AmplitudeVector, mask: PartitionMask) -> Spectrum:
    """Nonzero spectrum of rho_A via the smaller Gram matrix of Psi."""
    psi = schmidt_matrix(state, mask)
    psi = psi[np.any(psi != 0, axis=1)][:, np.any(psi != 0, axis=0)]
    g = psi.T @ psi if psi.shape[1] <= psi.shape[0] else psi @ psi.T
    spec = eig_sym(g)
    return Spectrum(spec.eigenvalues, 1 << mask.size, meta={"mask": sorted(mask.A_bits)})


def state_entropy(state: AmplitudeVector, mask: PartitionMask | None = None) -> float:
    mask = mask or PartitionMask.natural(state.n, state.n // 2)
    return vn_entropy(reduced_spectrum(state, mask))


def natural_entropy(n: int, series: Series | str = Series.PRIME, m: int | None = None) -> float:
    """Entropy of the low-m-bit block (m = n // 2 by default)."""
    state = build_state(n, series)
    return state_entropy(state, PartitionMask.natural(n, n // 2 if m is None else m))


# -- spectrum model -----------------------------------------------------------------


def _model_levels(m: int, lam: float):
    d_inv = 2.0 ** (1 - m)
    lam0 = d_inv * (1.0 + lam * 2.0**m)

    def total(k: int) -> float:
        # lambda_0 + sum_i 2i lambda_i, with sum 2i = k(k+1) and sum 1/(2i) = H_k / 2
        h = float(np.sum(1.0 / np.arange(1, k + 1))) if k else 0.0
        return lam0 + d_inv * k * (k + 1) + lam * h

    return lam0, total


def model_k(m: int, ell_mode: EllMode | str = EllMode.LIMIT) -> tuple[int, float]:
    """Largest k with lambda_0 + sum_{i<=k} 2i lambda_i <= 1, and the leftover weight."""
    if m < 3:
        raise DomainError("model spectrum needs m >= 3")
    lam = ell_value(2 * m, ell_mode)
    lam0, total = _model_levels(m, lam)
    if lam0 > 1.0:
        return 0, 1.0 - lam0
    lo, hi = 0, 1
    while total(hi) <= 1.0:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if total(mid) <= 1.0:
            lo = mid
        else:
            hi = mid
    return lo, 1.0 - total(lo)


def model_spectrum(m: int, ell_mode: EllMode | str = EllMode.LIMIT) -> Spectrum:
    """Leading eigenvalues of the model matrix for n = 2m.

    lambda_0 = 2^(1-m)(1 + ell 2^m) once, then lambda_i = 2^(1-m)(1 + ell 2^m/(2i)^2)
    with multiplicity 2i for i = 1..k_m.  ``meta`` carries k_m and the weight
    left over after normalisation.
    """
    k, residual = model_k(m, ell_mode)
    lam = ell_value(2 * m, ell_mode)
    i = np.arange(1, k + 1)
    d_inv = 2.0 ** (1 - m)
    values = np.concatenate([[d_inv * (1 + lam * 2.0**m)], d_inv * (1 + lam * 2.0**m / (2.0 * i) ** 2)])
    mult = np.concatenate([[1], 2 * i])
    return Spectrum(values, 1 << (m - 1), mult, {"k_m": k, "residual": residual, "ell": lam})


def analytic_entropy(m: int, ell_mode: EllMode | str = EllMode.LIMIT) -> float:
    """Model entropy with the level sum replaced by an integral up to k_m (bits)."""
    k, _ = model_k(m, ell_mode)
    lam = ell_value(2 * m, ell_mode)
    lam0 = 2.0 ** (1 - m) * (1 + lam * 2.0**m)
    a = lam * 2.0 ** (m - 2)

    def f(x):
        g = 1.0 + a / (x * x)
        return x * 2.0 ** (2 - m) * g * (1 - m + math.log2(g))

    val, _ = integrate.quad(f, 1.0, max(k, 1), limit=400, epsrel=1e-12)
    return -lam0 * math.log2(lam0) - val


def analytic_entropy_slope(ms, log_correction: bool = True) -> dict:
    """Slope of the analytic entropy against m.

    The leading large-m form is ``s m + log2(m)/4 + const``; with
    ``log_correction`` the known log term is removed before the linear fit.
    """
    ms = np.asarray(list(ms), dtype=float)
    S = np.array([analytic_entropy(int(m)) for m in ms])
    plain = stats.linregress(ms, S)
    corr = stats.linregress(ms, S - 0.25 * np.log2(ms))
    fit = corr if log_correction else plain
    return {"slope": fit.slope, "stderr": fit.stderr, "plain_slope": plain.slope, "corrected_slope": corr.slope, "ms": ms.tolist(), "entropies": S.tolist()}


def linear_coefficient(kappa0: float) -> float:
    """Coefficient of m in the analytic entropy for k_m ~ kappa0 2^(m/2)."""
    return (1.0 + 16.0 * kappa0**2) / 8.0


# -- trace powers -------------------------------------------------------------------------


def trace_power_C(m: int, s: int) -> dict:
    """Tr C_m^s with its zeta-function and Euler-product estimates."""
    s = int(s)
    if s < 2:
        raise DomainError("need s >= 2")
    if s == 2:
        exact = offdiag_sum_C2(1 << (m - 1))
    else:
        c = toeplitz_C(m)
        half = np.linalg.matrix_power(c, s // 2)
        other = half if s % 2 == 0 else half @ c
        exact = math.fsum((half * other).ravel())
    scale = 2.0 ** (m * s)
    return {
        "m": m,
        "s": s,
        "exact": exact,
        "normalized": exact / scale,
        "zeta_pred": scale * zeta_estimate(s),
        "product_pred": scale * euler_product("zeta", s=s)[0],
    }


def extrapolate_trace_power(s: int, ms=range(9, 14)) -> dict:
    """Fit 2^(-ms) Tr C_m^s to a0 + 2^(-m) sum_{j<=3} a_j m^j; a0 is the limit."""
    ms = list(ms)
    if len(ms) < 5:
        raise DomainError("the fit has five parameters; need at least five m values")
    y = np.array([trace_power_C(m, s)["normalized"] for m in ms])
    A = np.array([[1.0] + [2.0**-m * m**j for j in range(4)] for m in ms])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return {"s": s, "ms": ms, "values": y.tolist(), "limit": float(coef[0]), "coefficients": coef.tolist()}


# -- scaling and comparisons -------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    n_values: list
    entropies: list
    slope: float
    intercept: float
    slope_stderr: float
    residuals: list

    def to_json(self) -> str:
        points = [{"n": n, "S": s} for n, s in zip(self.n_values, self.entropies)]
        return json.dumps({"slope": self.slope, "slope_stderr": self.slope_stderr, "intercept": self.intercept, "points": points})


def fit_scaling(n_values, entropies) -> ScalingFit:
    """Least-squares line S = slope * n/2 + intercept."""
    n_values = [int(n) for n in n_values]
    if len(n_values) < 3:
        raise DomainError("a scaling fit needs at least three points")
    x = np.array(n_values) / 2.0
    y = np.asarray(entropies, dtype=float)
    r = stats.linregress(x, y)
    res = (y - (r.slope * x + r.intercept)).tolist()
    return ScalingFit(n_values, y.tolist(), float(r.slope), float(r.intercept), float(r.stderr), res)


def flavor_entropy(n: int, series: Series | str = Series.PRIME, flavor: str = "exact") -> float:
    """Natural-partition entropy at m = n/2 for the requested matrix flavor."""
    m = n // 2
    if flavor == "exact":
        return natural_entropy(n, series, m)
    if Series(series) is not Series.PRIME:
        raise DomainError(f"flavor {flavor!r} is only defined for the prime state")
    if flavor == "model":
        return vn_entropy(eig_sym(rho_model(n, m)))
    if flavor == "odd":
        return vn_entropy(eig_sym(rho_odd(n, m)))
    raise DomainError(f"unknown flavor {flavor!r}")


def entropy_scaling_fit(n_list, series: Series | str = Series.PRIME, flavor: str = "exact", workers: int = 1) -> ScalingFit:
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3:
        raise DomainError("a scaling fit needs at least three points")
    if any(n % 2 for n in n_list):
        raise DomainError("scaling fits use even n")
    sieve(max(n_list))  # build the shared table once before fanning out
    with ThreadPoolExecutor(max_workers=workers) as ex:
        S = list(ex.map(lambda n: flavor_entropy(n, series, flavor), n_list))
    return fit_scaling(n_list, S)


class Verdict(str, Enum):
    A_MAJORIZES_B = "a_majorizes_b"
    B_MAJORIZES_A = "b_majorizes_a"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class MajorizationResult:
    verdict: Verdict
    first_violation: int | None  # first k where a fails to dominate b
    margin: float  # min over k of (partial_a - partial_b)


def majorization(a: Spectrum, b: Spectrum, slack: float = 1e-12) -> MajorizationResult:
    """Compare descending partial sums of two spectra padded to equal length."""
    x = np.clip(a.expanded(), 0.0, None)
    y = np.clip(b.expanded(), 0.0, None)
    L = max(len(x), len(y))
    x = np.pad(np.sort(x)[::-1], (0, L - len(x)))
    y = np.pad(np.sort(y)[::-1], (0, L - len(y)))
    diff = np.cumsum(x) - np.cumsum(y)
    a_ge = diff >= -slack
    b_ge = diff <= slack
    if a_ge.all() and b_ge.all():
        v = Verdict.EQUAL
    elif a_ge.all():
        v = Verdict.A_MAJORIZES_B
    elif b_ge.all():
        v = Verdict.B_MAJORIZES_A
    else:
        v = Verdict.INCOMPARABLE
    bad = np.flatnonzero(~a_ge)
    return MajorizationResult(v, int(bad[0]) if len(bad) else None, float(diff.min()))


# -- random partitions -------------------------------------------------------------------


@dataclass(frozen=True)
class Survey:
    n: int
    series: str
    seed: int
    masks: list
    entropies: list
    natural_entropy: float

    @property
    def natural_is_max(self) -> bool:
        return self.natural_entropy >= max(self.entropies)

    def histogram(self, bins: int = 20):
        return np.histogram(self.entropies, bins=bins)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_index", "mask_hex", "entropy_bits"])
            for i, (mk, s) in enumerate(zip(self.masks, self.entropies)):
                w.writerow([i, hex(mk.as_int()), repr(s)])


def random_masks(n: int, count: int, seed: int) -> list[PartitionMask]:
    """Balanced masks from a seeded shuffle of qubit indices."""
    rng = np.random.default_rng(seed)
    return [PartitionMask(n, rng.permutation(n)[: n // 2]) for _ in range(count)]


def balanced_masks(n: int) -> list[PartitionMask]:
    """Every balanced mask containing bit 0 (one per complementary pair)."""
    return [PartitionMask(n, (0,) + rest) for rest in combinations(range(1, n), n // 2 - 1)]


def random_partition_survey(
    n: int, series: Series | str = Series.PRIME, count: int = 200, seed: int = 0, workers: int = 1, masks=None
) -> Survey:
    """Entropies over seeded random balanced masks plus the natural one."""
    if n % 2 or n < 2:
        raise DomainError("survey needs even n >= 2")
    if masks is None:
        if count < 1:
            raise DomainError("need at least one sample")
        masks = random_masks(n, count, seed)
    state = build_state(n, series)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        S = list(ex.map(lambda mk: state_entropy(state, mk), masks))
    nat = state_entropy(state, PartitionMask.natural(n, n // 2))
    return Survey(n, Series(series).value, seed, list(masks), S, nat)
