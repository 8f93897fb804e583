import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from primestate import spectra as sp
from primestate import statebuilder as sb
from primestate.errors import DomainError
from primestate.hardylittlewood import offdiag_sum_C2


def spec_of(values):
    return sp.Spectrum(np.asarray(values, dtype=float), len(values))


def test_eig_sym_examples():
    s = sp.eig_sym([[2.0, 1.0], [1.0, 2.0]], check=True)
    assert np.allclose(s.eigenvalues, [3.0, 1.0])
    assert np.allclose(sp.eig_sym(np.diag([0.1, 0.7, 0.2])).eigenvalues, [0.7, 0.2, 0.1])
    with pytest.raises(DomainError):
        sp.eig_sym([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(DomainError):
        sp.eig_sym(np.ones((2, 3)))


def test_clamp_rejects_negative():
    with pytest.raises(DomainError):
        spec_of([1.0, -1e-6]).clamped()
    assert spec_of([1.0, -1e-13]).clamped()[-1] == 0.0


def test_entropies_simple():
    assert sp.vn_entropy(spec_of([1.0])) == 0.0
    assert sp.vn_entropy(spec_of([0.25] * 4)) == pytest.approx(2.0)
    assert sp.vn_entropy(spec_of([0.5, 0.5, 0.0])) == pytest.approx(1.0)
    assert sp.renyi(spec_of([0.25] * 4), 2) == pytest.approx(2.0)
    assert sp.renyi(spec_of([0.5, 0.25, 0.25]), math.inf) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        sp.renyi(spec_of([1.0]), 1)
    with pytest.raises(DomainError):
        sp.renyi(spec_of([1.0]), 0)


def test_multiplicities_weighted():
    s = sp.Spectrum(np.array([0.1, 0.4]), 7, np.array([6, 1]))
    assert s.total() == pytest.approx(1.0)
    assert list(s.expanded()) == [0.4] + [0.1] * 6
    flat = spec_of(s.expanded())
    assert sp.vn_entropy(s) == pytest.approx(sp.vn_entropy(flat))


probs = st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=40).map(lambda v: np.array(v) / sum(v))


@given(probs, st.floats(0.1, 0.95), st.floats(1.05, 6.0))
def test_renyi_monotone(p, a, b):
    s = spec_of(p)
    assert sp.renyi(s, a) >= sp.vn_entropy(s) - 1e-9 >= sp.renyi(s, b) - 2e-9
    assert sp.renyi(s, b) >= sp.renyi(s, math.inf) - 1e-9


@given(probs)
def test_renyi_limit_is_vn(p):
    s = spec_of(p)
    assert sp.renyi(s, 1 + 1e-7) == pytest.approx(sp.vn_entropy(s), abs=1e-5)


@pytest.mark.parametrize("n", [8, 12, 16])
def test_purity_is_renyi2(n):
    r = sb.rho_exact(n, n // 2)
    p = sp.purity(r, check=True)
    assert abs(p - 2 ** -sp.renyi(sp.eig_sym(r), 2)) < 1e-10


def test_purity_from_counts():
    for n, m in [(8, 3), (10, 5), (14, 7)]:
        assert sp.purity_from_counts(n, m) == pytest.approx(sp.purity(sb.rho_exact(n, m)), rel=1e-13)


def test_model_purity_closed_form():
    r = sb.rho_model(18, 7)
    assert sp.purity(r, check=True) == pytest.approx(sp.model_purity(18, 7), rel=1e-13)
    d = 64
    assert sp.model_purity(20, 7, ell=0.0) == 1 / d
    assert sp.model_purity(20, 7, ell=0.1) == pytest.approx((d + 0.01 * offdiag_sum_C2(d)) / d**2)


def test_toy_purity_trend():
    # the toy purity (1/d)(1 - c^2) + c^2 tends to c^2
    vals = [sp.purity(sb.toy_rho(d, 0.3)) for d in (4, 64, 1024)]
    assert vals[0] > vals[1] > vals[2] > 0.09
    assert vals[2] == pytest.approx(0.09 + 0.91 / 1024)


def test_ent_spectrum_toy():
    s = sp.eig_sym(sb.toy_rho(8, 0.5))
    groups = sp.ent_spectrum(s)
    assert [g[1] for g in groups] == [1, 7]
    assert groups[0][0] == pytest.approx(-math.log2(0.5 + 0.5 / 8))


def test_model_spectrum_normalisation():
    for m in (8, 10, 13, 16):
        s = sp.model_spectrum(m)
        assert 0 <= s.meta["residual"]
        assert s.total() + s.meta["residual"] == pytest.approx(1.0)
        k = s.meta["k_m"]
        assert list(s.weights) == [1] + [2 * i for i in range(1, k + 1)]
        # one more level would overflow the unit trace
        lam = s.meta["ell"]
        nxt = 2 * (k + 1) * 2.0 ** (1 - m) * (1 + lam * 2.0**m / (2 * k + 2) ** 2)
        assert nxt > s.meta["residual"]


def test_model_spectrum_needs_m3():
    with pytest.raises(DomainError):
        sp.model_spectrum(2)


def test_trace_power_s2_is_frobenius():
    for m in (4, 7, 9):
        c = sb.toeplitz_C(m)
        r = sp.trace_power_C(m, 2)
        assert r["exact"] == pytest.approx(np.sum(c * c), rel=1e-12)
    r3 = sp.trace_power_C(6, 3)
    c = sb.toeplitz_C(6)
    assert r3["exact"] == pytest.approx(np.trace(c @ c @ c), rel=1e-10)
    with pytest.raises(DomainError):
        sp.trace_power_C(5, 1)


def test_trace_power_estimates_close():
    r = sp.trace_power_C(12, 2)
    assert r["product_pred"] / r["zeta_pred"] == pytest.approx(1.0, abs=3e-4)


def test_linear_coefficient():
    assert sp.linear_coefficient(sp.KAPPA0) == pytest.approx(7 / 8)


def test_scaling_fit():
    fit = sp.fit_scaling([4, 6, 8], [1.0, 2.0, 3.0])
    assert fit.slope == pytest.approx(1.0) and fit.intercept == pytest.approx(-1.0)
    assert '"slope"' in fit.to_json()
    with pytest.raises(DomainError):
        sp.fit_scaling([4, 6], [1.0, 2.0])


def test_hadamard_is_product():
    fit = sp.entropy_scaling_fit([4, 6, 8, 10], "hadamard")
    assert abs(fit.slope) < 1e-12
    assert max(map(abs, fit.entropies)) < 1e-9


def test_flavor_entropy_model_close_to_exact():
    exact = sp.flavor_entropy(16, "prime", "exact")
    model = sp.flavor_entropy(16, "prime", "model")
    # the model tracks the exact entropy to a few percent
    assert 0 < model - exact < 0.05 * exact
    with pytest.raises(DomainError):
        sp.flavor_entropy(12, "twin", "model")


def test_majorization_basics():
    a = spec_of([0.5, 0.5])
    b = spec_of([0.25] * 4)
    assert sp.majorization(a, a).verdict is sp.Verdict.EQUAL
    r = sp.majorization(a, b)
    assert r.verdict is sp.Verdict.A_MAJORIZES_B and r.first_violation is None
    r = sp.majorization(b, a)
    assert r.verdict is sp.Verdict.B_MAJORIZES_A and r.first_violation == 0
    c = spec_of([0.6, 0.1, 0.1, 0.1, 0.1])
    d = spec_of([0.5, 0.5])
    assert sp.majorization(c, d).verdict is sp.Verdict.INCOMPARABLE


@given(probs)
def test_uniform_is_majorized(p):
    u = spec_of(np.full(len(p), 1 / len(p)))
    assert sp.majorization(spec_of(p), u).verdict in (sp.Verdict.A_MAJORIZES_B, sp.Verdict.EQUAL)


def test_schmidt_complement_property():
    rng = np.random.default_rng(5)
    for n in (6, 9, 12):
        st_ = sb.build_state(n, "prime")
        for _ in range(5):
            k = int(rng.integers(1, n))
            mask = sb.PartitionMask(n, rng.permutation(n)[:k])
            a = sp.reduced_spectrum(st_, mask).clamped()
            b = sp.reduced_spectrum(st_, mask.complement()).clamped()
            a, b = a[a > 0], b[b > 0]
            assert len(a) == len(b) and np.abs(a - b).max() < 1e-8


def test_survey_deterministic_and_natural():
    s1 = sp.random_partition_survey(10, count=20, seed=3)
    s2 = sp.random_partition_survey(10, count=20, seed=3)
    assert s1.entropies == s2.entropies
    assert [m.as_int() for m in s1.masks] == [m.as_int() for m in s2.masks]
    assert all(m.size == 5 for m in s1.masks)
    assert s1.natural_entropy == pytest.approx(sp.natural_entropy(10))
    counts, edges = s1.histogram(5)
    assert counts.sum() == 20


def test_survey_csv(tmp_path):
    s = sp.random_partition_survey(8, count=4, seed=1)
    s.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "sample_index,mask_hex,entropy_bits" and len(lines) == 5


def test_balanced_masks_exhaustive_small():
    assert len(sp.balanced_masks(6)) == 10
    masks = sp.balanced_masks(4)
    assert len(masks) == 3
    s = sp.random_partition_survey(4, masks=masks)
    assert s.natural_is_max
