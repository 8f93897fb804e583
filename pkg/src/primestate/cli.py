"""Command-line entry point: tables, figure data, verification suites."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction

import numpy as np

from . import counting, hardylittlewood as hl, spectra as sp, statebuilder as sb
from .errors import DomainError, RangeError
from .primes import CACHE_ENV, MAX_QUBITS, sieve

DESK_MAX_N = 24


@dataclass
class RunConfig:
    cache_dir: str | None = None
    max_n: int = DESK_MAX_N
    opt_in_large: bool = False
    prime_cutoff: int = hl.DEFAULT_CUTOFF
    seed: int = 0
    output_format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        if self.max_n > MAX_QUBITS:
            raise RangeError(f"max_n cannot exceed {MAX_QUBITS}")

    def check_n(self, n: int) -> None:
        limit = MAX_QUBITS if self.opt_in_large else self.max_n
        if n > limit:
            raise RangeError(f"n={n} is above the ceiling {limit}; pass --allow-large to go up to {MAX_QUBITS}")
        if n // 2 > sb.DENSE_M_CEILING and not self.opt_in_large:
            raise RangeError(f"m={n // 2} needs --allow-large")


def round4(x: float) -> str:
    """Half-even rounding to four decimals, as displayed in tables."""
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return str(Decimal(repr(float(x))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


def _even_range(lo: int, hi: int) -> list[int]:
    lo += lo % 2
    return list(range(lo, hi + 1, 2))


def _sweep(cfg: RunConfig, fn, ns):
    for n in ns:
        cfg.check_n(n)
    if ns:
        sieve(max(max(ns), 2), cfg.cache_dir)  # one shared table before fan-out
    with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
        return list(ex.map(fn, ns))


# -- commands ------------------------------------------------------------------------
# each returns (header, rows, verdicts)


def cmd_table2(args, cfg):
    ns = _even_range(args.n_min or 10, args.n_max or 20)

    def row(n):
        return [n, sp.natural_entropy(n, "prime"), sp.natural_entropy(n, "twin")]

    return ["n", "S_prime", "S_twin"], _sweep(cfg, row, ns), {}


def _prime_purity(n: int) -> float:
    spec = sp.reduced_spectrum(sb.build_state(n), sb.PartitionMask.natural(n, n // 2))
    return math.fsum(spec.eigenvalues**2)


def cmd_fig1(args, cfg):
    ns = _even_range(args.n_min or 8, args.n_max or 24)

    def row(n):
        exact = _prime_purity(n)
        model = sp.model_purity(n, n // 2)
        return [n, exact, model, model - exact]

    return ["n", "purity_exact", "purity_model", "difference"], _sweep(cfg, row, ns), {}


def cmd_fig2(args, cfg):
    ns = _even_range(args.n_min or 8, args.n_max or 24)
    series = args.series or "prime"
    flavor = args.flavor or "model"

    def row(n):
        exact = sp.natural_entropy(n, series)
        other = sp.flavor_entropy(n, "prime", flavor) if series == "prime" else math.nan
        return [n, exact, other, exact - other]

    rows = _sweep(cfg, row, ns)
    verdicts = {}
    if len(rows) >= 3:
        fit = sp.fit_scaling([r[0] for r in rows], [r[1] for r in rows])
        verdicts["slope"] = fit.slope
        verdicts["slope_stderr"] = fit.slope_stderr
    return ["n", "S_exact", f"S_{flavor}", "difference"], rows, verdicts


def cmd_fig3(args, cfg):
    n = args.n_max or 16
    cfg.check_n(n)
    survey = sp.random_partition_survey(n, args.series or "prime", args.samples or 200, cfg.seed, cfg.workers)
    rows = [[i, hex(mk.as_int()), s] for i, (mk, s) in enumerate(zip(survey.masks, survey.entropies))]
    rows.append(["natural", hex((1 << (n // 2)) - 1), survey.natural_entropy])
    return ["sample_index", "mask_hex", "entropy_bits"], rows, {"natural_is_max": survey.natural_is_max}


def cmd_fig4(args, cfg):
    n = args.n_max or 24
    cfg.check_n(n)
    m = n // 2
    exact = sp.reduced_spectrum(sb.build_state(n), sb.PartitionMask.natural(n, m))
    model = sp.eig_sym(sb.rho_model(n, m, allow_large=cfg.opt_in_large))
    levels = args.samples or 89
    e1 = -np.log2(exact.clamped()[:levels].clip(1e-300))
    e2 = -np.log2(model.clamped()[:levels].clip(1e-300))
    rows = [[i, float(e1[i]) if i < len(e1) else math.nan, float(e2[i]) if i < len(e2) else math.nan] for i in range(levels)]
    return ["level", "eps_exact", "eps_model"], rows, {}


def cmd_fig5(args, cfg):
    lo, hi = args.n_min or 7, args.n_max or 13
    if hi > sb.DENSE_M_CEILING and not cfg.opt_in_large:
        raise RangeError(f"m={hi} needs --allow-large")
    rows = []
    for m in range(max(lo, 2), hi + 1):
        gam = sp.eig_sym(sb.toeplitz_C(m)).eigenvalues
        # level i starts after 1 + 2 + 4 + ... + 2(i-1) = 1 + i(i-1) eigenvalues
        for i in range(6):
            idx = 0 if i == 0 else 1 + i * (i - 1)
            if idx < len(gam):
                scale = 1.0 if i == 0 else (2 * i) ** 2
                rows.append([m, i, gam[idx] * scale / 2.0**m])
    return ["m", "i", "gamma_scaled"], rows, {}


def cmd_constants(args, cfg):
    rep = hl.HLConstants(args.cutoff or cfg.prime_cutoff).report()
    return ["name", "value", "cutoff", "tail_bound"], [[e["name"], e["value"], e["cutoff"], e["tail_bound"]] for e in rep], {}


def cmd_asymptotic(args, cfg):
    q = counting.CountingQuery(args.kind, a=args.a, b=args.b, b2=args.b2, k=args.k)
    hi = args.n_max or 20
    cfg.check_n(hi)
    grid = [1 << n for n in range(args.n_min or 10, hi + 1)]
    sieve(hi + 1, cfg.cache_dir)
    rows = [list(r) for r in counting.asymptotic_ratio(q, grid)]
    return ["X", "exact", "predicted", "ratio"], rows, {}


def appendix_suite(cutoff: int = hl.DEFAULT_CUTOFF) -> list[dict]:
    """Each appendix identity: computed value, target, tolerance, verdict."""
    out = []

    def add(name, value, target, tol):
        ok = abs(value - target) <= tol
        out.append({"identity": name, "value": value, "target": target, "tolerance": tol, "pass": bool(ok)})

    qs = {
        "pi/Li": counting.CountingQuery("pi"),
        "pi_8,1/(Li/4)": counting.CountingQuery("pi_ab", a=8, b=1),
        "pi2(2)/(C(2)Li2)": counting.CountingQuery("pi2", k=2),
        "pi2(6)/(C(6)Li2)": counting.CountingQuery("pi2", k=6),
        "pi_8;1,3/(C(2)Li2/4)": counting.CountingQuery("pi_abb", a=8, b=1, b2=3),
    }
    for name, q in qs.items():
        ratio = counting.asymptotic_ratio(q, [1 << 20])[0][3]
        add(f"{name} at 2^20", ratio, 1.0, 0.1)
    exact, pred, ratio = hl.sum_C(4000)
    add("sum C(k) / (K - log K / 2) at K=4000", ratio, 1.0, 0.01)
    s2 = hl.sum_C2(2000, cutoff)
    for key in ("ratio_single", "ratio_weighted", "ratio_double"):
        add(f"sum C^2 {key} at X/2=2000", s2[key], 1.0, 0.05)
    table_alpha = [Fraction(1), Fraction(1), Fraction(2), Fraction(1), Fraction(4, 3), Fraction(2), Fraction(6, 5)]
    got = [hl.alpha_m(m) for m in range(2, 15, 2)]
    got2 = [hl.alpha_m(m, "divisor_sum") for m in range(2, 15, 2)]
    add("alpha(m) row, m=2..14", float(got == table_alpha and got2 == table_alpha), 1.0, 0.0)
    cum = hl.cumulative_alpha(14)
    want = [Fraction(x) for x in (1, 2, 4, 5, Fraction(19, 3), Fraction(25, 3), Fraction(143, 15))]
    add("sum alpha(m) row", float([cum[x - 1] for x in range(2, 15, 2)] == want), 1.0, 0.0)
    betas = [hl.beta(d) for d in (1, 3, 5, 7, 11, 13, 15)]
    want_b = [Fraction(1), Fraction(1), Fraction(1, 3), Fraction(1, 5), Fraction(1, 9), Fraction(1, 11), Fraction(1, 3)]
    add("beta(d) row", float(betas == want_b), 1.0, 0.0)
    alpha = hl.ALPHA
    add("sum beta(d)/d, d<=1e5", hl.beta_over_d(10**5), 2 / alpha, 1e-4)
    add("mean d beta(d), d<=1e5", hl.mean_d_beta(10**5), 1 / alpha, 0.02 / alpha)
    a2 = hl.alpha_sq_over_alpha2(cutoff)
    add("sum beta beta / lcm, d<=1e4", hl.beta_lcm_sum(10**4), 2 * a2 / alpha**2, 1e-3)
    return out


def cmd_appendix(args, cfg):
    entries = appendix_suite(args.cutoff or cfg.prime_cutoff)
    rows = [[e["identity"], e["value"], e["target"], e["tolerance"], "pass" if e["pass"] else "FAIL"] for e in entries]
    return ["identity", "value", "target", "tolerance", "verdict"], rows, {"all_pass": all(e["pass"] for e in entries)}


def cmd_sieve(args, cfg):
    n = args.n_max or cfg.max_n
    cfg.check_n(n)
    t = sieve(n, cfg.cache_dir)
    return ["n", "pi"], [[n, t.count(t.limit - 1)]], {}


COMMANDS = {
    "table2": cmd_table2,
    "fig1": cmd_fig1,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "fig4": cmd_fig4,
    "fig5": cmd_fig5,
    "appendix-verify": cmd_appendix,
    "constants": cmd_constants,
    "asymptotic": cmd_asymptotic,
    "sieve": cmd_sieve,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="primestate", description="Entanglement of prime-number states.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--series", choices=[s.value for s in sb.Series])
    p.add_argument("--flavor", choices=["exact", "model", "odd"], help="comparison matrix for fig2 (default model)")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--cache-dir")
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    g = p.add_argument_group("asymptotic")
    g.add_argument("--kind", choices=[k.value for k in counting.Kind], default="pi")
    g.add_argument("--a", type=int, default=1)
    g.add_argument("--b", type=int, default=0)
    g.add_argument("--b2", type=int, default=0)
    g.add_argument("--k", type=int, default=2)
    return p


# the constants report keeps full precision so tail bounds stay visible
UNROUNDED = {"constants"}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return round4(float(v))
    return v


def render(command, cfg, header, rows, verdicts, elapsed_ms, fmt) -> str:
    if fmt == "json":
        report = {
            "command": command,
            "config": asdict(cfg),
            "rows": [dict(zip(header, [float(x) if isinstance(x, np.floating) else x for x in r])) for r in rows],
            "verdicts": {k: (float(v) if isinstance(v, np.floating) else v) for k, v in verdicts.items()},
            "elapsed_ms": elapsed_ms,
        }
        return json.dumps(report, indent=2, default=str) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if command in UNROUNDED and isinstance(v, float) else _fmt(v) for v in r])
    return buf.getvalue()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            cache_dir=args.cache_dir or os.environ.get(CACHE_ENV),
            opt_in_large=args.allow_large,
            prime_cutoff=args.cutoff or hl.DEFAULT_CUTOFF,
            seed=args.seed,
            output_format=args.format,
            workers=max(1, args.workers),
        )
        t0 = time.perf_counter()
        header, rows, verdicts = COMMANDS[args.command](args, cfg)
        elapsed = int((time.perf_counter() - t0) * 1000)
    except (DomainError, RangeError) as exc:
        print(f"primestate: {exc}", file=sys.stderr)
        return 2
    text = render(args.command, cfg, header, rows, verdicts, elapsed, args.format)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if verdicts.get("all_pass") is False else 0


if __name__ == "__main__":
    sys.exit(main())
