"""Acceptance criteria, one test and one printed PASS/FAIL line per criterion.

Tolerances are the contract values; nothing here is tuned to make a line green.
"""

import math
import time

import numpy as np
import pytest

from nlcalc import calculus as calc
from nlcalc import operators as op
from nlcalc.discretization import build_uniform_grid, dot1, dot2
from nlcalc.dynamics import energy_central, initial_state, simulate, stable_dt, step
from nlcalc.kernels import (AlphaKernel, BetaKernel, GeneralKernel, LambdaAlphaKernel, alpha_embed, beta_embed,
                            check_divergence_kernel, lambda_alpha_embed, peridynamic_alpha)
from nlcalc.peridyn import (PeridynamicMaterial, analytic_weighted_volume, apply_L_direct, apply_L_kernel,
                            apply_L_operator, assemble_C, force_states, lattice_weighted_volume, linearized_forces,
                            relative_discrepancy)

from . import oracles

CUBE = [[0.0, 1.0]] * 3


@pytest.fixture(scope="module")
def g4():
    return build_uniform_grid(CUBE, 0.25, 0.45)


@pytest.fixture(scope="module")
def g5():
    return build_uniform_grid(CUBE, 0.2, 0.36)


@pytest.fixture
def report(capsys):
    def _report(n, ok, title, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    return _report


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300))


def test_criterion_1_admissibility(g4, report):
    t0 = time.perf_counter()
    worst_ok, worst_mismatch, verdicts = 0.0, 0.0, []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        for cls, embed, wrong in ((AlphaKernel, alpha_embed, BetaKernel), (BetaKernel, beta_embed, AlphaKernel)):
            good = check_divergence_kernel(embed(cls.random(g4, 3, rng)))
            vals = wrong.random(g4, 3, rng).values
            bad = check_divergence_kernel(embed(cls(g4, vals)))
            expect = float(np.max(np.linalg.norm(2.0 * vals, axis=1)))
            worst_ok = max(worst_ok, good.max_residual)
            worst_mismatch = max(worst_mismatch, abs(bad.max_residual - expect) / expect)
            verdicts += [good.passed, not bad.passed]
    elapsed = time.perf_counter() - t0
    ok = worst_ok <= 1e-12 and worst_mismatch <= 1e-12 and all(verdicts) and elapsed < 10
    report(1, ok, "kernel admissibility iff",
           f"40 kernels; max admissible residual {worst_ok:.2e} (<= 1e-12); violation residual vs max|2 phi| "
           f"rel. mismatch {worst_mismatch:.2e}; {elapsed:.1f} s (< 10 s)")
    assert ok


def test_criterion_2_adjointness(g4, report):
    t0 = time.perf_counter()
    worst, worst_abs_scale, over, count = 0.0, 0.0, [], 0
    for fi, (name, fam) in enumerate(op.FAMILIES.items()):
        for ki, make in enumerate((AlphaKernel.random, BetaKernel.random, GeneralKernel.random)):
            kernel = make(g4, 3, np.random.default_rng([fi, ki]))
            for p in range(20):
                rng = np.random.default_rng([fi, ki, p])
                arg = rng.uniform(-1, 1, (g4.n, g4.n) + (3,) * fam.arg_rank)
                u = rng.uniform(-1, 1, (g4.n,) + (3,) * fam.u_rank)
                fwd, bwd = op.apply(fam, kernel, arg), op.apply_adjoint(fam, kernel, u)
                lhs, rhs = dot1(g4, u, fwd), dot2(g4, arg, bwd)
                rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
                # same residual against sum |u||Op a|, which is what float64 roundoff scales with
                scale = max(dot1(g4, np.abs(u), np.abs(fwd)), dot2(g4, np.abs(arg), np.abs(bwd)))
                worst_abs_scale = max(worst_abs_scale, abs(lhs - rhs) / scale)
                if rel > 1e-13:
                    over.append(f"{name}/{make.__self__.__name__}/pair {p}: {rel:.2e}, "
                                f"|<u,Op a>| = {abs(lhs) / scale:.1e} of its absolute-value scale")
                worst = max(worst, rel)
                count += 1
    elapsed = time.perf_counter() - t0
    ok = not over and elapsed < 30
    detail = (f"{count} pairings (5 operators x 3 kernel families x 20); max |<u,Op a> - <a,Op* u>| / |<u,Op a>| = "
              f"{worst:.2e} (<= 1e-13), {count - len(over)}/{count} within; {elapsed:.1f} s (< 30 s)")
    if over:
        detail += (f"; over the limit: {'; '.join(over)}; residual relative to sum |u||Op a| is at most "
                   f"{worst_abs_scale:.1e} over all pairings, i.e. float64 roundoff amplified by cancellation")
    report(2, ok, "adjointness", detail)
    assert ok


def test_criterion_3_closed_forms(g4, report):
    t0 = time.perf_counter()
    worst_general, worst_oracle = 0.0, 0.0
    rng = np.random.default_rng(3)
    kernels = [AlphaKernel.random(g4, 3, rng), BetaKernel.random(g4, 3, rng),
               LambdaAlphaKernel(LambdaAlphaKernel.gaussian_bump(g4, g4.horizon), AlphaKernel.random(g4, 3, rng))]
    embeds = [alpha_embed, beta_embed, lambda_alpha_embed]
    for kernel, embed in zip(kernels, embeds):
        general = embed(kernel)
        for fam in op.FAMILIES.values():
            arg = rng.uniform(-1, 1, (g4.n, g4.n) + (3,) * fam.arg_rank)
            u = rng.uniform(-1, 1, (g4.n,) + (3,) * fam.u_rank)
            worst_general = max(worst_general, _rel(op.apply(fam, kernel, arg), op.apply(fam, general, arg)),
                                _rel(op.apply_adjoint(fam, kernel, u), op.apply_adjoint(fam, general, u)))
    a = kernels[0]
    s = rng.uniform(-1, 1, g4.n)
    worst_general = max(worst_general, _rel(op.laplacian_alpha(a, s), op.laplacian_general(alpha_embed(a), s)))

    # explicit triple loops on a 27-node grid
    g3 = build_uniform_grid(CUBE, 1.0 / 3.0, 0.5)
    w = g3.weights.tolist()
    for make, embed in ((AlphaKernel.random, alpha_embed), (BetaKernel.random, beta_embed)):
        kernel = make(g3, 3, rng)
        kap = embed(kernel).dense().tolist()
        for name, fam in op.FAMILIES.items():
            arg = rng.uniform(-1, 1, (g3.n, g3.n) + (3,) * fam.arg_rank)
            u = rng.uniform(-1, 1, (g3.n,) + (3,) * fam.u_rank)
            worst_oracle = max(worst_oracle,
                               _rel(op.apply(fam, kernel, arg), oracles.apply_general(name, kap, w, arg.tolist())),
                               _rel(op.apply_adjoint(fam, kernel, u),
                                    oracles.apply_adjoint_general(name, kap, w, u.tolist())))
    elapsed = time.perf_counter() - t0
    ok = worst_general <= 1e-13 and worst_oracle <= 1e-13 and elapsed < 60
    report(3, ok, "closed forms vs general triple sum",
           f"alpha/beta/lambda-alpha, 5 operators + adjoints + alpha Laplacian: max rel {worst_general:.2e} vs "
           f"embedded kernel (N=64), {worst_oracle:.2e} vs loop oracle (N=27) (<= 1e-13); {elapsed:.1f} s (< 60 s)")
    assert ok


def _acceptable(r):
    """A row meets the criterion if it holds, or is an expected failure that no published statement contradicts."""
    if r.skipped or r.expected is None or r.holds:
        return True
    return r.status == "expected-fail" and r.published_claim is not True


def test_criterion_4_identity_suite(g4, report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    kernels = {"alpha_peridynamic": peridynamic_alpha(g4), "alpha_random": AlphaKernel.random(g4, 3, rng),
               "beta_random": BetaKernel.random(g4, 3, rng),
               "general_divergence": GeneralKernel.random_divergence(g4, 3, rng)}
    rows = []
    for label, kernel in kernels.items():
        rows += calc.run_suite(kernel, seed=4, label=label)
    elapsed = time.perf_counter() - t0
    scored = [r for r in rows if not r.skipped and r.expected is not None]
    published = sorted({f"{r.kernel}:{r.name}" for r in scored if not r.holds and r.published_claim is False})
    unclaimed = sorted({f"{r.kernel}:{r.name}" for r in scored
                        if not r.holds and r.published_claim is None and r.status == "expected-fail"})
    beta_const = [r for r in scored if r.kernel == "beta_random" and r.name == "constant_div"]
    bad = [r for r in scored if not _acceptable(r)]
    ok = not bad and elapsed < 60 and all(r.holds for r in beta_const)
    detail = (f"{len(scored)} scored rows on 4 kernels; {sum(r.holds for r in scored)} hold at 1e-12 rel.; "
              f"expected-fail as published: {', '.join(published)}; expected-fail with no published claim "
              f"(general kernel fails the condition): {', '.join(unclaimed)}; "
              f"beta constant_div holds={all(r.holds for r in beta_const)}; {elapsed:.1f} s (< 60 s)")
    if bad:
        worst = {}
        for r in bad:
            worst[r.name] = max(worst.get(r.name, 0.0), r.relative_residual)
        predicted = all(r.expected is False for r in bad)
        detail += ("; published claims NOT reproduced: "
                   + ", ".join(f"{k} (rel {v:.1e}, on {sorted({r.kernel for r in bad if r.name == k})})"
                               for k, v in sorted(worst.items()))
                   + ("; every one is predicted by a kernel condition that the kernel fails"
                      if predicted else "; some of these are NOT explained by a failed kernel condition"))
    report(4, ok, "identity suite", detail)
    assert ok


def test_criterion_5_three_way_equivalence(g5, report):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        mat = PeridynamicMaterial(g5, rng.uniform(0.5, 2.0, g5.n), rng.uniform(0.2, 1.0, g5.n),
                                  rng.uniform(0.5, 2.0, g5.n))
        u = rng.uniform(-1, 1, (g5.n, 3))
        forms = [apply_L_direct(u, mat), apply_L_kernel(assemble_C(mat), u),
                 -apply_L_operator(u, mat, "gradient"), -apply_L_operator(u, mat, "tensor")]
        for i in range(4):
            for j in range(i + 1, 4):
                worst = max(worst, relative_discrepancy(forms[i], forms[j]))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 120
    report(5, ok, "peridynamic L three-way equivalence",
           f"10 heterogeneous instances on 5^3, 4 forms pairwise: max rel discrepancy {worst:.2e} (<= 1e-10); "
           f"{elapsed:.1f} s (< 120 s)")
    assert ok


def test_criterion_6_weighted_volume(report):
    delta = 0.1
    exact = 4.0 / 3.0 * math.pi * delta ** 3
    err_analytic = abs(analytic_weighted_volume(delta, 2.0) - exact) / exact
    m = analytic_weighted_volume(1.0, 0.0)
    levels = (4, 8, 16)
    errs = [abs(lattice_weighted_volume(1.0 / c, 1.0, 0.0) - m) / m for c in levels]
    monotone = all(a > b for a, b in zip(errs, errs[1:]))
    ok = err_analytic <= 1e-15 and monotone and errs[-1] <= 0.03
    report(6, ok, "weighted volume",
           f"analytic m(r=2, delta=0.1) rel. err {err_analytic:.1e} (<= 1e-15); discrete m (r=0) rel. err at "
           + ", ".join(f"delta/{c}: {e:.4f}" for c, e in zip(levels, errs))
           + f"; monotone={monotone}; final <= 0.03")
    assert ok


def test_criterion_7_linearization(g4, report):
    rng = np.random.default_rng(7)
    bulk, shear = rng.uniform(0.8, 1.2, g4.n), rng.uniform(0.3, 0.6, g4.n)
    eta = rng.uniform(-1, 1, (g4.n, 3))
    hs = (1e-2, 1e-3, 1e-4)
    res = {}
    for mode in ("discrete", "analytic"):
        mat = PeridynamicMaterial(g4, bulk, shear, 1.0, weighted_volume_mode=mode)
        lin = linearized_forces(eta, mat)
        t0 = force_states(np.zeros_like(eta), mat).T
        errs = [np.max(np.abs((force_states(h * eta, mat).T - t0) / h - lin)) / np.max(np.abs(lin)) for h in hs]
        res[mode] = (errs, np.log10(np.array(errs[:-1]) / np.array(errs[1:])))
    errs, orders = res["discrete"]
    ok = bool(np.all(orders >= 0.9))
    report(7, ok, "linearization consistency",
           f"per-node discrete m (default): rel. err {', '.join(f'{e:.2e}' for e in errs)}, observed orders "
           f"{', '.join(f'{o:.3f}' for o in orders)} (>= 0.9); info: with analytic m the quotient settles at "
           f"{res['analytic'][0][-1]:.3f} rel. err (orders {', '.join(f'{o:.3f}' for o in res['analytic'][1])})")
    assert ok


def test_criterion_8_dynamics(g4, report):
    mat = PeridynamicMaterial(g4, 1.0, 0.5, 1.0)
    C = assemble_C(mat)
    zero = simulate(C, 1.0, np.zeros((g4.n, 3)), steps=1000, stride=100)
    equilibrium = all(not np.any(u) for u in zero.displacements)
    c = np.tile([1e-3, -2e-3, 5e-4], (g4.n, 1))
    const = simulate(C, 1.0, c, steps=1000, stride=100)
    preserved = all(np.array_equal(u, c) for u in const.displacements)

    u0 = np.zeros((g4.n, 3))
    u0[:, 0] = 1e-3 * np.exp(-np.sum((g4.nodes - 0.5) ** 2, axis=1) / 0.2 ** 2)
    runs = [simulate(C, 1.0, u0, steps=1000, stride=1) for _ in range(2)]
    drift = runs[0].relative_energy_drift()
    identical = all(np.array_equal(a, b) for a, b in zip(runs[0].displacements, runs[1].displacements))
    bounded = max(np.max(np.abs(u)) for u in runs[0].displacements) <= 10 * np.max(np.abs(u0))

    s = initial_state(C, 1.0, u0, 0.0, 0.0, stable_dt(C, 1.0))
    e0, central = energy_central(s, C)["total"], 0.0
    for _ in range(1000):
        s = step(s, C)
        central = max(central, abs(energy_central(s, C)["total"] - e0) / e0)

    ok = equilibrium and preserved and drift <= 0.01 and identical and bounded
    report(8, ok, "dynamics sanity",
           f"equilibrium exact={equilibrium}; constant field preserved exactly={preserved}; energy drift over "
           f"1000 steps at auto dt = {drift:.2e} (<= 0.01) for the leapfrog energy (half-step velocity, mixed "
           f"elastic term); the nodal energy with central velocity varies by {central:.2e}, which would "
           f"{'exceed' if central > 0.01 else 'meet'} 0.01; bounded={bounded}; bit-identical rerun={identical}")
    assert ok
