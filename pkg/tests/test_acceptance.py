"""Acceptance suite: one check per shipped guarantee, one verdict line each.

Each test records a single `[acceptance N] PASS/FAIL ...` line; the session
summary prints them all (see conftest), and a failing line doubles as the
assertion message. Tolerances and time budgets are part of the guarantee
and are checked too.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

import affdims as ad

import conftest
from checks import diag_ifs, random_contraction


def report(criterion, ok, detail, elapsed, budget):
    verdict = "PASS" if ok and elapsed < budget else "FAIL"
    line = (
        f"[acceptance {criterion}] {verdict} {detail} "
        f"[{elapsed:.1f}s of {budget:.0f}s budget]"
    )
    print(line)
    conftest.acceptance_verdicts.append(line)
    assert ok, line
    assert elapsed < budget, line


def test_acceptance_1_closed_form_dimensions():
    t0 = time.perf_counter()
    ifs = diag_ifs([0.5, 0.3], [0.5, 0.3])
    model = ad.BernoulliModel(probs=(0.7, 0.3))
    d2 = ad.d_q_minus(ifs, model, 2.0).value
    d3 = ad.d_q_minus(ifs, model, 3.0).value
    want2 = np.log(0.58) / np.log(0.5)
    want3 = np.log(0.7**3 + 0.3**3) / (2 * np.log(0.5))
    ok = abs(d2 - want2) <= 1e-3 and abs(d3 - want3) <= 1e-3
    report(
        1, ok,
        f"d_2 err {abs(d2 - want2):.2e}, d_3 err {abs(d3 - want3):.2e} (tol 1e-3)",
        time.perf_counter() - t0, 10.0,
    )


def test_acceptance_2_uniform_weights_constant():
    t0 = time.perf_counter()
    ifs = diag_ifs([0.5, 0.3], [0.5, 0.3])
    model = ad.BernoulliModel(probs=(0.5, 0.5))
    errs = []
    for q in (1.5, 2.0, 3.0, 5.0):
        errs.append(abs(ad.d_q_minus(ifs, model, q).value - 1.0))
    ok = max(errs) <= 1e-3
    report(
        2, ok,
        f"max |d_q - 1| = {max(errs):.2e} over q in {{1.5, 2, 3, 5}} (tol 1e-3)",
        time.perf_counter() - t0, 30.0,
    )


def test_acceptance_3_phase_transition_kink():
    t0 = time.perf_counter()
    ifs = diag_ifs([0.7, 0.2], [0.7, 0.2])
    model = ad.BernoulliModel(probs=(0.8, 0.2))
    q_star = brentq(
        lambda q: (0.8**q + 0.2**q) ** (1 / (q - 1)) - 0.7, 1.5, 4.0
    )
    grid = np.arange(1.5, 4.0 + 1e-9, 0.05)
    scan = ad.phase_transition_scan(ifs, model, grid, tol=5e-5)
    gap = min((abs(k - q_star) for k in scan.kink_qs), default=np.inf)
    ok = gap <= 0.05 + 1e-9
    report(
        3, ok,
        f"kink flagged {gap:.3f} from analytic crossing q*={q_star:.3f} "
        f"(allowed one 0.05 step; flags at {list(scan.kink_qs)})",
        time.perf_counter() - t0, 120.0,
    )


def test_acceptance_4_end_to_end_three_seeds():
    t0 = time.perf_counter()
    ifs = diag_ifs([0.45, 0.4], [0.4, 0.35], [0.35, 0.3])
    model = ad.BernoulliModel(probs=(0.4, 0.35, 0.25))
    theory = ad.d_q_minus(ifs, model, 2.0).value
    target = min(theory, 2.0)
    assert abs(theory - 1.16934) < 1e-3
    discrepancies = []
    usable = []
    per_seed_budget_ok = True
    for seed in (11, 22, 33):
        t_seed = time.perf_counter()
        fld = ad.DisplacementField(seed=seed, region_radius=1.0)
        cloud = ad.sample_cloud(ifs, model, fld, 1_000_000, 40, threads=4)
        ladder = ad.build_ladder(cloud, 2.0, rho=0.5, rungs=12, min_occupied=20)
        est = ad.estimate_dimension(ladder)
        discrepancies.append(est.value - target)
        usable.append(ladder.usable_count())
        per_seed_budget_ok &= (time.perf_counter() - t_seed) < 300.0
    ok = (
        max(abs(d) for d in discrepancies) <= 0.15
        and min(usable) >= 8
        and per_seed_budget_ok
    )
    report(
        4, ok,
        f"target min(d_2, N)={target:.4f}; discrepancies "
        f"{[round(d, 4) for d in discrepancies]} (tol 0.15), "
        f"usable rungs {usable} (need >= 8)",
        time.perf_counter() - t0, 900.0,
    )


def test_acceptance_5_property_suites():
    t0 = time.perf_counter()
    failures = []

    # Singular value function is submultiplicative: 1000 pairs x 10 exponents.
    rng = np.random.default_rng(2718)
    for i in range(1000):
        dim = 2 if i % 2 == 0 else 3
        A = random_contraction(rng, dim)
        B = random_contraction(rng, dim)
        for s in rng.uniform(0.05, dim - 0.05, size=10):
            if ad.phi_s(A @ B, s) > ad.phi_s(A, s) * ad.phi_s(B, s) * (1 + 1e-9):
                failures.append(f"submultiplicativity at s={s}")

    # Contraction sandwich on words up to length 6.
    ifs = diag_ifs([0.5, 0.3], [0.4, 0.35])
    a_minus, a_plus = ad.contraction_bounds(ifs)
    for k in range(1, 7):
        for word in itertools.product((1, 2), repeat=k):
            T = ad.compose(ifs, word)
            for s in (0.5, 1.3):
                val = ad.phi_s(T, s)
                if not (
                    a_minus ** (s * k) * (1 - 1e-9) <= val
                    <= a_plus ** (s * k) * (1 + 1e-9)
                ):
                    failures.append(f"sandwich at {word}, s={s}")

    # Stopping sets cut every ray exactly once: 1000 rays per configuration.
    rng2 = np.random.default_rng(31415)
    from affdims.codespace import is_prefix

    for s_cut, r_cut in ((0.8, 0.2), (1.4, 0.05)):
        members = ad.cut_set(ifs, s_cut, r_cut)
        for _ in range(1000):
            ray = tuple(rng2.integers(1, 3, size=16))
            if sum(1 for w in members if is_prefix(w, ray)) != 1:
                failures.append(f"cut set at {s_cut}, {r_cut}")

    # Bernoulli moment sums are supermultiplicative: Phi_{k+l} >= Phi_k Phi_l.
    model = ad.BernoulliModel(probs=(0.6, 0.4))
    s_m, q_m = 0.7, 2.5
    phis = {k: ad.moment_sum(ifs, model, s_m, q_m, k) for k in range(1, 10)}
    for k in range(1, 9):
        for l in range(1, 10 - k):
            if phis[k + l] < phis[k] * phis[l] * (1 - 1e-9):
                failures.append(f"supermultiplicativity at k={k}, l={l}")

    # Markov masses: near-product bounds with the quasi-Bernoulli constant,
    # checked exactly to depth 6.
    potential = np.log(np.array([[0.50, 0.20], [0.35, 0.45]]))
    markov = ad.MarkovGibbsModel(potential=potential)
    a = ad.quasi_bernoulli_constant(markov)
    P = ad.pressure(markov)
    words6 = [w for k in range(1, 7) for w in itertools.product((1, 2), repeat=k)]
    for u in words6[:40]:
        for v in words6[:40]:
            ratio = ad.cylinder_mass(markov, u + v) / (
                ad.cylinder_mass(markov, u) * ad.cylinder_mass(markov, v)
            )
            if not (a**3 * (1 - 1e-9) <= ratio <= a**-3 * (1 + 1e-9)):
                failures.append(f"quasi-Bernoulli at {u}+{v}")
    gibbs_ratios = [
        ad.cylinder_mass(markov, w)
        / math.exp(ad.birkhoff_sum(markov, w) - len(w) * P)
        for w in words6
    ]
    if not (min(gibbs_ratios) > 0.01 and max(gibbs_ratios) < 100.0):
        failures.append("Gibbs sandwich unbounded")

    # Join sets: closure and total multiplicity, exhaustive to depth 4.
    pool = ad.all_words(2, 4)
    level_counts = {}
    for n in range(2, 6):
        seen = set()
        for combo in itertools.combinations(pool, n):
            js = ad.join_set(combo)
            verts = [v for v, _ in js.vertices]
            for x, y in itertools.combinations(verts, 2):
                if ad.wedge(x, y) not in verts:
                    failures.append(f"closure at {combo}")
            if sum(m for _, m in js.vertices) != n - 1:
                failures.append(f"multiplicity at {combo}")
            jc = ad.canonical_join_class(js)
            key = (jc.levels, jc.encoding())
            if key not in seen:
                seen.add(key)
                level_counts[jc.levels] = level_counts.get(jc.levels, 0) + 1

    # Class counts: realized configurations per level multiset never exceed
    # (n-1)! and match the combinatorial counter.
    for levels, found in level_counts.items():
        n = len(levels) + 1
        if found > math.factorial(n - 1):
            failures.append(f"count bound at {levels}")
        if ad.count_join_configurations(levels) != found:
            failures.append(f"count mismatch at {levels}")

    ok = not failures
    report(
        5, ok,
        "submultiplicativity, sandwich, cut sets, supermultiplicativity, "
        "Markov bounds, join closure, class counts all green"
        if ok else f"failed: {sorted(set(failures))[:4]}",
        time.perf_counter() - t0, 300.0,
    )


def test_acceptance_6_proof_machinery():
    t0 = time.perf_counter()
    # one diagonal and one sheared map, so the checks see genuinely
    # non-self-adjoint compositions
    ifs = ad.AffineIFS(
        maps=(np.diag([0.5, 0.3]), np.array([[0.4, 0.1], [0.0, 0.35]]))
    )
    model = ad.BernoulliModel(probs=(0.6, 0.4))
    parts = []
    ok = True

    # Product bound over every enumerated class at three settings.
    for s, q in ((0.40, 16.0), (0.55, 20.0), (0.70, 30.0)):
        d_q = ad.d_q_minus(ifs, model, q).value
        rows = ad.prop71_survey(ifs, model, s=s, q=q, depth=4, max_spread=4)
        all_hold = bool(rows) and all(r.holds for r in rows)
        ok &= all_hold and s < d_q
        parts.append(f"bound {len(rows)}/{len(rows)} classes at (s={s}, q={q})"
                     if all_hold else f"bound VIOLATED at (s={s}, q={q})")

    # Monte Carlo vs exact truncated values across the cell grid.
    worst_z = 0.0
    for n, q, depth in [
        (1, 1.5, 5), (1, 2.0, 6), (2, 2.5, 5), (2, 3.0, 6), (3, 3.5, 5), (3, 4.0, 6),
    ]:
        exact = ad.exact_truncated_multienergy(ifs, model, s=0.55, n=n, q=q, depth=depth)
        mc = ad.mc_multienergy(
            ifs, model, s=0.55, n=n, q=q, samples=640, depth=depth,
            seed=7, inner=256, unresolved="collapse",
        )
        z = abs(mc.value - exact) / mc.stderr
        worst_z = max(worst_z, z)
        ok &= z < 3.0
    parts.append(f"mc vs exact worst |z| = {worst_z:.2f} over 6 cells (limit 3)")

    # Decay criterion straddling d_q: geometric below, divergent above,
    # cross-checked against the truncated values' behavior in depth.
    d2 = ad.d_q_minus(ifs, model, 2.0).value
    dichotomy = True
    for s, expect in (
        (d2 - 0.15, True), (d2 - 0.05, True), (d2 + 0.05, False), (d2 + 0.15, False),
    ):
        chk = ad.check_decay_criterion(ifs, model, s, 2.0, k_max=9)
        dichotomy &= chk.geometric == expect
        vals = [
            ad.exact_truncated_multienergy(ifs, model, s=s, n=1, q=2.0, depth=D)
            for D in (4, 6, 8)
        ]
        inc = (vals[1] - vals[0], vals[2] - vals[1])
        if expect:
            dichotomy &= inc[1] < inc[0]  # increments shrink: value settling
        else:
            dichotomy &= inc[1] > inc[0] * 0.9  # keeps growing
    ok &= dichotomy
    parts.append("decay flag matches truncated-value behavior on both sides"
                 if dichotomy else "decay dichotomy FAILED")

    report(6, ok, "; ".join(parts), time.perf_counter() - t0, 600.0)


def test_acceptance_7_reproducible_clouds(tmp_path, capsys):
    t0 = time.perf_counter()
    from affdims.cli import main

    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[run]\nseed = 4242\n"
        "[ifs]\ndim = 2\nmap1 = 0.5 0 / 0 0.3\nmap2 = 0.4 0 / 0 0.35\n"
        "[measure]\ntype = bernoulli\nprobs = 0.6 0.4\n"
        "[sample]\nn = 20000\ndepth = 20\n"
    )
    digests = []
    for tag, threads in (("r1", "1"), ("r2", "1"), ("r8", "8")):
        out = tmp_path / tag
        code = main([
            "sample", "--config", str(cfg), "--out", str(out),
            "--threads", threads,
        ])
        capsys.readouterr()
        assert code == 0
        import hashlib

        digests.append(hashlib.sha256((out / "cloud.txt").read_bytes()).hexdigest())
    ok = len(set(digests)) == 1
    report(
        7, ok,
        f"cloud sha256 {digests[0][:12]} identical across reruns and "
        f"thread counts 1 vs 8",
        time.perf_counter() - t0, 120.0,
    )
