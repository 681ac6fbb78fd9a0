"""End-to-end acceptance checks, one numbered criterion per test.

Every test prints a single "[k] <what>: PASS|FAIL" summary line before its
assertions, so a red run still reports each criterion's verdict.  Criterion
7 prints its three sub-verdicts; part (b) states a comparative advantage
the lifts estimator does not have at matched unique-evaluation counts, so
that assertion is expected to fail (see notes in the convergence test).
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from shapattr import (
    Configuration,
    MetricDecomposition,
    QuadraticEvaluator,
    RelabeledEvaluator,
    SamplerConfig,
    SyntheticRebalanceEvaluator,
    TableEvaluator,
    attribute_decomposed,
    ensure_cached,
    leave_one_out,
    one_at_a_time,
    run_convergence_study,
    sequential,
    shapley_by_permutations,
    shapley_exact,
    shapley_sampling_lifts,
    shapley_sampling_sequences,
    shapley_weights,
)
from shapattr.cli import main
from shapattr.montecarlo import sample_lift_masks

from conftest import random_table

REPO = Path(__file__).resolve().parents[1]


def report(k: int, what: str, ok: bool) -> None:
    print(f"[{k}] {what}: {'PASS' if ok else 'FAIL'}")


def unattributed(res) -> float:
    return res.full_value - res.baseline - math.fsum(res.attributions)


def cells_close(res, expected, tol=1e-9) -> bool:
    base, attrs, unattr = expected
    return (
        abs(res.baseline - base) <= tol
        and all(abs(a - e) <= tol for a, e in zip(res.attributions, attrs))
        and abs(unattributed(res) - unattr) <= tol
    )


def run_all_basic(ev):
    cache = ensure_cached(ev)
    return {
        "one_at_a_time": one_at_a_time(cache)[0],
        "leave_one_out": leave_one_out(cache)[0],
        "sequential": sequential(cache)[0],
        "shapley_exact": shapley_exact(cache)[0],
    }


def test_criterion_1_interaction_counter_example(counter_table):
    # f = OR(x1, x2): the four methods must land on exactly these splits
    t0 = min_time(lambda: run_all_basic(counter_table))
    res = run_all_basic(counter_table)
    checks = {
        "one_at_a_time": res["one_at_a_time"].attributions == (1.0, 1.0)
        and unattributed(res["one_at_a_time"]) == -1.0,
        "leave_one_out": res["leave_one_out"].attributions == (0.0, 0.0)
        and unattributed(res["leave_one_out"]) == 1.0,
        "sequential": res["sequential"].attributions == (1.0, 0.0)
        and unattributed(res["sequential"]) == 0.0,
        "shapley_exact": res["shapley_exact"].attributions == (0.5, 0.5)
        and unattributed(res["shapley_exact"]) == 0.0,
        "runtime": t0 < 1e-3,
    }
    ok = all(checks.values())
    report(1, "two-feature interaction counter-example, all methods exact", ok)
    for name, passed in checks.items():
        assert passed, f"criterion 1: {name} (elapsed {t0 * 1e3:.3f}ms)"


def min_time(fn, repeats: int = 5) -> float:
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def test_criterion_2_two_feature_returns_table(returns_table):
    expected = {
        "one_at_a_time": (6.4, (-1.2, 3.0), 0.1),
        "leave_one_out": (6.4, (-1.1, 3.1), -0.1),
        "sequential": (6.4, (-1.2, 3.1), 0.0),
        "shapley_exact": (6.4, (-1.15, 3.05), 0.0),
    }
    t0 = min_time(lambda: run_all_basic(returns_table))
    res = run_all_basic(returns_table)
    checks = {name: cells_close(res[name], expected[name]) for name in expected}
    checks["runtime"] = t0 < 1e-3
    ok = all(checks.values())
    report(2, "annual-return fixture, every cell within 1e-9", ok)
    for name, passed in checks.items():
        assert passed, f"criterion 2: {name} (elapsed {t0 * 1e3:.3f}ms)"


def test_criterion_3_decomposed_metric_additivity():
    components = tuple(
        (name, TableEvaluator.from_path(REPO / "data" / f"returns_by_country_{name}.csv"))
        for name in ("uk", "jp", "us")
    )
    expected = {
        "one_at_a_time": {
            "uk": (4.0, (0.0, 4.0), 0.0),
            "jp": (-0.8, (-0.4, -0.2), -0.1),
            "us": (3.2, (-0.8, -0.8), 0.2),
            "total": (6.4, (-1.2, 3.0), 0.1),
        },
        "sequential": {
            "uk": (4.0, (0.0, 4.0), 0.0),
            "jp": (-0.8, (-0.4, -0.3), 0.0),
            "us": (3.2, (-0.8, -0.6), 0.0),
            "total": (6.4, (-1.2, 3.1), 0.0),
        },
        "shapley_exact": {
            "uk": (4.0, (0.0, 4.0), 0.0),
            "jp": (-0.8, (-0.45, -0.25), 0.0),
            "us": (3.2, (-0.7, -0.7), 0.0),
            "total": (6.4, (-1.15, 3.05), 0.0),
        },
    }
    checks = {}
    for method, per_entity in expected.items():
        dec = attribute_decomposed(MetricDecomposition(components), method)
        by_name = dict(dec.component_results)
        for entity, cells in per_entity.items():
            res = (
                dec.total_results[0]
                if entity == "total"
                else by_name[entity][0]
            )
            checks[f"{method}/{entity}"] = cells_close(res, cells)
        if method == "shapley_exact":
            for j in range(2):
                parts = math.fsum(
                    results[0].attributions[j]
                    for _, results in dec.component_results
                )
                checks[f"additivity/feat_{j + 1}"] = (
                    abs(parts - dec.total_results[0].attributions[j]) <= 1e-9
                )
    ok = all(checks.values())
    report(3, "per-country return split matches and adds up to the total", ok)
    for name, passed in checks.items():
        assert passed, f"criterion 3: {name}"


def test_criterion_4_exact_sweep_equals_permutation_average():
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    worst = 0.0
    for trial in range(200):
        n = 2 + trial % 6
        ev = random_table(rng, n, metric_names=("m1", "m2"))
        cache = ensure_cached(ev)
        exact = shapley_exact(cache)
        oracle = shapley_by_permutations(cache)
        for e, o in zip(exact, oracle):
            scale = max(1.0, max(abs(v) for v in o.attributions))
            worst = max(
                worst,
                max(abs(a - b) for a, b in zip(e.attributions, o.attributions)) / scale,
            )
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 30.0
    report(4, "weighted sweep equals all-orders average on 200 random tables", ok)
    assert worst <= 1e-10, f"criterion 4: worst relative deviation {worst:.3e}"
    assert elapsed < 30.0, f"criterion 4: took {elapsed:.1f}s"


def test_criterion_5_quadratic_closed_form_and_note():
    rng_seeds = range(50)
    worst_closed = 0.0
    worst_oracle = 0.0
    doubled_ratios = []
    for seed in rng_seeds:
        n = 3 + seed % 4
        ev = QuadraticEvaluator.wishart(n, seed=seed)
        cache = ensure_cached(ev)
        (exact,) = shapley_exact(cache)
        (oracle,) = shapley_by_permutations(cache)
        closed = ev.true_shapley()
        scale = max(1.0, float(np.abs(closed).max()))
        worst_closed = max(
            worst_closed,
            float(np.abs(np.array(exact.attributions) - closed).max()) / scale,
        )
        worst_oracle = max(
            worst_oracle,
            max(
                abs(a - b) for a, b in zip(exact.attributions, oracle.attributions)
            )
            / scale,
        )
        gap = exact.full_value - exact.baseline
        doubled_ratios.append(2.0 * math.fsum(exact.attributions) / gap)
    ok = worst_closed <= 1e-10 and worst_oracle <= 1e-10
    report(5, "quadratic evaluators: sweep == orders average == row sums", ok)

    notes_dir = REPO / "reports"
    notes_dir.mkdir(exist_ok=True)
    (notes_dir / "quadratic_attribution_note.md").write_text(
        quadratic_note(worst_closed, worst_oracle, doubled_ratios), encoding="utf-8"
    )

    assert worst_closed <= 1e-10, f"criterion 5: closed form off by {worst_closed:.3e}"
    assert worst_oracle <= 1e-10, f"criterion 5: oracle off by {worst_oracle:.3e}"


def quadratic_note(worst_closed, worst_oracle, doubled_ratios) -> str:
    lo, hi = f"{min(doubled_ratios):.12g}", f"{max(doubled_ratios):.12g}"
    span = lo if lo == hi else f"{lo} to {hi}"
    return f"""# Attribution for quadratic performance functions

For a performance function f(x) = x'Px over on/off feature vectors
x in {{0,1}}^n, with P symmetric positive semidefinite:

- baseline: f(0) = 0
- full value: f(1) = 1'P1
- exact order-free attribution: a_i = sum_j P_ij, i.e. a = P1 (row sums)

Writing f(x) = sum_i P_ii x_i + 2 sum_{{i<j}} P_ij x_i x_j, each diagonal
term belongs to feature i alone and each pairwise term is created jointly
by features i and j, which the order-averaged attribution splits evenly:
P_ij to each.  Summing a_i over i gives 1'P1 = f(1) - f(0) exactly, so
the attribution is complete: nothing is left over.

A tempting alternative closed form assigns a_i = 2 sum_j P_ij, crediting
each pairwise term in full to both of its features.  That variant cannot
be an attribution of f: its total is 2 * 1'P1, overshooting the value
actually created by exactly a factor of two for every nonzero P.

## Empirical check

Over 50 random positive-semidefinite matrices (dimensions 3 to 6, fixed
seeds), comparing the weighted-sweep attribution against the closed form
a = P1 and against the average of sequential attributions over all n!
activation orders:

- max relative deviation from a = P1: {worst_closed:.3e}
- max relative deviation from the all-orders average: {worst_oracle:.3e}
- total of the doubled variant over f(1) - f(0): {span}
  (always 2, never 1: it fails completeness on every matrix)
"""


def test_criterion_6_sampler_draws_match_target_weights():
    draws = 10**6
    worst_z = 0.0
    bad = []
    for n in (3, 4, 5):
        for i in range(n):
            rng = np.random.default_rng(np.random.SeedSequence((5, n, i)))
            masks = sample_lift_masks(n, i, draws, rng)
            vals, counts = np.unique(masks, return_counts=True)
            freq = dict(zip(vals.tolist(), counts.tolist()))
            w = shapley_weights(n)
            for mask in range(1 << n):
                if mask & (1 << i):
                    continue
                k = bin(mask).count("1")
                p = w[k]
                se = math.sqrt(p * (1 - p) / draws)
                z = abs(freq.get(mask, 0) / draws - p) / se
                worst_z = max(worst_z, z)
                if z >= 3.0:
                    bad.append((n, i, mask, z))
    norm_err = 0.0
    for n in range(1, 21):
        w = shapley_weights(n)
        total = math.fsum(math.comb(n - 1, k) * w[k] for k in range(n))
        norm_err = max(norm_err, abs(total - 1.0))
    ok = not bad and norm_err <= 1e-12
    report(6, "lift sampler hits the target weights to 3 standard errors", ok)
    assert norm_err <= 1e-12, f"criterion 6: weight normalization off by {norm_err:.3e}"
    assert not bad, f"criterion 6: cells beyond 3 SE {bad} (worst z {worst_z:.3f})"


def test_criterion_7_convergence_study():
    start = time.perf_counter()
    ev = QuadraticEvaluator.wishart(10, seed=7)
    study = run_convergence_study(
        ev,
        seeds=range(20),
        budget_sequences=4000,
        budget_lifts=2000,
        trace_every=64,
    )
    seq = study.mean_errors["sampling_sequences"][0]
    lift = study.mean_errors["sampling_lifts"][0]
    scaled = study.mean_errors["sampling_lifts_scaled"][0]

    # (a) with budgets covering all 1024 configurations, the final grid
    # point must be the exact sweep for both estimators
    ok_a = (
        study.saturated("sampling_sequences")
        and study.saturated("sampling_lifts")
        and seq[-1] <= 1e-10
        and lift[-1] <= 1e-10
    )

    # (b) at matched unique-evaluation counts, lifts should show lower
    # mean error than sequences on at least 70% of the comparable grid
    # points.  Measured: a permutation yields ~1.9x more per-feature
    # samples per unique evaluation than paired lift draws, so sequences
    # hold a ~sqrt(1.9) error advantage at every matched count and lifts
    # win 0% of points; asserted as stated and expected to fail.
    matched = ~np.isnan(seq) & ~np.isnan(lift) & ((seq > 1e-10) | (lift > 1e-10))
    wins = int(np.sum(lift[matched] < seq[matched]))
    total = int(np.sum(matched))
    ok_b = total > 0 and wins / total >= 0.70

    # (c) rescaling to full attribution should not cost more than 25%
    # extra error on average (points where the unscaled error is zero
    # carry no meaningful ratio and are skipped)
    comparable = ~np.isnan(lift) & ~np.isnan(scaled) & (lift > 1e-10)
    excess = (scaled[comparable] - lift[comparable]) / lift[comparable]
    ok_c = comparable.any() and float(excess.mean()) < 0.25

    elapsed = time.perf_counter() - start
    ok = ok_a and ok_b and ok_c and elapsed < 120.0
    print(
        f"[7] estimator convergence study: "
        f"(a) exact at saturation {'PASS' if ok_a else 'FAIL'}, "
        f"(b) lifts beat sequences at matched counts {'PASS' if ok_b else 'FAIL'} "
        f"({wins}/{total} points), "
        f"(c) mean scaling excess under 25% {'PASS' if ok_c else 'FAIL'} "
        f"({float(excess.mean()):+.1%}): {'PASS' if ok else 'FAIL'}"
    )
    assert ok_a, "criterion 7a: estimators not exact at saturation"
    assert ok_c, f"criterion 7c: mean scaling excess {float(excess.mean()):+.1%}"
    assert elapsed < 120.0, f"criterion 7: took {elapsed:.1f}s"
    assert ok_b, (
        f"criterion 7b: lifts beat sequences at {wins}/{total} matched grid "
        f"points, needed >=70%; at equal unique-evaluation counts the "
        f"permutation estimator extracts more samples per evaluation, so "
        f"this stated advantage does not exist"
    )


def test_criterion_8_attribution_desiderata():
    rng = np.random.default_rng(88)
    checks = {}

    # completeness: baseline + sum(attributions) == full value
    for trial in range(10):
        n = 3 + trial % 3
        ev = random_table(rng, n)
        cache = ensure_cached(ev)
        order = tuple(int(v) for v in rng.permutation(n))
        full = cache.evaluate(Configuration(n, (1 << n) - 1)).values[0]
        for name, res in {
            "sequential": sequential(cache, order=order)[0],
            "shapley_permutations": shapley_by_permutations(cache)[0],
            "shapley_exact": shapley_exact(cache)[0],
            "sampling_sequences": shapley_sampling_sequences(
                cache, SamplerConfig(budget=17, seed=trial)
            )[0][0],
        }.items():
            err = abs(unattributed(res)) / max(1.0, abs(full))
            checks[f"completeness/{name}/{trial}"] = err <= 1e-12

    # every method reports the all-off value as its baseline, exactly
    ev = random_table(rng, 4)
    cache = ensure_cached(ev)
    base = cache.evaluate(Configuration(4, 0)).values[0]
    for name, res in {
        "one_at_a_time": one_at_a_time(cache)[0],
        "leave_one_out": leave_one_out(cache)[0],
        "sequential": sequential(cache)[0],
        "shapley_exact": shapley_exact(cache)[0],
        "sampling_lifts": shapley_sampling_lifts(
            cache, SamplerConfig(budget=3, seed=0)
        )[0][0],
    }.items():
        checks[f"baseline/{name}"] = res.baseline == base

    # relabeling equivariance: renaming features permutes attributions
    ev = random_table(rng, 5)
    perm = (3, 1, 4, 0, 2)
    rel = ensure_cached(RelabeledEvaluator(ev, perm))
    cache = ensure_cached(ev)
    for name, fn in {
        "one_at_a_time": one_at_a_time,
        "leave_one_out": leave_one_out,
        "shapley_exact": shapley_exact,
    }.items():
        a = fn(cache)[0].attributions
        b = fn(rel)[0].attributions
        checks[f"equivariance/{name}"] = all(
            abs(b[j] - a[perm[j]]) <= 1e-12 * max(1.0, abs(a[perm[j]]))
            for j in range(5)
        )

    # sequential is order dependent, so relabeling must be able to break
    # it: with f = OR(x1, x2), the first feature activated takes the
    # whole lift, whichever one it is
    counter = TableEvaluator(
        2, ("value",), {0: (0.0,), 1: (1.0,), 2: (1.0,), 3: (1.0,)}
    )
    a = sequential(ensure_cached(counter))[0].attributions
    b = sequential(ensure_cached(RelabeledEvaluator(counter, (1, 0))))[0].attributions
    checks["sequential_not_equivariant"] = a == (1.0, 0.0) and b == (1.0, 0.0)

    # a feature with no effect anywhere gets exactly zero
    rows = {}
    inner = random_table(rng, 4)
    inner_cache = ensure_cached(inner)
    for mask in range(1 << 5):
        rows[mask] = inner_cache.evaluate(Configuration(4, mask & 0b1111)).values
    padded = ensure_cached(TableEvaluator(5, ("m1",), rows))
    for name, fn in {
        "one_at_a_time": one_at_a_time,
        "leave_one_out": leave_one_out,
        "shapley_exact": shapley_exact,
    }.items():
        checks[f"dummy/{name}"] = abs(fn(padded)[0].attributions[4]) <= 1e-12

    # marginalism: raising every lift of one feature by c moves exactly
    # that attribution, by exactly c
    ev = random_table(rng, 4)
    cache = ensure_cached(ev)
    c = 2.5
    bumped_rows = {
        mask: (cache.evaluate(Configuration(4, mask)).values[0]
               + (c if mask & 0b10 else 0.0),)
        for mask in range(16)
    }
    bumped = ensure_cached(TableEvaluator(4, ("m1",), bumped_rows))
    a = shapley_exact(cache)[0].attributions
    b = shapley_exact(bumped)[0].attributions
    checks["marginalism/target"] = abs(b[1] - (a[1] + c)) <= 1e-12 * max(1.0, abs(a[1] + c))
    checks["marginalism/others"] = all(
        abs(b[j] - a[j]) <= 1e-12 * max(1.0, abs(a[j])) for j in (0, 2, 3)
    )

    ok = all(checks.values())
    report(8, "completeness, baselines, relabeling, dummies, marginalism", ok)
    for name, passed in checks.items():
        assert passed, f"criterion 8: {name}"


def test_criterion_9_synthetic_backtest_phenomena():
    start = time.perf_counter()
    ev = SyntheticRebalanceEvaluator(seed=0)
    cache = ensure_cached(ev)
    assert ev.feature_names[5] == "risk_limit"
    assert ev.feature_names[6] == "smoothing"

    oaat = one_at_a_time(cache)
    loo = leave_one_out(cache)
    shap = shapley_exact(cache)
    by_metric = {r.metric: i for i, r in enumerate(shap)}
    risk = by_metric["active_risk"]
    turn = by_metric["turnover"]

    checks = {}
    for res in shap:
        tol = 1e-9 * max(1.0, abs(res.full_value))
        checks[f"shapley_residual/{res.metric}"] = abs(unattributed(res)) <= tol
    # interactions push the two single-configuration diagnostics to
    # opposite sides of the truth on active risk: each feature alone adds
    # risk that diversifies away jointly, so the sum of solo lifts
    # overshoots (negative leftover) while drop-one lifts undershoot
    checks["oaat_overshoots_risk"] = unattributed(oaat[risk]) < 0.0
    checks["loo_undershoots_risk"] = unattributed(loo[risk]) > 0.0
    # trade smoothing: scanning it alone on top of the empty strategy
    # adds turnover, but across full strategies it removes a lot
    checks["oaat_smoothing_adds_turnover"] = oaat[turn].attributions[6] > 0.0
    checks["shapley_smoothing_cuts_turnover"] = shap[turn].attributions[6] < 0.0

    elapsed = time.perf_counter() - start
    checks["runtime"] = elapsed < 60.0
    ok = all(checks.values())
    report(9, "synthetic backtest shows the method pathologies", ok)
    for name, passed in checks.items():
        assert passed, f"criterion 9: {name} (elapsed {elapsed:.1f}s)"


def test_criterion_10_cli_determinism_across_threads(tmp_path):
    job = REPO / "jobs" / "quadratic_sampling.yaml"
    outputs = []
    for threads in (1, 2, 8):
        out = tmp_path / f"report_{threads}.json"
        rc = main(
            ["attribute", str(job), "--output", str(out), "--threads", str(threads)]
        )
        assert rc == 0, f"criterion 10: exit code {rc} at threads={threads}"
        outputs.append(out.read_bytes())
    rerun = tmp_path / "rerun.json"
    rc = main(["attribute", str(job), "--output", str(rerun), "--threads", "2"])
    assert rc == 0
    outputs.append(rerun.read_bytes())
    ok = all(b == outputs[0] for b in outputs[1:])
    report(10, "stochastic job output is byte-identical across thread counts", ok)
    assert ok, "criterion 10: outputs differ across runs or thread counts"
