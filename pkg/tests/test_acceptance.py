"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (printed in the terminal summary and
immediately on stdout) and then asserts the same condition, so a red
criterion shows up both in the summary and as a failed test.
"""

import math
import time

import pytest

from hcdep import checks, cli

SEED = checks.DEFAULT_SEED


def emit(acceptance_line, number, title, passed, detail):
    acceptance_line(number, title, passed, detail)
    print(f"{'PASS' if passed else 'FAIL'}  [{number}] {title}: {detail}")
    return passed


def test_01_null_summary_table(acceptance_line):
    ref = {1024: (1.0273, 0.6234), 4096: (1.0504, 0.4290),
           16384: (0.9162, 0.3810), 65536: (0.8851, 0.4086)}
    rows = checks.table1(seed=SEED, reps=100)["rows"]
    ok = len(rows) == 4 and all(
        abs(r["mean"] - ref[r["n"]][0]) <= 0.15 and abs(r["sd"] - ref[r["n"]][1]) <= 0.15
        for r in rows)
    detail = "; ".join(f"n={r['n']} mean={r['mean']:.4f} sd={r['sd']:.4f}" for r in rows)
    assert emit(acceptance_line, 1, "null mean/SD of n^-0.1 hc within 0.15", ok, detail)


def test_02_error_rates_sparse_case(acceptance_line):
    rows = checks.error_table_case1(seed=SEED, reps=100)["rows"]
    ok = len(rows) == 4 and all(r["type1"] <= 0.05 and r["type2"] <= 0.12 for r in rows)
    detail = "; ".join(f"a0={r['alpha0']} I={r['type1']:.2f} II={r['type2']:.2f}" for r in rows)
    assert emit(acceptance_line, 2, "(0.6, 0.35) thr 2.2: type I <= 0.05, type II <= 0.12",
                ok, detail)


def test_03_error_rates_boundary_case(acceptance_line):
    t1_ref = (0.25, 0.02, 0.02, 0.03)
    t2_ref = (0.04, 0.10, 0.21, 0.41)
    rows = checks.error_table_case2(seed=SEED, reps=100)["rows"]
    ok = len(rows) == 4 and all(
        abs(r["type1"] - a) <= 0.10 and abs(r["type2"] - b) <= 0.12
        for r, a, b in zip(rows, t1_ref, t2_ref))
    detail = "; ".join(f"a0={r['alpha0']} I={r['type1']:.2f} II={r['type2']:.2f}" for r in rows)
    assert emit(acceptance_line, 3, "(0.75, 0.5) thr 1.7: rates within 0.10 / 0.12 of reference",
                ok, detail)


def test_04_simulator_exactness(acceptance_line):
    start = time.perf_counter()
    res = checks.simulator(seed=SEED, count=200_000)
    elapsed = time.perf_counter() - start
    ok = (res["max_lag_cov_error"] <= 0.01 and res["max_oracle_z"] <= res["z_critical"]
          and elapsed <= 60.0)
    detail = (f"max |cov - rho| = {res['max_lag_cov_error']:.4f}, "
              f"max oracle z = {res['max_oracle_z']:.2f} (crit {res['z_critical']:.2f}), "
              f"{elapsed:.1f}s")
    assert emit(acceptance_line, 4, "n=64, 200k paths: lag covariance within 0.01, matches oracle",
                ok, detail)


def test_05_conditional_tail_deficit(acceptance_line):
    rows = checks.tail_deficit()["rows"]
    ok = len(rows) == 6 and all(0.85 <= r["ratio"] <= 1.15 for r in rows)
    detail = ", ".join(f"{r['ratio']:.3f}" for r in rows)
    assert emit(acceptance_line, 5, "deficit ratio within 15% for t in {4,5,6}", ok,
                "ratios " + detail)


def test_06_variance_exponent(acceptance_line):
    rows = checks.variance_scaling(seed=SEED, reps=2000)["rows"]
    expected = {0.5: 1.5, 1.5: 2.0}
    ok = len(rows) == 2 and all(abs(r["slope"] - expected[r["kappa"]]) <= 0.15 for r in rows)
    detail = "; ".join(f"kappa={r['kappa']} slope={r['slope']:.3f}" for r in rows)
    assert emit(acceptance_line, 6, "variance slope min(kappa+1, 2) +- 0.15", ok, detail)


def test_07_block_clumping(acceptance_line):
    res = checks.block_clumping(seed=SEED, paths=2000)
    constancy = res["constancy_fraction"] >= 0.9
    degrade = res["conditional_agreement_full"] < res["conditional_agreement"]
    ok = constancy and degrade
    detail = (f"constancy {res['constancy_fraction']:.4f} (need >= 0.9); conditional agreement "
              f"{res['conditional_agreement']:.3f} -> {res['conditional_agreement_full']:.3f} at "
              f"full blocks; exact embedding {res['exact_embedding']}")
    assert emit(acceptance_line, 7, "block constancy at lambda = 0.8 kappa, n=4096", ok, detail)


def test_08_no_crossing_above_boundary(acceptance_line):
    res = checks.exceedance(seed=SEED, paths=2000)
    ok = res["exceedance_rate"] <= 0.05
    detail = (f"kappa=0.5 (alpha={res['alpha']}), t={res['t']:.3f}: "
              f"rate {res['exceedance_rate']:.4f} (need <= 0.05)")
    assert emit(acceptance_line, 8, "level exceedance q=0.75, n=2^14", ok, detail)


def test_09_neighbor_difference(acceptance_line):
    res = checks.ndd(seed=SEED, reps=500)
    ok = res["false_alarm"] <= 0.02 and res["miss"] <= 0.02
    detail = f"false alarm {res['false_alarm']:.3f}, miss {res['miss']:.3f}"
    assert emit(acceptance_line, 9, "NDD r=4, C=2, n=2^14", ok, detail)


def test_10_max_classifier(acceptance_line):
    rows = checks.max_classifier(seed=SEED, reps=500)["rows"]
    kappas = sorted(round(r["kappa"], 12) for r in rows)
    ok = kappas == [0.0, 0.3] and all(
        r["detection"] >= 0.95 and r["false_alarm"] <= 0.05 for r in rows)
    # Exact false-alarm rate under iid noise, for the record.
    n = 2**16
    iid = 1.0 - (1.0 - 0.5 * math.erfc(math.sqrt(2 * math.log(n)) / math.sqrt(2))) ** n
    detail = "; ".join(f"kappa={r['kappa']:.1f} detect={r['detection']:.3f} "
                       f"false alarm={r['false_alarm']:.3f}" for r in rows)
    detail += f"; exact iid false alarm {iid:.4f}"
    assert emit(acceptance_line, 10, "max classifier beta=0.6, r=0.5, n=2^16", ok, detail)


def test_11_thread_count_does_not_change_outputs(acceptance_line, tmp_path):
    argv = ["mc", "--n", "65536", "--alpha", "0.5", "--alpha0", "0.1", "--beta", "0.6",
            "--r", "0.35", "--detector", "hc", "--threshold", "2.2", "--reps", "100",
            "--seed", "7"]
    outputs = []
    for threads in (1, 4):
        target = tmp_path / f"rep{threads}.json"
        assert cli.main(argv + ["--threads", str(threads), "--out", str(target)]) == 0
        outputs.append(target.read_bytes())
    table = []
    for threads in (1, 3):
        target = tmp_path / f"ndd{threads}.json"
        assert cli.main(["check", "--name", "ndd", "--seed", str(SEED), "--threads",
                         str(threads), "--out", str(target)]) == 0
        table.append(target.read_bytes())
    ok = outputs[0] == outputs[1] and table[0] == table[1]
    detail = (f"mc report {len(outputs[0])} bytes identical={outputs[0] == outputs[1]}; "
              f"ndd check identical={table[0] == table[1]}")
    assert emit(acceptance_line, 11, "byte-identical outputs across thread counts", ok, detail)


@pytest.mark.parametrize("criterion", range(1, 12))
def test_every_criterion_has_a_test(criterion):
    names = [n for n in globals() if n.startswith(f"test_{criterion:02d}_")]
    assert len(names) == 1
