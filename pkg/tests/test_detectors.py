import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcdep.detectors import (
    BlockPartition,
    HCGrid,
    LevelSpec,
    block_constancy,
    default_grid,
    hc_detect,
    hc_statistic,
    level_exceedance,
    max_classifier,
    max_threshold,
    ndd_detect,
    ndd_threshold,
)
from hcdep.errors import DegenerateRegimeError, DomainError, EmptyGridError
from hcdep.experiments import table1_summary
from hcdep.gp import AutocovSpec, CirculantSampler
from hcdep.rng import Stream


def textbook_hc(x, levels, t_n, kappa=0.0):
    """Direct loop over candidates with both comparison senses."""
    n = len(x)
    cands = [t for t in levels if -t_n <= t <= t_n] + [v for v in x if -t_n <= v <= t_n]
    best = -math.inf
    for t in cands:
        sf = 0.5 * math.erfc(t / math.sqrt(2))
        scale = math.sqrt(n * (1 - sf) * sf)
        for count in (sum(v > t for v in x), sum(v >= t for v in x)):
            best = max(best, (count - n * sf) / scale)
    return best, best * n ** (-kappa / 2)


def grid_at(levels, t_n=3.0, kappa=0.0, mode="signed", include_data=True):
    return HCGrid(t_n, kappa, mode, np.asarray(levels, dtype=float), include_data)


class TestGrid:
    def test_t_n_example(self):
        g = default_grid(AutocovSpec(2**10, 0.5, 0.1))
        assert g.t_n == pytest.approx(2.6601, abs=1e-3)
        assert len(g.levels) == 512
        assert g.levels[0] == -g.t_n and g.levels[-1] == g.t_n

    def test_t_n_independent(self):
        g = default_grid(AutocovSpec(100, 1.0, 0.0))
        assert g.t_n == pytest.approx(2.3263, abs=1e-3)

    def test_resolution_two(self):
        g = default_grid(AutocovSpec(1000, 1.0, 0.3), resolution=2)
        assert list(g.levels) == [-g.t_n, g.t_n]
        assert g.include_data

    def test_degenerate(self):
        with pytest.raises(DegenerateRegimeError):
            default_grid(AutocovSpec(1000, 0.5, 0.6))

    def test_bad_inputs(self):
        with pytest.raises(DomainError):
            default_grid(AutocovSpec(1000, 1.0, 0.3), resolution=1)
        with pytest.raises(DomainError):
            grid_at([0.0], mode="both")
        with pytest.raises(EmptyGridError):
            grid_at([], include_data=False)


class TestHC:
    def test_single_positive(self):
        res = hc_statistic([1.0], grid_at([0.0], include_data=False))
        assert res.hc == pytest.approx(1.0)
        assert res.argmax_t == 0.0

    def test_single_negative_signed(self):
        assert hc_statistic([-1.0], grid_at([0.0], include_data=False)).hc == pytest.approx(-1.0)

    def test_single_negative_absolute(self):
        g = grid_at([0.0], mode="absolute", include_data=False)
        assert hc_statistic([-1.0], g).hc == pytest.approx(1.0)

    def test_centered_level_contributes_zero(self):
        # Two of four values above 0 is exactly n * sf(0).
        res = hc_statistic([-2.0, -1.0, 1.0, 2.0], grid_at([0.0], include_data=False))
        assert res.hc == pytest.approx(0.0, abs=1e-15)

    def test_normalization(self):
        x = Stream(1, 0).normals(500)
        g = grid_at(np.linspace(-2, 2, 9), t_n=2.5, kappa=0.3)
        res = hc_statistic(x, g)
        assert res.hc_normalized * 500**0.15 == pytest.approx(res.hc, rel=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 5, 9, 16])
    def test_matches_textbook_oracle(self, n):
        for seed in range(10):
            x = Stream(seed, n).normals(n)
            levels = np.linspace(-2.2, 2.2, 7)
            res = hc_statistic(x, grid_at(levels, t_n=2.2))
            ref, _ = textbook_hc(list(x), levels, 2.2)
            assert res.hc == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_matches_oracle_with_ties(self):
        x = [0.5, 0.5, 0.5, -1.0, 2.0, 2.0]
        levels = [0.0, 0.5, 1.0]
        ref, _ = textbook_hc(x, levels, 2.5)
        assert hc_statistic(x, grid_at(levels, t_n=2.5)).hc == pytest.approx(ref, rel=1e-12)

    def test_matches_oracle_on_default_grid(self):
        spec = AutocovSpec(200, 1.0, 0.0)
        x = Stream(4, 4).normals(200)
        g = default_grid(spec)
        ref, ref_norm = textbook_hc(list(x), g.levels, g.t_n)
        res = hc_statistic(x, g)
        assert res.hc == pytest.approx(ref, rel=1e-9)
        assert res.hc_normalized == pytest.approx(ref_norm, rel=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-4, 4), min_size=1, max_size=40), st.floats(0.001, 3))
    def test_shift_monotone(self, xs, c):
        g = grid_at(np.linspace(-2.5, 2.5, 11), t_n=2.5, include_data=False)
        x = np.array(xs)
        assert hc_statistic(x + c, g).hc >= hc_statistic(x, g).hc - 1e-12

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-4, 4), min_size=1, max_size=40), st.randoms())
    def test_permutation_invariant(self, xs, rnd):
        g = grid_at(np.linspace(-2.5, 2.5, 11), t_n=2.5)
        perm = list(xs)
        rnd.shuffle(perm)
        assert hc_statistic(perm, g).hc == hc_statistic(xs, g).hc

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            hc_statistic([], grid_at([0.0]))

    def test_empty_range(self):
        g = grid_at([5.0], t_n=1.0, include_data=True)
        with pytest.raises(EmptyGridError):
            hc_statistic([4.0, 6.0], g)

    def test_detect_decision(self):
        g = grid_at([0.0], include_data=False)
        det = hc_detect([1.0], g, threshold=1.0)
        assert det.decision and det.detector == "hc"
        assert not hc_detect([1.0], g, threshold=1.01).decision
        assert set(det.to_json()) == {"detector", "statistic", "normalized", "threshold",
                                      "decision", "argmax_t"}

    def test_refinement_insensitivity(self):
        coarse = table1_summary([2**10], reps=100, master_seed=3, refinement=128)[0]
        fine = table1_summary([2**10], reps=100, master_seed=3, refinement=512)[0]
        assert abs(coarse.mean - fine.mean) <= 0.05
        assert abs(coarse.sd - fine.sd) <= 0.05


class TestMax:
    def test_n_one(self):
        det = max_classifier([0.3])
        assert det.threshold == 0.0 and det.decision

    def test_threshold_value(self):
        assert max_threshold(100) == pytest.approx(3.0349, abs=1e-4)

    def test_below_threshold(self):
        det = max_classifier(np.r_[np.zeros(99), 3.0])
        assert not det.decision
        assert det.normalized == pytest.approx(3.0 / 3.0349, abs=1e-4)

    @given(st.lists(st.floats(-100, -1e-9), min_size=2, max_size=50))
    def test_all_negative(self, xs):
        assert not max_classifier(xs).decision

    def test_empty(self):
        with pytest.raises(DomainError):
            max_classifier([])


class TestNDD:
    def test_constant(self):
        det = ndd_detect(np.full(50, 1.3), 0.5, 1.0)
        assert det.statistic == 0 and not det.decision

    def test_threshold_value(self):
        exact = 2 * math.sqrt(2**-5 * 10 * math.log(2))
        assert ndd_threshold(2**10, 0.5, 1.0) == pytest.approx(exact, rel=1e-14)
        assert ndd_threshold(2**10, 0.5, 1.0) == pytest.approx(0.93079, abs=1e-4)

    def test_spike(self):
        x = np.zeros(2**10)
        thr = ndd_threshold(2**10, 0.5, 1.0)
        x[500] = 2 * thr
        det = ndd_detect(x, 0.5, 1.0)
        assert det.decision
        d = np.abs(np.diff(x))
        assert d[499] > thr and d[500] > thr

    def test_null_differences(self):
        spec = AutocovSpec(2**12, 1.0, 0.5)
        x = CirculantSampler(spec).batch(1, 0, 200)
        d = np.diff(x, axis=1).ravel()
        target = 2 * spec.n ** -spec.alpha0
        # Differences are 1-dependent-ish; use a generous effective count.
        se = target * math.sqrt(2 / (len(d) / 4))
        assert abs(d.var() - target) <= 4 * se

    def test_bad_inputs(self):
        with pytest.raises(DomainError):
            ndd_detect([1.0], 0.5, 1.0)
        with pytest.raises(DomainError):
            ndd_detect([1.0, 2.0], 0.5, 0.5)


class TestBlocks:
    def test_constant_data(self):
        x = np.full(30, 0.7)
        part = BlockPartition(30, 7)
        for t in (-1.0, 0.0, 0.69, 0.71, 3.0):
            assert block_constancy(x, t, part)[0]

    def test_unit_blocks(self):
        x = Stream(2, 2).normals(40)
        assert block_constancy(x, 0.0, BlockPartition(40, 1))[0]

    def test_two_values(self):
        ok, frac = block_constancy([1.0, -1.0], 0.0, BlockPartition(2, 2))
        assert not ok
        assert frac.tolist() == [0.5]

    def test_partial_last_block(self):
        part = BlockPartition(5, 2)
        assert part.b == 3 and part.starts.tolist() == [0, 2, 4]
        ok, frac = block_constancy([1, 1, -1, 1, 5], 0.0, part)
        assert frac.tolist() == [1.0, 0.5, 1.0] and not ok

    def test_from_exponent(self):
        part = BlockPartition.from_exponent(4096, 0.48, 0.6)
        assert part.block_len == math.floor(4096**0.48)
        with pytest.raises(DomainError):
            BlockPartition.from_exponent(4096, 0.7, 0.6)
        with pytest.raises(DomainError):
            BlockPartition.from_exponent(4096, 0.0)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            block_constancy([1.0, 2.0], 0.0, BlockPartition(3, 1))


class TestLevel:
    def test_level_value(self):
        assert LevelSpec(1.0, 2**16).t == pytest.approx(4.7096, abs=1e-4)

    def test_zero_level(self):
        assert level_exceedance([-3.0, 0.1], LevelSpec(0.0, 2))

    def test_no_exceedance(self):
        for q in (0.1, 0.5, 2.0):
            assert not level_exceedance(np.full(10, -1.0), LevelSpec(q, 10))

    def test_bad(self):
        with pytest.raises(DomainError):
            LevelSpec(-0.1, 10)
