import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from lenscran.quantizer import (BitAllocation, allocate_bits, bisect_water_level,
                                fronthaul_budget_bits, iteration_bound, probe_power, quantization_noise,
                                quantize, round_allocation, solve_relaxed_allocation,
                                uniform_allocation, write_allocation_csv)


def objective(rho, bits):
    # [DERIVED] the objective keeps 3 rho for b = 0, so dropping an antenna is penalized
    return float(np.sum(3.0 * np.asarray(rho) / 4.0 ** np.asarray(bits)))


def brute_force(rho, budget):
    best = math.inf
    for combo in itertools.product(range(int(budget) + 1), repeat=len(rho)):
        if sum(combo) <= budget:
            best = min(best, objective(rho, combo))
    return best


rho_lists = st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=6)


class TestNoiseModel:
    def test_values(self):
        assert quantization_noise(1.0, 1) == pytest.approx(0.75)
        assert quantization_noise(4.0, 2) == pytest.approx(0.75)
        assert quantization_noise(2.0, 0) == 0.0

    def test_budget(self):
        # [TRIVIAL] 3 sectors * 0.4 Gbps / (2 * 200 MHz)
        assert fronthaul_budget_bits(0.4e9, 3, 200e6) == pytest.approx(3.0)
        assert fronthaul_budget_bits(2e9, 1, 200e6) == pytest.approx(5.0)

    def test_probe_power(self):
        assert probe_power(np.array([[1, 1j, -1, 1]])) == pytest.approx([1.0])
        with pytest.raises(ValueError):
            probe_power(np.zeros((2, 0)))
        with pytest.raises(ValueError):
            probe_power(np.ones((2, 5)), min_samples=21)


class TestRelaxed:
    def test_equal_powers(self):
        np.testing.assert_allclose(solve_relaxed_allocation([1.0, 1.0, 1.0], 6), [2, 2, 2])

    def test_dominant_antenna(self):
        # [DERIVED] log2(4/1)/2 = 1 bit of head start for the stronger antenna
        np.testing.assert_allclose(solve_relaxed_allocation([4.0, 1.0], 3), [2, 1])

    def test_water_filling_inactive(self):
        b = solve_relaxed_allocation([1.0, 1e-6], 2)
        np.testing.assert_allclose(b, [2, 0])

    def test_kkt(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            rho = 10 ** rng.uniform(-3, 3, size=rng.integers(1, 9))
            budget = float(rng.uniform(0.5, 20))
            b = solve_relaxed_allocation(rho, budget)
            assert b.sum() == pytest.approx(budget, abs=1e-6)
            active = b > 0
            # active antennas share one water level: rho / 4**b constant
            level = rho[active] / 4.0 ** b[active]
            np.testing.assert_allclose(level, level[0], rtol=1e-8)
            assert np.all(rho[~active] <= level[0] * (1 + 1e-8))

    def test_errors(self):
        with pytest.raises(ValueError):
            solve_relaxed_allocation([1.0], 0)
        with pytest.raises(ValueError):
            solve_relaxed_allocation([0.0, 0.0], 2)
        with pytest.raises(ValueError):
            solve_relaxed_allocation([-1.0, 1.0], 2)

    @settings(max_examples=100, deadline=None)
    @given(rho_lists, st.floats(0.5, 12))
    def test_relaxed_is_feasible_and_tight(self, rho, budget):
        b = solve_relaxed_allocation(rho, budget)
        assert np.all(b >= 0)
        assert b.sum() == pytest.approx(budget, abs=1e-6)

    def test_bisection_iterations(self):
        rng = np.random.default_rng(1)
        for tol in (1e-3, 1e-6, 1e-9):
            rho = rng.uniform(0.1, 1, 5)
            lo, hi, its = bisect_water_level(rho, 4.0, tol)
            assert hi - lo < tol
            assert its <= math.ceil(math.log2(1 / tol)) + 1
            assert iteration_bound(1 / (6 * math.log(2)), tol) == pytest.approx(2 * math.log2(1 / tol))


class TestRounding:
    def test_examples(self):
        np.testing.assert_array_equal(allocate_bits([4.0, 1.0], 3).bits, [2, 1])
        np.testing.assert_array_equal(round_allocation(np.array([1.6, 1.4]), 3), [2, 1])
        np.testing.assert_array_equal(round_allocation(np.array([0.0, 2.5]), 3), [0, 3])

    def test_matches_enumeration(self):
        # [DERIVED] exhaustive search over all integer allocations
        rng = np.random.default_rng(5)
        for _ in range(100):
            q = int(rng.integers(1, 7))
            rho = 10 ** rng.uniform(-2, 2, q)
            budget = int(rng.integers(1, 13))
            got = objective(rho, allocate_bits(rho, budget).bits)
            assert got <= 1.05 * brute_force(rho, budget)

    @settings(max_examples=100, deadline=None)
    @given(rho_lists, st.integers(1, 12))
    def test_integer_feasible(self, rho, budget):
        alloc = allocate_bits(rho, budget)
        assert alloc.bits.dtype.kind == "i"
        assert np.all(alloc.bits >= 0)
        assert alloc.bits.sum() <= budget

    @settings(max_examples=60, deadline=None)
    @given(rho_lists, st.integers(1, 11))
    def test_monotone_in_budget(self, rho, budget):
        small = objective(rho, allocate_bits(rho, budget).bits)
        large = objective(rho, allocate_bits(rho, budget + 1).bits)
        assert large <= small * (1 + 1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(1e-2, 1e2), min_size=2, max_size=6), st.integers(1, 12))
    def test_stronger_gets_at_least_as_many(self, rho, budget):
        assume(len(set(rho)) == len(rho))
        bits = allocate_bits(rho, budget).bits
        order = np.argsort(rho)
        assert np.all(np.diff(bits[order]) >= 0)

    def test_allocation_record(self):
        a = allocate_bits([4.0, 1.0, 1e-9], 3)
        np.testing.assert_array_equal(a.selected, [0, 1])
        assert a.n_selected == 2
        np.testing.assert_allclose(a.eps2, [0.75, 0.75, 0.0])

    def test_uniform(self):
        u = uniform_allocation(np.array([1.0, 0.0, 2.0]))
        np.testing.assert_array_equal(u.bits, [16, 0, 16])
        assert isinstance(u, BitAllocation)


class TestQuantize:
    def test_one_bit_levels(self):
        out = quantize(np.array([0.3 - 0.1j, -5 + 5j]), 2.0, 1)
        # step 3, levels +-1.5
        np.testing.assert_allclose(out, [1.5 - 1.5j, -1.5 + 1.5j])

    def test_in_range_error_bounded(self):
        rng = np.random.default_rng(0)
        y = rng.uniform(-1, 1, 1000) + 1j * rng.uniform(-1, 1, 1000)
        out = quantize(y, 2.0, 4)
        step = 2 * 3.0 / 16
        assert np.max(np.abs((out - y).real)) <= step / 2 + 1e-12

    def test_per_row_settings(self):
        y = np.full((2, 3), 0.1 + 0.1j)
        out = quantize(y, np.array([2.0, 2.0]), np.array([1, 2]))
        np.testing.assert_allclose(out[0], 1.5 + 1.5j)
        np.testing.assert_allclose(out[1], 0.75 + 0.75j)

    def test_dither_is_unbiased(self):
        rng = np.random.default_rng(3)
        y = np.full(200000, 0.2 + 0.0j)
        out = quantize(y, 2.0, 1, rng=rng)
        assert np.mean(out.real) == pytest.approx(0.2, abs=0.02)

    def test_errors(self):
        with pytest.raises(ValueError):
            quantize(np.ones(3), 1.0, 0)
        with pytest.raises(ValueError):
            quantize(np.ones(3), 0.0, 2)


def test_allocation_csv(tmp_path):
    path = tmp_path / "alloc.csv"
    write_allocation_csv(path, [dict(drop=0, budget_gbps_per_sector="0.4", mode="lens", rrh=1, sector=0,
                                     q_e=-2, q_a=3, rho_dbm=-60.5, bits=2)])
    lines = path.read_text().splitlines()
    assert lines[0] == "drop,budget_gbps_per_sector,mode,rrh,sector,q_e,q_a,rho_dbm,bits"
    assert lines[1] == "0,0.4,lens,1,0,-2,3,-60.5,2"
