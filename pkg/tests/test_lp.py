import numpy as np
import pytest

import bbpack.lp as lp_mod
from bbpack import FixedSets, LpError, PackingInstance, generate, solve_eq_lp, solve_lp
from bbpack.lp import INT_TOL

from oracles import ratio_greedy, slice_lp_value_2var, vertex_enumeration_lp


def _tiny():
    return PackingInstance(
        m=1, n=2, A=np.array([[0.6, 0.5]]), c=np.array([0.9, 0.5]), b=np.array([0.8])
    )


class TestWorkedExamples:
    def test_knapsack_vertex(self):
        sol = solve_lp(_tiny())
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(1.0, abs=1e-9)
        assert sol.x[1] == pytest.approx(0.4, abs=1e-9)
        assert sol.value == pytest.approx(1.1, abs=1e-9)
        assert sol.fractional == (1,)

    def test_all_ones_fixing_infeasible(self):
        # row sum 1.1 > capacity 0.8
        sol = solve_lp(_tiny(), FixedSets(frozenset(), frozenset({0, 1})))
        assert sol.status == "infeasible"
        assert sol.x is None and sol.value is None

    def test_slack_capacity_all_ones(self):
        inst = generate(2, 8, (0.3, 0.4), 11)
        big = PackingInstance(
            m=2, n=8, A=inst.A, c=inst.c, b=np.array([8.0, 8.0])
        )
        sol = solve_lp(big)
        assert np.allclose(sol.x, 1.0, atol=1e-9)
        assert sol.value == pytest.approx(float(inst.c.sum()), abs=1e-9)
        assert sol.fractional == ()

    def test_eq_zero_slice(self):
        sol = solve_eq_lp(_tiny(), [0.0])
        assert sol.status == "optimal"
        assert np.allclose(sol.x, 0.0, atol=1e-12)
        assert sol.value == pytest.approx(0.0, abs=1e-12)

    def test_eq_slice_example(self):
        sol = solve_eq_lp(_tiny(), [0.3])
        assert sol.x[0] == pytest.approx(0.5, abs=1e-9)
        assert sol.x[1] == pytest.approx(0.0, abs=1e-9)
        assert sol.value == pytest.approx(0.45, abs=1e-9)
        assert sol.lam[0] == pytest.approx(1.5, abs=1e-9)

    def test_eq_slice_through_point_dominates(self):
        rng = np.random.default_rng(4)
        for trial in range(50):
            inst = generate(2, 7, (0.2, 0.35), 300 + trial)
            xbar = rng.random(7)
            sol = solve_eq_lp(inst, inst.A @ xbar)
            assert sol.status == "optimal"
            assert sol.value >= float(inst.c @ xbar) - 1e-9

    def test_eq_infeasible_when_out_of_reach(self):
        inst = generate(1, 5, (0.25,), 9)
        sol = solve_eq_lp(inst, [float(inst.A.sum()) + 1.0])
        assert sol.status == "infeasible"


class TestValidation:
    def test_bprime_negative_rejected(self):
        with pytest.raises(ValueError):
            solve_eq_lp(_tiny(), [-0.1])

    def test_bprime_shape_rejected(self):
        with pytest.raises(ValueError):
            solve_eq_lp(_tiny(), [0.1, 0.2])

    def test_fixed_sets_disjoint(self):
        with pytest.raises(ValueError):
            FixedSets(frozenset({1}), frozenset({1}))

    def test_fixed_index_range(self):
        with pytest.raises(ValueError):
            solve_lp(_tiny(), FixedSets(frozenset({5}), frozenset()))

    def test_iteration_cap_is_diagnostic(self, monkeypatch):
        monkeypatch.setattr(lp_mod, "_ITER_FACTOR", 0)
        with pytest.raises(LpError):
            solve_lp(generate(1, 6, (0.25,), 3))


def _random_fixings(rng, n):
    k0 = int(rng.integers(0, max(n // 3, 1)))
    k1 = int(rng.integers(0, max(n // 3, 1)))
    perm = rng.permutation(n)
    return FixedSets(frozenset(perm[:k0].tolist()), frozenset(perm[k0 : k0 + k1].tolist()))


class TestGreedyOracle:
    def test_matches_ratio_greedy_plain(self):
        for trial in range(1000):
            n = 3 + trial % 10
            inst = generate(1, n, (0.1 + 0.35 * ((trial * 7919) % 100) / 100.0,), trial)
            val, _ = ratio_greedy(inst)
            sol = solve_lp(inst)
            assert sol.value == pytest.approx(val, abs=1e-9), f"trial {trial}"

    def test_matches_ratio_greedy_with_fixings(self):
        rng = np.random.default_rng(17)
        for trial in range(300):
            n = 4 + trial % 8
            inst = generate(1, n, (0.3,), 5000 + trial)
            fixed = _random_fixings(rng, n)
            ref = ratio_greedy(inst, fixed.j0, fixed.j1)
            sol = solve_lp(inst, fixed)
            if ref is None:
                assert sol.status == "infeasible"
            else:
                assert sol.status == "optimal"
                assert sol.value == pytest.approx(ref[0], abs=1e-9), f"trial {trial}"


class TestVertexStructure:
    def test_at_most_m_fractional_and_feasible(self):
        rng = np.random.default_rng(23)
        for trial in range(1000):
            m = 1 + trial % 3
            n = m + 2 + trial % 12
            beta = tuple(0.1 + 0.35 * float(v) for v in rng.random(m))
            inst = generate(m, n, beta, 77000 + trial)
            fixed = _random_fixings(rng, n)
            sol = solve_lp(inst, fixed)
            if sol.status != "optimal":
                continue
            assert len(sol.fractional) <= m
            assert np.all(sol.x >= -1e-9) and np.all(sol.x <= 1 + 1e-9)
            assert np.all(inst.A @ sol.x <= inst.b + 1e-9)
            for j in fixed.j0:
                assert sol.x[j] == 0.0
            for j in fixed.j1:
                assert sol.x[j] == 1.0
            for j in range(n):
                frac = INT_TOL < sol.x[j] < 1 - INT_TOL
                assert frac == (j in sol.fractional)

    def test_eq_vertex_structure(self):
        rng = np.random.default_rng(29)
        for trial in range(400):
            m = 1 + trial % 2
            n = m + 3 + trial % 9
            inst = generate(m, n, tuple([0.3] * m), 88000 + trial)
            xbar = (rng.random(n) < 0.5).astype(float)
            sol = solve_eq_lp(inst, inst.A @ xbar)
            assert sol.status == "optimal"
            assert len(sol.fractional) <= m
            assert np.all(np.abs(inst.A @ sol.x - inst.A @ xbar) <= 1e-8)


class TestExhaustiveAgreement:
    def test_matches_vertex_enumeration(self):
        for trial in range(300):
            m = 1 + trial % 2
            n = m + 2 + trial % (6 - m - 1)
            beta = tuple([0.15 + 0.3 * ((trial % 7) / 7.0)] * m)
            inst = generate(m, n, beta, 31000 + trial)
            ref_val, _ = vertex_enumeration_lp(inst)
            sol = solve_lp(inst)
            assert sol.value == pytest.approx(ref_val, abs=1e-9), f"trial {trial}"

    def test_eq_slice_two_var_cases(self):
        for trial in range(200):
            inst = generate(1, 2, (0.35,), 61000 + trial)
            for t in (0.0, 0.25, 0.5, 0.9, 1.3):
                bp = t * float(inst.A.sum())
                ref = slice_lp_value_2var(inst, [bp])
                sol = solve_eq_lp(inst, [bp])
                if ref is None:
                    assert sol.status == "infeasible"
                else:
                    assert sol.value == pytest.approx(ref, abs=1e-9)


class TestDuality:
    def test_inequality_duality_and_slackness(self):
        rng = np.random.default_rng(41)
        for trial in range(400):
            m = 1 + trial % 3
            n = m + 2 + trial % 10
            inst = generate(m, n, tuple([0.12 + 0.3 * (trial % 5) / 5.0] * m), trial)
            fixed = _random_fixings(rng, n)
            sol = solve_lp(inst, fixed)
            if sol.status != "optimal":
                continue
            dual_val = float(sol.lam @ inst.b + sol.mu.sum())
            assert abs(sol.value - dual_val) <= 1e-7
            # complementary slackness on the rows
            slack = inst.b - inst.A @ sol.x
            assert np.all(np.abs(sol.lam * slack) <= 1e-7)
            # row duals of a packing row are nonnegative
            assert np.all(sol.lam >= -1e-9)
            # mu lives only on variables sitting at 1
            loose = sol.x < 1 - INT_TOL
            free_loose = [j for j in range(n) if loose[j] and j not in fixed.j1]
            assert np.all(np.abs(sol.mu[free_loose]) <= 1e-9)

    def test_equality_duality_and_compatibility(self):
        rng = np.random.default_rng(43)
        for trial in range(500):
            m = 1 + trial % 2
            n = m + 3 + trial % 8
            inst = generate(m, n, tuple([0.3] * m), 140000 + trial)
            xbar = (rng.random(n) < 0.4).astype(float)
            sol = solve_eq_lp(inst, inst.A @ xbar)
            assert sol.status == "optimal"
            bprime = inst.A @ xbar
            dual_val = float(sol.lam @ bprime + sol.mu.sum())
            assert abs(sol.value - dual_val) <= 1e-7
            # reduced-cost sign forces the primal value
            r = inst.c - inst.A.T @ sol.lam
            for j in range(n):
                if r[j] > 1e-9:
                    assert sol.x[j] >= 1 - INT_TOL, f"trial {trial} j={j}"
                elif r[j] < -1e-9:
                    assert sol.x[j] <= INT_TOL, f"trial {trial} j={j}"


def test_solver_is_deterministic():
    inst = generate(2, 40, (0.2, 0.35), 321)
    a = solve_lp(inst)
    b = solve_lp(inst)
    assert np.array_equal(a.x, b.x) and a.value == b.value
    bp = inst.A @ (np.arange(40) % 2).astype(float)
    ea = solve_eq_lp(inst, bp)
    eb = solve_eq_lp(inst, bp)
    assert np.array_equal(ea.x, eb.x) and ea.value == eb.value
