"""자원 할당 (분기 한정 / 전수 / 탐욕) 테스트."""
import math
import time

import numpy as np
import pytest

import allocate
from allocate import (
    AllocationProblem,
    compare_to_reference,
    evaluate,
    improve_locally,
    link_budgets,
    solve_exact,
    solve_exhaustive,
    solve_greedy,
)
from errors import AssignmentConflictError, InfeasibleAllocationError, InstanceTooLargeError, ShapeMismatchError
from linkbudget import sinr
from metrics import ChannelMatrix, build_channel_matrix
from raytrace import BounceConfig
from scene import ReferenceLink, Wavelength, builtin_scenario, reference_assignment
from conftest import gains_matrix

R, Y = Wavelength.RED, Wavelength.YELLOW


def _problem(gains, noise, objective="db_sum", wavelengths=(R, Y)):
    return AllocationProblem(gains_matrix(gains, wavelengths), noise, objective=objective)


def _random_gains(rng, users=3, branches=2, aps=3):
    # 일부 링크는 FOV 밖 (이득 0)
    gains = rng.uniform(1e-8, 3e-6, (users, branches, aps))
    return np.where(rng.random(gains.shape) < 0.3, 0.0, gains)


# ==================== 평가 ====================

class TestEvaluate:
    def test_single_user_picks_strongest_ap(self, test_noise):
        problem = _problem([[[1e-6, 2e-6]]], test_noise)
        result = solve_exact(problem)
        link = result.link(1)
        assert (link.ap_id, link.wavelength, link.branch) == (2, R, 1)
        assert result.objective_value == pytest.approx(link.sinr_db)

    def test_select_best_branch(self, test_noise):
        problem = _problem([[[1e-7], [2e-6]]], test_noise, wavelengths=(R,))
        assert evaluate(problem, {1: (1, R)}).link(1).branch == 2

    def test_partial_assignment(self, test_noise):
        problem = _problem([[[1e-6, 2e-6]], [[2e-6, 1e-6]]], test_noise)
        partial = evaluate(problem, {2: (1, Y)})
        assert partial.user_ids == (2,)

    def test_conflict(self, test_noise):
        problem = _problem([[[1e-6, 2e-6]], [[2e-6, 1e-6]]], test_noise)
        with pytest.raises(AssignmentConflictError):
            evaluate(problem, {1: (1, R), 2: (1, R)})

    def test_unknown_ap(self, test_noise):
        problem = _problem([[[1e-6, 2e-6]]], test_noise)
        with pytest.raises(ValueError, match="Unknown"):
            evaluate(problem, {1: (9, R)})

    def test_shared_wavelength_interferes(self, test_noise):
        problem = _problem([[[2e-6, 1e-6]], [[1e-6, 2e-6]]], test_noise)
        split = evaluate(problem, {1: (1, R), 2: (2, Y)})
        shared = evaluate(problem, {1: (1, R), 2: (2, R)})
        assert shared.link(1).sinr_linear < split.link(1).sinr_linear
        assert shared.objective_value < split.objective_value

    def test_zero_signal_is_floored(self, test_noise):
        problem = _problem([[[1e-6, 0.0]]], test_noise)
        result = evaluate(problem, {1: (2, R)})
        assert result.objective_value == allocate.DB_FLOOR
        assert result.link(1).sinr_db == -math.inf

    def test_linear_objective(self, test_noise):
        problem = _problem([[[1e-6, 2e-6]], [[2e-6, 1e-6]]], test_noise, objective="linear_sum")
        result = evaluate(problem, {1: (2, R), 2: (1, R)})
        assert result.objective_value == pytest.approx(sum(link.sinr_linear for link in result.links))

    def test_unknown_objective(self, test_noise):
        with pytest.raises(ValueError, match="objective"):
            _problem([[[1e-6]]], test_noise, objective="max_min")

    def test_link_budgets_reproduce_sinr(self, test_noise):
        rng = np.random.default_rng(5)
        problem = _problem(_random_gains(rng), test_noise)
        result = solve_exact(problem)
        for budget, link in zip(link_budgets(problem, result), result.links):
            assert budget.branch == link.branch
            assert sinr(budget, test_noise) == pytest.approx(link.sinr_db, rel=1e-9, abs=1e-9)


# ==================== 최적성 ====================

class TestSolvers:
    def test_exact_matches_exhaustive_on_random_instances(self, test_noise):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            gains = _random_gains(rng)
            for objective in ("db_sum", "linear_sum"):
                problem = _problem(gains, test_noise, objective=objective)
                exact = solve_exact(problem, check_bounds=True)
                oracle = solve_exhaustive(problem)
                assert exact.objective_value == pytest.approx(oracle.objective_value, rel=1e-9, abs=1e-9)
                assert exact.key == oracle.key

    def test_exact_never_below_greedy(self, test_noise):
        rng = np.random.default_rng(9)
        for _ in range(30):
            problem = _problem(_random_gains(rng, users=4), test_noise)
            assert solve_exact(problem).objective_value >= solve_greedy(problem).objective_value - 1e-9

    def test_symmetric_tie_uses_lexicographic_key(self, test_noise):
        gains = [[[2e-6, 1e-7]], [[2e-6, 1e-7]]]
        problem = _problem(gains, test_noise)
        assert solve_exact(problem).key == ((1, 0), (1, 1))
        assert solve_exhaustive(problem).key == ((1, 0), (1, 1))

    def test_greedy_is_strictly_worse_on_adversarial_instance(self, test_noise):
        # 이득이 큰 사용자가 AP1 을 먼저 가져가면 다른 사용자는 간섭만 받음
        gains = [[[3e-6, 2.9e-6]], [[2e-6, 1e-9]]]
        problem = _problem(gains, test_noise, wavelengths=(R,))
        greedy = solve_greedy(problem)
        exact = solve_exact(problem)
        assert greedy.link(1).ap_id == 1
        assert exact.link(1).ap_id == 2
        assert exact.objective_value > greedy.objective_value

    def test_local_search_repairs_greedy(self, test_noise):
        gains = [[[3e-6, 2.9e-6]], [[2e-6, 1e-9]]]
        problem = _problem(gains, test_noise, wavelengths=(R,))
        greedy = solve_greedy(problem)
        improved = improve_locally(problem, problem.to_indices(greedy.pairs()))
        assert problem.make_assignment(improved).link(1).ap_id == 2
        assert problem.evaluate_indices(improved)[1] > greedy.objective_value

    def test_local_search_never_worse(self, test_noise):
        rng = np.random.default_rng(31)
        for _ in range(20):
            problem = _problem(_random_gains(rng, users=4), test_noise, objective="linear_sum")
            start = problem.to_indices(solve_greedy(problem).pairs())
            improved = improve_locally(problem, start)
            assert sorted(improved) == sorted(start)
            assert len(set(improved.values())) == len(improved)
            assert problem.evaluate_indices(improved)[1] >= problem.evaluate_indices(start)[1]

    def test_root_bound_counts_each_pair_once(self, test_noise):
        # 두 사용자 모두 AP1 만 강하게 보므로 AP1 은 한 명에게만 셀 수 있음
        gains = [[[3e-6, 1e-7]], [[3e-6, 1e-7]]]
        problem = _problem(gains, test_noise, objective="linear_sum", wavelengths=(R,))
        free = problem.interference_free_sinr().reshape(2, -1)
        search = allocate._BranchAndBound(problem)
        assert search.bound(0) == pytest.approx(free[0, 0] + free[1, 1])
        assert search.bound(0) < free.max(axis=1).sum()

    def test_exact_matches_exhaustive_linear_sum_crowded(self, test_noise):
        # 사용자 5명 / 쌍 6개: 거의 모든 쌍이 쓰이고 파장 공유가 불가피
        rng = np.random.default_rng(77)
        for _ in range(10):
            problem = _problem(_random_gains(rng, users=5), test_noise, objective="linear_sum")
            exact = solve_exact(problem, check_bounds=True)
            oracle = solve_exhaustive(problem)
            assert exact.objective_value == pytest.approx(oracle.objective_value, rel=1e-9, abs=1e-9)
            assert exact.key == oracle.key

    @pytest.mark.parametrize("solver", [solve_exact, solve_exhaustive, solve_greedy])
    def test_infeasible(self, solver, test_noise):
        problem = _problem([[[1e-6]], [[2e-6]], [[3e-6]]], test_noise)
        with pytest.raises(InfeasibleAllocationError) as exc:
            solver(problem)
        assert exc.value.num_pairs == 2

    def test_exhaustive_refuses_large_instances(self, test_noise, monkeypatch):
        monkeypatch.setattr(allocate, "MAX_EXHAUSTIVE_NODES", 10)
        problem = _problem(_random_gains(np.random.default_rng(1)), test_noise)
        with pytest.raises(InstanceTooLargeError):
            solve_exhaustive(problem)

    def test_ap_relabeling_keeps_objective(self, test_noise):
        rng = np.random.default_rng(17)
        gains = _random_gains(rng)
        base = solve_exact(_problem(gains, test_noise)).objective_value
        perm = [2, 0, 1]
        shuffled = ChannelMatrix.from_gains(
            gains[:, :, perm], unit_power=np.ones((3, 2)), responsivity=np.ones(2),
            wavelengths=(R, Y), ap_ids=[3, 1, 2],
        )
        result = solve_exact(AllocationProblem(shuffled, test_noise)).objective_value
        assert result == pytest.approx(base, rel=1e-9)

    def test_extra_user_never_helps_fixed_incumbents(self, test_noise):
        rng = np.random.default_rng(23)
        for _ in range(20):
            gains = _random_gains(rng)
            two = _problem(gains[:2], test_noise)
            three = _problem(gains, test_noise)
            incumbents = solve_exact(two).pairs()
            free = [(a, w) for a in (1, 2, 3) for w in (R, Y) if (a, w) not in incumbents.values()]
            grown = evaluate(three, {**incumbents, 3: free[0]})
            before = evaluate(two, incumbents)
            for uid in (1, 2):
                assert grown.link(uid).sinr_linear <= before.link(uid).sinr_linear * (1 + 1e-12)


# ==================== 참조 배정 비교 ====================

class TestCompareToReference:
    def test_self_comparison(self, test_noise):
        problem = _problem(_random_gains(np.random.default_rng(3)), test_noise)
        ours = solve_exact(problem)
        report = compare_to_reference(ours, ours, problem)
        assert report.match_fraction == 1.0
        assert report.dominates
        text = report.to_text()
        assert "dominates: yes" in text
        assert text.count("\n") == 5 + len(ours.links)

    def test_reference_links(self, test_noise):
        problem = _problem([[[2e-6, 1e-7]], [[1e-7, 2e-6]]], test_noise)
        ours = solve_exact(problem)
        reference = [ReferenceLink(1, 2, 1, Y), ReferenceLink(2, 1, 1, Y)]
        report = compare_to_reference(ours, reference, problem)
        assert report.match_fraction == 0.0
        assert report.objective_ours > report.objective_reference

    def test_shape_mismatch(self, test_noise):
        problem = _problem([[[2e-6, 1e-7]], [[1e-7, 2e-6]]], test_noise)
        ours = solve_exact(problem)
        with pytest.raises(ShapeMismatchError):
            compare_to_reference(ours, [ReferenceLink(1, 1, 1, R)], problem)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["conference_table", "cocktail1", "cocktail2"])
@pytest.mark.parametrize("objective", ["db_sum", "linear_sum"])
def test_builtin_optimum_dominates_published_assignment(name, objective):
    scenario = builtin_scenario(name)
    cfg = BounceConfig(max_order=2, elem_size_bounce1=0.20, elem_size_bounce2=0.80)
    problem = AllocationProblem(build_channel_matrix(scenario, cfg), scenario.noise, objective=objective)
    report = compare_to_reference(solve_exact(problem), reference_assignment(name), problem)
    assert report.dominates



@pytest.mark.slow
def test_linear_sum_search_finishes_on_ten_users():
    scenario = builtin_scenario("cocktail1")
    cfg = BounceConfig(max_order=1, elem_size_bounce1=0.20, elem_size_bounce2=0.80)
    problem = AllocationProblem(build_channel_matrix(scenario, cfg), scenario.noise, objective="linear_sum")
    assert problem.num_users == 10
    started = time.perf_counter()
    result = solve_exact(problem)
    assert time.perf_counter() - started < 300.0
    assert compare_to_reference(result, reference_assignment("cocktail1"), problem).dominates
