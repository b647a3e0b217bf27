import numpy as np
import pytest

from orthoproj.errors import ConfigurationError, NumericError
from orthoproj.models import LossKind, ModelSpec
from orthoproj.optimizer import Stage, TrainConfig, train
from orthoproj.subspace import NO_REFRESH, estimate_subspace, needs_refresh
from orthoproj.tasks import DifferentiableTask


def quadratic_task(name, a, b):
    spec = ModelSpec("quadratic", (a.shape[1],))
    return DifferentiableTask(name, spec, LossKind("squared_error"), a, b, a, b)


class TestNeedsRefresh:
    def test_first_step_always_builds(self):
        assert needs_refresh(0, 5) is True

    def test_between_refreshes(self):
        assert needs_refresh(7, 5) is False

    def test_coarse_period_boundary(self):
        assert needs_refresh(30, 30) is True

    def test_never_refresh_sentinel(self):
        assert needs_refresh(0, NO_REFRESH) is True
        for step in (1, 5, 1000):
            assert needs_refresh(step, NO_REFRESH) is False

    def test_invalid_period(self):
        with pytest.raises(ConfigurationError):
            needs_refresh(3, 0)
        with pytest.raises(ConfigurationError):
            needs_refresh(3, -2)
        with pytest.raises(ConfigurationError):
            needs_refresh(3, 2.5)

    def test_negative_step(self):
        with pytest.raises(ConfigurationError):
            needs_refresh(-1, 5)


class TestEstimateSubspace:
    def test_closed_form_quadratic_gradient(self):
        # L = 0.5 ||theta - c||^2 at theta = c + (1, 0): gradient (1, 0)
        c = np.array([2.0, -1.0])
        task = quadratic_task("cap", np.eye(2), c)
        theta = c + np.array([1.0, 0.0])
        sub = estimate_subspace(theta, [task], 1, np.random.default_rng(0), 1e-6, 0.0, step=0)
        assert sub.rank == 1
        np.testing.assert_array_equal(sub.basis.vectors, [[1.0, 0.0]])
        assert sub.built_at_step == 0
        assert sub.candidate_count == 1

    def test_duplicate_tasks_give_rank_one(self, regression_family):
        fam = regression_family()
        task = fam.tasks["cap_a"]
        sub = estimate_subspace(fam.theta0, [task, task], task.train_size,
                                np.random.default_rng(0), 1e-6, 0.0, step=0)
        assert sub.candidate_count == 2
        assert sub.rank == 1

    def test_two_facets_give_rank_two(self, policy_family):
        fam = policy_family()
        sub = estimate_subspace(fam.theta0, list(fam.capability_tasks), 200,
                                np.random.default_rng(0), 1e-6, 0.0, step=0)
        assert sub.rank == 2

    def test_rank_never_grows_under_duplication(self, policy_family):
        fam = policy_family()
        refs = list(fam.capability_tasks)
        base = estimate_subspace(fam.theta0, refs, 200,
                                 np.random.default_rng(0), 1e-6, 0.0, step=0)
        extended = estimate_subspace(fam.theta0, refs + [refs[0], refs[1]], 200,
                                     np.random.default_rng(0), 1e-6, 0.0, step=0)
        assert extended.rank <= base.rank + 0  # duplicates never add rank

    def test_deterministic(self, regression_family):
        fam = regression_family()
        subs = [estimate_subspace(fam.theta0, list(fam.capability_tasks), 200,
                                  np.random.default_rng(123), 1e-6, 0.0, step=0)
                for _ in range(2)]
        assert subs[0].basis.vectors.tobytes() == subs[1].basis.vectors.tobytes()

    def test_empty_reference_tasks(self):
        with pytest.raises(ConfigurationError):
            estimate_subspace(np.zeros(3), [], 1, np.random.default_rng(0), 1e-6, 0.0, 0)

    def test_non_finite_gradient_reports_task_index(self):
        good = quadratic_task("ok", np.eye(2), np.zeros(2))
        bad = quadratic_task("overflow", 1e200 * np.eye(2), np.zeros(2))
        with np.errstate(over="ignore", invalid="ignore"), \
                pytest.raises(NumericError, match="task 1"):
            estimate_subspace(np.full(2, 1e200), [good, bad], 1,
                              np.random.default_rng(0), 1e-6, 0.0, 0)


class TestFreshnessContract:
    def test_age_stays_below_period(self, regression_family):
        fam = regression_family()
        cfg = TrainConfig(method="ortho", eta=0.02, steps=40, refresh_every=5,
                          ref_count=2, safety_batch=32, ref_batch=100, seed=0,
                          stages=(Stage("safety", "squared_error", 40),))
        result = train(cfg, fam)
        assert all(r.age < 5 for r in result.records)
        assert [step for step, _ in result.subspace_history] == list(range(0, 40, 5))

    def test_no_refresh_mode_builds_once(self, regression_family):
        fam = regression_family()
        cfg = TrainConfig(method="ortho", eta=0.02, steps=30, refresh_every=NO_REFRESH,
                          ref_count=2, safety_batch=32, ref_batch=100, seed=0,
                          stages=(Stage("safety", "squared_error", 30),))
        result = train(cfg, fam)
        assert result.subspace_history == ((0, result.subspace_history[0][1]),)
        assert result.records[-1].age == 29
