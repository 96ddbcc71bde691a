import numpy as np
import pytest

from iilasso import (DataError, Dataset, GroundTruth, LogisticFitResult,
                     PenaltySpec, SolverConfig, assign_folds, build_similarity,
                     cross_validate, evaluate, fit, fold_datasets,
                     lambda_grid, select_validation)
from iilasso.solver import FitResult
from conftest import make_classification, make_regression, standardize_cols
from oracles import naive_lasso


def linear_result(beta, lam=0.1, alpha=0.0):
    beta = np.asarray(beta, dtype=np.float64)
    return FitResult(beta=beta, lam=lam, alpha=alpha,
                     objective_trace=np.zeros(1), sweeps_used=1, converged=True,
                     kkt_residual=0.0, objective=0.0)


def logistic_result(beta, intercept):
    beta = np.asarray(beta, dtype=np.float64)
    return LogisticFitResult(beta=beta, intercept=intercept, lam=0.1, alpha=0.0,
                             neg_loglik_trace=np.zeros(1), outer_iters=1,
                             converged=True, kkt_residual=0.0, objective=0.0,
                             train_loglik=0.0, train_misclassification=0.0,
                             class_counts=(0, 0))


class TestEvaluate:
    def test_perfect_fit(self):
        ds, beta, _ = make_regression(70, noise_sd=0.0)
        truth = GroundTruth.from_beta(beta)
        m = evaluate(linear_result(beta), ds, truth)
        assert m.prediction_error == pytest.approx(0.0, abs=1e-20)
        assert m.estimation_error == pytest.approx(0.0, abs=1e-12)

    def test_null_model(self):
        ds, _, _ = make_regression(71)
        m = evaluate(linear_result(np.zeros(ds.p)), ds)
        assert m.prediction_error == pytest.approx(float(np.mean(ds.y**2)))
        assert m.model_size == 0
        assert m.estimation_error is None and m.loglik is None

    def test_null_classifier_balanced(self, rng):
        X = standardize_cols(rng.standard_normal((40, 4)))
        y = np.array([0.0, 1.0] * 20)
        ds = Dataset.from_standardized(X, y, task="classification")
        m = evaluate(logistic_result(np.zeros(4), 0.0), ds)
        assert m.loglik == pytest.approx(-np.log(2.0), rel=1e-12)
        # probability exactly 0.5 predicts class 0, so errors are the 1-labels
        assert m.misclassification == pytest.approx(0.5)

    def test_null_classifier_minority_positive(self, rng):
        X = standardize_cols(rng.standard_normal((40, 4)))
        y = np.zeros(40)
        y[:12] = 1.0
        ds = Dataset.from_standardized(X, y, task="classification")
        m = evaluate(logistic_result(np.zeros(4), 0.0), ds)
        assert m.misclassification == pytest.approx(min(y.mean(), 1 - y.mean()))

    def test_task_mismatch(self):
        ds, beta, _ = make_regression(72)
        with pytest.raises(ValueError, match="non-regression|non-classification"):
            evaluate(logistic_result(np.zeros(ds.p), 0.0), ds)


class TestSelectValidation:
    def test_in_sample_drifts_to_smallest_lambda(self):
        ds, _, _ = make_regression(73, n=60, p=10, noise_sd=0.8)
        lambdas = lambda_grid(ds, n_lambdas=20)
        sel = select_validation(ds, ds, alpha_grid=[0.1], lambdas=lambdas)
        assert sel.best_lambda == pytest.approx(lambdas.min())

    def test_singleton_grid(self):
        ds, _, _ = make_regression(74, n=50, p=8)
        sel = select_validation(ds, ds, alpha_grid=[1.0], lambdas=[0.2])
        assert sel.best_lambda == 0.2 and sel.best_alpha == 1.0
        assert len(sel.grid_scores) == 1

    def test_tie_breaks_to_larger_lambda_then_alpha(self):
        ds, _, _ = make_regression(75, n=40, p=6)
        from iilasso import lambda_max
        top = lambda_max(ds)
        # both lambdas exceed lambda_max so every fit is the null model
        sel = select_validation(ds, ds, alpha_grid=[0.5, 2.0],
                                lambdas=[top * 2, top * 3])
        assert sel.best_lambda == pytest.approx(top * 3)
        assert sel.best_alpha == 2.0

    def test_dimension_checks(self):
        a, _, _ = make_regression(76, p=5)
        b, _, _ = make_regression(77, p=6)
        with pytest.raises(ValueError, match="p="):
            select_validation(a, b)

    def test_selection_improves_over_noise(self):
        train, beta, _ = make_regression(78, n=60, p=12, s=3, noise_sd=0.5)
        rng = np.random.default_rng(780)
        X_new = rng.standard_normal((60, 12))
        X_new = standardize_cols(X_new)
        y_new = X_new @ beta + 0.5 * rng.standard_normal(60)
        valid = Dataset.from_standardized(X_new, y_new - y_new.mean())
        sel = select_validation(train, valid, alpha_grid=[0.1, 1.0])
        best = min(g.mean for g in sel.grid_scores)
        null = float(np.mean(valid.y**2))
        assert best < null
        assert sel.refit.model_size > 0


class TestFolds:
    def test_assignment_deterministic_and_balanced(self):
        a = assign_folds(53, 10, seed=4)
        b = assign_folds(53, 10, seed=4)
        assert np.array_equal(a, b)
        counts = np.bincount(a, minlength=10)
        assert counts.max() - counts.min() <= 1

    def test_stratified_keeps_class_balance(self):
        y = np.array([1.0] * 12 + [0.0] * 28)
        folds = assign_folds(40, 4, seed=1, labels=y)
        for k in range(4):
            assert y[folds == k].sum() == 3  # 12 positives over 4 folds

    def test_heldout_uses_training_transform(self, rng):
        # plant a column whose held-out values have a shifted mean; the
        # transform must still come from the training folds alone
        X = rng.standard_normal((30, 3))
        fold_ids = assign_folds(30, 3, seed=2)
        X[fold_ids == 0, 1] += 50.0
        y = rng.standard_normal(30)
        ds = Dataset.from_raw(X, y, standardize=True)
        train, heldout = fold_datasets(ds, fold_ids, 0)
        mask = fold_ids == 0
        expect_means = X[~mask].mean(axis=0)
        assert np.allclose(train.col_means, expect_means)
        assert np.allclose(
            heldout.X, (X[mask] - expect_means) / train.col_scales)
        # the planted shift must survive into the held-out transform
        assert heldout.X[:, 1].mean() > 10

    def test_validation(self):
        with pytest.raises(ValueError, match="folds"):
            assign_folds(10, 1, seed=0)
        with pytest.raises(ValueError, match="cannot split"):
            assign_folds(3, 4, seed=0)


class TestCrossValidate:
    def test_deterministic_given_seed(self):
        ds, _, _ = make_regression(80, n=40, p=8, noise_sd=0.6)
        kwargs = dict(alpha_grid=[0.1, 1.0], n_lambdas=12, seed=11)
        a = cross_validate(ds, 4, **kwargs)
        b = cross_validate(ds, 4, **kwargs)
        assert a.best_lambda == b.best_lambda and a.best_alpha == b.best_alpha
        for ga, gb in zip(a.grid_scores, b.grid_scores):
            assert ga.mean == gb.mean and ga.se == gb.se

    def test_leave_one_out_boundary(self):
        ds, _, _ = make_regression(81, n=10, p=2, s=1)
        sel = cross_validate(ds, 10, alpha_grid=[0.5], n_lambdas=5, seed=3)
        assert np.isfinite([g.mean for g in sel.grid_scores]).all()
        assert sel.refit is not None

    def test_missing_class_reported_with_fold(self, rng):
        X = standardize_cols(rng.standard_normal((12, 3)))
        y = np.zeros(12)
        y[0] = 1.0
        ds = Dataset.from_standardized(X, y, task="classification")
        with pytest.raises(DataError, match="fold"):
            cross_validate(ds, 2, alpha_grid=[0.1], n_lambdas=4, seed=0)

    def test_alpha_zero_matches_external_cv_harness(self):
        ds, _, _ = make_regression(82, n=40, p=8, s=3, noise_sd=0.7)
        lambdas = lambda_grid(ds, n_lambdas=10)
        sel = cross_validate(ds, 4, alpha_grid=[0.0], lambdas=lambdas, seed=9,
                             config=SolverConfig(tol=1e-9))
        fold_ids = assign_folds(ds.n, 4, seed=9)
        means = np.zeros(len(lambdas))
        for fold in range(4):
            train, heldout = fold_datasets(ds, fold_ids, fold)
            for i, lam in enumerate(lambdas):
                beta = naive_lasso(train.X, train.y, float(lam))
                resid = heldout.y - heldout.X @ beta
                means[i] += float(np.mean(resid**2)) / 4
        package = np.array([g.mean for g in sel.grid_scores])
        assert np.abs(package - means).max() <= 1e-6

    def test_classification_cv_runs(self):
        ds, _ = make_classification(83, n=60, p=8, s=2)
        sel = cross_validate(ds, 5, alpha_grid=[0.0, 1.0], n_lambdas=8, seed=7)
        assert sel.refit is not None
        assert all(g.se is not None for g in sel.grid_scores)

    def test_scores_csv_format(self, tmp_path):
        ds, _, _ = make_regression(84, n=30, p=5)
        sel = cross_validate(ds, 3, alpha_grid=[0.5], n_lambdas=4, seed=2)
        f = tmp_path / "scores.csv"
        with open(f, "w") as fh:
            sel.write_scores_csv(fh)
        lines = f.read_text().strip().splitlines()
        assert lines[0] == "alpha,lambda,mean,se,model_size"
        assert len(lines) == 5
