import math

import numpy as np
import pandas as pd
import pytest

from sembn.dataset import ObservedDataset, VariableSchema
from sembn.errors import NonPositiveDefiniteSample, ZeroDf
from sembn.modelspec import parse_model_spec
from sembn.sem import (
    _objective_factory,
    _Ram,
    _start_values,
    factor_scores,
    fit_indices,
    fit_ml,
    implied_covariance,
    loading_summary,
    standardized_loadings,
)

RNG = np.random.default_rng(42)

ONE_FACTOR = "F =~ a + b + c\n"
HIERARCHY = "F1 =~ a + b\nF2 =~ c + d\nG =~ F1 + F2\n"


def dataset_from(matrix, names):
    schema = tuple(VariableSchema(n) for n in names)
    return ObservedDataset(schema, pd.DataFrame(matrix, columns=names,
                                                dtype=float))


def simulate_one_factor(n, loadings=(1.0, 0.8, 0.6), phi=1.0,
                        resid=(0.5, 0.4, 0.3), rng=RNG):
    f = rng.normal(0, math.sqrt(phi), size=n)
    cols = [lam * f + rng.normal(0, math.sqrt(r), size=n)
            for lam, r in zip(loadings, resid)]
    return np.column_stack(cols)


class TestImpliedCovariance:
    def test_two_indicator_symbolic_expansion(self):
        model = parse_model_spec("F =~ a + b\n")
        lam, phi, t1, t2 = 0.8, 1.3, 0.4, 0.6
        params = {"F=~b": lam, "F~~F": phi, "a~~a": t1, "b~~b": t2}
        sigma = implied_covariance(model, params)
        expected = np.array([[phi + t1, lam * phi],
                             [lam * phi, lam ** 2 * phi + t2]])
        np.testing.assert_allclose(sigma, expected, rtol=1e-14)

    def test_zero_loadings_give_diagonal_residuals(self):
        model = parse_model_spec("F =~ 0*a + 0*b\n")
        params = {"F~~F": 1.0, "a~~a": 0.4, "b~~b": 0.6}
        sigma = implied_covariance(model, params)
        np.testing.assert_allclose(sigma, np.diag([0.4, 0.6]), atol=1e-15)

    def test_hierarchical_model_matches_monte_carlo(self):
        model = parse_model_spec(HIERARCHY)
        params = {"G=~F2": 0.7, "F1=~b": 0.9, "F2=~d": 0.8,
                  "G~~G": 1.0, "F1~~F1": 0.5, "F2~~F2": 0.6,
                  "a~~a": 0.4, "b~~b": 0.5, "c~~c": 0.3, "d~~d": 0.4}
        sigma = implied_covariance(model, params)

        n = 1_000_000
        rng = np.random.default_rng(7)
        g = rng.normal(0, 1.0, n)
        f1 = g + rng.normal(0, math.sqrt(0.5), n)
        f2 = 0.7 * g + rng.normal(0, math.sqrt(0.6), n)
        X = np.column_stack([
            f1 + rng.normal(0, math.sqrt(0.4), n),
            0.9 * f1 + rng.normal(0, math.sqrt(0.5), n),
            f2 + rng.normal(0, math.sqrt(0.3), n),
            0.8 * f2 + rng.normal(0, math.sqrt(0.4), n),
        ])
        S = np.cov(X, rowvar=False)
        se = np.sqrt((np.outer(np.diag(sigma), np.diag(sigma))
                      + sigma ** 2) / n)
        assert (np.abs(S - sigma) < 3 * se).all()

    def test_symmetric_and_positive_definite(self):
        model = parse_model_spec(HIERARCHY)
        rng = np.random.default_rng(3)
        ram = _Ram(model)
        for _ in range(20):
            params = {}
            for label in ram.free_labels:
                if ram.is_variance[label]:
                    params[label] = float(rng.uniform(0.2, 2.0))
                else:
                    params[label] = float(rng.uniform(-1.0, 1.0))
            sigma = implied_covariance(model, params)
            np.testing.assert_allclose(sigma, sigma.T, atol=1e-14)
            assert np.linalg.eigvalsh(sigma).min() > 0

    def test_missing_parameter_raises(self):
        model = parse_model_spec("F =~ a + b\n")
        with pytest.raises(KeyError):
            implied_covariance(model, {"F=~b": 0.5})


class TestFitMl:
    def test_recovers_known_loadings(self):
        X = simulate_one_factor(2000, rng=np.random.default_rng(11))
        fit = fit_ml(parse_model_spec(ONE_FACTOR),
                     dataset_from(X, ["a", "b", "c"]))
        assert fit.converged
        assert abs(fit.estimates["F=~b"] - 0.8) < 0.05
        assert abs(fit.estimates["F=~c"] - 0.6) < 0.05

    def test_discrepancy_nonnegative(self):
        X = simulate_one_factor(300, rng=np.random.default_rng(5))
        fit = fit_ml(parse_model_spec(ONE_FACTOR),
                     dataset_from(X, ["a", "b", "c"]))
        assert fit.discrepancy >= 0.0

    def test_saturated_model_fits_exactly(self):
        rng = np.random.default_rng(2)
        X = rng.multivariate_normal([0, 0], [[1.0, 0.3], [0.3, 1.0]], 500)
        fit = fit_ml(parse_model_spec("a ~~ b\n"), dataset_from(X, ["a", "b"]))
        assert fit.df == 0
        assert fit.chi_square == 0.0
        np.testing.assert_allclose(fit.implied_cov, fit.sample_cov, atol=1e-6)
        with pytest.raises(ZeroDf):
            fit_indices(fit)

    def test_row_permutation_invariance(self):
        X = simulate_one_factor(400, rng=np.random.default_rng(8))
        model = parse_model_spec(ONE_FACTOR)
        fit_a = fit_ml(model, dataset_from(X, ["a", "b", "c"]))
        perm = np.random.default_rng(1).permutation(len(X))
        fit_b = fit_ml(model, dataset_from(X[perm], ["a", "b", "c"]))
        for label, value in fit_a.estimates.items():
            assert abs(fit_b.estimates[label] - value) < 1e-6

    def test_listwise_deletion(self):
        X = simulate_one_factor(200, rng=np.random.default_rng(4))
        X[:10, 0] = np.nan
        fit = fit_ml(parse_model_spec(ONE_FACTOR),
                     dataset_from(X, ["a", "b", "c"]))
        assert fit.n == 190

    def test_singular_sample_rejected(self):
        x = np.linspace(0, 1, 50)
        X = np.column_stack([x, 2 * x, x + 1])  # rank deficient
        with pytest.raises(NonPositiveDefiniteSample):
            fit_ml(parse_model_spec(ONE_FACTOR), dataset_from(X, ["a", "b", "c"]))

    def test_analytic_gradient_matches_central_differences(self):
        model = parse_model_spec(HIERARCHY)
        X = np.random.default_rng(13).multivariate_normal(
            np.zeros(4), np.eye(4) + 0.4, size=300)
        S = np.cov(X, rowvar=False)
        ram = _Ram(model)
        f_and_grad, pack, _ = _objective_factory(ram, S)
        x0 = pack(_start_values(model, ram, S))
        rng = np.random.default_rng(99)
        checked = 0
        while checked < 20:
            x = x0 + rng.normal(0, 0.1, size=x0.shape)
            f, grad = f_and_grad(x)
            if f > 1e9:  # inadmissible penalty region
                continue
            h = 1e-6
            for i in range(len(x)):
                e = np.zeros_like(x)
                e[i] = h
                num = (f_and_grad(x + e)[0] - f_and_grad(x - e)[0]) / (2 * h)
                denom = max(abs(num), abs(grad[i]), 1e-8)
                assert abs(num - grad[i]) / denom < 1e-5
            checked += 1


class TestFitIndices:
    def test_perfect_fit_limit(self):
        fit = SimpleFit(chi_square=5.0, df=5)
        out = fit_indices(fit)
        assert out.rmsea == 0.0
        assert out.cfi == 1.0

    def test_zero_residuals_zero_srmr(self):
        fit = SimpleFit(chi_square=20.0, df=5)
        assert fit_indices(fit).srmr == 0.0

    def test_rmsea_formula(self):
        fit = SimpleFit(chi_square=30.0, df=10, n=101)
        out = fit_indices(fit)
        assert out.rmsea == pytest.approx(math.sqrt(20.0 / (10 * 100)))

    def test_cfi_formula(self):
        fit = SimpleFit(chi_square=30.0, df=10,
                        baseline_chi_square=210.0, baseline_df=10)
        assert fit_indices(fit).cfi == pytest.approx(1 - 20.0 / 200.0)

    def test_srmr_includes_diagonal(self):
        S = np.array([[4.0, 0.0], [0.0, 1.0]])
        sigma = np.array([[3.0, 0.5], [0.5, 1.0]])
        fit = SimpleFit(sample_cov=S, implied_cov=sigma, chi_square=5, df=2)
        # standardized residuals: diag (0.25, 0), off-diagonal -0.25
        expected = math.sqrt((0.25 ** 2 + 0.25 ** 2 + 0.0) / 3)
        assert fit_indices(fit).srmr == pytest.approx(expected)


class SimpleFit:
    """Bare-bones stand-in carrying only what fit_indices reads."""

    def __init__(self, chi_square=0.0, df=1, baseline_chi_square=100.0,
                 baseline_df=1, n=101, sample_cov=None, implied_cov=None):
        self.chi_square = chi_square
        self.df = df
        self.baseline_chi_square = baseline_chi_square
        self.baseline_df = baseline_df
        self.n = n
        self.sample_cov = np.eye(2) if sample_cov is None else sample_cov
        self.implied_cov = (self.sample_cov.copy()
                            if implied_cov is None else implied_cov)


class TestFactorScores:
    def test_mean_case_scores_zero(self):
        X = simulate_one_factor(500, rng=np.random.default_rng(21))
        data = dataset_from(X, ["a", "b", "c"])
        fit = fit_ml(parse_model_spec(ONE_FACTOR), data)
        mean_case = dataset_from(fit.sample_mean[None, :], ["a", "b", "c"])
        scores = factor_scores(fit, mean_case)
        np.testing.assert_allclose(scores.to_numpy(), 0.0, atol=1e-12)

    def test_closed_form_weights(self):
        X = simulate_one_factor(800, loadings=(1.0, 0.7), resid=(0.5, 0.4),
                                rng=np.random.default_rng(22))
        data = dataset_from(X, ["a", "b"])
        # pin one residual so the two-indicator model is just-identified
        fit = fit_ml(parse_model_spec("F =~ a + b\nb ~~ 0.4*b\n"), data)
        scores = factor_scores(fit, data)
        q = 2
        weights = np.linalg.inv(fit.implied_cov) @ fit.latent_cov[:q, q:]
        expected = (X - fit.sample_mean) @ weights
        np.testing.assert_allclose(scores.to_numpy(), expected, atol=1e-10)

    def test_invariant_to_indicator_rescaling(self):
        X = simulate_one_factor(600, rng=np.random.default_rng(23))
        model = parse_model_spec(ONE_FACTOR)
        data = dataset_from(X, ["a", "b", "c"])
        base = factor_scores(fit_ml(model, data), data)

        X2 = X.copy()
        X2[:, 1] *= 2.0  # rescale a freely-loaded indicator
        data2 = dataset_from(X2, ["a", "b", "c"])
        rescaled = factor_scores(fit_ml(model, data2), data2)
        corr = np.corrcoef(base["F"], rescaled["F"])[0, 1]
        assert corr == pytest.approx(1.0, abs=1e-6)

    def test_missing_case_gets_nan(self):
        X = simulate_one_factor(100, rng=np.random.default_rng(24))
        data = dataset_from(X, ["a", "b", "c"])
        fit = fit_ml(parse_model_spec(ONE_FACTOR), data)
        X[0, 2] = np.nan
        scores = factor_scores(fit, dataset_from(X, ["a", "b", "c"]))
        assert math.isnan(scores.iloc[0]["F"])
        assert not scores.iloc[1:].isna().any().any()


class TestLoadingTables:
    def test_standardized_loading_definition(self):
        X = simulate_one_factor(1000, rng=np.random.default_rng(31))
        fit = fit_ml(parse_model_spec(ONE_FACTOR),
                     dataset_from(X, ["a", "b", "c"]))
        table = standardized_loadings(fit).set_index("indicator")
        ram = _Ram(fit.model)
        sd = np.sqrt(np.diag(fit.latent_cov))
        lam = fit.estimates["F=~b"]
        expected = lam * sd[ram.index["F"]] / sd[ram.index["b"]]
        assert table.loc["b", "standardized"] == pytest.approx(expected)

    def test_summary_aggregates(self):
        X = simulate_one_factor(1000, rng=np.random.default_rng(32))
        fit = fit_ml(parse_model_spec(ONE_FACTOR),
                     dataset_from(X, ["a", "b", "c"]))
        table = standardized_loadings(fit)
        summary = loading_summary(fit).set_index("latent")
        assert summary.loc["F", "mean_load"] == pytest.approx(
            table["standardized"].mean())
        assert summary.loc["F", "min_load"] == pytest.approx(
            table["standardized"].min())
