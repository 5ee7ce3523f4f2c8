import pytest

from sembn.errors import CycleError, ModelSyntaxError
from sembn.modelspec import parse_model_spec


class TestMeasurement:
    def test_single_factor(self):
        model = parse_model_spec("F =~ a + b + c\n")
        assert model.latents == ("F",)
        assert model.observed == ("a", "b", "c")
        anchor, *rest = model.measurement_edges
        assert not anchor.param.free and anchor.param.value == 1.0
        assert all(e.param.free for e in rest)
        # residuals for a, b, c plus the latent variance
        variances = {(c.a, c.b) for c in model.covariance_terms}
        assert variances == {("a", "a"), ("b", "b"), ("c", "c"), ("F", "F")}
        assert len(model.free_parameters) == 2 + 4

    def test_anchor_override(self):
        model = parse_model_spec("F =~ 0.5*a + b\n")
        anchor = model.measurement_edges[0]
        assert not anchor.param.free and anchor.param.value == 0.5
        assert model.measurement_edges[1].param.free

    def test_fixed_loading_mid_list(self):
        model = parse_model_spec("F =~ a + 0.7*c\n")
        fixed = model.measurement_edges[1]
        assert not fixed.param.free and fixed.param.value == 0.7


class TestRegressionAndCovariance:
    def test_regression_edges_point_at_target(self):
        text = ("PP =~ p1 + p2\nCFS =~ c1 + c2\nPYD =~ y1 + y2\n"
                "PYD ~ PP + CFS\n")
        model = parse_model_spec(text)
        pairs = {(e.src, e.dst) for e in model.regression_edges}
        assert pairs == {("PP", "PYD"), ("CFS", "PYD")}

    def test_covariance_label_is_sorted(self):
        model = parse_model_spec("A =~ a1 + a2\nB =~ b1 + b2\nB ~~ A\n")
        cov = model.covariance_terms[0]
        assert (cov.a, cov.b) == ("A", "B")
        assert cov.param.label == "A~~B"

    def test_fixed_covariance(self):
        model = parse_model_spec("F =~ a + b\na ~~ 0.5*b\n")
        cov = next(c for c in model.covariance_terms if c.a == "a" and c.b == "b")
        assert not cov.param.free and cov.param.value == 0.5

    def test_explicit_variance_not_duplicated(self):
        model = parse_model_spec("F =~ a + b\nF ~~ 0.8*F\n")
        f_terms = [c for c in model.covariance_terms if (c.a, c.b) == ("F", "F")]
        assert len(f_terms) == 1
        assert not f_terms[0].param.free


class TestErrors:
    def test_empty_rhs(self):
        with pytest.raises(ModelSyntaxError):
            parse_model_spec("F =~\n")

    def test_bad_identifier(self):
        with pytest.raises(ModelSyntaxError) as err:
            parse_model_spec("F =~ a + 2bad\n")
        assert err.value.line == 1

    def test_missing_operator(self):
        with pytest.raises(ModelSyntaxError):
            parse_model_spec("just some words\n")

    def test_bad_coefficient(self):
        with pytest.raises(ModelSyntaxError):
            parse_model_spec("F =~ a + x*b\n")

    def test_regression_cycle(self):
        text = ("A =~ a1\nB =~ b1\nA ~ B\nB ~ A\n")
        with pytest.raises(CycleError):
            parse_model_spec(text)

    def test_duplicate_parameter(self):
        with pytest.raises(ModelSyntaxError):
            parse_model_spec("F =~ a + b\nF =~ a\n")

    def test_comments_and_blanks_ignored(self):
        model = parse_model_spec(
            "# leading comment\n\nF =~ a + b  # trailing\n")
        assert model.latents == ("F",)
