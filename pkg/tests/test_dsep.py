import numpy as np
import pytest

from sembn.bn.graph import Dag, d_separated, dag_from_sem
from sembn.bn.net import posterior
from sembn.errors import UnknownNode
from sembn.modelspec import parse_model_spec
from support import random_net

CHAIN = Dag(nodes={"X": 2, "W": 2, "Y": 2}, parents={"W": ("X",), "Y": ("W",)})
CONFOUNDER = Dag(nodes={"X": 2, "W": 2, "Y": 2},
                 parents={"X": ("W",), "Y": ("W",)})
COLLIDER = Dag(nodes={"X": 2, "W": 2, "Y": 2}, parents={"W": ("X", "Y")})


class TestCanonicalStructures:
    """The nine chain / confounder / collider (in)dependence cases."""

    @pytest.mark.parametrize("dag,expected_marginal,expected_conditioned", [
        (CHAIN, False, True),
        (CONFOUNDER, False, True),
        (COLLIDER, True, False),
    ], ids=["chain", "confounder", "collider"])
    def test_endpoints(self, dag, expected_marginal, expected_conditioned):
        assert d_separated(dag, "X", "Y", ()) is expected_marginal
        assert d_separated(dag, "X", "Y", {"W"}) is expected_conditioned

    @pytest.mark.parametrize("dag", [CHAIN, CONFOUNDER, COLLIDER],
                             ids=["chain", "confounder", "collider"])
    def test_adjacent_pair_never_separated(self, dag):
        assert not d_separated(dag, "X", "W", ())


class TestGeneralRules:
    def test_conditioned_collider_descendant_opens_path(self):
        dag = Dag(nodes={"X": 2, "Y": 2, "W": 2, "D": 2},
                  parents={"W": ("X", "Y"), "D": ("W",)})
        assert d_separated(dag, "X", "Y", ())
        assert not d_separated(dag, "X", "Y", {"D"})

    def test_symmetry(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            net = random_net(rng)
            names = list(net.dag.nodes)
            x, y = names[0], names[1]
            z = set(names[2:3])
            assert d_separated(net.dag, x, y, z) == d_separated(net.dag, y, x, z)

    def test_unknown_node(self):
        with pytest.raises(UnknownNode):
            d_separated(CHAIN, "X", "nope", ())

    def test_query_node_in_conditioning_set_rejected(self):
        with pytest.raises(ValueError):
            d_separated(CHAIN, "X", "Y", {"X"})

    def test_separation_implies_posterior_invariance(self):
        # on strictly positive nets, d-separation must show up as exact
        # conditional independence under inference
        rng = np.random.default_rng(23)
        checked = 0
        while checked < 30:
            net = random_net(rng)
            names = list(net.dag.nodes)
            perm = rng.permutation(len(names))
            x, y = names[perm[0]], names[perm[1]]
            z_names = [names[i] for i in perm[2:2 + rng.integers(0, 2)]]
            if not d_separated(net.dag, x, y, z_names):
                continue
            z = {n: int(rng.integers(1, net.dag.nodes[n] + 1))
                 for n in z_names}
            base = posterior(net, x, z).probs
            for level in range(1, net.dag.nodes[y] + 1):
                cond = posterior(net, x, {**z, y: level}).probs
                assert np.abs(cond - base).max() < 1e-10
            checked += 1


class TestDagFromSem:
    def test_latent_only_projection(self):
        text = ("PP =~ p1 + p2\nCFS =~ c1 + c2\nPYD =~ y1 + y2\n"
                "PYD ~ PP + CFS\nPP ~~ CFS\n")
        dag = dag_from_sem(parse_model_spec(text), level_counts=5)
        assert set(dag.nodes) == {"PP", "CFS", "PYD"}
        assert dag.nodes["PYD"] == 5
        assert set(dag.parents["PYD"]) == {"PP", "CFS"}
        assert dag.parents["PP"] == ()

    def test_higher_order_factor_points_down(self):
        text = "G =~ F1 + F2\nF1 =~ a + b\nF2 =~ c + d\n"
        dag = dag_from_sem(parse_model_spec(text), level_counts=3)
        assert dag.parents["F1"] == ("G",)
        assert dag.parents["F2"] == ("G",)

    def test_include_indicators(self):
        dag = dag_from_sem(parse_model_spec("F =~ a + b\n"),
                           level_counts=2, include_indicators=True)
        assert set(dag.nodes) == {"F", "a", "b"}
        assert dag.parents["a"] == ("F",)

    def test_single_latent_no_edges(self):
        dag = dag_from_sem(parse_model_spec("F =~ a + b\n"), level_counts=4)
        assert set(dag.nodes) == {"F"}
        assert dag.parents["F"] == ()

    def test_per_node_level_counts(self):
        text = "G =~ F1 + F2\nF1 =~ a\nF2 =~ b\n"
        dag = dag_from_sem(parse_model_spec(text),
                           level_counts={"G": 5, "F1": 3, "F2": 2})
        assert dag.nodes == {"G": 5, "F1": 3, "F2": 2}
