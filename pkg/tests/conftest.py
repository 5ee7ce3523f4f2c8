import numpy as np
import pytest

from sembn.bn.graph import Dag
from sembn.bn.net import BayesNet, Cpt


@pytest.fixture
def chain_net() -> BayesNet:
    """Binary chain X -> W -> Y with the hand-checkable CPTs
    P(X=1)=0.6, P(W=1|X=1)=0.7, P(W=1|X=2)=0.2, P(Y=1|W=1)=0.9,
    P(Y=1|W=2)=0.4."""
    dag = Dag(nodes={"X": 2, "W": 2, "Y": 2},
              parents={"W": ("X",), "Y": ("W",)})
    cpts = {
        "X": Cpt("X", (), np.array([0.6, 0.4])),
        "W": Cpt("W", ("X",), np.array([[0.7, 0.3], [0.2, 0.8]])),
        "Y": Cpt("Y", ("W",), np.array([[0.9, 0.1], [0.4, 0.6]])),
    }
    return BayesNet(dag=dag, cpts=cpts)


@pytest.fixture
def collider_net() -> BayesNet:
    """Binary collider X -> W <- Y with generic CPTs."""
    dag = Dag(nodes={"X": 2, "Y": 2, "W": 2},
              parents={"W": ("X", "Y")})
    cpts = {
        "X": Cpt("X", (), np.array([0.3, 0.7])),
        "Y": Cpt("Y", (), np.array([0.8, 0.2])),
        "W": Cpt("W", ("X", "Y"), np.array([
            [[0.9, 0.1], [0.5, 0.5]],
            [[0.6, 0.4], [0.1, 0.9]],
        ])),
    }
    return BayesNet(dag=dag, cpts=cpts)
