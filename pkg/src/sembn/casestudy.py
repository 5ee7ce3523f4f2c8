"""Bundled synthetic study: a three-layer adolescent-development survey.

The original survey data behind the PYD / PP / CFS model are not
redistributable, so this module generates a stand-in sample with a known
population structure: 54 questionnaire items measuring 17 first-order
constructs, which roll up into positive parenting (PP), school climate
(CFS) and personal positive youth development (PYD), with PYD regressed
on PP and CFS.  A small calibrated layer of residual item correlations
puts global fit in the realistic (imperfect) range reported for the
survey rather than at simulation-perfect values, and the population
loadings are tuned so the fitted per-construct loading summaries still
match the published table despite that misfit.

Everything is deterministic given the seed.
"""
from __future__ import annotations

import numpy as np
import pandas as pd

from .dataset import ObservedDataset, VariableSchema
from .modelspec import parse_model_spec

DEFAULT_SEED = 20240731
N_CASES = 1507
N_COMPLETE = 1015

# standardized population loadings of each item on its first-order
# construct; list order is DSL order (anchor first).  These are calibrated
# so that the *fitted* per-construct loading summaries on the generated
# sample — not the population values themselves — match the published
# survey table, compensating for attenuation from the residual layer.
ITEM_LOADINGS = {
    "AfC": (0.8208, 0.7050, 0.7785),
    "Aut": (0.7940, 0.4044, 0.7180, 0.7855),
    "Hum": (0.8533, 0.7126, 0.7773),
    "Dis": (0.8768, 0.6792, 0.7572),
    "Pee": (0.7591, 0.5540, 0.7700),
    "Bel": (0.8931, 0.8430, 0.8723),
    "Sup": (0.8135, 0.6930, 0.8465),
    "Rul": (0.8205, 0.6679, 0.7680),
    "Val": (0.8229, 0.6884, 0.7274),
    "Pro": (0.8374, 0.7192, 0.7833),
    "Opt": (0.7069, 0.5035, 0.4981, 0.5018),
    "Pes": (0.7053, 0.5751, 0.6327),
    "GSe": (0.6823, 0.5137, 0.6353),
    "Age": (0.6152, 0.4261, 0.5176),
    "Com": (0.5668, 0.4332, 0.5213),
    "Man": (0.5590, 0.3679, 0.4657),
    "Mea": (0.5450, 0.0839, 0.4934, 0.5049),
}

# standardized population loadings of lower-order constructs on their
# parent construct, calibrated the same way
FACTOR_LOADINGS = {
    "PP": {"AfC": 0.9256, "Aut": 0.7567, "Hum": 0.8384, "Dis": 0.5559},
    "CFS": {"Bon": 0.9082, "Pee": 0.2106, "Pro": 0.6748, "Cla": 0.7499},
    "Bon": {"Bel": 0.8395, "Sup": 0.8556},
    "Cla": {"Rul": 0.8449, "Val": 0.9022},
    "PYD": {"Opt": 0.8784, "Pes": -0.7951, "GSe": 0.6202, "Age": 0.7764,
            "Com": 0.7819, "Man": 0.8482, "Mea": 0.9950},
}

# standardized structural part: PYD on its two context factors
STRUCTURAL = {"PP": 0.50, "CFS": 0.35}
PP_CFS_CORR = 0.35

# residual correlation layers (calibrated): a diffuse pairwise layer plus a
# few rank-one "method factor" clusters over low-communality items, which
# raise residuals where the ML metric weights them least
MISSPEC_PAIRS = 420
MISSPEC_SCALE = 0.020
CLUSTER_COUNT = 5
CLUSTER_SIZE = 8
CLUSTER_SCALE = 0.29
WEAK_UNIQUENESS = 0.6
MISSPEC_SEED = 7

ITEM_MEAN = 3.0
ITEM_SD = 0.8

LATENT_ORDER = (
    "PP", "CFS", "PYD",
    "AfC", "Aut", "Hum", "Dis",
    "Pee", "Bon", "Pro", "Cla", "Bel", "Sup", "Rul", "Val",
    "Opt", "Pes", "GSe", "Age", "Com", "Man", "Mea",
)


def item_names(factor: str) -> list[str]:
    return [f"{factor.lower()}{i}" for i in range(1, len(ITEM_LOADINGS[factor]) + 1)]


def case_study_model_text() -> str:
    lines = []
    for factor, loadings in ITEM_LOADINGS.items():
        lines.append(f"{factor} =~ " + " + ".join(item_names(factor)))
    lines.append("PP =~ AfC + Aut + Hum + Dis")
    lines.append("Bon =~ Bel + Sup")
    lines.append("Cla =~ Rul + Val")
    lines.append("CFS =~ Bon + Pee + Pro + Cla")
    lines.append("PYD =~ Opt + Pes + GSe + Age + Com + Man + Mea")
    lines.append("PYD ~ PP + CFS")
    lines.append("PP ~~ CFS")
    return "\n".join(lines) + "\n"


def case_study_schema() -> list[VariableSchema]:
    names = []
    for factor in ITEM_LOADINGS:
        names.extend(item_names(factor))
    return [VariableSchema(name=n, kind="continuous") for n in names]


def latent_population_cov() -> np.ndarray:
    """Covariance of the 22 constructs; standardized, so unit diagonal."""
    m = len(LATENT_ORDER)
    idx = {n: i for i, n in enumerate(LATENT_ORDER)}
    A = np.zeros((m, m))
    S = np.zeros((m, m))
    S[idx["PP"], idx["PP"]] = 1.0
    S[idx["CFS"], idx["CFS"]] = 1.0
    S[idx["PP"], idx["CFS"]] = S[idx["CFS"], idx["PP"]] = PP_CFS_CORR
    b1, b2 = STRUCTURAL["PP"], STRUCTURAL["CFS"]
    A[idx["PYD"], idx["PP"]] = b1
    A[idx["PYD"], idx["CFS"]] = b2
    explained = b1 ** 2 + b2 ** 2 + 2 * b1 * b2 * PP_CFS_CORR
    S[idx["PYD"], idx["PYD"]] = 1.0 - explained
    for parent, children in FACTOR_LOADINGS.items():
        for child, lam in children.items():
            A[idx[child], idx[parent]] = lam
            S[idx[child], idx[child]] = 1.0 - lam ** 2
    C = np.linalg.inv(np.eye(m) - A)
    return C @ S @ C.T


def item_population_cov() -> np.ndarray:
    """Unit-diagonal covariance of the 54 items under the clean hierarchy."""
    lat_cov = latent_population_cov()
    idx = {n: i for i, n in enumerate(LATENT_ORDER)}
    factors, lams = [], []
    for factor, loadings in ITEM_LOADINGS.items():
        for lam in loadings:
            factors.append(idx[factor])
            lams.append(lam)
    lams = np.array(lams)
    sigma = np.outer(lams, lams) * lat_cov[np.ix_(factors, factors)]
    np.fill_diagonal(sigma, 1.0)
    return sigma


def perturbed_item_cov() -> np.ndarray:
    """Population covariance with the calibrated residual-correlation layer."""
    sigma = item_population_cov()
    p = sigma.shape[0]
    rng = np.random.default_rng(MISSPEC_SEED)
    for _ in range(MISSPEC_PAIRS):
        i, j = rng.choice(p, size=2, replace=False)
        sigma[i, j] += MISSPEC_SCALE * rng.standard_normal()
        sigma[j, i] = sigma[i, j]

    lams, owner = [], []
    for factor, loadings in ITEM_LOADINGS.items():
        lams.extend(loadings)
        owner.extend([factor] * len(loadings))
    lams = np.asarray(lams)
    weak = np.flatnonzero(1.0 - lams ** 2 >= WEAK_UNIQUENESS)
    for _ in range(CLUSTER_COUNT):
        # at most one item per construct, so no single factor can absorb
        # the shared variance into its loadings
        members, seen = [], set()
        for idx in rng.permutation(weak):
            if owner[idx] not in seen:
                seen.add(owner[idx])
                members.append(idx)
            if len(members) == CLUSTER_SIZE:
                break
        v = np.zeros(p)
        v[members] = CLUSTER_SCALE * rng.standard_normal(len(members))
        bump = np.outer(v, v)
        np.fill_diagonal(bump, 0.0)
        sigma += bump

    w = np.linalg.eigvalsh(sigma)
    if w.min() <= 1e-6:
        raise RuntimeError("perturbed covariance lost positive definiteness")
    return sigma


def generate_case_study(seed: int = DEFAULT_SEED) -> ObservedDataset:
    """Draw the full synthetic sample: 1507 cases, 1015 of them complete.

    Incomplete cases get one to three missing item cells, mimicking the
    survey's listwise-complete subset size.
    """
    schema = case_study_schema()
    names = [v.name for v in schema]
    sigma = perturbed_item_cov()
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((N_CASES, len(names))) @ np.linalg.cholesky(sigma).T
    x = ITEM_MEAN + ITEM_SD * z

    n_incomplete = N_CASES - N_COMPLETE
    rows = rng.choice(N_CASES, size=n_incomplete, replace=False)
    for row in rows:
        k = rng.integers(1, 4)
        cols = rng.choice(len(names), size=k, replace=False)
        x[row, cols] = np.nan

    frame = pd.DataFrame(x, columns=names, index=range(N_CASES))
    return ObservedDataset(tuple(schema), frame)


def case_study_model():
    return parse_model_spec(case_study_model_text())


def case_study_config_text(data_path: str, out_dir: str, k: int = 5,
                           estimator: str = "bdeu", ess: float = 1.0,
                           split_seed: int = 11) -> str:
    """A ready-to-run pipeline config for the bundled study."""
    model = case_study_model_text().strip().replace("\n", "\n    ")
    return f'''[data]
path = "{data_path}"

[model]
text = """
    {model}
"""

[discretize]
k = {k}
scope = "full"

[split]
fraction = 0.7
seed = {split_seed}

[estimator]
method = "{estimator}"
ess = {ess}

[analysis]
target = "PYD"
contour_axes = ["PP", "CFS"]
profile_nodes = ["PP", "CFS", "PYD"]
log_base = 2

[output]
dir = "{out_dir}"
'''
