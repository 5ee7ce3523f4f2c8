"""Covariance-structure estimation for latent-variable path models.

The model is held in an all-variables form: a coefficient matrix A over
observed + latent variables (A[i, j] is the path j -> i) and a symmetric
matrix S of variances/covariances.  The implied covariance of the full
variable vector is (I - A)^-1 S (I - A)^-T and the observed block of it
is fitted to the sample covariance by maximum likelihood.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.optimize

from .dataset import ObservedDataset, complete_cases
from .errors import (
    NonConvergence,
    NonPositiveDefiniteSample,
    SingularImpliedCov,
    SingularSystem,
    ZeroDf,
)
from .modelspec import SemModel

GRAD_TOL = 1e-6
F_REL_TOL = 1e-10
MAX_ITER = 5000


class HeywoodWarning(UserWarning):
    """A residual variance collapsed to (numerically) zero."""


@dataclass(frozen=True)
class FitIndices:
    rmsea: float
    cfi: float
    srmr: float


@dataclass(frozen=True)
class SemFit:
    """Result of a maximum-likelihood fit."""

    model: SemModel
    estimates: dict[str, float]
    implied_cov: np.ndarray          # observed block, q x q
    latent_cov: np.ndarray           # full implied covariance, t x t
    sample_cov: np.ndarray = field(repr=False)
    sample_mean: np.ndarray = field(repr=False)
    discrepancy: float = 0.0
    chi_square: float = 0.0
    df: int = 0
    baseline_chi_square: float = 0.0
    baseline_df: int = 0
    n: int = 0
    converged: bool = True
    n_iter: int = 0
    gradient_max: float = 0.0


class _Ram:
    """Parameter bookkeeping for the all-variables matrices."""

    def __init__(self, model: SemModel):
        self.model = model
        self.names = list(model.observed) + list(model.latents)
        self.index = {n: i for i, n in enumerate(self.names)}
        self.t = len(self.names)
        self.q = len(model.observed)
        self.obs_idx = np.arange(self.q)

        # locations: label -> list of ("A"|"S", i, j); fixed entries applied once
        self.free_labels: list[str] = []
        self.locations: dict[str, list[tuple[str, int, int]]] = {}
        self.is_variance: dict[str, bool] = {}
        self.A_fixed = np.zeros((self.t, self.t))
        self.S_fixed = np.zeros((self.t, self.t))

        for edge in model.directed_edges:
            i, j = self.index[edge.dst], self.index[edge.src]
            if edge.param.free:
                self._note(edge.param.label, ("A", i, j), variance=False)
            else:
                self.A_fixed[i, j] += edge.param.value
        for term in model.covariance_terms:
            i, j = self.index[term.a], self.index[term.b]
            if term.param.free:
                self._note(term.param.label, ("S", i, j), variance=(i == j))
            else:
                self.S_fixed[i, j] += term.param.value
                if i != j:
                    self.S_fixed[j, i] += term.param.value

    def _note(self, label, loc, variance):
        if label not in self.locations:
            self.locations[label] = []
            self.free_labels.append(label)
            self.is_variance[label] = variance
        self.locations[label].append(loc)

    @property
    def n_free(self) -> int:
        return len(self.free_labels)

    def matrices(self, values: dict[str, float]):
        A = self.A_fixed.copy()
        S = self.S_fixed.copy()
        for label in self.free_labels:
            v = values[label]
            for kind, i, j in self.locations[label]:
                if kind == "A":
                    A[i, j] += v
                else:
                    S[i, j] += v
                    if i != j:
                        S[j, i] += v
        return A, S

    def full_covariance(self, values: dict[str, float]) -> np.ndarray:
        A, S = self.matrices(values)
        IA = np.eye(self.t) - A
        try:
            C = np.linalg.inv(IA)
        except np.linalg.LinAlgError:
            raise SingularSystem("I - A is not invertible") from None
        return C @ S @ C.T


def implied_covariance(model: SemModel, params: dict[str, float]) -> np.ndarray:
    """Observed block of the model-implied covariance at the given parameters."""
    ram = _Ram(model)
    missing = [l for l in ram.free_labels if l not in params]
    if missing:
        raise KeyError(f"missing values for free parameters {missing}")
    full = ram.full_covariance(params)
    return full[: ram.q, : ram.q]


def _anchor_variance(model: SemModel, ram: _Ram, s_diag: dict[str, float]):
    """Sample variance of the observed anchor of each variable.

    For an observed variable this is its own variance; for a latent, the
    variance of the indicator reached by following fixed anchor loadings.
    """
    anchor: dict[str, float] = dict(s_diag)
    fixed_first = {}
    for e in model.measurement_edges:
        if not e.param.free and e.src not in fixed_first:
            fixed_first[e.src] = e.dst
    def resolve(name, depth=0):
        if name in anchor:
            return anchor[name]
        if depth > len(model.latents) + 1 or name not in fixed_first:
            return 1.0
        v = resolve(fixed_first[name], depth + 1)
        anchor[name] = v
        return v
    for latent in model.latents:
        resolve(latent)
    return anchor


def _start_values(model: SemModel, ram: _Ram, S_samp: np.ndarray):
    s_diag = {name: S_samp[i, i] for i, name in enumerate(model.observed)}
    anchor = _anchor_variance(model, ram, s_diag)
    edges = {e.param.label: e for e in model.directed_edges}
    covs = {c.param.label: c for c in model.covariance_terms}
    endogenous = {e.dst for e in model.directed_edges}
    start = {}
    for label in ram.free_labels:
        if label in edges:
            e = edges[label]
            if e in model.measurement_edges:
                start[label] = 0.7 * np.sqrt(anchor[e.dst] / anchor[e.src])
            else:
                start[label] = 0.0
        else:
            c = covs[label]
            if c.a == c.b:
                start[label] = (0.5 if c.a in endogenous else 0.4) * anchor[c.a]
            else:
                start[label] = 0.0
    return start


def _objective_factory(ram: _Ram, S_samp: np.ndarray):
    """F_ML and its analytic gradient in the transformed parameter space.

    Variance parameters enter as their logarithm, which keeps them
    positive without explicit bounds.
    """
    t, q = ram.t, ram.q
    sign, logdet_S = np.linalg.slogdet(S_samp)
    if sign <= 0:
        raise NonPositiveDefiniteSample("sample covariance is not positive definite")
    var_mask = np.array([ram.is_variance[l] for l in ram.free_labels])

    def unpack(x):
        values = {}
        for k, label in enumerate(ram.free_labels):
            values[label] = float(np.exp(x[k])) if var_mask[k] else float(x[k])
        return values

    def pack(values):
        x = np.empty(ram.n_free)
        for k, label in enumerate(ram.free_labels):
            v = values[label]
            x[k] = np.log(max(v, 1e-10)) if var_mask[k] else v
        return x

    def f_and_grad(x):
        values = unpack(x)
        A, S = ram.matrices(values)
        IA = np.eye(t) - A
        try:
            C = np.linalg.inv(IA)
        except np.linalg.LinAlgError:
            return 1e12, np.zeros_like(x)
        full = C @ S @ C.T
        sigma = full[:q, :q]
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            # inadmissible point: steer back with an eigenvalue penalty
            w = np.linalg.eigvalsh(sigma)
            return 1e10 - 1e6 * min(w.min(), 0.0), np.zeros_like(x)
        logdet = 2.0 * np.log(np.diag(chol)).sum()
        sigma_inv = np.linalg.inv(sigma)
        F = logdet + float(np.trace(S_samp @ sigma_inv)) - logdet_S - q
        W = sigma_inv - sigma_inv @ S_samp @ sigma_inv
        M = np.zeros((t, t))
        M[:q, :q] = W
        CMC = C.T @ M @ C
        XMC = full @ M @ C
        grad = np.zeros(ram.n_free)
        for k, label in enumerate(ram.free_labels):
            g = 0.0
            for kind, i, j in ram.locations[label]:
                if kind == "A":
                    g += 2.0 * XMC[j, i]
                elif i == j:
                    g += CMC[i, i]
                else:
                    g += 2.0 * CMC[i, j]
            if var_mask[k]:
                g *= values[label]  # d v / d log v
            grad[k] = g
        return F, grad

    return f_and_grad, pack, unpack


def fit_ml(model: SemModel, data: ObservedDataset, max_iter: int = MAX_ITER) -> SemFit:
    """Fit the model by minimizing the ML discrepancy F_ML.

    Uses listwise complete cases on the model's observed variables and a
    quasi-Newton optimizer with the analytic gradient.  Raises
    NonConvergence if neither the gradient criterion (max-norm < 1e-6)
    nor the relative-change criterion (< 1e-10) is met within the
    iteration cap.  A residual variance collapsing to zero is reported as
    a HeywoodWarning, not an error.
    """
    used = complete_cases(data, model.observed)
    X = used.frame[list(model.observed)].to_numpy()
    n = X.shape[0]
    if n < 2:
        raise NonPositiveDefiniteSample("need at least 2 complete cases")
    S_samp = np.cov(X, rowvar=False, ddof=1)
    S_samp = np.atleast_2d(S_samp)

    ram = _Ram(model)
    q = ram.q
    df = q * (q + 1) // 2 - ram.n_free
    if df < 0:
        raise SingularSystem(
            f"model has {ram.n_free} free parameters but only "
            f"{q * (q + 1) // 2} sample moments")

    f_and_grad, pack, unpack = _objective_factory(ram, S_samp)
    x0 = pack(_start_values(model, ram, S_samp))

    res = scipy.optimize.minimize(
        f_and_grad, x0, jac=True, method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": GRAD_TOL * 0.1,
                 "ftol": F_REL_TOL, "maxcor": 30},
    )
    F, grad = f_and_grad(res.x)
    gmax = float(np.abs(grad).max()) if grad.size else 0.0
    converged = gmax < GRAD_TOL or bool(res.success)
    if not converged:
        raise NonConvergence(
            f"optimizer stopped after {res.nit} iterations, "
            f"max |grad| = {gmax:.3e}: {res.message}")

    estimates = unpack(res.x)
    for label, free in ram.is_variance.items():
        if free and estimates[label] < 1e-8:
            warnings.warn(f"residual variance {label!r} collapsed to zero "
                          "(Heywood case)", HeywoodWarning)

    full = ram.full_covariance(estimates)
    sigma = full[:q, :q]
    # saturated models fit exactly; clip tiny negative discrepancy noise
    F = max(F, 0.0)
    if df == 0 and F < 1e-9:
        F = 0.0

    # baseline: independence model (diagonal sample covariance)
    F_base = float(np.log(np.diag(S_samp)).sum() - np.linalg.slogdet(S_samp)[1])
    return SemFit(
        model=model,
        estimates=estimates,
        implied_cov=sigma,
        latent_cov=full,
        sample_cov=S_samp,
        sample_mean=X.mean(axis=0),
        discrepancy=F,
        chi_square=(n - 1) * F,
        df=df,
        baseline_chi_square=(n - 1) * F_base,
        baseline_df=q * (q - 1) // 2,
        n=n,
        converged=converged,
        n_iter=int(res.nit),
        gradient_max=gmax,
    )


def fit_indices(fit: SemFit) -> FitIndices:
    """RMSEA, CFI and SRMR from a converged fit."""
    T, df = fit.chi_square, fit.df
    Tb, dfb = fit.baseline_chi_square, fit.baseline_df
    if df == 0:
        raise ZeroDf("RMSEA undefined for a saturated model (df = 0)")
    rmsea = float(np.sqrt(max(T - df, 0.0) / (df * (fit.n - 1))))
    denom = max(Tb - dfb, T - df, 1e-12)
    cfi = float(1.0 - max(T - df, 0.0) / denom)

    S, sigma = fit.sample_cov, fit.implied_cov
    d = np.sqrt(np.diag(S))
    resid = (S - sigma) / np.outer(d, d)
    tri = np.tril_indices_from(resid)
    srmr = float(np.sqrt(np.mean(resid[tri] ** 2)))
    return FitIndices(rmsea=rmsea, cfi=cfi, srmr=srmr)


def factor_scores(fit: SemFit, data: ObservedDataset) -> pd.DataFrame:
    """Regression-method factor scores, one column per latent.

    score vector = (x - x_bar)' Sigma^-1 Cov(x, latents), with the
    cross-covariance taken from the fitted full covariance.  Cases with a
    missing model indicator get NaN scores.
    """
    model = fit.model
    q = len(model.observed)
    cross = fit.latent_cov[:q, q:]  # Cov(x, latents)
    try:
        weights = np.linalg.solve(fit.implied_cov, cross)
    except np.linalg.LinAlgError:
        raise SingularImpliedCov("implied covariance is singular") from None

    X = data.frame[list(model.observed)].to_numpy()
    complete = ~np.isnan(X).any(axis=1)
    scores = np.full((X.shape[0], len(model.latents)), np.nan)
    centered = X[complete] - fit.sample_mean
    scores[complete] = centered @ weights
    return pd.DataFrame(scores, index=data.frame.index,
                        columns=list(model.latents))


def standardized_loadings(fit: SemFit) -> pd.DataFrame:
    """Measurement loadings rescaled to unit-variance source and target.

    Returns one row per measurement edge with columns latent, indicator,
    raw, standardized.
    """
    ram = _Ram(fit.model)
    sd = np.sqrt(np.diag(fit.latent_cov))
    rows = []
    for e in fit.model.measurement_edges:
        raw = e.param.value if not e.param.free else fit.estimates[e.param.label]
        i, j = ram.index[e.dst], ram.index[e.src]
        rows.append({
            "latent": e.src,
            "indicator": e.dst,
            "raw": float(raw),
            "standardized": float(raw * sd[j] / sd[i]),
        })
    return pd.DataFrame(rows)


def loading_summary(fit: SemFit) -> pd.DataFrame:
    """Per-latent mean/min/max of standardized loadings."""
    table = standardized_loadings(fit)
    grouped = table.groupby("latent", sort=False)["standardized"]
    out = grouped.agg(["mean", "min", "max"]).reset_index()
    return out.rename(columns={"mean": "mean_load", "min": "min_load",
                               "max": "max_load"})
