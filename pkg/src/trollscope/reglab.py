"""Binary logistic regression with the diagnostics used in staged model
building: IRLS fitting, likelihood-ratio and single-term-deletion tests,
backward AIC selection, variance inflation factors, influence flagging,
pseudo-R2 measures, and holdout classification.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, FitError
from .special import chi2_sf, normal_sf

MAX_IRLS_ITER = 25
DEVIANCE_TOL = 1e-8
SEPARATION_BETA = 15.0


# ---------------------------------------------------------------------------
# standardization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StandardizeTransform:
    mode: str
    columns: tuple[str, ...]
    means: np.ndarray
    scales: np.ndarray  # ones for center mode

    def apply(self, X: np.ndarray, columns: Sequence[str] | None = None) -> np.ndarray:
        if columns is not None and tuple(columns) != self.columns:
            raise DataError(
                f"column mismatch: transform has {self.columns}, got {tuple(columns)}"
            )
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != len(self.columns):
            raise DataError(
                f"transform expects {len(self.columns)} columns, got {X.shape[1]}"
            )
        return (X - self.means) / self.scales

    def invert(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) * self.scales + self.means


def standardize(
    X: np.ndarray, mode: str = "zscore", columns: Sequence[str] | None = None
) -> tuple[np.ndarray, StandardizeTransform]:
    """Center (or z-score with population SD) each column; the returned
    transform reapplies the training statistics to new data."""
    if mode not in ("center", "zscore"):
        raise ConfigError(f"unknown standardization mode {mode!r}")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError("standardize expects a 2-d matrix")
    names = tuple(columns) if columns is not None else tuple(f"x{i}" for i in range(X.shape[1]))
    means = X.mean(axis=0)
    if mode == "zscore":
        scales = X.std(axis=0)
        if np.any(scales == 0):
            bad = names[int(np.argmin(scales))]
            raise DataError(f"zero-variance column {bad!r} cannot be z-scored")
    else:
        scales = np.ones(X.shape[1])
    transform = StandardizeTransform(mode=mode, columns=names, means=means, scales=scales)
    return transform.apply(X), transform


# ---------------------------------------------------------------------------
# formulas and design matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelFormula:
    """Main effects plus optional two-way interactions over named columns."""

    mains: tuple[str, ...]
    interactions: tuple[tuple[str, str], ...] = ()
    intercept: bool = True

    def __post_init__(self):
        if len(set(self.mains)) != len(self.mains):
            raise ConfigError("duplicate main effect")
        canon = [tuple(sorted(p)) for p in self.interactions]
        if len(set(canon)) != len(canon):
            raise ConfigError("duplicate interaction")
        for a, b in self.interactions:
            if a not in self.mains or b not in self.mains:
                raise ConfigError(f"interaction {a}*{b} references a missing main effect")

    @property
    def terms(self) -> tuple[str, ...]:
        return self.mains + tuple(f"{a}*{b}" for a, b in self.interactions)

    def without(self, term: str) -> "ModelFormula":
        if "*" in term:
            a, b = term.split("*")
            inter = tuple(p for p in self.interactions if set(p) != {a, b})
            if len(inter) == len(self.interactions):
                raise ConfigError(f"term {term!r} not in formula")
            return ModelFormula(self.mains, inter, self.intercept)
        if term not in self.mains:
            raise ConfigError(f"term {term!r} not in formula")
        if any(term in pair for pair in self.interactions):
            raise ConfigError(f"cannot drop {term!r} while an interaction uses it")
        return ModelFormula(
            tuple(m for m in self.mains if m != term), self.interactions, self.intercept
        )

    def removable_terms(self) -> tuple[str, ...]:
        """Terms deletable without violating marginality: all interactions,
        and main effects no retained interaction references."""
        used = {name for pair in self.interactions for name in pair}
        mains = tuple(m for m in self.mains if m not in used)
        inters = tuple(f"{a}*{b}" for a, b in self.interactions)
        return inters + mains

    def is_nested_in(self, other: "ModelFormula") -> bool:
        return set(self.terms) <= set(other.terms) and self.intercept == other.intercept


def design_matrix(
    X: np.ndarray, columns: Sequence[str], formula: ModelFormula
) -> tuple[np.ndarray, list[str]]:
    X = np.asarray(X, dtype=np.float64)
    col = {name: X[:, i] for i, name in enumerate(columns)}
    missing = [m for m in formula.mains if m not in col]
    if missing:
        raise ConfigError(f"columns {missing} not present in data")
    parts: list[np.ndarray] = []
    names: list[str] = []
    if formula.intercept:
        parts.append(np.ones(X.shape[0]))
        names.append("(intercept)")
    for m in formula.mains:
        parts.append(col[m])
        names.append(m)
    for a, b in formula.interactions:
        parts.append(col[a] * col[b])
        names.append(f"{a}*{b}")
    return np.column_stack(parts), names


def _check_full_rank(D: np.ndarray, names: list[str]) -> None:
    rank = np.linalg.matrix_rank(D)
    if rank == D.shape[1]:
        return
    # name the first column expressible by the others
    for j in range(D.shape[1]):
        others = np.delete(D, j, axis=1)
        coef, residual, *_ = np.linalg.lstsq(others, D[:, j], rcond=None)
        fitted = others @ coef
        if np.allclose(fitted, D[:, j], atol=1e-8):
            raise FitError(f"design matrix is rank deficient: column {names[j]!r} is aliased")
    raise FitError("design matrix is rank deficient")


# ---------------------------------------------------------------------------
# the fit object and IRLS
# ---------------------------------------------------------------------------

def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_likelihood(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass
class LogisticFit:
    formula: ModelFormula
    columns: tuple[str, ...]
    term_names: list[str]
    coef: np.ndarray
    se: np.ndarray
    log_likelihood: float
    null_log_likelihood: float
    fitted: np.ndarray
    converged: bool
    n_iter: int
    separation_suspected: bool
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    design: np.ndarray = field(repr=False)
    transform: StandardizeTransform | None = None

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def k(self) -> int:
        return len(self.coef)

    @property
    def deviance(self) -> float:
        return -2.0 * self.log_likelihood

    @property
    def null_deviance(self) -> float:
        return -2.0 * self.null_log_likelihood

    @property
    def aic(self) -> float:
        return 2.0 * self.k - 2.0 * self.log_likelihood

    def wald_z(self) -> np.ndarray:
        return self.coef / self.se

    def wald_p(self) -> np.ndarray:
        return np.array([2.0 * normal_sf(abs(z)) for z in self.wald_z()])

    def odds_ratios(self, z95: float = 1.959963984540054) -> list[dict]:
        rows = []
        # odds ratios overflow to inf for separated fits; that is the
        # correct report, not an error
        with np.errstate(over="ignore"):
            for name, b, s, p in zip(self.term_names, self.coef, self.se, self.wald_p()):
                rows.append({
                    "term": name,
                    "coef": float(b),
                    "se": float(s),
                    "p": float(p),
                    "odds_ratio": float(np.exp(b)),
                    "ci_lower": float(np.exp(b - z95 * s)),
                    "ci_upper": float(np.exp(b + z95 * s)),
                })
        return rows

    def predict_proba(self, X_new: np.ndarray, standardized: bool = False) -> np.ndarray:
        X_new = np.asarray(X_new, dtype=np.float64)
        if X_new.shape[1] != len(self.columns):
            raise DataError(
                f"expected {len(self.columns)} columns {self.columns}, got {X_new.shape[1]}"
            )
        if self.transform is not None and not standardized:
            X_new = self.transform.apply(X_new)
        D, _ = design_matrix(X_new, self.columns, self.formula)
        return _sigmoid(D @ self.coef)


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    formula: ModelFormula,
    columns: Sequence[str],
    transform: StandardizeTransform | None = None,
) -> LogisticFit:
    """Fit by iteratively reweighted least squares.

    Convergence: |deviance change| < 1e-8 or 25 iterations.  Suspected
    perfect separation (any |coef| > 15 without convergence) is flagged
    on the fit rather than raised, matching how interactive model
    building proceeds.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if set(np.unique(y)) - {0.0, 1.0}:
        raise DataError("y must be binary 0/1")
    if X.shape[0] != y.shape[0]:
        raise DataError("X and y disagree on the number of observations")
    D, term_names = design_matrix(X, columns, formula)
    _check_full_rank(D, term_names)

    beta = np.zeros(D.shape[1])
    deviance_old = np.inf
    converged = False
    n_iter = 0
    for n_iter in range(1, MAX_IRLS_ITER + 1):
        eta = D @ beta
        p = _sigmoid(eta)
        w = np.clip(p * (1.0 - p), 1e-10, None)
        z = eta + (y - p) / w
        dw = D * w[:, None]
        beta = np.linalg.solve(D.T @ dw, dw.T @ z)
        deviance = -2.0 * _log_likelihood(y, _sigmoid(D @ beta))
        if abs(deviance_old - deviance) < DEVIANCE_TOL:
            converged = True
            break
        deviance_old = deviance

    p = _sigmoid(D @ beta)
    w = np.clip(p * (1.0 - p), 1e-10, None)
    information = D.T @ (D * w[:, None])
    try:
        cov = np.linalg.inv(information)
    except np.linalg.LinAlgError as exc:
        raise FitError("information matrix is singular") from exc
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    separation = (not converged) and bool(np.any(np.abs(beta) > SEPARATION_BETA))

    # null model: intercept-only MLE has fitted probability = mean(y)
    ybar = float(np.mean(y))
    null_ll = _log_likelihood(y, np.full_like(y, ybar))

    return LogisticFit(
        formula=formula,
        columns=tuple(columns),
        term_names=term_names,
        coef=beta,
        se=se,
        log_likelihood=_log_likelihood(y, p),
        null_log_likelihood=null_ll,
        fitted=p,
        converged=converged,
        n_iter=n_iter,
        separation_suspected=separation,
        X=X,
        y=y,
        design=D,
        transform=transform,
    )


def refit(fit: LogisticFit, formula: ModelFormula) -> LogisticFit:
    return fit_logistic(fit.X, fit.y, formula, fit.columns, fit.transform)


# ---------------------------------------------------------------------------
# tests and selection
# ---------------------------------------------------------------------------

def likelihood_ratio_test(fit: LogisticFit, null_fit: LogisticFit) -> dict:
    """Chi-square test of a fit against a nested null on the same data."""
    if fit.n != null_fit.n:
        raise DataError("models were fitted on different data")
    if not null_fit.formula.is_nested_in(fit.formula):
        raise DataError("null model is not nested in the full model")
    chi2 = max(0.0, 2.0 * (fit.log_likelihood - null_fit.log_likelihood))
    df = fit.k - null_fit.k
    p = 1.0 if df == 0 else chi2_sf(chi2, df)
    return {"chi2": chi2, "df": df, "p": p}


def drop1(fit: LogisticFit) -> list[dict]:
    """Refit once per removable term; report the change in deviance and AIC."""
    rows = []
    for term in fit.formula.removable_terms():
        reduced = refit(fit, fit.formula.without(term))
        d_dev = reduced.deviance - fit.deviance
        rows.append({
            "term": term,
            "delta_deviance": d_dev,
            "aic": reduced.aic,
            "delta_aic": reduced.aic - fit.aic,
            "df": fit.k - reduced.k,
            "p": chi2_sf(max(0.0, d_dev), fit.k - reduced.k),
        })
    return rows


def step_backward_aic(fit: LogisticFit) -> tuple[LogisticFit, list[dict]]:
    """Greedy backward deletion: repeatedly remove the single term whose
    removal lowers AIC the most; stop when no removal lowers it.
    Marginality is respected (interactions leave before their parents)."""
    current = fit
    trace = [{"action": "start", "terms": list(current.formula.terms), "aic": current.aic}]
    while True:
        candidates = drop1(current)
        if not candidates:
            break
        best = min(candidates, key=lambda r: r["aic"])
        if best["aic"] >= current.aic:
            break
        current = refit(current, current.formula.without(best["term"]))
        trace.append({
            "action": f"- {best['term']}",
            "terms": list(current.formula.terms),
            "aic": current.aic,
        })
    return current, trace


def vif(fit: LogisticFit) -> dict[str, float]:
    """Variance inflation factor per non-intercept design column: 1/(1-R2)
    of that column regressed (with intercept) on the remaining columns."""
    if not fit.formula.intercept:
        raise DataError("VIF computation expects an intercept term")
    D = fit.design[:, 1:]
    names = fit.term_names[1:]
    if D.shape[1] < 2:
        raise DataError("VIF needs at least two non-intercept columns")
    out: dict[str, float] = {}
    n = D.shape[0]
    for j, name in enumerate(names):
        target = D[:, j]
        others = np.column_stack([np.ones(n), np.delete(D, j, axis=1)])
        coef, *_ = np.linalg.lstsq(others, target, rcond=None)
        resid = target - others @ coef
        ss_res = float(resid @ resid)
        centered = target - target.mean()
        ss_tot = float(centered @ centered)
        if ss_tot == 0.0:
            out[name] = float("inf")
            continue
        r2 = 1.0 - ss_res / ss_tot
        out[name] = float("inf") if r2 >= 1.0 - 1e-12 else 1.0 / (1.0 - r2)
    return out


# ---------------------------------------------------------------------------
# influence diagnostics
# ---------------------------------------------------------------------------

def influence(fit: LogisticFit) -> dict:
    """Leverage, standardized residuals and Cook's distances, with flags.

    An observation is flagged when Cook's distance exceeds 4/n, the
    studentized deviance residual exceeds 3 in magnitude, or leverage
    exceeds 3k/n.  Nothing is removed here; deletion is the caller's
    explicit decision.
    """
    D, y, p = fit.design, fit.y, fit.fitted
    n, k = D.shape
    w = np.clip(p * (1.0 - p), 1e-10, None)
    info = D.T @ (D * w[:, None])
    cov = np.linalg.inv(info)
    # leverage of the weighted hat matrix, via h_i = w_i d_i' (X'WX)^-1 d_i
    h = np.clip(np.einsum("ij,jk,ik->i", D, cov, D) * w, 0.0, 1.0 - 1e-10)

    pearson = (y - p) / np.sqrt(w)
    std_pearson = pearson / np.sqrt(1.0 - h)
    pc = np.clip(p, 1e-12, 1.0 - 1e-12)
    unit_dev = -2.0 * (y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    dev_resid = np.sign(y - p) * np.sqrt(unit_dev)
    stud_dev = dev_resid / np.sqrt(1.0 - h)
    cooks = std_pearson**2 * h / ((1.0 - h) * k)

    cook_cut = 4.0 / n
    lev_cut = 3.0 * k / n
    flags = []
    for i in range(n):
        reasons = []
        if cooks[i] > cook_cut:
            reasons.append("cooks_distance")
        if abs(stud_dev[i]) > 3.0:
            reasons.append("deviance_residual")
        if h[i] > lev_cut:
            reasons.append("leverage")
        if reasons:
            flags.append({"index": i, "reasons": reasons})
    return {
        "leverage": h,
        "cooks_distance": cooks,
        "studentized_deviance": stud_dev,
        "standardized_pearson": std_pearson,
        "flagged": flags,
        "thresholds": {"cooks": cook_cut, "leverage": lev_cut, "residual": 3.0},
    }


def drop_observations(fit: LogisticFit, indices: Sequence[int]) -> LogisticFit:
    """Explicitly refit without the given observations."""
    mask = np.ones(fit.n, dtype=bool)
    mask[list(indices)] = False
    return fit_logistic(fit.X[mask], fit.y[mask], fit.formula, fit.columns, fit.transform)


# ---------------------------------------------------------------------------
# fit quality and holdout prediction
# ---------------------------------------------------------------------------

def pseudo_r2(fit: LogisticFit) -> dict[str, float]:
    ll, ll0, n = fit.log_likelihood, fit.null_log_likelihood, fit.n
    mcfadden = 1.0 - ll / ll0 if ll0 != 0 else 0.0
    cox_snell = 1.0 - float(np.exp(2.0 * (ll0 - ll) / n))
    denom = 1.0 - float(np.exp(2.0 * ll0 / n))
    nagelkerke = cox_snell / denom if denom != 0 else 0.0
    return {"mcfadden": mcfadden, "cox_snell": cox_snell, "nagelkerke": nagelkerke}


def predict_classify(
    fit: LogisticFit,
    X_new: np.ndarray,
    y: np.ndarray | None = None,
    threshold: float = 0.5,
    standardized: bool = False,
) -> dict:
    """Hard labels from fitted probabilities: 1 iff p > threshold (strict,
    so exactly 0.5 goes to class 0).  Accuracy is reported when y given."""
    proba = fit.predict_proba(X_new, standardized=standardized)
    labels = (proba > threshold).astype(int)
    out = {"labels": labels, "proba": proba}
    if y is not None:
        y = np.asarray(y)
        if y.shape[0] != labels.shape[0]:
            raise DataError("y length mismatch")
        out["accuracy"] = float(np.mean(labels == y))
    return out


def fit_report(fit: LogisticFit, include_vif: bool = True) -> dict:
    """JSON-ready summary of one fitted model."""
    lr = {
        "chi2": max(0.0, 2.0 * (fit.log_likelihood - fit.null_log_likelihood)),
        "df": fit.k - (1 if fit.formula.intercept else 0),
    }
    lr["p"] = 1.0 if lr["df"] == 0 else chi2_sf(lr["chi2"], lr["df"])
    report = {
        "terms": list(fit.formula.terms),
        "n": fit.n,
        "coefficients": fit.odds_ratios(),
        "log_likelihood": fit.log_likelihood,
        "null_log_likelihood": fit.null_log_likelihood,
        "deviance": fit.deviance,
        "aic": fit.aic,
        "converged": fit.converged,
        "separation_suspected": fit.separation_suspected,
        "pseudo_r2": pseudo_r2(fit),
        "lr_test_vs_null": lr,
        "standardization": fit.transform.mode if fit.transform else None,
    }
    if include_vif and len(fit.term_names) > 2:
        report["vif"] = vif(fit)
    return report


def save_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, default=float), encoding="utf-8")
