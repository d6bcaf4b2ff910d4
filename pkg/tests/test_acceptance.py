"""Acceptance suite: one test per criterion, each at its stated tolerance,
reporting a pass/fail line in the terminal summary.

Criteria 1-6 and the property half of 9 are self-contained and always
run.  Criteria 7, 8, 10 and the directional half of 9 require the real
tweet datasets (several-million-tweet public collections); the tests
locate them via the TROLLSCOPE_DATA_DIR environment variable (or ./data)
and run the desk-scale pipeline on them.  When the datasets are absent
the tests fail with instructions rather than silently skipping: a green
mark here must mean the criterion was actually checked.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from conftest import (
    WORKED_PAIR_COSINES,
    WORKED_TWEET,
    WORKED_WORD_COUNTS,
    record_criterion,
    worked_example_model,
    worked_example_vocabulary,
)
from test_netclf import numeric_gradient, rel_err
from test_reglab import TestStepBackwardAic, gradient_ascent_logistic, simulate

from trollscope import report
from trollscope.embed import pairwise_cosines, sgns_loss_and_grads
from trollscope.features import (
    SignalSets,
    ctwr_score,
    mean_word_frequency,
    pairwise_cosine_stats,
    relative_length,
)
from trollscope.netclf import build_blstm, build_feedforward, cross_entropy
from trollscope.netclf.layers import Bidirectional, Dense, Embedding, LSTM
from trollscope.reglab import ModelFormula, design_matrix, fit_logistic, step_backward_aic
from trollscope.stats import chi_squared_yates
from trollscope.topics import LdaConfig, _npmi, cv_coherence, fit_lda


def finish(number: int, passed: bool, detail: str) -> None:
    record_criterion(number, passed, detail)
    assert passed, f"criterion {number}: {detail}"


# ---------------------------------------------------------------------------
# 1. parameter-count exactness
# ---------------------------------------------------------------------------

def test_criterion_1_parameter_counts():
    ff = build_feedforward(80096, 73).parameter_count()
    bl = build_blstm(80096, 73).parameter_count()
    ok = ff == 8_044_502 and bl == 8_920_902
    finish(1, ok, f"feedforward {ff:,} (want 8,044,502), blstm {bl:,} (want 8,920,902)")


# ---------------------------------------------------------------------------
# 2. worked-example feature values
# ---------------------------------------------------------------------------

def test_criterion_2_worked_example_features():
    # the fixture cosines are realized as actual vectors (Gram-matrix
    # factorization), so every value below comes from the production
    # feature functions, not from side arithmetic
    model = worked_example_model()
    vocab = worked_example_vocabulary()
    cm, csd, cr = pairwise_cosine_stats(WORKED_TWEET, model)
    mf = mean_word_frequency(WORKED_TWEET, vocab)
    rl = relative_length(WORKED_TWEET, 11.57)
    sets = SignalSets(
        core_right=frozenset({"deaf"}),
        core_wrong=frozenset(),
        ext_right=frozenset(set(WORKED_TWEET) - {"deaf"}),
        ext_wrong=frozenset(),
    )
    ctwr = ctwr_score(WORKED_TWEET, sets)
    checks = [
        abs(cm - 0.15050405) <= 1e-6,
        abs(csd - 0.16194732) <= 1e-6,
        abs(cr - 0.37113443) <= 1e-6,
        abs(mf - 681.357) <= 0.01,
        abs(rl - 1.210) <= 1e-3,
        abs(ctwr - 5.4286) <= 1e-3,
    ]
    finish(2, all(checks),
           f"cm={cm:.8f} csd={csd:.8f} cr={cr:.8f} mf={mf:.3f} rl={rl:.3f} ctwr={ctwr:.4f}")


# ---------------------------------------------------------------------------
# 3. pair-enumeration rule
# ---------------------------------------------------------------------------

def test_criterion_3_pair_enumeration():
    model = worked_example_model()
    n_pairs = pairwise_cosines(WORKED_TWEET, model).size
    position_pairs = len(WORKED_TWEET) * (len(WORKED_TWEET) - 1) // 2
    finish(3, n_pairs == 90 and position_pairs == 91,
           f"14-token tweet with one doubled word yields {n_pairs} admissible pairs "
           f"of {position_pairs} position pairs (want 90 of 91)")


# ---------------------------------------------------------------------------
# 4. chi-squared replication
# ---------------------------------------------------------------------------

def test_criterion_4_chi_squared():
    res = chi_squared_yates([[29387, 25265], [2266, 3086]])
    ok = abs(res.statistic - 255.14) <= 0.5 and res.df == 1 and res.p < 1e-15
    finish(4, ok, f"X2={res.statistic:.4f} (want 255.14 +- 0.5), df={res.df:.0f}, p={res.p:.3g}")


# ---------------------------------------------------------------------------
# 5. gradient checks, >= 100 random instances per layer family
# ---------------------------------------------------------------------------

def test_criterion_5_gradient_checks():
    rng = np.random.default_rng(123)
    worst = 0.0
    counts = {"dense": 0, "embedding": 0, "lstm": 0, "bidirectional": 0,
              "softmax_xent": 0, "sgns": 0}

    for _ in range(120):
        n_in, n_out = int(rng.integers(2, 6)), int(rng.integers(2, 5))
        layer = Dense(n_in, n_out, rng, relu=bool(rng.integers(0, 2)))
        x = rng.normal(size=(2, 2, n_in))
        if np.any(np.abs(x @ layer.w + layer.b) < 1e-4):
            continue
        R = rng.normal(size=(2, 2, n_out))
        layer.zero_grads()
        layer.forward(x)
        dx = layer.backward(R.copy())
        f = lambda: float((layer.forward(x) * R).sum())
        for g, p in zip(layer.grads, layer.params):
            worst = max(worst, rel_err(g, numeric_gradient(f, p)))
        worst = max(worst, rel_err(dx, numeric_gradient(f, x)))
        counts["dense"] += 1

    for _ in range(100):
        rows, dim = int(rng.integers(3, 8)), int(rng.integers(2, 5))
        layer = Embedding(rows, dim, rng)
        ids = rng.integers(0, rows, size=(2, 3))
        R = rng.normal(size=(2, 3, dim))
        layer.zero_grads()
        layer.forward(ids)
        layer.backward(R.copy())
        f = lambda: float((layer.forward(ids) * R).sum())
        worst = max(worst, rel_err(layer.grads[0], numeric_gradient(f, layer.w)))
        counts["embedding"] += 1

    for _ in range(100):
        n_in, h, T = int(rng.integers(2, 4)), int(rng.integers(2, 4)), int(rng.integers(1, 4))
        layer = LSTM(n_in, h, rng)
        x = rng.normal(size=(2, T, n_in))
        R = rng.normal(size=(2, T, h))
        layer.zero_grads()
        layer.forward(x)
        dx = layer.backward(R.copy())
        f = lambda: float((layer.forward(x) * R).sum())
        for g, p in zip(layer.grads, layer.params):
            worst = max(worst, rel_err(g, numeric_gradient(f, p)))
        worst = max(worst, rel_err(dx, numeric_gradient(f, x)))
        counts["lstm"] += 1

    for _ in range(100):
        n_in, h = int(rng.integers(2, 4)), int(rng.integers(2, 3))
        layer = Bidirectional(LSTM(n_in, h, rng), LSTM(n_in, h, rng))
        x = rng.normal(size=(2, 2, n_in))
        R = rng.normal(size=(2, 2, 2 * h))
        layer.zero_grads()
        layer.forward(x)
        layer.backward(R.copy())
        f = lambda: float((layer.forward(x) * R).sum())
        for g, p in zip(layer.grads, layer.params):
            worst = max(worst, rel_err(g, numeric_gradient(f, p)))
        counts["bidirectional"] += 1

    for _ in range(100):
        n = int(rng.integers(1, 6))
        logits = rng.normal(size=(n, 2))
        onehot = np.zeros((n, 2))
        onehot[np.arange(n), rng.integers(0, 2, n)] = 1.0
        _, analytic = cross_entropy(logits, onehot)
        worst = max(worst, rel_err(
            analytic, numeric_gradient(lambda: cross_entropy(logits, onehot)[0], logits)))
        counts["softmax_xent"] += 1

    for _ in range(100):
        d, m = int(rng.integers(2, 8)), int(rng.integers(2, 8))
        center = rng.normal(size=d)
        targets = rng.normal(size=(m, d))
        labels = np.zeros(m)
        labels[: int(rng.integers(1, m + 1))] = 1.0
        _, dc, dt = sgns_loss_and_grads(center, targets, labels)
        f = lambda: sgns_loss_and_grads(center, targets, labels)[0]
        worst = max(worst, rel_err(dc, numeric_gradient(f, center)))
        worst = max(worst, rel_err(dt, numeric_gradient(f, targets)))
        counts["sgns"] += 1

    ok = worst <= 1e-4 and all(v >= 100 for k, v in counts.items() if k != "dense")
    ok = ok and counts["dense"] >= 100
    finish(5, ok, f"worst relative error {worst:.3e} over instances {counts}")


# ---------------------------------------------------------------------------
# 6. regression oracle equivalence
# ---------------------------------------------------------------------------

def test_criterion_6_regression_oracles():
    details = []

    # IRLS vs damped gradient ascent
    X, y = simulate([0.3, 1.0, -0.7, 0.2], n=500, seed=5)
    cols = ("x1", "x2", "x3")
    formula = ModelFormula(mains=cols)
    fit = fit_logistic(X, y, formula, cols)
    D, _ = design_matrix(X, cols, formula)
    gap = float(np.max(np.abs(fit.coef - gradient_ascent_logistic(D, y))))
    irls_ok = gap < 1e-6
    details.append(f"irls-vs-ascent gap {gap:.2e}")

    # greedy backward AIC vs exhaustive enumeration
    step_ok = True
    helper = TestStepBackwardAic()
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed)
        Xs = rng.normal(size=(800, 4))
        eta = 0.2 + 1.2 * Xs[:, 0] - 0.9 * Xs[:, 1] + 0.8 * Xs[:, 0] * Xs[:, 1]
        ys = (rng.random(800) < 1 / (1 + np.exp(-eta))).astype(float)
        cols4 = ("x1", "x2", "x3", "x4")
        f = ModelFormula(mains=cols4,
                         interactions=(("x1", "x2"), ("x2", "x3"), ("x3", "x4")))
        full = fit_logistic(Xs, ys, f, cols4)
        reduced, _ = step_backward_aic(full)
        best = helper.exhaustive_best_aic(full)
        step_ok = step_ok and abs(reduced.aic - best) < 1e-6
    details.append(f"backward-AIC equals exhaustive on 3 fixtures: {step_ok}")

    # coefficient recovery within 2 SE in >= 90% of 100 seeds
    beta = np.array([0.38, -0.38, 0.41, -3.12, 4.14])
    cols5 = tuple(f"x{i}" for i in range(1, len(beta)))
    hits = np.zeros(len(beta))
    for seed in range(100):
        Xr, yr = simulate(beta, n=8000, seed=seed)
        fr = fit_logistic(Xr, yr, ModelFormula(mains=cols5), cols5)
        hits += np.abs(fr.coef - beta) <= 2.0 * fr.se
    coverage = hits / 100
    recovery_ok = bool(np.all(coverage >= 0.90))
    details.append(f"2-SE coverage min {coverage.min():.2f}")

    finish(6, irls_ok and step_ok and recovery_ok, "; ".join(details))


# ---------------------------------------------------------------------------
# 9 (properties): LDA and coherence invariants, always runnable
# ---------------------------------------------------------------------------

def test_criterion_9_lda_coherence_properties():
    details = []

    # planted 3-topic corpus recovered with purity >= 0.9
    rng = np.random.default_rng(0)
    vocabs = [[f"t{k}w{i}" for i in range(15)] for k in range(3)]
    docs, topic_of_doc = [], []
    for k in range(3):
        for _ in range(100):
            docs.append(list(rng.choice(vocabs[k], size=8)))
            topic_of_doc.append(k)
    model = fit_lda(docs, 3, LdaConfig(iterations=200, burn_in=100, seed=1))
    planted = np.concatenate([np.full(len(d), k) for d, k in zip(docs, topic_of_doc)])
    correct = 0
    for k in range(3):
        mask = model.assignments == k
        if mask.any():
            correct += int(np.bincount(planted[mask], minlength=3).max())
    purity = correct / len(planted)
    details.append(f"purity {purity:.3f}")

    # normalization within 1e-9
    norm_ok = bool(
        np.all(np.abs(model.phi.sum(axis=1) - 1.0) <= 1e-9)
        and np.all(np.abs(model.theta.sum(axis=1) - 1.0) <= 1e-9)
    )
    details.append(f"phi/theta rows normalized: {norm_ok}")

    # NPMI self-similarity
    npmi_ok = abs(_npmi(0.37, 0.37, 0.37, 1e-12) - 1.0) <= 1e-9
    details.append(f"NPMI(w,w)=1: {npmi_ok}")

    # planted word sets beat size-matched random sets in >= 95% of seeds
    hits = 0
    seeds = 20
    for seed in range(seeds):
        r2 = np.random.default_rng(seed)
        groups = [[f"g{k}w{i}" for i in range(8)] for k in range(4)]
        cdocs = []
        for _ in range(150):
            k = int(r2.integers(0, 4))
            cdocs.append(list(r2.choice(groups[k], size=5, replace=False)))
        planted_scores = [cv_coherence(g[:5], cdocs) for g in groups]
        flat = [w for g in groups for w in g]
        random_scores = [
            cv_coherence(list(r2.choice(flat, size=5, replace=False)), cdocs)
            for _ in range(4)
        ]
        hits += float(np.mean(planted_scores)) > float(np.mean(random_scores))
    details.append(f"planted>random in {hits}/{seeds} seeds")

    ok = purity >= 0.9 and norm_ok and npmi_ok and hits / seeds >= 0.95
    finish(9, ok, "properties: " + "; ".join(details))


# ---------------------------------------------------------------------------
# real-data desk-scale criteria (7, 8, 9-directional, 10)
# ---------------------------------------------------------------------------

DATA_ENV = "TROLLSCOPE_DATA_DIR"
RUN_ENV = "TROLLSCOPE_RUN_DIR"

MISSING_DATA_MSG = (
    "real tweet datasets not found: set {env}=<dir> (or create ./data) "
    "containing troll_tweets.csv (text column 'content', one troll tweet "
    "per row) and genuine_tweets.csv (text column 'text', one genuine "
    "tweet per row), distilled from the public troll-tweet and "
    "congressional-tweet collections named in the README. This "
    "environment has no network access (verified: DNS resolution fails "
    "and the package mirror returns 403), so the datasets cannot be "
    "fetched here and this criterion cannot be checked; it fails rather "
    "than silently skipping."
)


def find_real_data() -> Path | None:
    candidates = []
    if os.environ.get(DATA_ENV):
        candidates.append(Path(os.environ[DATA_ENV]))
    candidates.append(Path("data"))
    for d in candidates:
        if (d / "troll_tweets.csv").exists() and (d / "genuine_tweets.csv").exists():
            return d
    return None


@pytest.fixture(scope="session")
def real_run(tmp_path_factory):
    """Desk-scale pipeline over the real datasets, resumable across sessions
    via TROLLSCOPE_RUN_DIR."""
    data_dir = find_real_data()
    if data_dir is None:
        return None
    from trollscope.cli import DatasetSpec, RunConfig, run_pipeline

    run_dir = Path(os.environ.get(RUN_ENV, data_dir / "runs" / "acceptance"))
    cfg = RunConfig(
        datasets=[
            DatasetSpec(name="troll", path=str(data_dir / "troll_tweets.csv"),
                        kind="csv", text_field="content", label=0),
            DatasetSpec(name="genuine", path=str(data_dir / "genuine_tweets.csv"),
                        kind="csv", text_field="text", label=1),
        ],
        out_dir=str(run_dir),
        master_seed=2024,
        sample_size=30000,
        embed_max_tweets=200000,  # desk-scale cap on embedding training
        features_per_class=1000,
        holdout_per_class=250,
        topics_k_list=(1, 5, 11, 17),
        topics_iterations=400,
        topics_burn_in=100,
        topics_max_docs=6000,
        disperse_sample_n=2000,
    )
    return run_pipeline(cfg, run_dir)


def test_criterion_7_desk_scale_classification(real_run):
    if real_run is None:
        finish(7, False, MISSING_DATA_MSG.format(env=DATA_ENV))
    ev = report.read_json(real_run.path("eval", "evaluation.json"))
    ff = ev["feedforward"]["accuracy"]
    bl = ev["blstm"]["accuracy"]
    pre = ev["blstm_pretrained"]["accuracy"]
    ok = ff >= 0.80 and pre >= bl >= ff
    finish(7, ok, f"accuracies ff={ff:.4f} blstm={bl:.4f} pretrained={pre:.4f}; "
                  f"need ff>=0.80 and pretrained>=blstm>=ff")


def test_criterion_8_desk_scale_regression(real_run):
    if real_run is None:
        finish(8, False, MISSING_DATA_MSG.format(env=DATA_ENV))
    reg = report.read_json(real_run.path("regress", "regression.json"))
    coefs = {c["term"]: c["coef"] for c in reg["model5"]["coefficients"]}
    signs_ok = (coefs["mf"] < 0 and coefs["rl"] > 0
                and coefs["uwr"] < 0 and coefs["ctwr"] > 0)
    acc = reg["holdout_accuracy"]
    finish(8, acc >= 0.75 and signs_ok,
           f"holdout accuracy {acc:.4f} (need >=0.75); coefficient signs "
           f"mf={coefs['mf']:+.2f} rl={coefs['rl']:+.2f} uwr={coefs['uwr']:+.2f} "
           f"ctwr={coefs['ctwr']:+.2f} (need -, +, -, +)")


def test_criterion_9_desk_scale_coherence_direction(real_run):
    if real_run is None:
        finish(9, False, "directional half: " + MISSING_DATA_MSG.format(env=DATA_ENV))
    t = report.read_json(real_run.path("topics", "topics.json"))
    sweep = {name: {r["k"]: r["mean_cv"] for r in rows}
             for name, rows in t["sweep"].items()}
    multi_ok = all(sweep["genuine"][k] > sweep["troll"][k] for k in (5, 11, 17))
    single = t["single_topic"]
    single_ok = single["troll"]["coherence"] > single["genuine"]["coherence"]
    finish(9, multi_ok and single_ok,
           f"directional: genuine>troll at K=5,11,17: {multi_ok}; "
           f"troll K=1 {single['troll']['coherence']:.4f} > "
           f"genuine K=1 {single['genuine']['coherence']:.4f}: {single_ok}")


def test_criterion_10_dispersion(real_run):
    if real_run is None:
        finish(10, False, MISSING_DATA_MSG.format(env=DATA_ENV))
    d = report.read_json(real_run.path("disperse", "dispersion.json"))
    sd_ok = d["max_cosine"]["a"]["sd"] > d["max_cosine"]["b"]["sd"]
    max_test = d["max_cosine"]["welch_b_greater"]
    min_test = d["min_cosine"]["welch_b_less"]
    tests_ok = max_test["p"] < 0.01 and min_test["p"] < 0.01
    finish(10, sd_ok and tests_ok,
           f"SD(max) troll {d['max_cosine']['a']['sd']:.3f} > genuine "
           f"{d['max_cosine']['b']['sd']:.3f}: {sd_ok}; Welch p(max,genuine>troll)="
           f"{max_test['p']:.2e}, p(min,genuine<troll)={min_test['p']:.2e} (need <0.01)")
