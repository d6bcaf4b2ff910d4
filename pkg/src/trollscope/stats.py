"""Statistical utilities shared across the analyses: 2x2 chi-squared with
Yates' continuity correction, one-tailed Welch t-tests, z-scores, and the
cosine-dispersion comparison between two scored corpora.

Standard deviations reported here use the population convention (divide
by N), consistent with the z-scores; a sample-SD toggle is provided
where it matters.  The t statistic itself uses the conventional unbiased
variance estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError
from .special import chi2_sf, t_sf


@dataclass(frozen=True)
class ContingencyTable2x2:
    cells: tuple[tuple[int, int], tuple[int, int]]
    row_labels: tuple[str, str] = ("row0", "row1")
    col_labels: tuple[str, str] = ("col0", "col1")

    def __post_init__(self):
        flat = [c for row in self.cells for c in row]
        if any(c < 0 for c in flat):
            raise DataError("contingency cells must be non-negative")
        if sum(flat) == 0:
            raise DataError("contingency table is empty")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.cells, dtype=np.float64)


@dataclass
class TestResult:
    statistic: float
    df: float
    p: float
    tail: str
    groups: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p": self.p,
            "tail": self.tail,
            "groups": self.groups,
        }


def chi_squared_yates(table: ContingencyTable2x2 | Sequence[Sequence[int]]) -> TestResult:
    """Pearson chi-squared on a 2x2 table with Yates' continuity correction.

    The correction term |O-E| - 0.5 is floored at zero so near-perfect
    independence cannot produce a spurious positive statistic.
    """
    if not isinstance(table, ContingencyTable2x2):
        rows = [tuple(int(c) for c in row) for row in table]
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise DataError("expected a 2x2 table")
        table = ContingencyTable2x2((rows[0], rows[1]))
    obs = table.as_array()
    row_sums = obs.sum(axis=1)
    col_sums = obs.sum(axis=0)
    if np.any(row_sums == 0) or np.any(col_sums == 0):
        raise DataError("chi-squared requires all marginals to be positive")
    expected = np.outer(row_sums, col_sums) / obs.sum()
    adjusted = np.clip(np.abs(obs - expected) - 0.5, 0.0, None)
    statistic = float((adjusted**2 / expected).sum())
    return TestResult(statistic=statistic, df=1.0, p=chi2_sf(statistic, 1.0), tail="upper")


def welch_t_one_tailed(
    a: Sequence[float], b: Sequence[float], direction: str = "greater"
) -> TestResult:
    """Welch's unequal-variance t-test of mean(a) vs mean(b), one tail.

    direction="greater" tests mean(a) > mean(b); "less" the reverse.
    Degrees of freedom via Welch-Satterthwaite.
    """
    if direction not in ("greater", "less"):
        raise DataError("direction must be 'greater' or 'less'")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise DataError("both samples need at least two observations")
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    if va + vb == 0.0:
        raise DataError("zero combined variance")
    na, nb = a.size, b.size
    se2a, se2b = va / na, vb / nb
    t = (float(a.mean()) - float(b.mean())) / np.sqrt(se2a + se2b)
    df = (se2a + se2b) ** 2 / (se2a**2 / (na - 1) + se2b**2 / (nb - 1))
    p = t_sf(t, df) if direction == "greater" else 1.0 - t_sf(t, df)
    groups = [
        {"mean": float(a.mean()), "se": float(np.sqrt(se2a)), "n": int(na)},
        {"mean": float(b.mean()), "se": float(np.sqrt(se2b)), "n": int(nb)},
    ]
    return TestResult(statistic=float(t), df=float(df), p=float(p),
                      tail=direction, groups=groups)


def zscore(values: Sequence[float]) -> np.ndarray:
    """Standardize to mean 0, population SD 1."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise DataError("z-scores need at least two values")
    sd = x.std()
    if sd == 0.0:
        raise DataError("z-scores undefined for zero variance")
    return (x - x.mean()) / sd


def spread_sd(values: Sequence[float], population: bool = True) -> float:
    x = np.asarray(values, dtype=np.float64)
    return float(x.std(ddof=0 if population else 1))


# ---------------------------------------------------------------------------
# cosine dispersion comparison
# ---------------------------------------------------------------------------

def cosine_dispersion_report(
    corpus_a,
    corpus_b,
    model,
    sample_n: int = 2000,
    seed: int = 0,
    population_sd: bool = True,
    histogram_bins: int = 40,
) -> dict:
    """Compare the spread of per-tweet extreme cosines between two corpora.

    Group A is the troll-side corpus, group B the genuine-side one.  The
    Welch tests run in the directions observed at full scale: B's maxima
    higher than A's, B's minima lower than A's.  Histogram bin data is
    included for plotting.
    """
    from .embed import tweet_minmax_cosine  # local import avoids a cycle

    rng = np.random.default_rng(seed)

    def score_group(corpus) -> tuple[np.ndarray, np.ndarray, int]:
        maxima, minima, skipped = [], [], 0
        order = rng.permutation(len(corpus))
        for i in order:
            if len(maxima) == sample_n:
                break
            result = tweet_minmax_cosine(corpus[i], model)
            if result is None:
                skipped += 1
                continue
            maxima.append(result[0])
            minima.append(result[1])
        if len(maxima) < sample_n:
            raise DataError(
                f"only {len(maxima)} scorable tweets, need {sample_n}"
            )
        return np.array(maxima), np.array(minima), skipped

    a_max, a_min, a_skip = score_group(corpus_a)
    b_max, b_min, b_skip = score_group(corpus_b)

    def hist(values: np.ndarray) -> dict:
        counts, edges = np.histogram(values, bins=histogram_bins, range=(-1.0, 1.0))
        return {"edges": edges.tolist(), "counts": counts.tolist()}

    def group_stats(values: np.ndarray) -> dict:
        return {
            "mean": float(values.mean()),
            "sd": spread_sd(values, population_sd),
            "se": float(values.std(ddof=1) / np.sqrt(values.size)),
            "n": int(values.size),
        }

    return {
        "sample_n": sample_n,
        "seed": seed,
        "skipped": {"a": a_skip, "b": b_skip},
        "max_cosine": {
            "a": group_stats(a_max),
            "b": group_stats(b_max),
            "welch_b_greater": welch_t_one_tailed(b_max, a_max, "greater").as_dict(),
            "hist_a": hist(a_max),
            "hist_b": hist(b_max),
        },
        "min_cosine": {
            "a": group_stats(a_min),
            "b": group_stats(b_min),
            "welch_b_less": welch_t_one_tailed(b_min, a_min, "less").as_dict(),
            "hist_a": hist(a_min),
            "hist_b": hist(b_min),
        },
        "values": {
            "a_max": a_max.tolist(),
            "b_max": b_max.tolist(),
            "a_min": a_min.tolist(),
            "b_min": b_min.tolist(),
        },
    }
