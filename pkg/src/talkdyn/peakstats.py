"""Corpus-level statistics over peak runs and growth metrics.

Covers co-occurrence of discussion and edit peaks, yearly recurrence of
peaks, maximum-likelihood power-law exponents, logarithmically binned
histograms for heavy-tailed counts, and an exact Pearson correlation with a
t-distribution p-value.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .timeseries import PeakRun

logger = logging.getLogger(__name__)

# A peak one year after another lands 364-366 days later depending on leap
# years and weekday drift of the commemorated date.
ANNIVERSARY_GAPS = frozenset({364, 365, 366})

MIN_FIT_SAMPLES = 10
DEFAULT_BINS_PER_DECADE = 5


@dataclass(frozen=True)
class OverlapReport:
    """How many comment-activity peak runs sit near an edit peak."""

    tolerance_days: int
    n_overlapping_comment_peaks: int
    n_articles_with_overlap: int


@dataclass(frozen=True)
class PowerLawFit:
    """MLE exponent for samples >= x_min; degenerate when all mass sits at x_min."""

    alpha: float
    x_min: int
    n_samples: int
    degenerate: bool = False


@dataclass(frozen=True)
class Histogram:
    """Binned counts with explicit edges; bin i covers [edges[i], edges[i+1]).

    scheme is "linear" (unit-width integer bins) or "logarithmic" (edges at
    powers of 10^(1/bins_per_decade)).
    """

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    scheme: str

    @property
    def total(self) -> int:
        return sum(self.counts)

    def density(self) -> tuple[float, ...]:
        """Counts normalized by total mass and linear bin width.

        This estimates the probability density, whose log-log slope is the
        distribution exponent; wide bins are penalized by their width.
        """
        total = self.total
        if total == 0:
            return ()
        return tuple(
            c / (total * (hi - lo))
            for c, lo, hi in zip(self.counts, self.bin_edges, self.bin_edges[1:])
        )

    def density_per_log_width(self) -> tuple[float, ...]:
        """Counts normalized by total mass and log10 bin width.

        For geometric bins the log widths are uniform, so this keeps the
        counts' shape while making the numbers comparable across binning
        granularities.
        """
        total = self.total
        if total == 0:
            return ()
        return tuple(
            c / (total * (math.log10(hi) - math.log10(lo)))
            for c, lo, hi in zip(self.counts, self.bin_edges, self.bin_edges[1:])
        )

    def value_counts(self) -> dict[int, int]:
        """Value -> count mapping; only meaningful for unit-width linear bins."""
        if self.scheme != "linear":
            raise ValueError("value_counts applies to linear unit-bin histograms")
        return {
            int(lo): c for lo, c in zip(self.bin_edges, self.counts) if c > 0
        }


def _peak_day_ordinals(runs: Iterable[PeakRun]) -> dict[str, list[int]]:
    days: dict[str, list[int]] = defaultdict(list)
    for run in runs:
        start = run.start_day.toordinal()
        days[run.article_id].extend(range(start, start + run.length))
    return days


def overlap(
    comment_runs: Iterable[PeakRun],
    edit_runs: Iterable[PeakRun],
    tolerance_days: int,
) -> OverlapReport:
    """Count comment peak runs with an edit peak day within tolerance_days.

    A run overlaps when any of its days lies within the tolerance of any
    edit peak day of the same article; each run counts once no matter how
    many edit peaks it touches.  n_articles_with_overlap counts distinct
    articles with at least one overlapping run.  Widening the tolerance can
    only grow both numbers.
    """
    if tolerance_days < 0:
        raise ValueError(f"tolerance_days must be >= 0, got {tolerance_days}")
    edit_days = {
        article: np.array(sorted(days), dtype=np.int64)
        for article, days in _peak_day_ordinals(edit_runs).items()
    }
    n_runs = 0
    articles: set[str] = set()
    for run in comment_runs:
        targets = edit_days.get(run.article_id)
        if targets is None or targets.size == 0:
            continue
        lo = run.start_day.toordinal() - tolerance_days
        hi = run.start_day.toordinal() + run.length - 1 + tolerance_days
        # Any edit peak day in [lo, hi] is within tolerance of some run day.
        pos = int(np.searchsorted(targets, lo, side="left"))
        if pos < targets.size and targets[pos] <= hi:
            n_runs += 1
            articles.add(run.article_id)
    return OverlapReport(tolerance_days, n_runs, len(articles))


def anniversaries(runs: Iterable[PeakRun]) -> dict[str, int]:
    """Per article: consecutive run-start gaps of 364-366 days.

    Zero counts are included so the caller can see which articles were
    checked and found nothing.
    """
    starts: dict[str, list[int]] = defaultdict(list)
    for run in runs:
        starts[run.article_id].append(run.start_day.toordinal())
    out: dict[str, int] = {}
    for article, ordinals in starts.items():
        ordinals.sort()
        out[article] = sum(
            1 for a, b in zip(ordinals, ordinals[1:]) if b - a in ANNIVERSARY_GAPS
        )
    return out


def fit_power_law(samples: Sequence[int], x_min: int = 1) -> PowerLawFit:
    """MLE exponent alpha for a discrete power law over samples >= x_min.

    Uses the continuous approximation alpha = 1 + n / sum(ln(x / (x_min - 0.5)))
    which is accurate for integer data when x_min is small.  With fewer than
    MIN_FIT_SAMPLES usable samples the estimate is noise, so that raises.
    When every usable sample equals x_min the discrete likelihood increases
    without bound in alpha (all mass collapses onto x_min), so there is no
    finite maximizer; alpha is reported as infinity with the degenerate flag
    set instead of the finite artifact the approximation formula would give.
    """
    if x_min < 1:
        raise ValueError(f"x_min must be >= 1, got {x_min}")
    used = [x for x in samples if x >= x_min]
    n = len(used)
    if n < MIN_FIT_SAMPLES:
        raise ValueError(f"need at least {MIN_FIT_SAMPLES} samples >= x_min, got {n}")
    shift = x_min - 0.5
    log_sum = math.fsum(math.log(x / shift) for x in used)
    if all(x == x_min for x in used):
        logger.warning("power-law fit degenerate: all %d samples equal x_min=%d", n, x_min)
        return PowerLawFit(alpha=math.inf, x_min=x_min, n_samples=n, degenerate=True)
    return PowerLawFit(alpha=1.0 + n / log_sum, x_min=x_min, n_samples=n)


def integer_histogram(values: Iterable[int]) -> Histogram:
    """Unit-width linear histogram over the observed integer range."""
    counter = Counter(values)
    if not counter:
        return Histogram((), (), "linear")
    lo = min(counter)
    hi = max(counter)
    edges = tuple(float(v) for v in range(lo, hi + 2))
    counts = tuple(counter.get(v, 0) for v in range(lo, hi + 1))
    return Histogram(edges, counts, "linear")


def log_binned_histogram(
    samples: Sequence[float], bins_per_decade: int = DEFAULT_BINS_PER_DECADE
) -> Histogram:
    """Histogram with bin edges at powers of 10^(1/bins_per_decade).

    The edge grid is anchored at the largest grid point at or below the
    smallest sample and extended one edge past the largest sample, so every
    sample falls strictly inside some bin.  Only positive samples make
    sense on a log axis; zero or negative input raises.
    """
    if bins_per_decade < 1:
        raise ValueError(f"bins_per_decade must be >= 1, got {bins_per_decade}")
    if len(samples) == 0:
        return Histogram((), (), "logarithmic")
    arr = np.asarray(samples, dtype=np.float64)
    if np.any(arr <= 0):
        raise ValueError("log binning requires strictly positive samples")
    low = float(arr.min())
    high = float(arr.max())
    k = math.floor(bins_per_decade * math.log10(low))
    while 10.0 ** (k / bins_per_decade) > low:
        k -= 1
    edges = [10.0 ** (k / bins_per_decade)]
    while edges[-1] <= high:
        k += 1
        edges.append(10.0 ** (k / bins_per_decade))
    counts, _ = np.histogram(arr, bins=np.array(edges))
    return Histogram(tuple(edges), tuple(int(c) for c in counts), "logarithmic")


def peaks_per_article(runs: Iterable[PeakRun]) -> Histogram:
    """Distribution of peak-run counts per article (articles with >= 1 run)."""
    per_article = Counter(run.article_id for run in runs)
    return integer_histogram(per_article.values())


def run_lengths(runs: Iterable[PeakRun]) -> Histogram:
    return integer_histogram(run.length for run in runs)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Pearson r and two-sided p-value from the exact t transform.

    Sums are compensated (math.fsum), so r is reproducible to full double
    precision regardless of summation order.  Requires n >= 3 and nonzero
    variance on both sides; |r| = 1 maps to p = 0 rather than a divide by
    zero in the t statistic.
    """
    n = len(xs)
    if len(ys) != n:
        raise ValueError(f"length mismatch: {n} vs {len(ys)}")
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("zero variance input")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    denom = 1.0 - r * r
    if denom <= 0.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / denom)
    p = 2.0 * float(scipy_stats.t.sf(abs(t), df=n - 2))
    return r, p


def delta_h_vs_max_run_length(
    delta_h_by_article: Mapping[str, float],
    runs: Iterable[PeakRun],
) -> tuple[float, float, int]:
    """Correlate growth time per level with the longest peak run per article.

    Only articles present on both sides enter; returns (r, p, n_articles).
    Raises like pearson when fewer than 3 articles qualify.
    """
    longest: dict[str, int] = {}
    for run in runs:
        if run.length > longest.get(run.article_id, 0):
            longest[run.article_id] = run.length
    both = sorted(set(delta_h_by_article) & set(longest))
    xs = [delta_h_by_article[a] for a in both]
    ys = [float(longest[a]) for a in both]
    r, p = pearson(xs, ys)
    return r, p, len(both)
