#!/usr/bin/env python3
"""Generate a synthetic wiki activity corpus for benchmarks and stress tests.

Writes edits.jsonl and comments.jsonl into --out. Article popularity is
Zipf-distributed, each article is active over a random contiguous window,
and a fraction of articles get engineered burst days so peak detection has
something to find. Comment threads are random trees capped at depth 30,
with ids assigned in timestamp order the way the talk-page parser would.

The default sizes match the performance target: 1e6 edits + 1e6 comments
over 1e4 articles.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

CANON_DAY = np.datetime64("2004-01-01")


def day_strings(start_day: int, day_offsets: np.ndarray) -> np.ndarray:
    return (CANON_DAY + start_day + day_offsets).astype("datetime64[D]").astype(str)


def clock_strings(seconds: np.ndarray) -> list[str]:
    h, rem = np.divmod(seconds, 3600)
    m, s = np.divmod(rem, 60)
    return [f"{hh:02d}:{mm:02d}:{ss:02d}" for hh, mm, ss in zip(h, m, s)]


def allocate(total: int, n_articles: int, rng: np.random.Generator) -> np.ndarray:
    """Split total events over articles with a Zipf-ish popularity profile."""
    weights = 1.0 / np.arange(1, n_articles + 1) ** 1.1
    weights = rng.permutation(weights / weights.sum())
    counts = rng.multinomial(total, weights)
    return counts


def article_windows(n_articles: int, horizon: int, rng: np.random.Generator):
    starts = rng.integers(0, horizon // 2, n_articles)
    lengths = rng.integers(30, horizon, n_articles)
    ends = np.minimum(starts + lengths, horizon)
    return starts, ends


def write_edits(out: Path, n_articles: int, total: int, horizon: int,
                rng: np.random.Generator) -> int:
    counts = allocate(total, n_articles, rng)
    starts, ends = article_windows(n_articles, horizon, rng)
    written = 0
    with open(out, "w", encoding="utf-8", buffering=1 << 20) as handle:
        for idx in range(n_articles):
            n = int(counts[idx])
            if n == 0:
                continue
            article = f"A{idx:05d}"
            span = int(ends[idx] - starts[idx])
            offsets = rng.integers(0, span, n)
            if n > 40 and rng.random() < 0.10:
                burst_day = int(rng.integers(0, span))
                n_burst = min(n // 2, int(rng.integers(20, 200)))
                offsets[:n_burst] = burst_day
            offsets.sort()
            days = day_strings(int(starts[idx]), offsets)
            clocks = clock_strings(rng.integers(0, 86400, n))
            for day, clock in zip(days, clocks):
                handle.write(f'{{"article":"{article}","ts":"{day}T{clock}Z"}}\n')
            written += n
    return written


def write_comments(out: Path, n_articles: int, total: int, horizon: int,
                   rng: np.random.Generator) -> int:
    counts = allocate(total, n_articles, rng)
    starts, ends = article_windows(n_articles, horizon, rng)
    written = 0
    with open(out, "w", encoding="utf-8", buffering=1 << 20) as handle:
        for idx in range(n_articles):
            n = int(counts[idx])
            if n == 0:
                continue
            article = f"A{idx:05d}"
            span = int(ends[idx] - starts[idx])
            offsets = rng.integers(0, span, n)
            if n > 40 and rng.random() < 0.10:
                burst_day = int(rng.integers(0, span))
                n_burst = min(n // 2, int(rng.integers(20, 150)))
                offsets[:n_burst] = burst_day
            offsets.sort()
            days = day_strings(int(starts[idx]), offsets)
            clocks = clock_strings(np.sort(rng.integers(0, 86400, n)))
            depths = np.zeros(n, dtype=np.int64)
            parent_choice = rng.random(n)
            parent_index = (rng.random(n) * np.arange(n)).astype(np.int64)
            authors = rng.integers(0, 5000, n)
            for j in range(n):
                if j == 0 or parent_choice[j] < 0.25:
                    parent, depth = "null", 0
                else:
                    k = int(parent_index[j])
                    if depths[k] >= 30:
                        k = 0
                    parent, depth = f'"c{k}"', int(depths[k]) + 1
                depths[j] = depth
                handle.write(
                    f'{{"article":"{article}","id":"c{j}","parent":{parent},'
                    f'"depth":{depth},"ts":"{days[j]}T{clocks[j]}Z",'
                    f'"author":"U{authors[j]}","ord":{j}}}\n'
                )
            written += n
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--articles", type=int, default=10_000)
    parser.add_argument("--edits", type=int, default=1_000_000)
    parser.add_argument("--comments", type=int, default=1_000_000)
    parser.add_argument("--days", type=int, default=1825, help="corpus horizon in days")
    parser.add_argument("--seed", type=int, default=20060101)
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    t0 = time.perf_counter()
    n_edits = write_edits(out / "edits.jsonl", args.articles, args.edits, args.days, rng)
    n_comments = write_comments(out / "comments.jsonl", args.articles, args.comments,
                                args.days, rng)
    dt = time.perf_counter() - t0
    print(f"wrote {n_edits} edits + {n_comments} comments "
          f"across {args.articles} articles in {dt:.1f}s -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
