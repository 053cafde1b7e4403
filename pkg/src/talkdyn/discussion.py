"""Discussion structure metrics: reply trees, h-index, and growth speed.

A discussion's h-index is the largest level theta such that the tree holds
at least theta comments at nesting level theta, where thread starters sit at
level 1 and each reply one level below its parent.  Deep-and-wide
discussions score high; a thousand drive-by starters or one long chain of
two-comment levels both stay low.

Growth speed is read off the trace of h over time: delta-h is the mean time
the discussion needed to climb one level, and a discussion is considered
settled once no climb has happened for a few multiples of that pace.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Mapping, Sequence

from .ingest import CommentEvent, Diagnostics

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0
DEFAULT_MIN_COMMENTS = 1000
DEFAULT_MATURITY_MULTIPLE = 3.0


class NoDatedCommentsError(ValueError):
    """The tree has no comment with a usable timestamp; no trace exists."""


class InsufficientGrowthError(ValueError):
    """The trace has fewer than two steps, so no growth interval exists."""


@dataclass(frozen=True)
class DiscussionTree:
    """Reply forest of one article's talk page.

    nodes are in document order; levels maps comment id to nesting level
    (thread starters = 1, each reply one below its parent); depth_counts maps
    level to the number of comments sitting exactly there.
    """

    article_id: str
    nodes: tuple[CommentEvent, ...]
    levels: dict[str, int]
    depth_counts: dict[int, int]

    @property
    def n_comments(self) -> int:
        return len(self.nodes)

    @property
    def max_level(self) -> int:
        return max(self.depth_counts, default=0)


@dataclass(frozen=True)
class HTrace:
    """Piecewise record of h over time for one discussion.

    steps[0] carries the h value already accumulated when the first dated
    climb happened (structure built before the first usable timestamp is
    attributed to that moment); every later step raises h by exactly 1.
    Timestamps are non-decreasing and equal timestamps are legitimate: a
    burst can push h up several levels at once.
    """

    article_id: str
    steps: tuple[tuple[datetime, int], ...]
    h0: int

    @property
    def final_h(self) -> int:
        return self.steps[-1][1]

    @property
    def first_increase(self) -> datetime:
        return self.steps[0][0]

    @property
    def last_increase(self) -> datetime:
        return self.steps[-1][0]


@dataclass(frozen=True)
class DeltaH:
    """Mean days per h level over the dated part of a trace."""

    article_id: str
    value: float
    intervals_used: int
    first_increase: datetime
    last_increase: datetime
    final_h: int


@dataclass(frozen=True)
class MaturityStatus:
    article_id: str
    mature: bool
    time_since_last_increase: float
    threshold_multiple: float


@dataclass(frozen=True)
class SpeedRank:
    """One row of the growth-speed table, fastest rows sorting first."""

    article_id: str
    delta_h_days: float
    start_day: datetime
    end_day: datetime
    duration_days: int
    final_h: int
    n_comments: int | None


class HIndexCounter:
    """Incremental h-index over a stream of level insertions.

    insert() is O(1): after adding a comment at level L only the predicate
    "count at L >= L" can newly hold, and only when L exceeds the current h
    does the maximum move, so h = max(h, L if counts[L] >= L).
    """

    __slots__ = ("counts", "h")

    def __init__(self) -> None:
        self.counts: Counter = Counter()
        self.h = 0

    def insert(self, level: int) -> int:
        if level < 1:
            raise ValueError(f"levels start at 1, got {level}")
        self.counts[level] += 1
        if level > self.h and self.counts[level] >= level:
            self.h = level
        return self.h


def h_index_from_counts(depth_counts: Mapping[int, int]) -> int:
    """Largest theta with at least theta comments at level theta exactly."""
    return max((lv for lv, n in depth_counts.items() if n >= lv), default=0)


def h_index(tree: DiscussionTree) -> int:
    return h_index_from_counts(tree.depth_counts)


def build_tree(
    article_id: str,
    events: Iterable[CommentEvent],
    diagnostics: Diagnostics | None = None,
) -> DiscussionTree:
    """Assemble one article's reply tree from its comment events.

    Levels derive from the parent chain, not the stored depth field: a
    comment whose parent id is unknown (or appears later in document order)
    is kept as a thread starter and tallied as an orphan, and disagreement
    between stored depth and derived level is tallied but the derived level
    wins.  Duplicate comment ids keep the first occurrence.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics(source=article_id)
    ordered = sorted(events, key=lambda e: e.doc_order)
    nodes: list[CommentEvent] = []
    levels: dict[str, int] = {}
    depth_counts: Counter = Counter()
    for event in ordered:
        if event.article_id != article_id:
            raise ValueError(f"event for {event.article_id!r} in tree {article_id!r}")
        if event.comment_id in levels:
            diag.tally("duplicate_comment_id")
            continue
        if event.parent_id is None:
            level = 1
        elif event.parent_id in levels:
            level = levels[event.parent_id] + 1
        else:
            diag.tally("orphan_comment")
            level = 1
        if event.depth + 1 != level:
            diag.tally("depth_level_mismatch")
        nodes.append(event)
        levels[event.comment_id] = level
        depth_counts[level] += 1
    return DiscussionTree(article_id, tuple(nodes), levels, dict(depth_counts))


def forests(
    events: Iterable[CommentEvent], diagnostics: Diagnostics | None = None
) -> dict[str, DiscussionTree]:
    """Group comment events by article and build every tree."""
    by_article: dict[str, list[CommentEvent]] = defaultdict(list)
    for event in events:
        by_article[event.article_id].append(event)
    return {
        article: build_tree(article, article_events, diagnostics)
        for article, article_events in sorted(by_article.items())
    }


def effective_timestamps(tree: DiscussionTree) -> list[tuple[datetime, int, CommentEvent]]:
    """Pair every comment with its effective timestamp, sorted for replay.

    An undated comment inherits the timestamp of the nearest preceding dated
    comment in document order; undated comments before any dated one take
    the first dated comment's timestamp (the structure existed by then, and
    that moment is the earliest it can be placed).  Result is sorted by
    (timestamp, document order).  Raises NoDatedCommentsError when nothing
    is dated.
    """
    first_dated = next((n.timestamp for n in tree.nodes if n.timestamp is not None), None)
    if first_dated is None:
        raise NoDatedCommentsError(f"no dated comments in {tree.article_id!r}")
    out: list[tuple[datetime, int, CommentEvent]] = []
    last_dated = first_dated
    for node in tree.nodes:
        if node.timestamp is not None:
            last_dated = node.timestamp
        out.append((last_dated, node.doc_order, node))
    out.sort(key=lambda item: (item[0], item[1]))
    return out


def h_trace(tree: DiscussionTree) -> HTrace:
    """Replay the discussion in time order and record every h increase.

    Comments sharing a timestamp are absorbed as one batch.  The first batch
    that lifts h above zero contributes a single opening step carrying the
    whole value reached (that is h0); every later batch that lifts h by k
    contributes k unit steps at its timestamp, so zero-length intervals
    survive into the trace.
    """
    counter = HIndexCounter()
    steps: list[tuple[datetime, int]] = []
    pending_ts: datetime | None = None
    h_before_batch = 0

    def flush(ts: datetime, h_now: int) -> None:
        if h_now > h_before_batch:
            if not steps:
                steps.append((ts, h_now))
            else:
                for value in range(h_before_batch + 1, h_now + 1):
                    steps.append((ts, value))

    for ts, _, node in effective_timestamps(tree):
        if pending_ts is not None and ts != pending_ts:
            flush(pending_ts, counter.h)
            h_before_batch = counter.h
        pending_ts = ts
        counter.insert(tree.levels[node.comment_id])
    if pending_ts is not None:
        flush(pending_ts, counter.h)
    return HTrace(tree.article_id, tuple(steps), steps[0][1])


def delta_h(trace: HTrace) -> DeltaH:
    """Average days per level across the dated growth of a trace.

    The opening step only anchors the clock; averaging starts there, so a
    trace needs at least two steps before a growth interval exists at all.
    """
    if len(trace.steps) < 2:
        raise InsufficientGrowthError(
            f"{trace.article_id!r}: {len(trace.steps)} step(s), need at least 2"
        )
    t_first, h_first = trace.steps[0]
    t_last, h_last = trace.steps[-1]
    span_days = (t_last - t_first).total_seconds() / SECONDS_PER_DAY
    intervals = h_last - h_first
    return DeltaH(
        article_id=trace.article_id,
        value=span_days / intervals,
        intervals_used=intervals,
        first_increase=t_first,
        last_increase=t_last,
        final_h=h_last,
    )


def maturity(
    trace: HTrace,
    now: datetime,
    k: float = DEFAULT_MATURITY_MULTIPLE,
) -> MaturityStatus:
    """Has the discussion stopped climbing, judged at time now?

    Mature means the time since the last h increase is at least k times the
    discussion's own pace (delta-h).  A non-positive k makes every
    discussion mature the moment it stops for an instant; that is permitted
    but almost never meant, so it logs.
    """
    if k <= 0:
        logger.warning(
            "maturity threshold multiple %.3g is degenerate: everything is mature", k
        )
    pace = delta_h(trace)
    idle_days = (now - pace.last_increase).total_seconds() / SECONDS_PER_DAY
    return MaturityStatus(
        article_id=trace.article_id,
        mature=idle_days >= k * pace.value,
        time_since_last_increase=idle_days,
        threshold_multiple=k,
    )


def rank_by_speed(
    traces: Iterable[HTrace],
    min_comments: int = DEFAULT_MIN_COMMENTS,
    comment_counts: Mapping[str, int] | None = None,
) -> list[SpeedRank]:
    """Rank discussions by delta-h, fastest first.

    Only discussions with strictly more than min_comments comments enter the
    table (tiny discussions reach any h value on a handful of posts, which
    says nothing about pace).  comment_counts supplies the sizes; with no
    mapping the filter cannot be applied, so it is skipped and sizes are
    reported as unknown.  Traces with fewer than two steps are skipped: they
    have no measurable pace.
    """
    rows: list[SpeedRank] = []
    for trace in traces:
        size: int | None = None
        if comment_counts is not None:
            size = comment_counts.get(trace.article_id)
            if size is None or size <= min_comments:
                continue
        try:
            pace = delta_h(trace)
        except InsufficientGrowthError:
            continue
        start = trace.steps[0][0]
        end = trace.steps[-1][0]
        rows.append(
            SpeedRank(
                article_id=trace.article_id,
                delta_h_days=pace.value,
                start_day=start,
                end_day=end,
                duration_days=(end.date() - start.date()).days,
                final_h=trace.final_h,
                n_comments=size,
            )
        )
    rows.sort(key=lambda r: (r.delta_h_days, r.article_id))
    return rows
