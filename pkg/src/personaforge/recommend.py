"""Cohort construction and engagement-weighted asset ranking.

Personality cohorts are users at Hamming distance 0 (expanding to 1 when
too small) from an anchor MBTI type; assets are scored by the cohort's
weighted engagement counts within a recency window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .mbti import MbtiType
from .store import ContentAsset, EngagementRecord, UserProfile

DEFAULT_MIN_COHORT = 5
DEFAULT_RECENCY_HOURS = 30 * 24  # 30 days of logical time
DEFAULT_WEIGHTS = (3.0, 1.0, 2.0)  # clicks, likes, engagements


def mbti_distance(a: MbtiType, b: MbtiType) -> int:
    """Number of differing axes (0..4)."""
    return sum(1 for x, y in zip(a.letters, b.letters) if x != y)


@dataclass
class Cohort:
    anchor: MbtiType
    member_ids: list[str]
    radius: int
    cold_start: bool = False

    @property
    def size(self) -> int:
        return len(self.member_ids)


def build_cohort(anchor: MbtiType, users: list[UserProfile],
                 min_size: int = DEFAULT_MIN_COHORT) -> Cohort:
    """Exact-type members, expanded to Hamming distance 1 when too few.

    An empty cohort even at radius 1 is returned flagged cold_start so the
    caller can fall back to industry-global ranking.
    """
    typed = [(u.user_id, u.mbti) for u in users if u.mbti is not None]
    exact = [uid for uid, t in typed if mbti_distance(anchor, t) == 0]
    if len(exact) >= min_size:
        return Cohort(anchor, sorted(exact), radius=0)
    near = [uid for uid, t in typed if mbti_distance(anchor, t) <= 1]
    if near:
        return Cohort(anchor, sorted(near), radius=1)
    return Cohort(anchor, [], radius=1, cold_start=True)


@dataclass
class RankedAssets:
    asset_ids: list[str]
    scores: dict[str, float] = field(default_factory=dict)
    cold_start: bool = False


def rank_assets(cohort: Cohort, industry: str, assets: list[ContentAsset],
                engagement_log: list[EngagementRecord], now: int,
                top_k: int = 5, weights=DEFAULT_WEIGHTS,
                recency_hours: int = DEFAULT_RECENCY_HOURS) -> RankedAssets:
    """Top assets for an industry by cohort engagement score.

    score(asset) = sum over cohort members' records of
    w_clicks*clicks + w_likes*likes + w_engagements*engagements. Ties
    break by ascending asset id. A cold-start cohort scores over all
    users (industry-global fallback) and flags the result.
    """
    w_clicks, w_likes, w_eng = weights
    eligible = {a.asset_id for a in assets
                if a.industry == industry and a.created_at >= now - recency_hours}
    if not eligible:
        return RankedAssets([], cold_start=True)
    members = None if cohort.cold_start else set(cohort.member_ids)
    scores = {aid: 0.0 for aid in eligible}
    for rec in engagement_log:
        if rec.asset_id not in eligible:
            continue
        if members is not None and rec.user_id not in members:
            continue
        scores[rec.asset_id] += (w_clicks * rec.clicks + w_likes * rec.likes
                                 + w_eng * rec.engagements)
    ordered = sorted(eligible, key=lambda aid: (-scores[aid], aid))[:top_k]
    return RankedAssets(ordered, {aid: scores[aid] for aid in ordered},
                        cold_start=cohort.cold_start)
