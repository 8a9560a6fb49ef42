"""Branded-content and user-timeline ingestion plus platform persistence.

Local corpora stand in for brand content libraries and social scraping.
Disk layout under the store root:

    meta.json            {"version": 1}
    assets.jsonl         one ContentAsset per line
    users.jsonl          one UserProfile per line
    engagements.jsonl    one EngagementRecord per line
    images/              PNG files referenced by asset/post records

Timestamps are logical (monotone integers, hours), never wall time.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imaging
from .errors import NotFoundError, StoreError
from .mbti import MbtiType

log = logging.getLogger(__name__)

STORE_VERSION = 1


@dataclass
class ContentAsset:
    """One branded creative: image + caption + engagement identity."""

    asset_id: str
    brand_id: str
    industry: str
    image_ref: str
    caption: str
    created_at: int
    tags: list[str] = field(default_factory=list)
    image: np.ndarray | None = None  # [3,64,64] in [0,1], resolved lazily

    def gan_image(self) -> np.ndarray:
        """[3,32,32] in [-1,1] for generator conditioning/training."""
        if self.image is None:
            raise StoreError(f"asset {self.asset_id}: image pixels not loaded")
        return imaging.to_gan_range(imaging.downsample_2x(self.image))

    def to_record(self) -> dict:
        return {"asset_id": self.asset_id, "brand_id": self.brand_id,
                "industry": self.industry, "image_ref": self.image_ref,
                "caption": self.caption, "created_at": self.created_at,
                "tags": self.tags}


@dataclass
class SocialPost:
    post_id: str
    text: str
    image_refs: list[str] = field(default_factory=list)
    timestamp: int = 0
    images: list[np.ndarray] | None = None  # resolved [3,64,64] in [0,1]

    def __post_init__(self):
        if not self.text.strip() and not self.image_refs and not self.images:
            raise ValueError(f"post {self.post_id}: needs text or images")

    def image_arrays(self) -> list[np.ndarray]:
        return self.images or []

    def to_record(self) -> dict:
        return {"post_id": self.post_id, "text": self.text,
                "image_refs": self.image_refs, "timestamp": self.timestamp}


@dataclass
class UserProfile:
    user_id: str
    handle: str
    platform: str
    posts: list[SocialPost] = field(default_factory=list)
    mbti: MbtiType | None = None

    def __post_init__(self):
        self.posts.sort(key=lambda p: -p.timestamp)

    def texts(self) -> list[str]:
        return [p.text for p in self.posts if p.text.strip()]

    def images_with_timestamps(self) -> list[tuple[np.ndarray, int]]:
        out = []
        for p in self.posts:
            for img in p.image_arrays():
                out.append((img, p.timestamp))
        return out

    def recent_images(self, k: int = 10) -> list[np.ndarray]:
        pairs = self.images_with_timestamps()
        pairs.sort(key=lambda e: -e[1])
        return [img for img, _ in pairs[:k]]

    def to_record(self) -> dict:
        rec = {"user_id": self.user_id, "handle": self.handle,
               "platform": self.platform,
               "posts": [p.to_record() for p in self.posts]}
        if self.mbti is not None:
            rec["mbti"] = self.mbti.letters
            rec["probabilities"] = self.mbti.probability_map()
        return rec


@dataclass
class EngagementRecord:
    user_id: str
    asset_id: str
    clicks: int
    likes: int
    engagements: int
    timestamp: int

    def __post_init__(self):
        if min(self.clicks, self.likes, self.engagements) < 0:
            raise ValueError("engagement counts must be non-negative")

    def to_record(self) -> dict:
        return self.__dict__.copy()


def _read_jsonl(path: Path, skip_malformed: bool = False):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                if skip_malformed:
                    log.warning("%s:%d skipped malformed JSON: %s", path, lineno, exc)
                    continue
                raise StoreError(f"{path}:{lineno}: malformed JSON: {exc}") from exc


class Store:
    """Single-writer state holder; readers take deep-copy snapshots."""

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else None
        self.assets: dict[str, ContentAsset] = {}
        self.users: dict[str, UserProfile] = {}
        self.engagements: list[EngagementRecord] = []

    # -- mutation ----------------------------------------------------------
    def upsert_asset(self, asset: ContentAsset):
        self.assets[asset.asset_id] = asset

    def upsert_user(self, profile: UserProfile):
        self.users[profile.user_id] = profile

    def add_engagement(self, rec: EngagementRecord):
        self.engagements.append(rec)

    # -- queries -----------------------------------------------------------
    def get_user(self, user_id: str) -> UserProfile:
        try:
            return self.users[user_id]
        except KeyError:
            raise NotFoundError(f"unknown user {user_id!r}") from None

    def user_by_handle(self, handle: str, platform: str) -> UserProfile:
        for u in self.users.values():
            if u.handle == handle and u.platform == platform:
                return u
        raise NotFoundError(f"unknown handle {handle!r} on {platform}")

    def industry_assets(self, industry: str) -> list[ContentAsset]:
        return [a for a in self.assets.values() if a.industry == industry]

    def snapshot(self) -> "Store":
        """Consistent point-in-time copy; later upserts are not visible."""
        view = Store(self.root)
        view.assets = copy.deepcopy(self.assets)
        view.users = copy.deepcopy(self.users)
        view.engagements = copy.deepcopy(self.engagements)
        return view

    # -- ingestion ---------------------------------------------------------
    def ingest_brand_corpus(self, path, industries=None, keywords=None) -> int:
        """Upsert assets matching industry AND any keyword (case-insensitive).

        Empty/None filter sets are vacuous. Malformed records and unreadable
        images are skipped with a logged diagnostic.
        """
        path = Path(path)
        industries = {i.lower() for i in industries} if industries else None
        keywords = [k.lower() for k in keywords] if keywords else None
        count = 0
        for lineno, rec in _read_jsonl(path / "assets.jsonl", skip_malformed=True):
            try:
                asset = ContentAsset(
                    asset_id=rec["asset_id"], brand_id=rec["brand_id"],
                    industry=rec["industry"], image_ref=rec["image_ref"],
                    caption=rec.get("caption", ""),
                    created_at=int(rec.get("created_at", 0)),
                    tags=list(rec.get("tags", [])))
            except (KeyError, TypeError, ValueError) as exc:
                log.warning("assets.jsonl:%d skipped malformed record: %s", lineno, exc)
                continue
            if industries is not None and asset.industry.lower() not in industries:
                continue
            if keywords is not None:
                haystack = (asset.caption + " " + " ".join(asset.tags)).lower()
                if not any(k in haystack for k in keywords):
                    continue
            try:
                asset.image = imaging.load_png(path / asset.image_ref)
            except Exception as exc:
                log.warning("assets.jsonl:%d skipped unreadable image %s: %s",
                            lineno, asset.image_ref, exc)
                continue
            self.upsert_asset(asset)
            count += 1
        return count

    def ingest_user_timeline(self, path) -> UserProfile:
        """Load one user's timeline file (JSON); idempotent by post id."""
        path = Path(path)
        if not path.exists():
            raise NotFoundError(f"timeline file not found: {path}")
        try:
            rec = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise StoreError(f"{path}: malformed JSON: {exc}") from exc
        profile = self._profile_from_record(rec, path.parent)
        existing = self.users.get(profile.user_id)
        if existing is not None:
            seen = {p.post_id for p in existing.posts}
            merged = existing.posts + [p for p in profile.posts if p.post_id not in seen]
            profile = UserProfile(profile.user_id, profile.handle,
                                  profile.platform, merged, existing.mbti)
        self.upsert_user(profile)
        return profile

    def _profile_from_record(self, rec: dict, base: Path) -> UserProfile:
        posts = []
        for p in rec.get("posts", []):
            refs = list(p.get("image_refs", []))
            images = []
            for ref in refs:
                try:
                    images.append(imaging.load_png(base / ref))
                except Exception as exc:
                    log.warning("post %s: unreadable image %s: %s",
                                p.get("post_id"), ref, exc)
            try:
                posts.append(SocialPost(post_id=p["post_id"], text=p.get("text", ""),
                                        image_refs=refs,
                                        timestamp=int(p.get("timestamp", 0)),
                                        images=images or None))
            except (KeyError, ValueError) as exc:
                log.warning("skipped malformed post: %s", exc)
        mbti = MbtiType.from_letters(rec["mbti"]) if rec.get("mbti") else None
        return UserProfile(rec["user_id"], rec.get("handle", rec["user_id"]),
                           rec.get("platform", "twitter"), posts, mbti)

    # -- persistence -------------------------------------------------------
    def persist(self):
        if self.root is None:
            raise StoreError("store has no root directory to persist into")
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "meta.json").write_text(json.dumps({"version": STORE_VERSION}))
        with open(self.root / "assets.jsonl", "w", encoding="utf-8") as fh:
            for asset in self.assets.values():
                fh.write(json.dumps(asset.to_record()) + "\n")
                if asset.image is not None:
                    imaging.save_png(self.root / asset.image_ref, asset.image)
        with open(self.root / "users.jsonl", "w", encoding="utf-8") as fh:
            for user in self.users.values():
                fh.write(json.dumps(user.to_record()) + "\n")
                for post in user.posts:
                    if post.images:
                        for ref, img in zip(post.image_refs, post.images):
                            imaging.save_png(self.root / ref, img)
        with open(self.root / "engagements.jsonl", "w", encoding="utf-8") as fh:
            for rec in self.engagements:
                fh.write(json.dumps(rec.to_record()) + "\n")

    @classmethod
    def load(cls, root) -> "Store":
        root = Path(root)
        meta_path = root / "meta.json"
        if not meta_path.exists():
            raise StoreError(f"{meta_path}: missing store metadata")
        meta = json.loads(meta_path.read_text())
        if meta.get("version") != STORE_VERSION:
            raise StoreError(
                f"{meta_path}: unknown store version {meta.get('version')!r}")
        store = cls(root)
        assets_path = root / "assets.jsonl"
        if assets_path.exists():
            for lineno, rec in _read_jsonl(assets_path):
                try:
                    asset = ContentAsset(
                        asset_id=rec["asset_id"], brand_id=rec["brand_id"],
                        industry=rec["industry"], image_ref=rec["image_ref"],
                        caption=rec.get("caption", ""),
                        created_at=int(rec.get("created_at", 0)),
                        tags=list(rec.get("tags", [])))
                except (KeyError, TypeError, ValueError) as exc:
                    raise StoreError(f"{assets_path}:{lineno}: bad asset record: {exc}")
                img_path = root / asset.image_ref
                if img_path.exists():
                    asset.image = imaging.load_png(img_path)
                store.assets[asset.asset_id] = asset
        users_path = root / "users.jsonl"
        if users_path.exists():
            for lineno, rec in _read_jsonl(users_path):
                try:
                    profile = store._profile_from_record(rec, root)
                    if rec.get("probabilities"):
                        probs = rec["probabilities"]
                        profile.mbti = MbtiType(
                            rec["mbti"],
                            tuple(probs[a] for a in ("EI", "SN", "TF", "JP")))
                except (KeyError, ValueError) as exc:
                    raise StoreError(f"{users_path}:{lineno}: bad user record: {exc}")
                store.users[profile.user_id] = profile
        eng_path = root / "engagements.jsonl"
        if eng_path.exists():
            for lineno, rec in _read_jsonl(eng_path):
                try:
                    store.engagements.append(EngagementRecord(**rec))
                except (TypeError, ValueError) as exc:
                    raise StoreError(f"{eng_path}:{lineno}: bad engagement record: {exc}")
        return store
