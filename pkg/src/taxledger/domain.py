"""Core post and label types shared by every pipeline stage.

A post carries its text (the original caption is always ``comments[0]``),
extracted hashtags, one media payload, and optionally the poster profile.
The nine annotation properties live in :class:`LabelSet`; only
``hidden_economy`` is ever used as a training or evaluation target, the
other eight are schema-only.

All types are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .sidecar import DimensionError

IMAGE_EMBED_DIM = 2560


class LabelValidationError(ValueError):
    """Base class for label-schema violations."""


class MissingField(LabelValidationError):
    def __init__(self, name: str):
        super().__init__(f"missing label field: {name}")
        self.name = name


class InvalidOption(LabelValidationError):
    def __init__(self, fieldname: str, token: str):
        super().__init__(f"invalid option for {fieldname}: {token!r}")
        self.field = fieldname
        self.token = token


class ContactInconsistency(LabelValidationError):
    def __init__(self, channels: tuple[str, ...]):
        super().__init__(
            f"has_other_contact is N but channels listed: {list(channels)}"
        )
        self.channels = channels


class SourceType(Enum):
    """Nature of the poster, single-letter wire codes on disk."""

    INDIVIDUAL = "I"
    SHOP = "S"
    BRAND = "B"
    MAKEUP_ARTIST = "M"
    DAIGOU = "D"
    UNREGISTERED_PRODUCER = "P"


class ImageType(Enum):
    """Content category of the post image."""

    BODY_PART = "B"
    PRODUCT = "P"
    PRODUCT_AND_BODY = "P+B"
    ADVERTISEMENT = "A"
    SCREENSHOT = "S"


class MediaKind(Enum):
    IMAGE = "image"
    VIDEO_PLACEHOLDER = "video_placeholder"
    PRECOMPUTED_EMBEDDING = "precomputed_embedding"


@dataclass(frozen=True)
class MediaContent:
    """Exactly one payload, selected by ``kind``.

    Video posts carry only a noise seed: the visual branch substitutes a
    seeded noise image because clips cannot be featurized directly.
    """

    kind: MediaKind
    image_bytes: bytes | None = None
    embedding: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        payloads = {
            MediaKind.IMAGE: self.image_bytes is not None,
            MediaKind.VIDEO_PLACEHOLDER: self.seed is not None,
            MediaKind.PRECOMPUTED_EMBEDDING: self.embedding is not None,
        }
        if not payloads[self.kind]:
            raise ValueError(f"media kind {self.kind.value} missing its payload")
        present = [
            self.image_bytes is not None,
            self.embedding is not None,
            self.seed is not None,
        ]
        if sum(present) != 1:
            raise ValueError("exactly one media payload must be present")
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=np.float64)
            if emb.shape != (IMAGE_EMBED_DIM,):
                raise DimensionError(int(emb.size), IMAGE_EMBED_DIM)
            object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class PosterProfile:
    """Account-level counts; collected but unused by the classifier."""

    follower_count: int
    following_count: int
    post_count: int
    bio: str = ""

    def __post_init__(self) -> None:
        for name in ("follower_count", "following_count", "post_count"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class PostRecord:
    """One social-media post. ``comments[0]`` is the original post text."""

    post_id: str
    username: str
    timestamp: int
    like_count: int
    comments: tuple[str, ...]
    hashtags: tuple[str, ...]
    media: MediaContent
    poster: PosterProfile | None = None

    def __post_init__(self) -> None:
        if not self.post_id:
            raise ValueError("post_id must be non-empty")
        if self.like_count < 0:
            raise ValueError("like_count must be non-negative")
        object.__setattr__(self, "comments", tuple(self.comments))
        object.__setattr__(self, "hashtags", tuple(t.lower() for t in self.hashtags))
        for tag in self.hashtags:
            if "#" in tag or any(ch.isspace() for ch in tag):
                raise ValueError(f"invalid hashtag: {tag!r}")


@dataclass(frozen=True)
class LabelSet:
    """The nine annotation properties; ``hidden_economy`` is the target."""

    available: bool
    relevant: bool
    selling_intention: bool
    source: SourceType
    hidden_economy: bool
    image_type: ImageType
    language: str
    has_other_contact: bool
    contact_channels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "contact_channels", tuple(self.contact_channels))
        if not self.has_other_contact and self.contact_channels:
            raise ContactInconsistency(self.contact_channels)


@dataclass(frozen=True)
class AnnotatedPost:
    post: PostRecord
    labels: LabelSet


# Wire-field aliases: short annotation-sheet names map onto the canonical
# JSONL names so both spellings validate.
_FIELD_ALIASES = {
    "availability": "availability",
    "available": "availability",
    "relevance": "relevance",
    "relevant": "relevance",
    "selling": "selling_intention",
    "selling_intention": "selling_intention",
    "source": "source",
    "hidden": "hidden_economy",
    "hidden_economy": "hidden_economy",
    "image": "image_type",
    "image_type": "image_type",
    "lang": "language",
    "language": "language",
    "contact": "has_other_contact",
    "has_other_contact": "has_other_contact",
    "channels": "contact_channels",
    "contact_channels": "contact_channels",
}

_CANONICAL_FIELDS = (
    "availability",
    "relevance",
    "selling_intention",
    "source",
    "hidden_economy",
    "image_type",
    "language",
    "has_other_contact",
    "contact_channels",
)


def _parse_yn(fieldname: str, token: str) -> bool:
    if token == "Y":
        return True
    if token == "N":
        return False
    raise InvalidOption(fieldname, token)


def validate_label_set(raw: Mapping[str, Any]) -> LabelSet:
    """Parse a raw label mapping into a :class:`LabelSet`.

    Accepts the canonical JSONL field names and their short aliases.
    Channel lists may arrive as an array or a comma-separated string.

    Raises:
        MissingField: one of the nine properties is absent.
        InvalidOption: an enum token outside the schema's option set.
        ContactInconsistency: channels listed under has_other_contact=N.
    """
    canon: dict[str, Any] = {}
    for key, value in raw.items():
        name = _FIELD_ALIASES.get(key)
        if name is not None:
            canon[name] = value
    for name in _CANONICAL_FIELDS:
        if name not in canon:
            raise MissingField(name)

    channels_raw = canon["contact_channels"]
    if isinstance(channels_raw, str):
        channels = tuple(c.strip() for c in channels_raw.split(",") if c.strip())
    else:
        channels = tuple(str(c) for c in channels_raw)

    try:
        source = SourceType(str(canon["source"]))
    except ValueError:
        raise InvalidOption("source", str(canon["source"])) from None
    try:
        image_type = ImageType(str(canon["image_type"]))
    except ValueError:
        raise InvalidOption("image_type", str(canon["image_type"])) from None

    return LabelSet(
        available=_parse_yn("availability", str(canon["availability"])),
        relevant=_parse_yn("relevance", str(canon["relevance"])),
        selling_intention=_parse_yn("selling_intention", str(canon["selling_intention"])),
        source=source,
        hidden_economy=_parse_yn("hidden_economy", str(canon["hidden_economy"])),
        image_type=image_type,
        language=str(canon["language"]),
        has_other_contact=_parse_yn("has_other_contact", str(canon["has_other_contact"])),
        contact_channels=channels,
    )


def render_label_set(labels: LabelSet) -> dict[str, Any]:
    """Inverse of :func:`validate_label_set`: the canonical wire mapping."""

    def yn(flag: bool) -> str:
        return "Y" if flag else "N"

    return {
        "availability": yn(labels.available),
        "relevance": yn(labels.relevant),
        "selling_intention": yn(labels.selling_intention),
        "source": labels.source.value,
        "hidden_economy": yn(labels.hidden_economy),
        "image_type": labels.image_type.value,
        "language": labels.language,
        "has_other_contact": yn(labels.has_other_contact),
        "contact_channels": list(labels.contact_channels),
    }


def is_tax_evasion_positive(annotated: AnnotatedPost) -> bool:
    """The sole training/eval target: the hidden-economy flag."""
    return annotated.labels.hidden_economy


def _is_tag_char(ch: str) -> bool:
    # letters (any script), digits and underscore; everything else ends a tag
    return ch == "_" or ch.isalnum()


def extract_hashtags(comments: Iterable[str]) -> list[str]:
    """All '#'-prefixed tokens across comments, lowercased and deduped.

    A tag is the maximal run of letters/digits/underscore after '#'; a '#'
    mid-word still starts a tag. First-occurrence order is preserved.
    """
    seen: dict[str, None] = {}
    for comment in comments:
        i = 0
        n = len(comment)
        while i < n:
            if comment[i] == "#":
                j = i + 1
                while j < n and _is_tag_char(comment[j]):
                    j += 1
                if j > i + 1:
                    tag = unicodedata.normalize("NFC", comment[i + 1 : j].lower())
                    seen.setdefault(tag, None)
                i = j
            else:
                i += 1
    return list(seen)


# ---------------------------------------------------------------------------
# JSONL codec
# ---------------------------------------------------------------------------

def media_to_json(media: MediaContent, image_path: str | None = None) -> dict[str, Any]:
    if media.kind is MediaKind.IMAGE:
        if image_path is None:
            raise ValueError("image media needs an image_path to serialise")
        return {"kind": media.kind.value, "image_path": image_path}
    if media.kind is MediaKind.VIDEO_PLACEHOLDER:
        return {"kind": media.kind.value, "seed": media.seed}
    return {"kind": media.kind.value, "embedding": [float(v) for v in media.embedding]}


def media_from_json(obj: Mapping[str, Any], base_dir: Path | None = None) -> MediaContent:
    kind = MediaKind(str(obj["kind"]))
    if kind is MediaKind.IMAGE:
        path = Path(str(obj["image_path"]))
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return MediaContent(kind=kind, image_bytes=path.read_bytes())
    if kind is MediaKind.VIDEO_PLACEHOLDER:
        return MediaContent(kind=kind, seed=int(obj["seed"]))
    return MediaContent(kind=kind, embedding=np.asarray(obj["embedding"], dtype=np.float64))


def post_to_json(post: PostRecord, image_path: str | None = None) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "post_id": post.post_id,
        "username": post.username,
        "timestamp": post.timestamp,
        "like_count": post.like_count,
        "comments": list(post.comments),
        "hashtags": list(post.hashtags),
        "media": media_to_json(post.media, image_path),
    }
    if post.poster is not None:
        obj["poster"] = {
            "followers": post.poster.follower_count,
            "following": post.poster.following_count,
            "posts": post.poster.post_count,
            "bio": post.poster.bio,
        }
    return obj


def post_from_json(obj: Mapping[str, Any], base_dir: Path | None = None) -> PostRecord:
    poster = None
    if obj.get("poster") is not None:
        p = obj["poster"]
        poster = PosterProfile(
            follower_count=int(p["followers"]),
            following_count=int(p["following"]),
            post_count=int(p["posts"]),
            bio=str(p.get("bio", "")),
        )
    return PostRecord(
        post_id=str(obj["post_id"]),
        username=str(obj["username"]),
        timestamp=int(obj["timestamp"]),
        like_count=int(obj["like_count"]),
        comments=tuple(str(c) for c in obj["comments"]),
        hashtags=tuple(str(t) for t in obj["hashtags"]),
        media=media_from_json(obj["media"], base_dir),
        poster=poster,
    )


def annotated_to_json(annotated: AnnotatedPost, image_path: str | None = None) -> dict[str, Any]:
    obj = post_to_json(annotated.post, image_path)
    obj["labels"] = render_label_set(annotated.labels)
    return obj


def annotated_from_json(obj: Mapping[str, Any], base_dir: Path | None = None) -> AnnotatedPost:
    if "labels" not in obj:
        raise MissingField("labels")
    return AnnotatedPost(
        post=post_from_json(obj, base_dir),
        labels=validate_label_set(obj["labels"]),
    )


def dumps_record(obj: Mapping[str, Any]) -> str:
    """One canonical JSONL line: sorted keys, no whitespace padding."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
