"""Bundle builders: turn posts into the three modality vectors.

Two interchangeable featurizer sets exist behind the same interface:
the deterministic baseline (hashed text + image cell statistics) and a
loader for sidecar files of externally precomputed embeddings.
"""

from __future__ import annotations

from pathlib import Path
from typing import Protocol

from . import sidecar
from .domain import AnnotatedPost, MediaKind, PostRecord
from .fusion import FeatureBundle
from .image_features import (
    IMAGE_DIM,
    ImageSource,
    ImageVector,
    decode_image,
    image_to_features,
    video_placeholder_features,
    zeroed_placeholder_features,
)
from .text_features import (
    TEXT_DIM,
    TextSource,
    TextVector,
    TokenSequence,
    embed_hashed,
    tokenize,
)

SIDECAR_FILES = {"hashtags": "hashtags.emb", "comments": "comments.emb", "images": "images.emb"}


class Featurizer(Protocol):
    def bundle(self, post: PostRecord) -> FeatureBundle: ...


def _as_post(post: PostRecord | AnnotatedPost) -> PostRecord:
    return post.post if isinstance(post, AnnotatedPost) else post


class BaselineFeaturizer:
    """Dependency-free deterministic featurizer set.

    ``video_policy`` selects what the image branch sees for video posts:
    "noise" passes a seeded noise frame through the image featurizer,
    "zero" silences the branch entirely.
    """

    def __init__(self, video_policy: str = "noise"):
        if video_policy not in ("noise", "zero"):
            raise ValueError(f"video_policy must be 'noise' or 'zero', got {video_policy!r}")
        self.video_policy = video_policy

    def bundle(self, post: PostRecord | AnnotatedPost) -> FeatureBundle:
        post = _as_post(post)
        hashtag_vec = embed_hashed(TokenSequence(tuple(post.hashtags)))
        comment_vec = embed_hashed(tokenize("\n".join(post.comments)))
        media = post.media
        if media.kind is MediaKind.IMAGE:
            image_vec = image_to_features(decode_image(media.image_bytes))
        elif media.kind is MediaKind.VIDEO_PLACEHOLDER:
            if self.video_policy == "noise":
                image_vec = video_placeholder_features(media.seed)
            else:
                image_vec = zeroed_placeholder_features()
        else:
            image_vec = ImageVector(values=media.embedding, source=ImageSource.PRECOMPUTED)
        return FeatureBundle(hashtag_vec=hashtag_vec, comment_vec=comment_vec, image_vec=image_vec)


class SidecarFeaturizer:
    """Vectors read from precomputed sidecar embedding files."""

    def __init__(self, directory: Path | str):
        directory = Path(directory)
        self._hashtags = sidecar.read_sidecar(directory / SIDECAR_FILES["hashtags"], TEXT_DIM)
        self._comments = sidecar.read_sidecar(directory / SIDECAR_FILES["comments"], TEXT_DIM)
        self._images = sidecar.read_sidecar(directory / SIDECAR_FILES["images"], IMAGE_DIM)

    def bundle(self, post: PostRecord | AnnotatedPost) -> FeatureBundle:
        post_id = _as_post(post).post_id
        for table in (self._hashtags, self._comments, self._images):
            if post_id not in table:
                raise sidecar.MissingEmbedding(post_id)
        return FeatureBundle(
            hashtag_vec=TextVector(values=self._hashtags[post_id], source=TextSource.PRECOMPUTED),
            comment_vec=TextVector(values=self._comments[post_id], source=TextSource.PRECOMPUTED),
            image_vec=ImageVector(values=self._images[post_id], source=ImageSource.PRECOMPUTED),
        )


def write_sidecar_dir(
    posts: list[PostRecord | AnnotatedPost],
    out_dir: Path | str,
    featurizer: BaselineFeaturizer | None = None,
) -> None:
    """Precompute baseline features for every post into sidecar files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    featurizer = featurizer or BaselineFeaturizer()
    rows_h, rows_c, rows_i = [], [], []
    for post in posts:
        b = featurizer.bundle(post)
        post_id = _as_post(post).post_id
        rows_h.append((post_id, b.hashtag_vec.values))
        rows_c.append((post_id, b.comment_vec.values))
        rows_i.append((post_id, b.image_vec.values))
    sidecar.write_sidecar(out_dir / SIDECAR_FILES["hashtags"], TEXT_DIM, rows_h)
    sidecar.write_sidecar(out_dir / SIDECAR_FILES["comments"], TEXT_DIM, rows_c)
    sidecar.write_sidecar(out_dir / SIDECAR_FILES["images"], IMAGE_DIM, rows_i)


def make_featurizer(kind: str, sidecar_dir: Path | str | None = None, video_policy: str = "noise"):
    if kind == "baseline":
        return BaselineFeaturizer(video_policy=video_policy)
    if kind == "sidecar":
        if sidecar_dir is None:
            raise ValueError("sidecar featurizer needs --sidecar-dir")
        return SidecarFeaturizer(sidecar_dir)
    raise ValueError(f"unknown featurizer kind {kind!r}")
