import numpy as np
import pytest

from taxledger.domain import (
    AnnotatedPost,
    ImageType,
    LabelSet,
    MediaContent,
    MediaKind,
    PosterProfile,
    PostRecord,
    SourceType,
)


def make_labels(**overrides) -> LabelSet:
    base = dict(
        available=True,
        relevant=True,
        selling_intention=True,
        source=SourceType.DAIGOU,
        hidden_economy=True,
        image_type=ImageType.PRODUCT,
        language="English",
        has_other_contact=False,
        contact_channels=(),
    )
    base.update(overrides)
    return LabelSet(**base)


def make_post(post_id: str = "p1", **overrides) -> PostRecord:
    base = dict(
        post_id=post_id,
        username="tester",
        timestamp=1569110400,
        like_count=5,
        comments=("hello #tag one",),
        hashtags=("tag",),
        media=MediaContent(kind=MediaKind.VIDEO_PLACEHOLDER, seed=7),
        poster=PosterProfile(follower_count=10, following_count=2, post_count=3, bio="x"),
    )
    base.update(overrides)
    return PostRecord(**base)


def make_annotated(post_id: str = "p1", positive: bool = True, available: bool = True) -> AnnotatedPost:
    return AnnotatedPost(
        post=make_post(post_id),
        labels=make_labels(hidden_economy=positive, available=available),
    )


@pytest.fixture
def raw_labels() -> dict:
    return {
        "availability": "Y",
        "relevance": "Y",
        "selling": "Y",
        "source": "P",
        "hidden": "Y",
        "image": "P+B",
        "lang": "English",
        "contact": "N",
        "channels": "",
    }


@pytest.fixture
def rng_scores():
    def _gen(seed: int, n: int):
        from taxledger.rng import Xoshiro256StarStar

        rng = Xoshiro256StarStar(seed)
        return [(rng.random(), int(rng.random() < 0.4)) for _ in range(n)]

    return _gen


def mann_whitney_auc(scores) -> float:
    """O(n^2) pairwise oracle: P(s+ > s-) + 0.5 P(tie)."""
    pos = [s for s, t in scores if t]
    neg = [s for s, t in scores if not t]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def assert_arrays_equal(a: np.ndarray, b: np.ndarray):
    assert a.shape == b.shape
    assert np.array_equal(a, b)
