"""Seeded synthetic corpus generator with per-modality planted signals.

Positives and negatives share a background vocabulary; positives
additionally carry seller hashtags, contact-channel phrases and a bright
centered image patch, each governed by a per-modality strength in [0, 1].
Text signals are included with probability equal to the strength; the
image patch contrast scales with the strength (with per-post jitter), so
visual separability rises smoothly from chance to near-perfect.

Everything derives from the config seed: equal configs produce
byte-identical corpora.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    AnnotatedPost,
    ImageType,
    LabelSet,
    MediaContent,
    MediaKind,
    PosterProfile,
    PostRecord,
    SourceType,
    extract_hashtags,
)
from .image_features import encode_png
from .ingestion import CorpusManifest
from .rng import MASK64, CounterStream, Xoshiro256StarStar, derive_seed

DEFAULT_POSITIVE_RATE = 464 / 2081


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_posts: int
    positive_rate: float = DEFAULT_POSITIVE_RATE
    modality_signal: tuple[float, float, float] = (1.0, 1.0, 1.0)  # hashtags, comments, image
    background_vocab: int = 120
    signal_vocab: int = 12
    benign_vocab: int = 20
    video_fraction: float = 0.10
    image_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_posts <= 0:
            raise ConfigError("n_posts must be positive")
        rates = (self.positive_rate, self.video_fraction, *self.modality_signal)
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ConfigError("rates and signal strengths must lie in [0, 1]")
        if len(self.modality_signal) != 3:
            raise ConfigError("modality_signal needs (hashtags, comments, image) entries")
        if self.image_size < 8:
            raise ConfigError("image_size must be at least 8")
        if min(self.background_vocab, self.signal_vocab, self.benign_vocab) < 4:
            raise ConfigError("vocab sizes must be at least 4")

    def to_dict(self) -> dict:
        return {
            "n_posts": self.n_posts,
            "positive_rate": self.positive_rate,
            "modality_signal": list(self.modality_signal),
            "background_vocab": self.background_vocab,
            "signal_vocab": self.signal_vocab,
            "benign_vocab": self.benign_vocab,
            "video_fraction": self.video_fraction,
            "image_size": self.image_size,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(obj: dict) -> "SynthConfig":
        known = {f for f in SynthConfig.__dataclass_fields__}
        kwargs = {k: v for k, v in obj.items() if k in known}
        if "modality_signal" in kwargs:
            kwargs["modality_signal"] = tuple(float(v) for v in kwargs["modality_signal"])
        return SynthConfig(**kwargs)


_BACKGROUND_BASE = [
    "lipstick", "matte", "gloss", "makeup", "beauty", "shade", "color", "swatch",
    "lip", "balm", "tint", "velvet", "satin", "nude", "coral", "berry", "rose",
    "red", "pink", "plum", "new", "today", "look", "soft", "finish", "classic",
    "spring", "summer", "glow", "skin", "tone", "collection", "favorite", "daily",
    "mauve", "crimson", "peach", "cocoa", "blush", "shimmer",
]

_SELLER_TAG_BASE = [
    "dmtobuy", "wholesale", "pricelist", "dmforprice", "stockready", "ordername",
    "freepostage", "trustedseller", "readystock", "preorder", "bulkorder", "resell",
]

_BENIGN_TAG_BASE = [
    "selfcare", "ootd", "motd", "makeuplover", "beautygram", "lipstickaddict",
    "makeuptutorial", "glam", "skincare", "lipart", "beautyblogger", "swatches",
]

_CONTACT_TEMPLATES = [
    ("whatsapp me at +{num}", "WhatsApp"),
    ("wechat id {word}{num}", "WeChat"),
    ("line {word}{num} to order", "Line"),
    ("dm or telegram {word}{num}", "Telegram"),
    ("call {num} for orders", "Phone"),
    ("dm to order pricelist ready", "DM"),
]

_SELLER_PHRASES = [
    "dm to order now", "full price list ready", "wholesale direct factory price",
    "fast shipping worldwide tracked", "trusted seller many reviews", "ready stock ships today",
    "best price guarantee always", "free postage promo week", "bulk discount for resellers",
    "payment by transfer accepted",
]

_SELLER_SPIELS = [
    "serious buyers message first for reserved stock and quick checkout",
    "new batch landed this week order early before stock runs out",
    "we restock every friday message to reserve yours with deposit",
    "loyal customers get extra discount ask about the referral deal",
]

_BENIGN_PHRASES = [
    "love this shade", "so pretty", "gorgeous color", "need this now",
    "stunning look", "my favorite", "wow amazing", "this suits you",
    "obsessed with this", "beautiful finish",
]

_POSITIVE_CJK_PHRASES = ["代购 下单 私聊", "现货 直邮 微信"]
_NEGATIVE_CJK_PHRASES = ["颜色很美", "好看 喜欢"]

_LANGUAGES = ["English", "English", "English", "Indonesian", "Thai", "Chinese", "Spanish", "Arabic"]

_POSITIVE_SOURCES = [SourceType.DAIGOU, SourceType.DAIGOU, SourceType.UNREGISTERED_PRODUCER, SourceType.SHOP]
_NEGATIVE_SOURCES = [SourceType.INDIVIDUAL, SourceType.INDIVIDUAL, SourceType.BRAND, SourceType.MAKEUP_ARTIST, SourceType.SHOP]

# image synthesis constants. Patch presence scales with strength (capped
# Bernoulli) and patch contrast scales with strength on top of that, so
# visual separability is controllable: detection ~ presence rate, with a
# soft floor once the contrast sinks into the pixel noise.
_PIXEL_NOISE = 0.22
_RECT_ALPHA = (0.25, 0.55)
_SIGNAL_ALPHA_MAX = 0.30
_SIGNAL_JITTER = (0.5, 1.0)
_PRESENCE_GAIN = 2.0


def _word_list(base: list[str], prefix: str, size: int) -> list[str]:
    words = list(base[:size])
    i = 0
    while len(words) < size:
        words.append(f"{prefix}{i}")
        i += 1
    return words


def _blend_rect(px: np.ndarray, y0: int, y1: int, x0: int, x1: int, color: np.ndarray, alpha: float) -> None:
    region = px[y0:y1, x0:x1]
    px[y0:y1, x0:x1] = (1.0 - alpha) * region + alpha * color


def _image_pixels(key: int, size: int, signal_alpha: float) -> np.ndarray:
    """Noisy base + random bright rectangles; optional centered signal patch.

    The random rectangles appear in every image regardless of class, so a
    weak centered patch is only detectable once its contrast clears the
    confounder level.
    """
    stream = CounterStream(key)
    base = stream.uniform(3) * 0.5 + 0.2
    px = np.tile(base, (size, size, 1))
    px += (stream.uniform((size, size, 3)) - 0.5) * (2.0 * _PIXEL_NOISE)

    draws = stream.uniform(16)
    n_rects = 1 + int(draws[0] * 2.0)
    d = 1
    for _ in range(n_rects):
        rw = int(size * (0.25 + draws[d] * 0.25)); d += 1
        rh = int(size * (0.25 + draws[d] * 0.25)); d += 1
        x0 = int(draws[d] * (size - rw)); d += 1
        y0 = int(draws[d] * (size - rh)); d += 1
        alpha = _RECT_ALPHA[0] + draws[d] * (_RECT_ALPHA[1] - _RECT_ALPHA[0]); d += 1
        color = stream.uniform(3) * 0.4 + 0.6
        _blend_rect(px, y0, y0 + rh, x0, x0 + rw, color, alpha)

    if signal_alpha > 0.0:
        half = size // 2
        lo = (size - half) // 2
        white = np.ones(3)
        _blend_rect(px, lo, lo + half, lo, lo + half, white, signal_alpha)

    return (np.clip(px, 0.0, 1.0) * 255.0).round().astype(np.uint8)


def _make_comment_text(rng: Xoshiro256StarStar, background: list[str], tags: list[str]) -> str:
    n_words = 3 + rng.randbelow(3)
    words = [rng.choice(background) for _ in range(n_words)]
    words.extend("#" + t for t in tags)
    return " ".join(words)


def generate_corpus(config: SynthConfig) -> CorpusManifest:
    """Draw ``n_posts`` i.i.d. posts with class-conditional planted signals."""
    sig_h, sig_c, sig_i = config.modality_signal
    background = _word_list(_BACKGROUND_BASE, "tone", config.background_vocab)
    seller_tags = _word_list(_SELLER_TAG_BASE, "sellertag", config.signal_vocab)
    benign_tags = _word_list(_BENIGN_TAG_BASE, "benigntag", config.benign_vocab)

    records: list[AnnotatedPost] = []
    for i in range(config.n_posts):
        rng = Xoshiro256StarStar(derive_seed(config.seed, "post", i))
        positive = rng.random() < config.positive_rate
        is_video = rng.random() < config.video_fraction
        language = rng.choice(_LANGUAGES)

        # hashtags: shared base draw; signal positives add seller tags
        tags = [rng.choice(benign_tags) for _ in range(1 + rng.randbelow(2))]
        tags += [rng.choice(background) for _ in range(rng.randbelow(3))]
        has_tag_signal = positive and rng.random() < sig_h
        if has_tag_signal:
            tags = [rng.choice(seller_tags) for _ in range(4 + rng.randbelow(3))] + tags
        deduped = list(dict.fromkeys(tags))

        # comments: caption first, then any contact/seller talk, then chatter
        # (the comment embedder truncates at 64 tokens, so signal text that
        # trailed small talk could get cut on long posts)
        comments = [_make_comment_text(rng, background, deduped)]
        has_contact_signal = positive and rng.random() < sig_c
        channels: tuple[str, ...] = ()
        if has_contact_signal:
            template, channel = _CONTACT_TEMPLATES[rng.randbelow(len(_CONTACT_TEMPLATES))]
            phrase = template.format(
                num=str(10000000 + rng.randbelow(89999999)),
                word=rng.choice(background),
            )
            comments.append(phrase)
            comments.extend(rng.sample(_SELLER_PHRASES, 5))
            comments.append(rng.choice(_SELLER_SPIELS))
            channels = (channel,)
            if language == "Chinese":
                comments.append(rng.choice(_POSITIVE_CJK_PHRASES))
        if rng.random() < 0.35:
            comments.append(rng.choice(_BENIGN_PHRASES))
        if language == "Chinese" and rng.random() < 0.5:
            comments.append(rng.choice(_NEGATIVE_CJK_PHRASES))

        # media: video placeholder or synthesised image
        if is_video:
            media = MediaContent(kind=MediaKind.VIDEO_PLACEHOLDER, seed=rng.next_u64() & MASK64)
        else:
            signal_alpha = 0.0
            patched = positive and sig_i > 0.0 and rng.random() < min(1.0, _PRESENCE_GAIN * sig_i)
            if patched:
                jitter = _SIGNAL_JITTER[0] + rng.random() * (_SIGNAL_JITTER[1] - _SIGNAL_JITTER[0])
                signal_alpha = _SIGNAL_ALPHA_MAX * sig_i * jitter
            pixels = _image_pixels(derive_seed(config.seed, "image", i), config.image_size, signal_alpha)
            media = MediaContent(kind=MediaKind.IMAGE, image_bytes=encode_png(pixels))

        post = PostRecord(
            post_id=f"p{i:06d}",
            username=f"user_{rng.next_u64() % 100000:05d}",
            timestamp=1569110400 + rng.randbelow(5 * 86400),
            like_count=rng.randbelow(800),
            comments=tuple(comments),
            hashtags=tuple(extract_hashtags(comments)),
            media=media,
            poster=PosterProfile(
                follower_count=rng.randbelow(50000),
                following_count=rng.randbelow(5000),
                post_count=rng.randbelow(3000),
                bio=rng.choice(background) + " " + rng.choice(background),
            ),
        )
        labels = LabelSet(
            available=True,
            relevant=rng.random() < 0.7,
            selling_intention=positive or rng.random() < 0.35,
            source=rng.choice(_POSITIVE_SOURCES if positive else _NEGATIVE_SOURCES),
            hidden_economy=positive,
            image_type=rng.choice(list(ImageType)),
            language=language,
            has_other_contact=bool(channels),
            contact_channels=channels,
        )
        records.append(AnnotatedPost(post=post, labels=labels))

    provenance = f"synthetic:n={config.n_posts},seed={config.seed}"
    return CorpusManifest(records=records, provenance=provenance, seed=config.seed)


def make_cleaning_manifest(seed: int = 0) -> CorpusManifest:
    """A manifest whose cleaning removes exactly 711 unavailable posts and
    148 duplicate occurrences, leaving 2,081 unique records.

    Construction: 2,081 unique available posts, plus one extra copy of 148
    of them, plus 711 unavailable posts, shuffled; 2,940 records in total.
    (No larger input can produce these exact removal counts: output plus
    removals fixes the input size.)
    """
    rng = Xoshiro256StarStar(derive_seed(seed, "cleaning-manifest"))

    def tiny_post(post_id: str, available: bool) -> AnnotatedPost:
        post = PostRecord(
            post_id=post_id,
            username=f"user_{rng.randbelow(99999):05d}",
            timestamp=1569110400 + rng.randbelow(86400),
            like_count=rng.randbelow(100),
            comments=(f"post {post_id}",),
            hashtags=(),
            media=MediaContent(kind=MediaKind.VIDEO_PLACEHOLDER, seed=rng.next_u64()),
            poster=None,
        )
        labels = LabelSet(
            available=available,
            relevant=True,
            selling_intention=False,
            source=SourceType.INDIVIDUAL,
            hidden_economy=False,
            image_type=ImageType.PRODUCT,
            language="English",
            has_other_contact=False,
            contact_channels=(),
        )
        return AnnotatedPost(post=post, labels=labels)

    originals = [tiny_post(f"k{i:06d}", True) for i in range(2081)]
    dup_sources = rng.sample(originals, 148)
    unavailable = [tiny_post(f"u{i:06d}", False) for i in range(711)]

    records = originals + list(dup_sources) + unavailable
    rng.shuffle(records)
    return CorpusManifest(records=records, provenance=f"synthetic:cleaning,seed={seed}", seed=seed)
