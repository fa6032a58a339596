"""Item-level metadata records as found in the Amazon Reviews'23 dumps."""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from preprocessing.text_processor import RECORD_SEPARATOR

MAIN_VARIANT = "MAIN"


@dataclass(frozen=True)
class ImageVariant:
    variant: str
    url_hi: Optional[str] = None
    url_lo: Optional[str] = None

    @property
    def best_url(self) -> Optional[str]:
        """High-resolution URL when present, else the low-resolution one."""
        return self.url_hi or self.url_lo


@dataclass
class ItemRecord:
    id: str
    main_category: str
    title: str
    description: str
    features: str
    average_rating: float
    rating_number: int
    images: List[ImageVariant] = field(default_factory=list)
    line: int = 0
    source_dir: Optional[str] = None
    resolved_image: Optional[str] = None

    def main_image(self) -> Optional[ImageVariant]:
        """First MAIN image that has a URL, if any."""
        for image in self.images:
            if image.variant == MAIN_VARIANT and image.best_url:
                return image
        return None

    def to_json(self) -> Dict[str, Any]:
        """Flat JSON form used in the prepared files."""
        return {
            "id": self.id,
            "main_category": self.main_category,
            "title": self.title,
            "description": self.description,
            "features": self.features,
            "average_rating": self.average_rating,
            "rating_number": self.rating_number,
            "images": [
                {"variant": image.variant, "hi_res": image.url_hi, "large": image.url_lo}
                for image in self.images
            ],
            "resolved_image": self.resolved_image,
        }


def _utf8(text: str, name: str) -> str:
    try:
        text.encode("utf-8")
    except UnicodeEncodeError:
        raise ValueError(f"{name} is not valid UTF-8 text")
    return text


def flatten_text(value, name: str = "text") -> str:
    """Lists (``description``, ``features``) are joined with single spaces."""
    if value is None:
        return ""
    if isinstance(value, (list, tuple)):
        value = " ".join(str(item) for item in value if item is not None)
    return _utf8(str(value), name).replace(RECORD_SEPARATOR, " ")


def _optional_text(value) -> Optional[str]:
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise ValueError("image URL must be text")
    return _utf8(value, "image URL")


def parse_record(raw: Dict[str, Any], line: int = 0, source_dir: Optional[str] = None) -> ItemRecord:
    """Build an :class:`ItemRecord`; raises ``ValueError`` naming the bad field."""
    if not isinstance(raw, dict):
        raise ValueError("record is not a JSON object")
    item_id = raw.get("parent_asin", raw.get("id"))
    if item_id is None or str(item_id) == "":
        raise ValueError("missing id")

    rating = raw.get("average_rating")
    if rating is None or isinstance(rating, bool):
        raise ValueError("missing average_rating")
    try:
        rating = float(rating)
    except (TypeError, ValueError):
        raise ValueError("average_rating is not a number")
    if not 1.0 <= rating <= 5.0:
        raise ValueError(f"average_rating {rating} outside [1, 5]")

    count = raw.get("rating_number", 0)
    if count is None:
        count = 0
    if isinstance(count, bool) or not isinstance(count, (int, float)) or not math.isfinite(count) \
            or count != int(count) or count < 0:
        raise ValueError("rating_number must be a non-negative integer")

    entries = raw.get("images") or []
    if not isinstance(entries, list):
        raise ValueError("images is not a list")
    images = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise ValueError("image entry is not an object")
        images.append(ImageVariant(
            variant=flatten_text(entry.get("variant"), "image variant"),
            url_hi=_optional_text(entry.get("hi_res")),
            url_lo=_optional_text(entry.get("large")),
        ))

    return ItemRecord(
        id=_utf8(str(item_id), "id"),
        main_category=flatten_text(raw.get("main_category"), "main_category"),
        title=flatten_text(raw.get("title"), "title"),
        description=flatten_text(raw.get("description"), "description"),
        features=flatten_text(raw.get("features"), "features"),
        average_rating=rating,
        rating_number=int(count),
        images=images,
        line=line,
        source_dir=source_dir,
        resolved_image=raw.get("resolved_image"),
    )


def resolve_location(url: str, source_dir: Optional[str]) -> str:
    """URLs pass through; relative local paths become absolute against ``source_dir``."""
    if "://" in url:
        return url
    path = Path(url)
    if not path.is_absolute() and source_dir is not None:
        path = Path(source_dir) / path
    return str(path.resolve())
