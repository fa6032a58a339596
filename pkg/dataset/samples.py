"""Training samples built from prepared JSON-lines files."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

from preprocessing.image_processor import ImageTensor
from preprocessing.text_processor import MetadataFields
from .records import flatten_text

logger = logging.getLogger(__name__)

RATING_RANGE = (1.0, 5.0)


@dataclass
class RatingSample:
    """One (metadata, image, rating) triple.

    ``image`` is either a decoded :class:`ImageTensor` or a local file path.
    """
    sample_id: str
    fields: MetadataFields
    image: Union[ImageTensor, str]
    target: float

    def __post_init__(self):
        low, high = RATING_RANGE
        if not low <= self.target <= high:
            raise ValueError(f"target {self.target} of sample {self.sample_id} outside [{low}, {high}]")


def is_remote(location: str) -> bool:
    return "://" in location


def load_rating_samples(path: Union[str, Path]) -> List[RatingSample]:
    """Map a prepared JSON-lines file to training samples, keeping file order."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    samples: List[RatingSample] = []
    seen = set()
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            image = record.get("resolved_image") or ""
            if not image:
                raise ValueError(f"{path}:{line_number}: record has no resolved image")
            if is_remote(image):
                raise ValueError(f"image not available locally: {image}")
            fields = MetadataFields(
                title=flatten_text(record.get("title")),
                description=flatten_text(record.get("description")),
                features=flatten_text(record.get("features")),
                main_category=flatten_text(record.get("main_category")),
            )
            sample_id = str(record["id"])
            if sample_id in seen:
                raise ValueError(f"{path}:{line_number}: duplicate sample id {sample_id}")
            seen.add(sample_id)
            samples.append(RatingSample(
                sample_id=sample_id,
                fields=fields,
                image=str(image),
                target=float(record["average_rating"]),
            ))
    logger.info(f"Loaded {len(samples)} samples from {path}")
    return samples
