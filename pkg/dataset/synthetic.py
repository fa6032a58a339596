"""Deterministic synthetic fixtures.

* :func:`brightness_samples` - in-memory samples whose rating is an affine
  function of mean image brightness plus a title keyword.
* :func:`write_metadata_jsonl` - catalogue-style JSON-lines metadata for
  exercising the data pipeline.
* :func:`write_image_dataset` - the same catalogue with real PPM images on
  disk, usable end to end by the CLI.
"""

import json
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from model.seeded_rng import SplitMix64
from preprocessing.image_io import save_image
from preprocessing.image_processor import ImageTensor
from preprocessing.text_processor import MetadataFields
from .samples import RatingSample

KEYWORD = "premium"
DESCRIPTION = "Sturdy everyday item."
FEATURES = "Lightweight. Easy to clean."
CATEGORIES = ("All Beauty", "Books", "Electronics", "Home and Kitchen", "Toys and Games")


def brightness_rating(brightness: float, flagged: bool) -> float:
    """Target rating for a brightness and keyword flag."""
    return float(np.clip(1.0 + 3.5 * brightness + 0.5 * float(flagged), 1.0, 5.0))


def brightness_image(rng: SplitMix64, brightness: float, noise: float = 0.02) -> ImageTensor:
    """Randomly sized image of near-constant brightness."""
    height = 8 + int(rng.random(1)[0] * 41)
    width = 8 + int(rng.random(1)[0] * 41)
    pixels = brightness + rng.uniform(-noise, noise, (height, width, 3))
    return ImageTensor(np.clip(pixels, 0.0, 1.0))


def brightness_samples(n: int, seed: int = 0, category: str = "Synthetic") -> List[RatingSample]:
    """``n`` samples with rating = clip(1 + 3.5·brightness + 0.5·keyword, 1, 5)."""
    rng = SplitMix64(seed)
    samples = []
    for index in range(n):
        brightness = 0.1 + 0.8 * float(rng.random(1)[0])
        flagged = bool(rng.random(1)[0] < 0.5)
        title = f"Product {KEYWORD}" if flagged else "Product"
        samples.append(RatingSample(
            sample_id=f"S{index:05d}",
            fields=MetadataFields(title=title, description=DESCRIPTION, features=FEATURES,
                                  main_category=category),
            image=brightness_image(rng, brightness),
            target=brightness_rating(brightness, flagged),
        ))
    return samples


def _record(rng: SplitMix64, index: int, categories: Sequence[str], image_url: str) -> dict:
    category = categories[index % len(categories)]
    rating_number = int(rng.random(1)[0] * 500)
    roll = rng.random(1)[0]
    if roll < 0.1:
        images = [{"variant": "PT01", "hi_res": image_url, "large": image_url}]
    elif roll < 0.3:
        images = [{"variant": "MAIN", "hi_res": None, "large": image_url}]
    else:
        images = [{"variant": "MAIN", "hi_res": image_url, "large": image_url}]
    return {
        "parent_asin": f"B{index:07d}",
        "main_category": category,
        "title": f"Item {index} from {category}",
        "description": [f"Description of item {index}.", "Second paragraph."],
        "features": ["Feature one", "Feature two"],
        "average_rating": round(1.0 + 4.0 * float(rng.random(1)[0]), 1),
        "rating_number": rating_number,
        "images": images,
        "store": "Synthetic Store",
    }


def write_metadata_jsonl(path: Union[str, Path], n_records: int, seed: int = 0,
                         categories: Sequence[str] = CATEGORIES) -> Path:
    """Catalogue metadata with remote image URLs and mixed image variants."""
    rng = SplitMix64(seed)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for index in range(n_records):
            url = f"https://images.example.com/{index}.jpg"
            handle.write(json.dumps(_record(rng, index, categories, url)) + "\n")
    return path


def write_image_dataset(out_dir: Union[str, Path], n_records: int, seed: int = 0,
                        categories: Sequence[str] = CATEGORIES[:2]) -> Path:
    """Metadata plus relative-path PPM images; ratings follow image brightness.

    Every record passes the pipeline filters. Returns the JSON-lines path.
    """
    rng = SplitMix64(seed)
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    path = out_dir / "items.jsonl"
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for index in range(n_records):
            brightness = 0.1 + 0.8 * float(rng.random(1)[0])
            flagged = bool(rng.random(1)[0] < 0.5)
            relative = f"images/{index:05d}.ppm"
            save_image(brightness_image(rng, brightness), out_dir / relative)
            record = {
                "parent_asin": f"B{index:07d}",
                "main_category": categories[index % len(categories)],
                "title": f"Product {KEYWORD}" if flagged else "Product",
                "description": [DESCRIPTION],
                "features": [FEATURES],
                "average_rating": brightness_rating(brightness, flagged),
                "rating_number": 10 + index,
                "images": [{"variant": "MAIN", "hi_res": relative, "large": None}],
            }
            handle.write(json.dumps(record) + "\n")
    return path
