"""Catalogue ingestion, sampling and splitting; prepared-sample loading."""

from .records import ImageVariant, ItemRecord, parse_record
from .samples import RatingSample, load_rating_samples
from .pipeline import (
    SamplingConfig,
    RejectsReport,
    PrepareSummary,
    ingest_jsonl,
    filter_items,
    stratified_sample,
    split_holdout,
    prepare_dataset,
)

__all__ = [
    "ImageVariant",
    "ItemRecord",
    "parse_record",
    "RatingSample",
    "load_rating_samples",
    "SamplingConfig",
    "RejectsReport",
    "PrepareSummary",
    "ingest_jsonl",
    "filter_items",
    "stratified_sample",
    "split_holdout",
    "prepare_dataset",
]
