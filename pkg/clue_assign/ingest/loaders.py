"""Load ground truth and prediction documents into scenes, and write them back.

Boxes are read as ``[x, y, w, h]`` and converted to corners. Records with a zero
or negative width or height are not fatal: they are skipped and listed in the
``LoadReport`` of the load, so every input record is either accepted or
accounted for as rejected.

Example:
    >>> gt = load_ground_truth("gt.json")  # doctest: +SKIP
    >>> preds = load_predictions("pred.json", gt.num_classes)  # doctest: +SKIP
    >>> scenes = build_scenes(gt, preds)  # doctest: +SKIP
"""

import json
import logging
import math
import os
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..assign.scene import Scene
from ..error.exceptions import (
    InvalidBoxError,
    MalformedDocumentError,
    ProbabilityRangeError,
    ReportWriteError,
    ScoreLengthError,
    SingleScoreResultsError,
    UnknownCategoryError,
    UnknownImageError,
)
from ..geometry import BBox
from .schemas import GroundTruthSchema, PredictionRecordSchema, load_with

logger = logging.getLogger(__name__)

PathLike = str | os.PathLike[str]


@dataclass(frozen=True)
class Rejection:
    """A skipped record: its position in the input, its id if any, and why."""

    index: int
    record_id: int | None
    reason: str


@dataclass(frozen=True)
class LoadReport:
    """Record accounting of one load: ``records_in == accepted + len(rejected)``."""

    source: str
    records_in: int
    accepted: int
    rejected: tuple[Rejection, ...] = ()

    def as_rows(self) -> list[dict[str, object]]:
        return [
            {"source": self.source, "index": r.index, "record_id": r.record_id, "reason": r.reason}
            for r in self.rejected
        ]


@dataclass(frozen=True)
class ImageInfo:
    id: int
    width: int
    height: int


@dataclass(frozen=True)
class ImageAnnotations:
    boxes: tuple[BBox, ...]
    labels: tuple[int, ...]


@dataclass(frozen=True)
class ImagePredictions:
    boxes: tuple[BBox, ...]
    scores: np.ndarray


@dataclass(frozen=True, eq=False)
class GroundTruthSet(Mapping[int, ImageAnnotations]):
    """Image id to annotations, for images with at least one accepted annotation.

    Attributes:
        images: Every image listed in the document
        category_ids: Category ids in ascending order; label ``i`` is
            ``category_ids[i]``
        category_names: Names in label order
        report: Accepted and rejected annotation counts
    """

    images: Mapping[int, ImageInfo]
    category_ids: tuple[int, ...]
    category_names: tuple[str, ...]
    by_image: Mapping[int, ImageAnnotations]
    report: LoadReport

    def __getitem__(self, image_id: int) -> ImageAnnotations:
        return self.by_image[image_id]

    def __iter__(self) -> Iterator[int]:
        return iter(self.by_image)

    def __len__(self) -> int:
        return len(self.by_image)

    @property
    def num_classes(self) -> int:
        return len(self.category_ids)


@dataclass(frozen=True, eq=False)
class PredictionSet(Mapping[int, ImagePredictions]):
    """Image id to predictions, in input order within each image."""

    num_classes: int
    by_image: Mapping[int, ImagePredictions]
    report: LoadReport

    def __getitem__(self, image_id: int) -> ImagePredictions:
        return self.by_image[image_id]

    def __iter__(self) -> Iterator[int]:
        return iter(self.by_image)

    def __len__(self) -> int:
        return len(self.by_image)


@dataclass(frozen=True)
class DatasetFiles:
    """A ground truth document and the prediction document scored against it."""

    gt_path: Path
    pred_path: Path
    scores_are_probabilities: bool = False


@dataclass(frozen=True, eq=False)
class Dataset:
    scenes: list[Scene]
    category_count: int
    reports: tuple[LoadReport, ...] = field(default=())


def read_json(path: PathLike) -> Any:
    """Parse a JSON file.

    Raises:
        MalformedDocumentError: If the file is unreadable or not valid JSON; the
            message carries line and column
    """
    location = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise MalformedDocumentError(
            {"document": e.msg},
            location="file",
            message=f"{location}:{e.lineno}:{e.colno}: {e.msg}",
            line=e.lineno,
            column=e.colno,
        ) from e
    except OSError as e:
        raise MalformedDocumentError({"document": str(e)}, location="file", message=f"cannot read {location}") from e


def _xywh_box(bbox: Sequence[float]) -> BBox:
    """Corner box from a COCO ``[x, y, w, h]`` list.

    Raises:
        InvalidBoxError: If the extent is non-positive, or vanishes once added to
            a huge origin in floating point
    """
    x, y, w, h = bbox
    if not (w > 0.0 and h > 0.0):
        raise InvalidBoxError(f"non-positive width or height in bbox {list(bbox)}")
    try:
        return BBox.from_xywh(x, y, w, h)
    except InvalidBoxError as e:
        raise InvalidBoxError(f"bbox {list(bbox)} collapses in floating point: {e.message}") from e


def load_ground_truth(path: PathLike) -> GroundTruthSet:
    """Load a COCO-style ground truth document.

    Raises:
        MalformedDocumentError: If the document does not parse or match the schema
        UnknownCategoryError: If an annotation names a category not listed
        UnknownImageError: If an annotation names an image not listed
    """
    source = os.fspath(path)
    doc = load_with(GroundTruthSchema(), read_json(path), source)

    images = {img["id"]: ImageInfo(img["id"], img["width"], img["height"]) for img in doc["images"]}
    categories = sorted(doc["categories"], key=lambda c: c["id"])
    label_of = {c["id"]: i for i, c in enumerate(categories)}

    boxes: dict[int, list[BBox]] = {}
    labels: dict[int, list[int]] = {}
    rejected: list[Rejection] = []
    for i, ann in enumerate(doc["annotations"]):
        if ann["category_id"] not in label_of:
            raise UnknownCategoryError(
                {f"annotations.{i}.category_id": f"unknown category {ann['category_id']}"},
                location="file",
                message=f"{source}: annotation {i} references unknown category {ann['category_id']}",
            )
        if ann["image_id"] not in images:
            raise UnknownImageError(
                {f"annotations.{i}.image_id": f"unknown image {ann['image_id']}"},
                location="file",
                message=f"{source}: annotation {i} references unknown image {ann['image_id']}",
            )
        try:
            box = _xywh_box(ann["bbox"])
        except InvalidBoxError as e:
            rejected.append(Rejection(i, ann["id"], e.message))
            continue
        boxes.setdefault(ann["image_id"], []).append(box)
        labels.setdefault(ann["image_id"], []).append(label_of[ann["category_id"]])

    report = LoadReport(source, len(doc["annotations"]), len(doc["annotations"]) - len(rejected), tuple(rejected))
    if rejected:
        logger.warning("%s: rejected %d of %d annotations", source, len(rejected), report.records_in)
    by_image = {img: ImageAnnotations(tuple(boxes[img]), tuple(labels[img])) for img in sorted(boxes)}
    return GroundTruthSet(
        images=images,
        category_ids=tuple(c["id"] for c in categories),
        category_names=tuple(c["name"] for c in categories),
        by_image=by_image,
        report=report,
    )


def load_predictions(path: PathLike, num_classes: int, scores_are_probabilities: bool = False) -> PredictionSet:
    """Load a JSON array of prediction records with per-class score vectors.

    Raises:
        MalformedDocumentError: If the document does not parse or match the schema
        SingleScoreResultsError: If records carry a single ``score`` instead of
            ``scores``
        ScoreLengthError: If a score vector is not ``num_classes`` long; names the
            record index
        ProbabilityRangeError: If flagged probabilities fall outside ``[0, 1]``
    """
    source = os.fspath(path)
    raw = read_json(path)
    if not isinstance(raw, list):
        raise MalformedDocumentError(
            {"document": "expected a JSON array of prediction records"},
            location="file",
            message=f"{source}: expected a JSON array of prediction records",
        )
    for i, record in enumerate(raw):
        if isinstance(record, dict) and "score" in record and "scores" not in record:
            raise SingleScoreResultsError(
                {f"{i}.scores": "missing"}, location="file", message=f"{source} (record {i})"
            )
    records = load_with(PredictionRecordSchema(), raw, source, many=True)

    boxes: dict[int, list[BBox]] = {}
    scores: dict[int, list[list[float]]] = {}
    rejected: list[Rejection] = []
    for i, rec in enumerate(records):
        if len(rec["scores"]) != num_classes:
            raise ScoreLengthError(
                {f"{i}.scores": f"length {len(rec['scores'])}, expected {num_classes}"},
                location="file",
                message=f"{source}: record {i} has {len(rec['scores'])} scores, expected {num_classes}",
                record=i,
            )
        if scores_are_probabilities and not all(0.0 <= s <= 1.0 for s in rec["scores"]):
            raise ProbabilityRangeError(
                f"{source}: record {i} has scores outside [0, 1] but scores are flagged as probabilities", record=i
            )
        try:
            box = _xywh_box(rec["bbox"])
        except InvalidBoxError as e:
            rejected.append(Rejection(i, None, e.message))
            continue
        boxes.setdefault(rec["image_id"], []).append(box)
        scores.setdefault(rec["image_id"], []).append(rec["scores"])

    report = LoadReport(source, len(records), len(records) - len(rejected), tuple(rejected))
    if rejected:
        logger.warning("%s: rejected %d of %d predictions", source, len(rejected), report.records_in)
    by_image = {
        img: ImagePredictions(tuple(boxes[img]), np.asarray(scores[img], dtype=np.float64).reshape(-1, num_classes))
        for img in sorted(boxes)
    }
    return PredictionSet(num_classes, by_image, report)


def build_scenes(gt: GroundTruthSet, preds: PredictionSet) -> list[Scene]:
    """Join ground truth and predictions into one scene per listed image, by ascending id.

    Raises:
        UnknownImageError: If predictions reference an image the ground truth does
            not list
    """
    unknown = sorted(set(preds) - set(gt.images))
    if unknown:
        raise UnknownImageError(
            {"image_id": f"unknown images {unknown[:10]}"},
            location="file",
            message=f"predictions reference {len(unknown)} image(s) missing from the ground truth: {unknown[:10]}",
        )
    scenes = []
    for image_id in sorted(gt.images):
        anns = gt.by_image.get(image_id, ImageAnnotations((), ()))
        image_preds = preds.by_image.get(image_id)
        pred_boxes = image_preds.boxes if image_preds else ()
        pred_scores = image_preds.scores if image_preds else np.zeros((0, gt.num_classes))
        scenes.append(
            Scene(
                gt_boxes=anns.boxes,
                gt_labels=anns.labels,
                pred_boxes=pred_boxes,
                pred_scores=pred_scores,
                image_id=image_id,
                num_classes=gt.num_classes,
            )
        )
    return scenes


def load_dataset(files: DatasetFiles) -> Dataset:
    """Load both documents of ``files`` and join them into scenes."""
    gt = load_ground_truth(files.gt_path)
    preds = load_predictions(files.pred_path, gt.num_classes, files.scores_are_probabilities)
    scenes = build_scenes(gt, preds)
    logger.info("Loaded %d scenes with %d categories", len(scenes), gt.num_classes)
    return Dataset(scenes, gt.num_classes, (gt.report, preds.report))


def _scene_image_id(scene: Scene, position: int) -> int:
    return int(scene.image_id) if isinstance(scene.image_id, int) else position


def _write_json(payload: Any, path: PathLike) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
    except OSError as e:
        raise ReportWriteError(f"cannot write {os.fspath(path)}: {e}", path=os.fspath(path)) from e


def write_ground_truth(
    scenes: Sequence[Scene],
    path: PathLike,
    image_size: tuple[int, int] | None = None,
    category_names: Sequence[str] | None = None,
) -> None:
    """Export scenes' ground truth as a COCO-style document.

    Category ``i`` is written with id ``i + 1``. Images take ``image_size`` or,
    when omitted, the smallest integer extent covering their boxes.

    Raises:
        ReportWriteError: If the file cannot be written
    """
    num_classes = max((s.num_classes or 0 for s in scenes), default=0)
    names = list(category_names) if category_names else [f"category_{i}" for i in range(num_classes)]
    images, annotations = [], []
    ann_id = 1
    for position, scene in enumerate(scenes):
        image_id = _scene_image_id(scene, position)
        if image_size is not None:
            width, height = image_size
        else:
            extent = np.vstack((scene.gt_array, scene.pred_array, np.ones((1, 4))))
            width, height = int(math.ceil(extent[:, 2].max())), int(math.ceil(extent[:, 3].max()))
        images.append({"id": image_id, "width": width, "height": height})
        for box, label in zip(scene.gt_boxes, scene.gt_labels, strict=True):
            annotations.append(
                {"id": ann_id, "image_id": image_id, "category_id": label + 1, "bbox": list(box.to_xywh())}
            )
            ann_id += 1
    categories = [{"id": i + 1, "name": name} for i, name in enumerate(names)]
    _write_json({"images": images, "annotations": annotations, "categories": categories}, path)


def write_predictions(scenes: Sequence[Scene], path: PathLike) -> None:
    """Export scenes' predictions as a JSON array of records.

    Raises:
        ReportWriteError: If the file cannot be written
    """
    records = []
    for position, scene in enumerate(scenes):
        image_id = _scene_image_id(scene, position)
        for box, row in zip(scene.pred_boxes, scene.pred_scores.tolist(), strict=True):
            records.append({"image_id": image_id, "bbox": list(box.to_xywh()), "scores": row})
    _write_json(records, path)
