"""Marshmallow schemas of the documents read and written by clue-assign.

Ground truth follows the COCO layout (``images``, ``annotations``, ``categories``);
keys outside the documented set (``iscrowd``, ``segmentation``, ``info`` ...) are
ignored. Predictions are a JSON array of records carrying a per-class ``scores``
vector. Field-by-field descriptions live in ``docs/formats.rst``.
"""

from typing import Any

import marshmallow as ma

from ..error.exceptions import MalformedDocumentError


class _IgnoreUnknown(ma.Schema):
    class Meta:
        unknown = ma.EXCLUDE


class ImageSchema(_IgnoreUnknown):
    id = ma.fields.Integer(required=True, strict=True)
    width = ma.fields.Integer(required=True, strict=True, validate=ma.validate.Range(min=1))
    height = ma.fields.Integer(required=True, strict=True, validate=ma.validate.Range(min=1))
    file_name = ma.fields.String(load_default=None)


class CategorySchema(_IgnoreUnknown):
    id = ma.fields.Integer(required=True, strict=True)
    name = ma.fields.String(required=True)


def _bbox_field(**kwargs: Any) -> ma.fields.List:
    return ma.fields.List(ma.fields.Float(allow_nan=False), validate=ma.validate.Length(equal=4), **kwargs)


class AnnotationSchema(_IgnoreUnknown):
    id = ma.fields.Integer(load_default=None, strict=True)
    image_id = ma.fields.Integer(required=True, strict=True)
    category_id = ma.fields.Integer(required=True, strict=True)
    bbox = _bbox_field(required=True)


class GroundTruthSchema(_IgnoreUnknown):
    """Top-level ground truth document."""

    images = ma.fields.List(ma.fields.Nested(ImageSchema), required=True)
    annotations = ma.fields.List(ma.fields.Nested(AnnotationSchema), required=True)
    categories = ma.fields.List(ma.fields.Nested(CategorySchema), required=True)

    @ma.validates_schema
    def validate_unique_ids(self, data: dict[str, Any], **kwargs: Any) -> None:
        for key in ("images", "categories"):
            ids = [item["id"] for item in data.get(key, [])]
            if len(ids) != len(set(ids)):
                raise ma.ValidationError("ids must be unique", field_name=key)


class PredictionRecordSchema(_IgnoreUnknown):
    """One prediction: image, ``[x, y, w, h]`` box and per-class scores."""

    image_id = ma.fields.Integer(required=True, strict=True)
    bbox = _bbox_field(required=True)
    scores = ma.fields.List(ma.fields.Float(allow_nan=False), required=True)


class AssignRequestSchema(ma.Schema):
    """Body of ``POST /assignments/``: one scene plus assigner options."""

    class Meta:
        unknown = ma.RAISE

    gt_boxes = ma.fields.List(_bbox_field(), required=True, metadata={"description": "[x1, y1, x2, y2] corners"})
    gt_labels = ma.fields.List(ma.fields.Integer(validate=ma.validate.Range(min=0)), required=True)
    pred_boxes = ma.fields.List(_bbox_field(), required=True, metadata={"description": "[x1, y1, x2, y2] corners"})
    pred_scores = ma.fields.List(ma.fields.List(ma.fields.Float(allow_nan=False)), required=True)
    num_classes = ma.fields.Integer(load_default=None, validate=ma.validate.Range(min=1))
    assigner = ma.fields.String(load_default="mcss")
    config = ma.fields.Dict(keys=ma.fields.String(), load_default=dict)


class VerdictSchema(ma.Schema):
    index = ma.fields.Integer()
    verdict = ma.fields.String()
    gt_index = ma.fields.Integer(allow_none=True)
    confidence = ma.fields.Float(allow_none=True)


class AssignResponseSchema(ma.Schema):
    assigner = ma.fields.String()
    predictions = ma.fields.List(ma.fields.Nested(VerdictSchema))
    per_gt_positives = ma.fields.List(ma.fields.List(ma.fields.Integer()))
    thresholds = ma.fields.List(ma.fields.Float())


class AssignerListSchema(ma.Schema):
    assigners = ma.fields.List(ma.fields.String())


def flatten_messages(messages: Any, prefix: str = "") -> dict[str, str]:
    """Flatten marshmallow's nested error messages to dotted field paths.

    Example:
        >>> flatten_messages({"annotations": {3: {"bbox": ["Length must be 4."]}}})
        {'annotations.3.bbox': 'Length must be 4.'}
    """
    if isinstance(messages, dict):
        flat: dict[str, str] = {}
        for key, value in messages.items():
            path = f"{prefix}.{key}" if prefix else str(key)
            flat.update(flatten_messages(value, path))
        return flat
    if isinstance(messages, list) and all(isinstance(m, str) for m in messages):
        return {prefix or "_schema": " ".join(messages)}
    return {prefix or "_schema": str(messages)}


def load_with(schema: ma.Schema, data: Any, source: str, many: bool | None = None) -> Any:
    """Run ``schema.load`` and convert validation failures to ``MalformedDocumentError``.

    Raises:
        MalformedDocumentError: Naming every offending field path
    """
    try:
        return schema.load(data, many=many)
    except ma.ValidationError as e:
        fields = flatten_messages(e.messages)
        first = next(iter(fields.items()))
        raise MalformedDocumentError(
            fields, location="file", message=f"{source}: {first[0]}: {first[1]}", source=source
        ) from e
