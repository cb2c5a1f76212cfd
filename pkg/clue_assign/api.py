"""HTTP surface: list the assigners and assign one scene per request.

The Api and Blueprint classes extend flask-smorest: schemas are named cleanly
in the OpenAPI document and every route gets a generated ``operationId``.
"""

import logging
from collections.abc import Callable
from typing import TYPE_CHECKING, Any, Final

from apispec.ext.marshmallow import MarshmallowPlugin
from apispec.ext.marshmallow import resolver as default_resolver
from flask import current_app
from flask.views import MethodView
from flask_smorest import Api as ApiOrig
from flask_smorest import Blueprint as BlueprintOrig
from marshmallow import Schema

from .assign.registry import available_assigners, get_assigner
from .assign.scene import Scene
from .config import CONFIG_KEY, HarnessConfig, config_from_mapping
from .ingest.schemas import AssignerListSchema, AssignRequestSchema, AssignResponseSchema
from .utils import convert_snake_to_camel

if TYPE_CHECKING:
    from flask import Flask

logger = logging.getLogger(__name__)

HTTP_METHOD_OPERATION_MAP: Final[dict[str, str]] = {
    "get": "get",
    "post": "create",
    "put": "replace",
    "patch": "update",
    "delete": "delete",
}

__all__ = ["Api", "Blueprint", "HTTP_METHOD_OPERATION_MAP", "blp", "schema_name_resolver"]


def schema_name_resolver(schema: type[Schema], **kwargs: Any) -> str:
    """Name component schemas after their class; partial or filtered variants stay inline."""
    if getattr(schema, "partial", False) or getattr(schema, "only", False) or getattr(schema, "exclude", False):
        return ""
    return str(default_resolver(schema))


class Api(ApiOrig):
    """flask-smorest Api using :func:`schema_name_resolver`.

    Example:
        >>> from flask import Flask
        >>> app = Flask(__name__)
        >>> app.config.update(API_TITLE="clue-assign", API_VERSION="v1", OPENAPI_VERSION="3.0.2")
        >>> api = Api(app)
    """

    def __init__(self, app: "Flask | None" = None, *, spec_kwargs: dict | None = None) -> None:
        spec_kwargs = dict(spec_kwargs or {})
        spec_kwargs["marshmallow_plugin"] = MarshmallowPlugin(schema_name_resolver=schema_name_resolver)
        super().__init__(app, spec_kwargs=spec_kwargs)


class Blueprint(BlueprintOrig):
    """Blueprint deriving ``operationId`` from the MethodView class and HTTP method.

    ``GET`` on a collection rule (trailing ``/``, plural class name) becomes
    ``list<Class>``; other methods map through :data:`HTTP_METHOD_OPERATION_MAP`,
    so ``post`` on ``Assignments`` is ``createAssignments``.
    """

    def route(self, rule: str, *pargs: Any, **kwargs: Any) -> Callable[[Any], Any]:
        wrapped = super().route(rule, *pargs, **kwargs)

        def _operation_id(func: Callable, view: type[MethodView] | None) -> Callable:
            apidoc: dict[str, dict[str, str]] = getattr(func, "_apidoc", {})
            if "operationId" in apidoc.get("manual_doc", {}):
                return func
            method = func.__name__.lower()
            if view is None:
                operation_id = func.__name__
            elif method == "get" and view.__name__.endswith("s") and rule.endswith("/"):
                operation_id = f"list{view.__name__}"
            else:
                operation_id = f"{HTTP_METHOD_OPERATION_MAP.get(method, method)}{view.__name__}"
            operation_id = convert_snake_to_camel(operation_id)
            operation_id = operation_id[0].lower() + operation_id[1:]
            return self.doc(operationId=operation_id)(func)

        def _route(target: Any) -> Any:
            if isinstance(target, type) and issubclass(target, MethodView):
                for method in target.methods or []:
                    fn = getattr(target, method.lower(), None)
                    if fn is not None:
                        setattr(target, method.lower(), _operation_id(fn, target))
            else:
                target = _operation_id(target, None)
            return wrapped(target)

        return _route


blp = Blueprint("assignment", __name__, description="Label assignment for single scenes")


def _harness_config() -> HarnessConfig:
    cfg = current_app.config.get(CONFIG_KEY)
    return cfg if isinstance(cfg, HarnessConfig) else HarnessConfig()


@blp.route("/assigners/")
class Assigners(MethodView):
    @blp.response(200, AssignerListSchema)
    def get(self) -> dict[str, list[str]]:
        """List the registered assigner names."""
        return {"assigners": available_assigners()}


@blp.route("/assignments/")
class Assignments(MethodView):
    @blp.arguments(AssignRequestSchema)
    @blp.response(200, AssignResponseSchema)
    def post(self, payload: dict[str, Any]) -> dict[str, Any]:
        """Assign the predictions of one scene to its ground truths.

        ``config`` overrides keys of the server's ``[assign]`` section for this
        request only. An unknown assigner answers 400, an invalid scene or
        config 422.
        """
        name = payload["assigner"]
        assigner = get_assigner(name)
        cfg = _harness_config().assign
        if payload["config"]:
            base = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
            base["beta_mode"] = str(base["beta_mode"])
            cfg = config_from_mapping({"assign": {**base, **payload["config"]}}, "request config").assign
        scene = Scene.from_arrays(
            payload["gt_boxes"],
            payload["gt_labels"],
            payload["pred_boxes"],
            payload["pred_scores"],
            num_classes=payload["num_classes"],
        )
        result = assigner(scene, cfg)
        logger.info(
            "%s assigned %d predictions to %d ground truths (%d positives)",
            name,
            scene.num_preds,
            scene.num_gts,
            int(result.positive_indices().size),
        )
        return {
            "assigner": name,
            "predictions": result.to_records(),
            "per_gt_positives": [list(p) for p in result.per_gt_positives],
            "thresholds": [float(t) for t in result.thresholds],
        }
