"""Unit tests for the Blueprint operationId generation and the Api schema naming."""

from flask import Flask
from flask.views import MethodView
from flask_smorest import Blueprint as BlueprintOrig
from marshmallow import Schema, fields

from clue_assign.api import HTTP_METHOD_OPERATION_MAP, Assigners, Assignments, Blueprint, schema_name_resolver


def _operation_id(func: object) -> str:
    apidoc = getattr(func, "_apidoc", {})
    assert "manual_doc" in apidoc
    return str(apidoc["manual_doc"]["operationId"])


class TestBlueprintOperationId:
    """Tests for the operationId Blueprint."""

    def test_inheritance(self) -> None:
        assert issubclass(Blueprint, BlueprintOrig)

    def test_operation_name_map_contains_common_methods(self) -> None:
        assert HTTP_METHOD_OPERATION_MAP["get"] == "get"
        assert HTTP_METHOD_OPERATION_MAP["post"] == "create"
        assert HTTP_METHOD_OPERATION_MAP["patch"] == "update"

    def test_list_endpoint(self) -> None:
        """GET on a collection rule with a plural class name is a list operation."""
        app = Flask(__name__)
        with app.app_context():
            bp = Blueprint("assigners", __name__)

            @bp.route("/")
            class Assigners(MethodView):
                methods = ["GET"]

                def get(self) -> dict:
                    return {"assigners": []}

            assert _operation_id(Assigners.get) == "listAssigners"

    def test_post_endpoint(self) -> None:
        app = Flask(__name__)
        with app.app_context():
            bp = Blueprint("assignments", __name__)

            @bp.route("/")
            class Assignments(MethodView):
                methods = ["POST"]

                def post(self) -> dict:
                    return {}

            assert _operation_id(Assignments.post) == "createAssignments"

    def test_item_endpoint(self) -> None:
        app = Flask(__name__)
        with app.app_context():
            bp = Blueprint("scenes", __name__)

            @bp.route("/<int:scene_id>")
            class Scene(MethodView):
                methods = ["GET", "DELETE"]

                def get(self, scene_id: int) -> dict:
                    return {}

                def delete(self, scene_id: int) -> tuple[str, int]:
                    return "", 204

            assert _operation_id(Scene.get) == "getScene"
            assert _operation_id(Scene.delete) == "deleteScene"

    def test_manual_operation_id_not_overridden(self) -> None:
        app = Flask(__name__)
        with app.app_context():
            bp = Blueprint("scenes", __name__)

            @bp.route("/<int:scene_id>")
            class Scene(MethodView):
                methods = ["GET"]

                @bp.doc(operationId="fetchScene")
                def get(self, scene_id: int) -> dict:
                    return {}

            assert _operation_id(Scene.get) == "fetchScene"

    def test_function_route(self) -> None:
        app = Flask(__name__)
        with app.app_context():
            bp = Blueprint("misc", __name__)

            @bp.route("/health")
            def health_check() -> dict:
                return {"status": "ok"}

            assert _operation_id(health_check) == "healthCheck"


class _BoxSchema(Schema):
    x = fields.Float()


def test_schema_name_resolver() -> None:
    assert schema_name_resolver(_BoxSchema) == "_Box"
    assert schema_name_resolver(_BoxSchema(partial=True)) == ""  # type: ignore[arg-type]
    assert schema_name_resolver(_BoxSchema(only=("x",))) == ""  # type: ignore[arg-type]


def test_registered_operation_ids() -> None:
    assert _operation_id(Assigners.get) == "listAssigners"
    assert _operation_id(Assignments.post) == "createAssignments"


def test_operation_id_keeps_schema_documentation() -> None:
    app = Flask(__name__)
    with app.app_context():
        bp = Blueprint("boxes", __name__)

        @bp.route("/boxes/")
        class Boxes(MethodView):
            @bp.arguments(_BoxSchema)
            @bp.response(201, _BoxSchema)
            def post(self, payload: dict) -> dict:
                return payload

        apidoc = Boxes.post._apidoc  # type: ignore[attr-defined]
        assert apidoc["manual_doc"]["operationId"] == "createBoxes"
        assert "arguments" in apidoc
        assert "response" in apidoc


def test_registered_views_keep_schema_documentation() -> None:
    assert "response" in Assigners.get._apidoc  # type: ignore[attr-defined]
    assert {"arguments", "response"} <= set(Assignments.post._apidoc)  # type: ignore[attr-defined]
