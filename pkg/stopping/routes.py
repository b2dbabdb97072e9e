"""URL routes for thresholds, moment bounds and figure data."""
from typing import Callable, Optional

from werkzeug import Response
from flask import Blueprint, current_app, make_response, request

from stopping import controller
from stopping.consts import DEFAULT_OFFERS, Method, OutputFormat
from stopping.domain import AmbiguitySpec
from stopping.errors import InvalidParameter, StoppingError
from stopping.serializers.serializer import Result, serialize


blueprint = Blueprint("stopping", __name__, url_prefix="/")

HTTP_STATUS = {0: 200, 1: 400, 2: 500}


@blueprint.route("/status")
def status() -> Response:
    text = f"Status: GOOD Version: {current_app.config['VERSION']}"
    return make_response(text, 200)


def _float_arg(name: str) -> Optional[float]:
    raw = request.args.get(name)
    if raw is None or raw == "":
        return None
    try:
        return float(raw)
    except ValueError as ex:
        raise InvalidParameter(f"Query parameter '{name}' is not a number: '{raw}'.") from ex


def _required_float(name: str) -> float:
    value = _float_arg(name)
    if value is None:
        raise InvalidParameter(f"Query parameter '{name}' is required.")
    return value


def _int_arg(name: str, default: int) -> int:
    raw = request.args.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as ex:
        raise InvalidParameter(f"Query parameter '{name}' is not an integer: '{raw}'.") from ex


def _spec() -> AmbiguitySpec:
    return controller.build_spec(
        request.args.get("kind"),
        _required_float("mu"),
        _float_arg("sigma2"),
        _float_arg("mad"),
        _float_arg("L"),
    )


def _respond(compute: Callable[[], Result], default_format: OutputFormat) -> Response:
    """Serialize the computed result, or the error it raised, into a response.

    Parameters
    ----------
    compute : Callable[[], Result]
        Computation to run.
    default_format : OutputFormat
        Format used when the request has no ``out`` parameter.

    Returns
    -------
    response: Response
        Flask response object with ETag and Content-Type headers.
    """
    fmt = request.args.get("out", default=default_format.value, type=str)
    result: Result
    try:
        result = compute()
    except StoppingError as ex:
        result = ex
    output = serialize(result, fmt)

    response: Response = make_response(output.content, HTTP_STATUS[output.status_code])
    response.headers["ETag"] = output.etag
    response.headers["Content-Type"] = output.content_type
    return response


@blueprint.route("/thresholds", methods=["GET"])
def thresholds() -> Response:
    """Return the robust schedule for the ambiguity set in the query."""
    return _respond(
        lambda: controller.get_thresholds(
            _spec(),
            _int_arg("n", DEFAULT_OFFERS),
            Method.get(request.args.get("method", default=Method.CLOSED_FORM.value)),
        ),
        OutputFormat.JSON,
    )


@blueprint.route("/momentbound", methods=["GET"])
def momentbound() -> Response:
    """Return the tight bound on ``E[min(xi, X)]`` with its certificate."""
    return _respond(
        lambda: controller.get_momentbound(_spec(), _required_float("xi")),
        OutputFormat.JSON,
    )


@blueprint.route("/figure/<int:number>", methods=["GET"])
def figure(number: int) -> Response:
    """Return the data series of figure 1 or 5."""
    return _respond(
        lambda: controller.get_figure(
            number,
            _required_float("mu"),
            _required_float("sigma2"),
            _required_float("L"),
            _int_arg("n", DEFAULT_OFFERS),
        ),
        OutputFormat.CSV,
    )
