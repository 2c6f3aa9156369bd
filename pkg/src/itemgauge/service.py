"""HTTP JSON API over a single loaded model.

Endpoints: GET /api/model (the exact serialized model document), POST
/api/predict (probability triple plus level for one coding), POST /api/whatif
(sweep one variable over requested values, all others held at a base coding).
Responses are pure functions of (model, request body); probabilities are
emitted at full precision, rounding is left to clients.

Request validation is deliberately by hand: a missing or malformed field is a
400 naming the field, a well-formed value outside its variable's domain is a
422. CORS is open so the bundled UI can be served from anywhere.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .items import variable_spec, VARIABLE_NAMES
from .polr import FittedModel, classify_probs, predict_from_codes, serialize_model


def _domain_text(name: str) -> str:
    spec = variable_spec(name)
    if spec.kind == "ordinal":
        return "{" + ",".join(str(v) for v in spec.domain) + "}"
    return "{0,1,2,...}"


def _check_code(name: str, value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise HTTPException(400, f"{name} must be an integer code")
    spec = variable_spec(name)
    if spec.kind == "ordinal":
        if value not in spec.domain:
            raise HTTPException(422, f"{name} out of domain {_domain_text(name)}")
    elif value < 0:
        raise HTTPException(422, f"{name} out of domain {_domain_text(name)}")
    return value


def _parse_coding(body: object, model: FittedModel, field: str | None = None) -> dict[str, int]:
    """Validate a name -> code mapping covering every model variable."""
    prefix = f"{field}." if field else ""
    if not isinstance(body, dict):
        raise HTTPException(400, f"{field or 'request body'} must be a JSON object")
    for key in body:
        if key not in VARIABLE_NAMES:
            raise HTTPException(400, f"unknown field {prefix}{key}")
    codes: dict[str, int] = {}
    for name in model.variables:
        if name not in body:
            raise HTTPException(400, f"missing required field {prefix}{name}")
    for name, value in body.items():
        codes[name] = _check_code(name, value)
    return codes


async def _json_body(request: Request) -> object:
    try:
        return json.loads(await request.body())
    except json.JSONDecodeError:
        raise HTTPException(400, "request body is not valid JSON") from None


def _prediction_payload(model: FittedModel, codes: dict[str, int]) -> dict:
    probs = predict_from_codes(model, codes)
    return {
        "p_low": probs.p_low,
        "p_moderate": probs.p_moderate,
        "p_high": probs.p_high,
        "level": classify_probs(probs).label,
    }


def create_app(model: FittedModel, ui_dir: str | None = None) -> FastAPI:
    """Build the application around one immutable model."""
    app = FastAPI(title="itemgauge", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    model_document = serialize_model(model)

    @app.get("/api/model")
    def get_model() -> Response:
        return Response(content=model_document, media_type="application/json")

    @app.post("/api/predict")
    async def predict(request: Request) -> JSONResponse:
        body = await _json_body(request)
        codes = _parse_coding(body, model)
        return JSONResponse(_prediction_payload(model, codes))

    @app.post("/api/whatif")
    async def whatif(request: Request) -> JSONResponse:
        body = await _json_body(request)
        if not isinstance(body, dict):
            raise HTTPException(400, "request body must be a JSON object")
        for key in body:
            if key not in ("base", "variable", "values"):
                raise HTTPException(400, f"unknown field {key}")
        for key in ("base", "variable", "values"):
            if key not in body:
                raise HTTPException(400, f"missing required field {key}")
        base = _parse_coding(body["base"], model, field="base")
        variable = body["variable"]
        if not isinstance(variable, str) or variable not in VARIABLE_NAMES:
            raise HTTPException(400, f"variable must be one of {','.join(VARIABLE_NAMES)}")
        if variable not in model.variables:
            raise HTTPException(422, f"variable {variable} is not in the model")
        values = body["values"]
        if not isinstance(values, list):
            raise HTTPException(400, "values must be an array of integer codes")
        entries = []
        for value in values:
            swept = dict(base)
            swept[variable] = _check_code(variable, value)
            entries.append({"value": swept[variable]} | _prediction_payload(model, swept))
        return JSONResponse(entries)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
