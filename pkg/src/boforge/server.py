"""Stateless JSON-over-HTTP render service consumed by the grid UI."""
from __future__ import annotations

from dataclasses import asdict

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ValidationError

from .generator import IncompatibleSelection, generate
from .grid import GridError, cross_out_map, list_rows, list_rules


class RenderRequest(BaseModel):
    selection: dict[str, str]


def create_app() -> FastAPI:
    app = FastAPI(title="boforge render service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/options")
    def options():
        return {
            "rows": [asdict(r) | {"default": r.default} for r in list_rows()],
            "rules": [asdict(r) | {"when": dict(r.when)} for r in list_rules()],
        }

    @app.post("/render")
    def render(req: RenderRequest):
        try:
            result = generate(req.selection)
        except IncompatibleSelection as err:
            return JSONResponse(
                status_code=422,
                content={
                    "failed_rules": [
                        {"id": r.id, "classification": r.classification, "reason": r.reason}
                        for r in err.failed_rules
                    ],
                    "cross_out_map": cross_out_map(req.selection),
                },
            )
        except GridError as err:
            return JSONResponse(status_code=400, content={"error": str(err)})
        return {"script": result.script, "digest": result.digest}

    @app.post("/crossout")
    def crossout(req: RenderRequest):
        try:
            return {"cross_out_map": cross_out_map(req.selection)}
        except GridError as err:
            return JSONResponse(status_code=400, content={"error": str(err)})

    return app
