"""HTTP API over one Engine; also serves the web UI when configured.

All endpoints speak JSON; errors come back as {"error": string} with
400/404/409 semantics. The server is single-user and binds loopback by
default, so there is no authentication layer.
"""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import ConflictError, MailgraphError, UnknownIdError
from .service import Engine

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>mailgraph</title></head>
<body><h1>mailgraph</h1>
<p>The API is up. No web UI bundle is configured (set "web_dir" in the
config to a built frontend to serve it here).</p>
<p>Try <a href="/api/categories">/api/categories</a>.</p>
</body></html>
"""


class CategoryCreate(BaseModel):
    name: str
    parent: str | None = None


class CorrectionRequest(BaseModel):
    message_id: str
    from_category: str | None = None
    to_category: str


class SpamRequest(BaseModel):
    is_spam: bool


class SyncRequest(BaseModel):
    accounts: list[str] | None = None


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="mailgraph", docs_url=None, redoc_url=None)

    @app.exception_handler(MailgraphError)
    async def _mailgraph_error(request: Request, exc: MailgraphError):
        if isinstance(exc, UnknownIdError):
            status = 404
        elif isinstance(exc, ConflictError):
            status = 409
        else:
            status = 400
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/api/categories")
    def get_categories():
        return engine.category_tree()

    @app.post("/api/categories", status_code=201)
    def post_category(body: CategoryCreate):
        return engine.create_user_category(body.name, body.parent)

    @app.get("/api/categories/{category_id}/messages")
    def get_category_messages(category_id: str):
        return engine.category_messages(category_id)

    @app.post("/api/categories/{category_id}/subcluster")
    def post_subcluster(category_id: str):
        return {"children": engine.subcluster_category(category_id)}

    @app.get("/api/messages/{message_id}")
    def get_message(message_id: str):
        return engine.message_detail(message_id)

    @app.post("/api/messages/{message_id}/spam")
    def post_spam(message_id: str, body: SpamRequest):
        return {"message_id": message_id, "memberships": engine.mark_spam(message_id, body.is_spam)}

    @app.post("/api/corrections")
    def post_correction(body: CorrectionRequest):
        memberships = engine.correction(body.message_id, body.from_category, body.to_category)
        return {"message_id": body.message_id, "memberships": memberships}

    @app.post("/api/sync", status_code=202)
    def post_sync(body: SyncRequest | None = None):
        job = engine.start_sync(body.accounts if body else None)
        return {"job_id": job.job_id}

    @app.get("/api/sync/{job_id}")
    def get_sync(job_id: str):
        return engine.get_job(job_id).to_dict()

    web_dir = engine.config.web_dir
    if web_dir and Path(web_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(web_dir), html=True), name="webui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return _PLACEHOLDER_PAGE

    return app


def serve(engine: Engine, host: str = "127.0.0.1", port: int | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(engine), host=host, port=port or engine.config.http_port, log_level="warning")
