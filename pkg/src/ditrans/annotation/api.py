"""HTTP face of the annotation service.

Thin request/response mapping only; every rule lives in the service, and
WorkflowError carries the status code the response should use.
"""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .service import AnnotationService, TaskView, WorkflowError, load_guidelines


class RegisterRequest(BaseModel):
    name: str
    role: str = "annotator"


class RegisterResponse(BaseModel):
    annotator_id: str


class LabelRequest(BaseModel):
    annotator: str
    label: int = Field(ge=0, le=1)
    case_tag: Optional[str] = None


class AdjudicateRequest(BaseModel):
    annotator: str
    label: int = Field(ge=0, le=1)


class ReleaseRequest(BaseModel):
    annotator: str


class ExportRequest(BaseModel):
    path: str
    force: bool = False


class TaskBody(BaseModel):
    task_id: str
    text: str
    span_start: int
    span_end: int
    pilot: bool
    state: str
    labels: list[dict]
    gold_label: Optional[int]


class TaskListResponse(BaseModel):
    tasks: list[TaskBody]
    total: int
    offset: int
    limit: int


class AgreementResponse(BaseModel):
    n: int
    p_o: Optional[float]
    kappa: Optional[float]


class ExportResponse(BaseModel):
    written: int
    skipped: int
    warning: Optional[str]


class GuidelinesResponse(BaseModel):
    text: str


def _task_body(view: TaskView) -> TaskBody:
    payload = asdict(view)
    payload["labels"] = list(payload["labels"])
    return TaskBody(**payload)


def create_app(service: AnnotationService, ui_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="annotation service")

    @app.exception_handler(WorkflowError)
    async def workflow_error(request, exc: WorkflowError):
        return JSONResponse(status_code=exc.status, content={"detail": str(exc)})

    @app.post("/annotators", response_model=RegisterResponse)
    def register(body: RegisterRequest):
        return RegisterResponse(annotator_id=service.register_annotator(body.name,
                                                                        body.role))

    @app.get("/tasks/next", response_model=TaskBody, responses={204: {"model": None}})
    def tasks_next(annotator: str = Query(...)):
        view = service.next_task(annotator)
        if view is None:
            return Response(status_code=204)
        return _task_body(view)

    @app.post("/tasks/{task_id}/label", response_model=TaskBody)
    def label(task_id: str, body: LabelRequest):
        return _task_body(service.submit_label(body.annotator, task_id,
                                               body.label, body.case_tag))

    @app.post("/tasks/{task_id}/release")
    def release(task_id: str, body: ReleaseRequest):
        service.release(body.annotator, task_id)
        return {"released": task_id}

    @app.post("/tasks/{task_id}/adjudicate", response_model=TaskBody)
    def adjudicate(task_id: str, body: AdjudicateRequest):
        return _task_body(service.adjudicate(body.annotator, task_id, body.label))

    @app.get("/stats/agreement", response_model=AgreementResponse)
    def agreement():
        stats = service.agreement()
        return AgreementResponse(n=stats.n, p_o=stats.p_o, kappa=stats.kappa)

    @app.get("/tasks", response_model=TaskListResponse)
    def list_tasks(state: Optional[str] = None, offset: int = 0, limit: int = 50):
        views, total = service.list_tasks(state, offset, limit)
        return TaskListResponse(tasks=[_task_body(v) for v in views], total=total,
                                offset=offset, limit=limit)

    @app.post("/export", response_model=ExportResponse)
    def export(body: ExportRequest):
        summary = service.export_gold(Path(body.path), force=body.force)
        return ExportResponse(written=summary.written, skipped=summary.skipped,
                              warning=summary.warning)

    @app.get("/guidelines", response_model=GuidelinesResponse)
    def guidelines():
        return GuidelinesResponse(text=load_guidelines())

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
