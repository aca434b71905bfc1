from pydantic import BaseModel

from ..utils.enums import RequestStatus


class RunSummary(BaseModel):
    output_dir: str
    rounds: int
    final_sigma: float | None = None
    final_test_loss: float | None = None
    final_test_acc: float | None = None


class RunResponse(BaseModel):
    status: RequestStatus
    message: str | None = None
    summary: RunSummary | None = None
