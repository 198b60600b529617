"""Master-worker benchmark workloads over the tuple-space middleware."""

from .config import BenchConfig, CaseResult
from .runner import run_benchmark

__all__ = ["BenchConfig", "CaseResult", "run_benchmark"]
