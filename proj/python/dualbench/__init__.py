"""Native-vs-container HPC benchmark comparison toolkit.

Thin wrapper over the C++ core; everything lives in ``dualbench._core``.
"""

from ._core import (
    absolute_overhead,
    analyze_text,
    bandwidth_reduction,
    classify_overhead,
    detect_format,
    detect_outliers,
    expand_plan,
    ingest,
    parity_deviation,
    parse_app_timing,
    parse_nccl_allreduce,
    parse_osu_init,
    parse_osu_latency,
    parse_transport_log,
    relative_overhead,
    render_job_scripts,
    report_json,
    report_markdown,
    speedup,
    strong_efficiency,
    validate_plan,
    verify,
    write_job_scripts,
)

__all__ = [
    "absolute_overhead",
    "analyze_text",
    "bandwidth_reduction",
    "classify_overhead",
    "detect_format",
    "detect_outliers",
    "expand_plan",
    "ingest",
    "parity_deviation",
    "parse_app_timing",
    "parse_nccl_allreduce",
    "parse_osu_init",
    "parse_osu_latency",
    "parse_transport_log",
    "relative_overhead",
    "render_job_scripts",
    "report_json",
    "report_markdown",
    "speedup",
    "strong_efficiency",
    "validate_plan",
    "verify",
    "write_job_scripts",
]
