"""Shared versioned contracts for machine-readable im-auditor outputs."""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from im_auditor import __version__ as TOOL_VERSION

CONTRACT_VERSIONS = {
    "im_auditor.audit_report": "1.0.0",
    "im_auditor.curve_summary": "1.0.0",
    "im_auditor.simulation_summary": "1.0.0",
    "im_auditor.combine_summary": "1.0.0",
    "im_auditor.im_table_summary": "1.0.0",
}


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


def build_contract(name: str) -> dict[str, str]:
    version = CONTRACT_VERSIONS[name]
    return {"name": name, "version": version}


def build_run_summary(
    *,
    tool: str,
    command: str,
    input_path: Path | None,
    status: str = "ok",
    output_path: Path | None = None,
    metrics: dict[str, Any] | None = None,
    warnings: list[str] | None = None,
) -> dict[str, Any]:
    return {
        "tool": tool,
        "command": command,
        "status": status,
        "generated_at": utc_now_iso(),
        "input_file": str(input_path) if input_path else None,
        "output_file": str(output_path) if output_path else None,
        "warnings_count": len(warnings or []),
        "warnings": list(warnings or []),
        "metrics": metrics or {},
    }


def build_payload(
    name: str,
    *,
    command: str,
    input_path: Path | None,
    body: dict[str, Any],
    text_report: str,
    status: str = "ok",
    output_path: Path | None = None,
    metrics: dict[str, Any] | None = None,
    warnings: list[str] | None = None,
) -> dict[str, Any]:
    contract = build_contract(name)
    return {
        "contract": contract,
        "schema_version": contract["version"],
        "tool_version": TOOL_VERSION,
        "run_summary": build_run_summary(
            tool="im-auditor",
            command=command,
            input_path=input_path,
            status=status,
            output_path=output_path,
            metrics=metrics,
            warnings=warnings,
        ),
        **body,
        "text_report": text_report,
    }
