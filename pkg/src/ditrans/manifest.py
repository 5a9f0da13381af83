"""Run manifests: checksums and settings that tie outputs to their inputs.

Data files keep their documented formats untouched; each pipeline output
gets a sibling ``<name>.manifest.json`` that references the run instead.
The run id hashes everything that determines the output (inputs, config,
pattern, seed), so identical runs share an id while timestamps differ.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Mapping, Optional, Sequence


def _tool_version() -> str:
    try:
        return metadata.version("ditrans")
    except metadata.PackageNotFoundError:  # pragma: no cover - dev checkout
        return "unknown"


def file_checksum(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as f:
        for block in iter(lambda: f.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def text_checksum(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    run_id: str
    created: str
    subcommand: str
    config_checksum: str
    input_checksums: Mapping[str, str]
    pattern: Optional[str]
    seed: Optional[int]
    tool_version: str = field(default_factory=_tool_version)


def build_manifest(subcommand: str, inputs: Sequence[Path],
                   config: Mapping[str, object],
                   pattern: Optional[str] = None,
                   seed: Optional[int] = None) -> RunManifest:
    input_checksums = {str(p): file_checksum(p) for p in inputs}
    config_checksum = text_checksum(json.dumps(config, sort_keys=True, default=str))
    fingerprint = json.dumps({
        "subcommand": subcommand,
        "inputs": dict(sorted(input_checksums.items())),
        "config": config_checksum,
        "pattern": pattern,
        "seed": seed,
    }, sort_keys=True)
    return RunManifest(
        run_id=text_checksum(fingerprint)[:12],
        created=datetime.now(timezone.utc).isoformat(),
        subcommand=subcommand,
        config_checksum=config_checksum,
        input_checksums=input_checksums,
        pattern=pattern,
        seed=seed,
    )


def manifest_to_dict(manifest: RunManifest) -> dict:
    return {
        "run_id": manifest.run_id,
        "created": manifest.created,
        "subcommand": manifest.subcommand,
        "config_checksum": manifest.config_checksum,
        "input_checksums": dict(manifest.input_checksums),
        "pattern": manifest.pattern,
        "seed": manifest.seed,
        "tool_version": manifest.tool_version,
    }


def manifest_json(manifest: RunManifest) -> str:
    return json.dumps(manifest_to_dict(manifest), sort_keys=True, indent=2) + "\n"


def write_manifest_for(output_path: Path, manifest: RunManifest) -> Path:
    side = Path(str(output_path) + ".manifest.json")
    side.write_text(manifest_json(manifest), encoding="utf-8")
    return side
