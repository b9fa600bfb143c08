"""Run manifest: artifact paths, content hashes, and a config echo.

Commands that write artifacts update the manifest; eval/serve refuse to
run against files whose hashes no longer match.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path
from typing import Dict, Optional, Union


class ManifestError(ValueError):
    """Raised when a manifest is missing entries or hashes mismatch."""


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def load_manifest(path: Union[str, Path]) -> dict:
    path = Path(path)
    if not path.exists():
        return {"artifacts": {}, "config": {}}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def update_manifest(
    manifest_path: Union[str, Path],
    artifacts: Dict[str, Union[str, Path]],
    config: Optional[dict] = None,
) -> dict:
    """Record (path, sha256, mtime) for each named artifact."""
    manifest = load_manifest(manifest_path)
    for name, artifact_path in artifacts.items():
        artifact_path = Path(artifact_path)
        manifest["artifacts"][name] = {
            "path": str(artifact_path),
            "sha256": _sha256(artifact_path),
            "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        }
    if config:
        manifest["config"].update(config)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def verify_manifest(manifest_path: Union[str, Path], names: Optional[list] = None) -> dict:
    """Check recorded hashes against the files on disk."""
    manifest = load_manifest(manifest_path)
    entries = manifest.get("artifacts", {})
    for name, entry in entries.items():
        if names is not None and name not in names:
            continue
        path = Path(entry["path"])
        if not path.exists():
            raise ManifestError(f"manifest artifact {name}: missing file {path}")
        if _sha256(path) != entry["sha256"]:
            raise ManifestError(f"manifest artifact {name}: hash mismatch for {path}")
    return manifest
