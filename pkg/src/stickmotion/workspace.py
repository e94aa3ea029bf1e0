"""Artifact layout, flat config files, and reproducible run manifests.

Every pipeline command reads and writes under one root directory (the
``STICKMOTION_HOME`` environment variable, else ``./stickmotion_home``).
Artifacts are chained: the trainer needs the corpus and both pretrained
towers, generation needs the trained denoiser, and a missing link is
reported with the exact command that produces it.

Manifests record what a command did without any timestamps: the resolved
config, its digest, and content digests of all inputs and outputs.  Equal
manifests imply byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

ENV_HOME = "STICKMOTION_HOME"
DEFAULT_HOME = "stickmotion_home"


class ConfigFileError(ValueError):
    """A config file line that is not `key = value` or a duplicate key."""


class MissingArtifactError(FileNotFoundError):
    """A required artifact does not exist yet; names the producing command."""

    def __init__(self, name: str, path: Path, command: str):
        super().__init__(
            f"missing {name} at {path}; run `stickmotion {command}` first")
        self.artifact = name
        self.path = path
        self.command = command


# artifact name -> (relative path, producing command)
ARTIFACTS = {
    "corpus": ("corpus", "make-corpus"),
    "stickman-checkpoint": ("checkpoints/stickman.ckpt", "pretrain-stickman"),
    "evaluator-checkpoint": ("checkpoints/evaluator.ckpt", "pretrain-evaluator"),
    "denoiser-checkpoint": ("checkpoints/denoiser.ckpt", "train"),
}


@dataclass(frozen=True)
class Workspace:
    root: Path

    @staticmethod
    def resolve(root: str | Path | None = None) -> "Workspace":
        if root is None:
            root = os.environ.get(ENV_HOME, DEFAULT_HOME)
        return Workspace(Path(root))

    def path(self, name: str) -> Path:
        rel, _ = ARTIFACTS[name]
        return self.root / rel

    def require(self, name: str) -> Path:
        path = self.path(name)
        if not path.exists():
            raise MissingArtifactError(name, path, ARTIFACTS[name][1])
        return path

    @property
    def outputs_dir(self) -> Path:
        return self.root / "outputs"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    @property
    def previews_dir(self) -> Path:
        return self.root / "previews"

    @property
    def manifests_dir(self) -> Path:
        return self.root / "manifests"


# ---------------------------------------------------------------------------
# flat config files: `key = value`, `#` comments, no sections


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigFileError(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigFileError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigFileError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path: str | Path) -> dict[str, str]:
    try:
        return parse_config(Path(path).read_text())
    except ConfigFileError as e:
        raise ConfigFileError(f"{path}: {e}") from None


_BOOL = {"true": True, "false": False, "yes": True, "no": False,
         "1": True, "0": False}


def coerce(raw: str, like) -> object:
    """Converts a config string to the type of an existing default value."""
    if isinstance(like, bool):
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise ConfigFileError(f"expected a boolean, got {raw!r}") from None
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


# ---------------------------------------------------------------------------
# digests and manifests


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=2) + "\n"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_path(path: Path) -> str:
    """File digest, or for a directory the digest of its sorted file tree."""
    path = Path(path)
    if path.is_file():
        return sha256_bytes(path.read_bytes())
    h = hashlib.sha256()
    for f in sorted(p for p in path.rglob("*") if p.is_file()):
        h.update(str(f.relative_to(path)).encode())
        h.update(b"\x00")
        h.update(f.read_bytes())
    return h.hexdigest()


def write_manifest(ws: Workspace, command: str, config: dict,
                   inputs: dict[str, Path], outputs: dict[str, Path]) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "config_digest": sha256_bytes(
            json.dumps(config, sort_keys=True, separators=(",", ":")).encode()),
        "inputs": {k: sha256_path(v) for k, v in sorted(inputs.items())},
        "outputs": {k: sha256_path(v) for k, v in sorted(outputs.items())},
    }
    ws.manifests_dir.mkdir(parents=True, exist_ok=True)
    path = ws.manifests_dir / f"{command}.json"
    path.write_text(canonical_json(manifest))
    return path


def read_manifest(ws: Workspace, command: str) -> dict:
    return json.loads((ws.manifests_dir / f"{command}.json").read_text())
