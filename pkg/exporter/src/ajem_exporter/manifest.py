"""Export manifest: the single JSON file that drives a batch export.

A manifest lists the inputs (image paths keyed by artwork id, text paths
keyed by doc id, one prompt file), pins the encoders by name/version/dim,
names the output stores, and accumulates checksums of everything an export
touched. All paths are relative to the manifest's own directory so a fixture
tree can be copied anywhere and still export.

Schema (JSON object):

    schema       "ajem-export/1"
    images       {artwork_id: relative path}
    texts        {doc_id: relative path}
    prompt_file  relative path or null
    encoders     {"visual"|"text": {"name", "version", "dim"}}
    outputs      {"visual"|"text"|"prompts": relative path,
                  "patches": relative directory}
    checksums    {relative path: "sha256:<hex>"}   (written back by the CLI)
    empty_texts  [doc_id, ...]                     (written back by the CLI)

There is no separate "prompt" encoder entry: pole prompts are sentences
embedded into the visual space by the visual encoder's text side, so they
share the "visual" pin.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError

SCHEMA = "ajem-export/1"
_ROLES = ("visual", "text")


@dataclass(frozen=True)
class EncoderSpec:
    name: str
    version: str
    dim: int

    @property
    def pin(self) -> str:
        return f"{self.name}@{self.version}"


@dataclass
class ExportManifest:
    root: Path
    images: dict[str, str] = field(default_factory=dict)
    texts: dict[str, str] = field(default_factory=dict)
    prompt_file: str | None = None
    encoders: dict[str, EncoderSpec] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    checksums: dict[str, str] = field(default_factory=dict)
    empty_texts: list[str] = field(default_factory=list)

    def resolve(self, relative: str) -> Path:
        return self.root / relative

    def encoder_for(self, role: str) -> EncoderSpec:
        try:
            return self.encoders[role]
        except KeyError:
            raise ManifestError(f"manifest pins no {role!r} encoder") from None

    def output_path(self, kind: str) -> Path:
        try:
            return self.resolve(self.outputs[kind])
        except KeyError:
            raise ManifestError(f"manifest names no {kind!r} output") from None


def _require(obj: dict, key: str, kind: type, where: str):
    if key not in obj:
        raise ManifestError(f"{where}: missing {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise ManifestError(f"{where}: {key!r} must be {kind.__name__}")
    return value


def _str_map(obj: dict, key: str, where: str) -> dict[str, str]:
    raw = _require(obj, key, dict, where)
    out = {}
    for k, v in raw.items():
        if not isinstance(k, str) or not isinstance(v, str):
            raise ManifestError(f"{where}: {key!r} must map strings to strings")
        out[k] = v
    return out


def load_manifest(path: str | Path) -> ExportManifest:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {p}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{p.name}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ManifestError(f"{p.name}: manifest must be a JSON object")
    if raw.get("schema") != SCHEMA:
        raise ManifestError(f"{p.name}: expected schema {SCHEMA!r}, got {raw.get('schema')!r}")

    encoders: dict[str, EncoderSpec] = {}
    for role, entry in _require(raw, "encoders", dict, p.name).items():
        if role not in _ROLES:
            raise ManifestError(f"{p.name}: unknown encoder role {role!r}")
        if not isinstance(entry, dict):
            raise ManifestError(f"{p.name}: encoder entry for {role!r} must be an object")
        name = _require(entry, "name", str, f"{p.name} encoders.{role}")
        version = _require(entry, "version", str, f"{p.name} encoders.{role}")
        dim = _require(entry, "dim", int, f"{p.name} encoders.{role}")
        if dim < 1:
            raise ManifestError(f"{p.name}: encoders.{role}.dim must be positive")
        encoders[role] = EncoderSpec(name=name, version=version, dim=dim)

    prompt_file = raw.get("prompt_file")
    if prompt_file is not None and not isinstance(prompt_file, str):
        raise ManifestError(f"{p.name}: prompt_file must be a string or null")

    empty = raw.get("empty_texts", [])
    if not isinstance(empty, list) or any(not isinstance(x, str) for x in empty):
        raise ManifestError(f"{p.name}: empty_texts must be a list of doc ids")

    return ExportManifest(
        root=p.parent,
        images=_str_map(raw, "images", p.name),
        texts=_str_map(raw, "texts", p.name),
        prompt_file=prompt_file,
        encoders=encoders,
        outputs=_str_map(raw, "outputs", p.name),
        checksums=_str_map(raw, "checksums", p.name) if "checksums" in raw else {},
        empty_texts=list(empty),
    )


def save_manifest(manifest: ExportManifest, path: str | Path) -> None:
    payload = {
        "schema": SCHEMA,
        "images": manifest.images,
        "texts": manifest.texts,
        "prompt_file": manifest.prompt_file,
        "encoders": {role: {"name": s.name, "version": s.version, "dim": s.dim}
                     for role, s in manifest.encoders.items()},
        "outputs": manifest.outputs,
        "checksums": manifest.checksums,
        "empty_texts": sorted(set(manifest.empty_texts)),
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def file_checksum(path: Path) -> str:
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    return f"sha256:{digest}"
