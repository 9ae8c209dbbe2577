"""The three export operations: artwork images, biography texts, pole prompts.

Each operation reads its inputs through the manifest, encodes them with the
pinned encoder, l2-normalizes the rows, and writes one AJEM store (plus one
per-artwork token store per image when patch export is on). The encoder pin
is embedded in every store's comment so downstream loaders can tell which
weights produced the rows.

Exports are pure functions of (pinned encoder, input bytes): ids are emitted
in sorted order, rows are normalized in float64 and stored as float32, and no
timestamps or environment details leak into the payload, so re-running an
export reproduces the previous file byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .ajem import Store, write_store
from .encoders import make_encoder
from .errors import ManifestError, UnreadableImage
from .manifest import ExportManifest, file_checksum

PROMPT_PAIRS = 5


@dataclass(frozen=True)
class ExportResult:
    """What one export wrote: paths, their checksums, and any flagged docs."""

    paths: tuple[Path, ...]
    checksums: dict[str, str] = field(default_factory=dict)
    empty_texts: tuple[str, ...] = ()


def _unit_rows(rows: np.ndarray) -> np.ndarray:
    arr = np.asarray(rows, dtype=np.float64)
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0  # a zero row stays zero instead of going NaN
    return (arr / norms).astype(np.float32)


def _check_dim(rows: np.ndarray, pinned: int, what: str) -> None:
    if rows.shape[1] != pinned:
        raise ManifestError(
            f"{what}: encoder produced {rows.shape[1]}-d rows but the manifest pins dim {pinned}")


def _open_image(path: Path, artwork_id: str) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
    except OSError as exc:
        raise UnreadableImage(f"cannot read image for {artwork_id!r}: {path} ({exc})") from None
    return img


def export_visual(manifest: ExportManifest, *, patches: bool = False,
                  encoder=None) -> ExportResult:
    """One 512-d row per artwork; with patches, one token store per artwork."""
    spec = manifest.encoder_for("visual")
    enc = encoder or make_encoder(spec.name, spec.version, spec.dim)

    ids = sorted(manifest.images)
    images = [_open_image(manifest.resolve(manifest.images[a]), a) for a in ids]
    rows = enc.encode_images(images)
    if ids:
        _check_dim(rows, spec.dim, "visual export")
    rows = _unit_rows(rows.reshape(len(ids), -1) if ids else
                      np.zeros((0, spec.dim), dtype=np.float32))

    out = manifest.output_path("visual")
    write_store(Store(ids=tuple(ids), rows=rows, normalized=True,
                      comment=f"encoder={spec.pin} space=visual"), out)

    written = [out]
    checksums = {manifest.images[a]: file_checksum(manifest.resolve(manifest.images[a]))
                 for a in ids}
    checksums[manifest.outputs["visual"]] = file_checksum(out)

    if patches:
        patch_dir_rel = manifest.outputs.get("patches")
        if patch_dir_rel is None:
            raise ManifestError("patch export needs a 'patches' output directory in the manifest")
        for artwork_id, img in zip(ids, images):
            tokens = _unit_rows(enc.encode_image_patches(img))
            token_ids = tuple(f"{artwork_id}#{k}" for k in range(tokens.shape[0]))
            rel = f"{patch_dir_rel}/{artwork_id}.ajem"
            path = manifest.resolve(rel)
            write_store(Store(ids=token_ids, rows=tokens, normalized=True,
                              comment=f"encoder={spec.pin} space=visual-patches"
                                      f" artwork={artwork_id}"), path)
            written.append(path)
            checksums[rel] = file_checksum(path)

    return ExportResult(paths=tuple(written), checksums=checksums)


def export_text(manifest: ExportManifest, *, encoder=None) -> ExportResult:
    """One 384-d row per biography doc; empty docs are encoded and flagged."""
    spec = manifest.encoder_for("text")
    enc = encoder or make_encoder(spec.name, spec.version, spec.dim)

    ids = sorted(manifest.texts)
    docs = []
    for doc_id in ids:
        path = manifest.resolve(manifest.texts[doc_id])
        try:
            docs.append(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ManifestError(f"text doc {doc_id!r}: file not found: {path}") from None
        except UnicodeDecodeError as exc:
            raise ManifestError(f"text doc {doc_id!r}: not UTF-8: {path} ({exc})") from None
    empty = tuple(doc_id for doc_id, text in zip(ids, docs) if text == "")

    rows = enc.encode_texts(docs)
    if ids:
        _check_dim(rows, spec.dim, "text export")
    rows = _unit_rows(rows.reshape(len(ids), -1) if ids else
                      np.zeros((0, spec.dim), dtype=np.float32))

    out = manifest.output_path("text")
    write_store(Store(ids=tuple(ids), rows=rows, normalized=True,
                      comment=f"encoder={spec.pin} space=text"), out)

    checksums = {manifest.texts[d]: file_checksum(manifest.resolve(manifest.texts[d]))
                 for d in ids}
    checksums[manifest.outputs["text"]] = file_checksum(out)
    return ExportResult(paths=(out,), checksums=checksums, empty_texts=empty)


def read_prompt_pairs(path: Path) -> list[tuple[str, str]]:
    """Parse 'positive<TAB>negative' lines; blank lines and # comments skipped."""
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ManifestError(f"prompt file not found: {path}") from None
    pairs = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ManifestError(f"{path}:{lineno}: expected 'positive<TAB>negative'")
        pairs.append((parts[0].strip(), parts[1].strip()))
    if len(pairs) != PROMPT_PAIRS:
        raise ManifestError(f"{path}: expected {PROMPT_PAIRS} prompt pairs, got {len(pairs)}")
    return pairs


def export_prompt_axes(manifest: ExportManifest, *, prompt_file: str | None = None,
                       output: str | None = None, encoder=None) -> ExportResult:
    """Ten rows keyed axis1+ .. axis5-, embedded by the visual encoder's text side."""
    spec = manifest.encoder_for("visual")
    enc = encoder or make_encoder(spec.name, spec.version, spec.dim)

    rel = prompt_file or manifest.prompt_file
    if rel is None:
        raise ManifestError("manifest names no prompt file")
    path = manifest.resolve(rel)
    pairs = read_prompt_pairs(path)

    ids = []
    texts = []
    for n, (pos, neg) in enumerate(pairs, 1):
        ids.extend((f"axis{n}+", f"axis{n}-"))
        texts.extend((pos, neg))
    rows = enc.encode_texts(texts)
    _check_dim(rows, spec.dim, "prompt export")
    rows = _unit_rows(rows)

    out_rel = output or manifest.outputs.get("prompts")
    if out_rel is None:
        raise ManifestError("manifest names no 'prompts' output")
    out = manifest.resolve(out_rel)
    write_store(Store(ids=tuple(ids), rows=rows, normalized=True,
                      comment=f"encoder={spec.pin} space=style-poles"), out)

    checksums = {rel: file_checksum(path), out_rel: file_checksum(out)}
    return ExportResult(paths=(out,), checksums=checksums)
