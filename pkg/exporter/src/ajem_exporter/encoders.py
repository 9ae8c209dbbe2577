"""Embedding encoders behind one small duck-typed interface.

Every encoder exposes `name`, `version`, `dim`, and `encode_texts`; visual
encoders add `encode_images` and `encode_image_patches`. The pin string
``name@version`` is what manifests record and what gets embedded into the
comment of every store written from that encoder.

Two families live here:

* ``hashproj`` is a fully offline stand-in: each input is reduced to bytes,
  hashed, and the digest expanded into a deterministic unit vector. It has no
  weights, needs no downloads, and produces byte-identical output on any
  platform, which makes it the encoder behind the frozen golden stores. The
  expansion avoids library RNGs and transcendental functions on purpose:
  values come from exact integer-to-float division of SHA-256 output, so the
  only rounding is IEEE division and the final normalization.

* ``clip-vit-b32`` and ``minilm-l6-v2`` wrap the standard pretrained models
  (512-d image/text tower and 384-d sentence encoder). Constructing them
  requires the optional model dependencies and reachable weights; any failure
  surfaces as EncoderLoadError.
"""

from __future__ import annotations

import hashlib
import struct
import unicodedata
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import EncoderLoadError, ManifestError

# canonical preprocessing for the offline encoder: 224x224 RGB, nearest
# neighbour so resampling stays integer-exact across Pillow builds
_SIDE = 224
_PATCH = 32
_GRID = _SIDE // _PATCH


def _unit_from_seed(seed: bytes, dim: int) -> np.ndarray:
    vals = np.empty(dim, dtype=np.float64)
    filled = 0
    counter = 0
    while filled < dim:
        block = hashlib.sha256(seed + counter.to_bytes(8, "little")).digest()
        take = min(dim - filled, 4)
        for v in struct.unpack_from(f"<{take}q", block):
            vals[filled] = v / 9223372036854775808.0  # / 2**63, exact scale
            filled += 1
        counter += 1
    norm = float(np.linalg.norm(vals))
    if norm == 0.0:  # unreachable in practice, keeps the math total
        vals[0] = 1.0
        norm = 1.0
    return (vals / norm).astype(np.float32)


class HashProjectionEncoder:
    """Deterministic offline encoder: SHA-256 of the input, expanded to a unit vector."""

    name = "hashproj"

    def __init__(self, dim: int, version: str = "1"):
        if version != "1":
            raise ManifestError(f"hashproj has no version {version!r}, only '1'")
        if dim < 1:
            raise ManifestError(f"encoder dim must be positive, got {dim}")
        self.version = version
        self.dim = dim

    def _unit(self, domain: bytes, payload: bytes) -> np.ndarray:
        seed = hashlib.sha256(
            b"ajem-hashproj/" + domain + b"/" + struct.pack("<I", self.dim) + payload
        ).digest()
        return _unit_from_seed(seed, self.dim)

    @staticmethod
    def _pixels(image: Image.Image) -> bytes:
        return image.convert("RGB").resize((_SIDE, _SIDE), Image.NEAREST).tobytes()

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        rows = [self._unit(b"text", unicodedata.normalize("NFC", t).encode("utf-8"))
                for t in texts]
        return np.stack(rows) if rows else np.zeros((0, self.dim), dtype=np.float32)

    def encode_images(self, images: Sequence[Image.Image]) -> np.ndarray:
        rows = [self._unit(b"image", self._pixels(img)) for img in images]
        return np.stack(rows) if rows else np.zeros((0, self.dim), dtype=np.float32)

    def encode_image_patches(self, image: Image.Image) -> np.ndarray:
        # 7x7 grid of 32x32 blocks, one token per block; the block index is
        # folded into the hash so repeated texture still gets distinct tokens,
        # mirroring how position embeddings separate real ViT tokens
        buf = np.frombuffer(self._pixels(image), dtype=np.uint8)
        grid = buf.reshape(_SIDE, _SIDE, 3)
        rows = []
        for k in range(_GRID * _GRID):
            r, c = divmod(k, _GRID)
            block = grid[r * _PATCH:(r + 1) * _PATCH, c * _PATCH:(c + 1) * _PATCH]
            payload = struct.pack("<I", k) + np.ascontiguousarray(block).tobytes()
            rows.append(self._unit(b"patch", payload))
        return np.stack(rows)


class ClipVisualEncoder:
    """CLIP ViT-B/32 wrapper: 512-d pooled rows, 768-d final-layer patch tokens."""

    name = "clip-vit-b32"

    def __init__(self, dim: int = 512, version: str = "main"):
        if dim != 512:
            raise ManifestError(f"clip-vit-b32 emits 512-d rows, manifest pins {dim}")
        self.version = version
        self.dim = dim
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise EncoderLoadError(f"clip-vit-b32 needs the model extras: {exc}") from None
        try:
            self._model = CLIPModel.from_pretrained("openai/clip-vit-base-patch32",
                                                    revision=version)
            self._processor = CLIPProcessor.from_pretrained("openai/clip-vit-base-patch32",
                                                            revision=version)
        except Exception as exc:
            raise EncoderLoadError(f"cannot load clip-vit-b32@{version}: {exc}") from None
        self._model.eval()

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        import torch
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        batch = self._processor(text=list(texts), return_tensors="pt",
                                padding=True, truncation=True)
        with torch.no_grad():
            feats = self._model.get_text_features(**batch)
        return feats.cpu().numpy().astype(np.float32)

    def encode_images(self, images: Sequence[Image.Image]) -> np.ndarray:
        import torch
        if not images:
            return np.zeros((0, self.dim), dtype=np.float32)
        batch = self._processor(images=[img.convert("RGB") for img in images],
                                return_tensors="pt")
        with torch.no_grad():
            feats = self._model.get_image_features(**batch)
        return feats.cpu().numpy().astype(np.float32)

    def encode_image_patches(self, image: Image.Image) -> np.ndarray:
        import torch
        batch = self._processor(images=[image.convert("RGB")], return_tensors="pt")
        with torch.no_grad():
            hidden = self._model.vision_model(**batch).last_hidden_state
        # every final-layer token except the class token, in grid order
        return hidden[0, 1:, :].cpu().numpy().astype(np.float32)


class MiniLmTextEncoder:
    """all-MiniLM-L6-v2 wrapper: 384-d sentence embeddings."""

    name = "minilm-l6-v2"

    def __init__(self, dim: int = 384, version: str = "main"):
        if dim != 384:
            raise ManifestError(f"minilm-l6-v2 emits 384-d rows, manifest pins {dim}")
        self.version = version
        self.dim = dim
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderLoadError(f"minilm-l6-v2 needs the model extras: {exc}") from None
        try:
            self._model = SentenceTransformer("sentence-transformers/all-MiniLM-L6-v2",
                                              revision=version)
        except Exception as exc:
            raise EncoderLoadError(f"cannot load minilm-l6-v2@{version}: {exc}") from None

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        feats = self._model.encode(list(texts), convert_to_numpy=True,
                                   normalize_embeddings=False, show_progress_bar=False)
        return np.asarray(feats, dtype=np.float32)


def make_encoder(name: str, version: str, dim: int):
    """Instantiate the encoder a manifest pins, or fail loudly."""
    if name == HashProjectionEncoder.name:
        return HashProjectionEncoder(dim=dim, version=version)
    if name == ClipVisualEncoder.name:
        return ClipVisualEncoder(dim=dim, version=version)
    if name == MiniLmTextEncoder.name:
        return MiniLmTextEncoder(dim=dim, version=version)
    raise ManifestError(f"unknown encoder {name!r}")
