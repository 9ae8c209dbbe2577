"""Interpretable style coordinates from opposed prompt pairs.

Each axis is defined by a positive/negative prompt pole in embedding space
(for example "painterly" vs "linear"). Raw directions are the pole
differences; Gram-Schmidt turns them into an orthonormal basis so projected
coordinates are comparable across axes. Pole probabilities, by contrast, are
computed against the raw pole embeddings, not the orthonormalized directions:
the sigmoid of the similarity gap is only meaningful in the original space.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Corpus
from .errors import (
    DataError,
    DegenerateAxisError,
    DimMismatchError,
    EmptyPortfolioError,
    MisalignedListsError,
    WeightSumError,
)
from .store import EmbeddingMatrix

_AXIS_KEY = re.compile(r"^axis(\d+)([+-])$")


@dataclass(frozen=True)
class PoleAxis:
    """One opposition: embeddings of its two prompt poles."""

    name: str
    positive: np.ndarray
    negative: np.ndarray

    @property
    def raw_direction(self) -> np.ndarray:
        return self.positive.astype(np.float64) - self.negative.astype(np.float64)


@dataclass(frozen=True)
class WolfflinBasis:
    """Orthonormal axis directions plus the raw poles they came from."""

    axes: tuple[PoleAxis, ...]
    basis: np.ndarray            # (k, dim) float64, rows orthonormal

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def read_pole_prompts(path: str | Path) -> list[tuple[str, str]]:
    """Prompt pairs from a text file, one 'positive<TAB>negative' per line."""
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise DataError(f"{path}:{lineno}: expected 'positive<TAB>negative'")
        pairs.append((parts[0].strip(), parts[1].strip()))
    if not pairs:
        raise DataError(f"{path}: no prompt pairs")
    return pairs


def pole_axes_from_store(pole_store: EmbeddingMatrix) -> tuple[PoleAxis, ...]:
    """Collect axisN+/axisN- rows into ordered PoleAxis objects."""
    found: dict[int, dict[str, str]] = {}
    for key in pole_store.ids:
        m = _AXIS_KEY.match(key)
        if not m:
            raise DataError(f"pole store key {key!r} does not look like 'axisN+' / 'axisN-'")
        found.setdefault(int(m.group(1)), {})[m.group(2)] = key
    if not found:
        raise DataError("pole store is empty")
    axes = []
    for index in sorted(found):
        sides = found[index]
        if "+" not in sides or "-" not in sides:
            raise DataError(f"axis{index} is missing one pole")
        axes.append(PoleAxis(
            name=f"axis{index}",
            positive=pole_store.vector(sides["+"]).astype(np.float64),
            negative=pole_store.vector(sides["-"]).astype(np.float64),
        ))
    return tuple(axes)


def build_basis(pole_store: EmbeddingMatrix, degeneracy_tol: float = 1e-8) -> WolfflinBasis:
    """Orthonormalize raw pole differences in their stored order.

    Modified Gram-Schmidt with a second re-orthogonalization pass keeps the
    Gram matrix within ~1e-15 of identity. An axis whose residual norm falls
    at or below `degeneracy_tol` is linearly dependent on its predecessors
    and aborts the build: silently dropping or renormalizing it would change
    the meaning of every later coordinate.
    """
    axes = pole_axes_from_store(pole_store)
    dim = axes[0].positive.shape[0]
    basis = np.zeros((len(axes), dim), dtype=np.float64)
    for i, axis in enumerate(axes):
        v = axis.raw_direction
        if v.shape[0] != dim:
            raise DimMismatchError(f"{axis.name}: dim {v.shape[0]} != {dim}")
        for _ in range(2):
            for j in range(i):
                v = v - np.dot(v, basis[j]) * basis[j]
        norm = float(np.linalg.norm(v))
        if norm <= degeneracy_tol:
            raise DegenerateAxisError(
                f"{axis.name}: residual norm {norm:.3e} <= {degeneracy_tol:.1e}; "
                "axis is linearly dependent on earlier axes")
        basis[i] = v / norm
    return WolfflinBasis(axes=axes, basis=basis)


def gram_matrix(basis: WolfflinBasis) -> np.ndarray:
    return basis.basis @ basis.basis.T


def project(z: np.ndarray, basis: WolfflinBasis) -> np.ndarray:
    """Coordinates of an embedding on the orthonormal axes."""
    v = np.asarray(z, dtype=np.float64).ravel()
    if v.shape[0] != basis.dim:
        raise DimMismatchError(f"embedding dim {v.shape[0]} != basis dim {basis.dim}")
    return basis.basis @ v


def project_patches(patches: np.ndarray, basis: WolfflinBasis,
                    weights: np.ndarray | None = None) -> np.ndarray:
    """Weighted aggregate coordinates over patch embeddings.

    Weights must sum to one (within 1e-6); omitted weights mean uniform.
    Equivalent to projecting the weighted mean embedding, computed that way.
    """
    mat = np.asarray(patches, dtype=np.float64)
    if mat.ndim != 2:
        raise DataError(f"patches must be 2-d, got shape {mat.shape}")
    if mat.shape[0] == 0:
        raise EmptyPortfolioError("no patches to aggregate")
    if mat.shape[1] != basis.dim:
        raise DimMismatchError(f"patch dim {mat.shape[1]} != basis dim {basis.dim}")
    if weights is None:
        w = np.full(mat.shape[0], 1.0 / mat.shape[0], dtype=np.float64)
    else:
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape[0] != mat.shape[0]:
            raise MisalignedListsError(f"{w.shape[0]} weights for {mat.shape[0]} patches")
        if abs(float(w.sum()) - 1.0) > 1e-6:
            raise WeightSumError(f"patch weights sum to {float(w.sum()):.8f}, expected 1")
    return basis.basis @ (w @ mat)


def pole_probability(z: np.ndarray, axis: PoleAxis, temperature: float = 1.0) -> float:
    """P(embedding sits toward the positive pole), from raw pole similarities.

    Sigmoid of (sim to positive - sim to negative) / temperature, where sim is
    the dot product against the raw stored pole embedding.
    """
    if temperature <= 0:
        raise DataError(f"temperature must be positive, got {temperature}")
    v = np.asarray(z, dtype=np.float64).ravel()
    if v.shape[0] != axis.positive.shape[0]:
        raise DimMismatchError("embedding dim does not match pole dim")
    gap = float(np.dot(v, axis.positive) - np.dot(v, axis.negative)) / temperature
    # numerically safe logistic
    if gap >= 0:
        return 1.0 / (1.0 + math.exp(-gap))
    e = math.exp(gap)
    return e / (1.0 + e)


def artist_signature(coords: np.ndarray) -> np.ndarray:
    """Componentwise mean of projected artwork coordinates."""
    mat = np.asarray(coords, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise EmptyPortfolioError("signature needs at least one coordinate row")
    return mat.mean(axis=0)


def compute_signatures(corpus: Corpus, visual_store: EmbeddingMatrix,
                       basis: WolfflinBasis) -> dict[str, np.ndarray]:
    """Signature per artist over whichever artworks have stored embeddings.

    Artists with no embedded artwork are skipped (tools raise when asked
    about them), so a partially embedded corpus still works.
    """
    signatures: dict[str, np.ndarray] = {}
    for artist_id, artist in corpus.artists.items():
        rows = [visual_store.vector(w.key())
                for w in corpus.artworks_of(artist_id) if w.key() in visual_store]
        if not rows:
            continue
        coords = np.stack([project(r, basis) for r in rows])
        signatures[artist_id] = artist_signature(coords)
    return signatures


def manifold_distance(sig_a: np.ndarray, sig_b: np.ndarray) -> float:
    """Euclidean distance between two signatures."""
    a = np.asarray(sig_a, dtype=np.float64).ravel()
    b = np.asarray(sig_b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimMismatchError(f"signature shapes differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def write_gram_csv(basis: WolfflinBasis, path: str | Path) -> None:
    """Diagnostic dump of the basis Gram matrix."""
    gram = gram_matrix(basis)
    names = [axis.name for axis in basis.axes]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + names)
        for name, row in zip(names, gram):
            writer.writerow([name] + [f"{v:.12f}" for v in row])


def write_coords_csv(corpus: Corpus, visual_store: EmbeddingMatrix,
                     basis: WolfflinBasis, path: str | Path) -> None:
    """Per-artwork projected coordinates, one row per embedded artwork."""
    names = [axis.name for axis in basis.axes]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["artwork_id", "artist_id"] + names)
        for artwork_id in sorted(corpus.artworks):
            record = corpus.artworks[artwork_id]
            if record.key() not in visual_store:
                continue
            coords = project(visual_store.vector(record.key()), basis)
            writer.writerow([artwork_id, record.artist_id] + [f"{c:.8f}" for c in coords])
