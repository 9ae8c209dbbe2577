"""Style-coordinate basis: orthonormality, projection, pole probabilities."""

from __future__ import annotations

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artjudge.errors import (
    DataError,
    DegenerateAxisError,
    DimMismatchError,
    EmptyPortfolioError,
    MisalignedListsError,
    WeightSumError,
)
from artjudge.manifold import (
    PoleAxis,
    artist_signature,
    build_basis,
    gram_matrix,
    manifold_distance,
    pole_axes_from_store,
    pole_probability,
    project,
    project_patches,
    read_pole_prompts,
    write_gram_csv,
)
from artjudge.store import EmbeddingMatrix


def _store_from_directions(directions: np.ndarray) -> EmbeddingMatrix:
    """Pole store whose raw axis differences equal the given row vectors."""
    k, dim = directions.shape
    ids, rows = [], []
    for i in range(k):
        ids += [f"axis{i}+", f"axis{i}-"]
        rows += [directions[i], np.zeros(dim)]
    return EmbeddingMatrix(ids=tuple(ids), data=np.array(rows, dtype=np.float32))


def test_gram_is_identity_for_random_axes():
    rng = np.random.default_rng(42)
    for _ in range(50):
        k = int(rng.integers(1, 7))
        dim = int(rng.integers(k, 33))
        basis = build_basis(_store_from_directions(rng.normal(size=(k, dim))))
        assert np.max(np.abs(gram_matrix(basis) - np.eye(k))) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_gram_identity_property(k, seed):
    rng = np.random.default_rng(seed)
    dim = k + int(rng.integers(0, 20))
    basis = build_basis(_store_from_directions(rng.normal(size=(k, dim))))
    assert np.max(np.abs(gram_matrix(basis) - np.eye(k))) < 1e-9


def test_projection_is_linear():
    rng = np.random.default_rng(3)
    basis = build_basis(_store_from_directions(rng.normal(size=(4, 16))))
    for _ in range(50):
        x, y = rng.normal(size=16), rng.normal(size=16)
        a, b = rng.normal(), rng.normal()
        combined = project(a * x + b * y, basis)
        separate = a * project(x, basis) + b * project(y, basis)
        assert np.max(np.abs(combined - separate)) < 1e-7


def test_axis_order_does_not_change_span_projector():
    """Reordering the axes permutes coordinates but projects onto the same
    subspace: B^T B is order-invariant."""
    rng = np.random.default_rng(11)
    directions = rng.normal(size=(5, 20))
    first = build_basis(_store_from_directions(directions))
    perm = [3, 0, 4, 2, 1]
    second = build_basis(_store_from_directions(directions[perm]))
    p1 = first.basis.T @ first.basis
    p2 = second.basis.T @ second.basis
    assert np.max(np.abs(p1 - p2)) < 1e-7


def test_degenerate_axis_rejected():
    rng = np.random.default_rng(5)
    directions = rng.normal(size=(3, 10)).astype(np.float32)
    # scaling by a power of two survives the store's float32 rounding exactly
    directions[2] = -2.0 * directions[1]
    with pytest.raises(DegenerateAxisError, match="axis2"):
        build_basis(_store_from_directions(directions))


def test_pole_axes_key_validation():
    bad = EmbeddingMatrix(ids=("north",), data=np.ones((1, 4), dtype=np.float32))
    with pytest.raises(DataError, match="north"):
        pole_axes_from_store(bad)
    lonely = EmbeddingMatrix(ids=("axis0+",), data=np.ones((1, 4), dtype=np.float32))
    with pytest.raises(DataError, match="missing one pole"):
        pole_axes_from_store(lonely)


def test_projection_dim_mismatch():
    basis = build_basis(_store_from_directions(np.eye(2, 6)))
    with pytest.raises(DimMismatchError):
        project(np.ones(5), basis)


def test_pole_probability_frozen_values():
    # gap of ln(3) puts the logistic at exactly 3/4
    dim = 6
    pos = np.zeros(dim); pos[0] = 1.0
    neg = np.zeros(dim); neg[1] = 1.0
    axis = PoleAxis(name="axis0", positive=pos, negative=neg)
    z = np.zeros(dim)
    z[0] = math.log(3.0)
    assert pole_probability(z, axis) == pytest.approx(0.75, abs=1e-12)
    # scaling gap and temperature together leaves the probability fixed
    kappa = 2.7
    z_scaled = z * kappa
    assert pole_probability(z_scaled, axis, temperature=kappa) == pytest.approx(
        0.75, abs=1e-12)
    # zero gap is exactly even
    assert pole_probability(np.zeros(dim), axis) == pytest.approx(0.5)
    with pytest.raises(DataError, match="temperature"):
        pole_probability(z, axis, temperature=0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-40, 40), st.floats(0.1, 10))
def test_pole_probability_bounds_and_monotonicity(gap, temperature):
    pos = np.array([1.0, 0.0]); neg = np.array([0.0, 1.0])
    axis = PoleAxis(name="axis0", positive=pos, negative=neg)
    p = pole_probability(np.array([gap, 0.0]), axis, temperature=temperature)
    assert 0.0 <= p <= 1.0
    p_hotter = pole_probability(np.array([gap + 1.0, 0.0]), axis,
                                temperature=temperature)
    assert p_hotter >= p


def test_project_patches_matches_weighted_mean():
    rng = np.random.default_rng(9)
    basis = build_basis(_store_from_directions(rng.normal(size=(3, 12))))
    patches = rng.normal(size=(7, 12))
    weights = rng.random(7); weights /= weights.sum()
    got = project_patches(patches, basis, weights)
    want = project(weights @ patches, basis)
    assert np.allclose(got, want, atol=1e-12)
    uniform = project_patches(patches, basis)
    assert np.allclose(uniform, project(patches.mean(axis=0), basis), atol=1e-12)


def test_project_patches_validation():
    basis = build_basis(_store_from_directions(np.eye(2, 8)))
    patches = np.ones((3, 8))
    with pytest.raises(WeightSumError):
        project_patches(patches, basis, np.array([0.5, 0.5, 0.5]))
    with pytest.raises(MisalignedListsError):
        project_patches(patches, basis, np.array([1.0]))
    with pytest.raises(EmptyPortfolioError):
        project_patches(np.empty((0, 8)), basis)
    with pytest.raises(DimMismatchError):
        project_patches(np.ones((3, 5)), basis)


def test_signature_and_distance():
    coords = np.array([[1.0, 3.0], [3.0, 5.0]])
    assert np.array_equal(artist_signature(coords), np.array([2.0, 4.0]))
    with pytest.raises(EmptyPortfolioError):
        artist_signature(np.empty((0, 2)))
    assert manifold_distance(np.zeros(2), np.ones(2)) == pytest.approx(math.sqrt(2))
    assert manifold_distance(np.ones(3), np.ones(3)) == 0.0
    with pytest.raises(DimMismatchError):
        manifold_distance(np.zeros(2), np.zeros(3))


def test_read_pole_prompts(tmp_path):
    path = tmp_path / "poles.tsv"
    path.write_text("# comment\npainterly\tlinear\n\nopen form\tclosed form\n",
                    encoding="utf-8")
    assert read_pole_prompts(path) == [("painterly", "linear"),
                                       ("open form", "closed form")]
    bad = tmp_path / "bad.tsv"
    bad.write_text("painterly linear\n", encoding="utf-8")
    with pytest.raises(DataError, match="expected"):
        read_pole_prompts(bad)
    empty = tmp_path / "empty.tsv"
    empty.write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(DataError, match="no prompt pairs"):
        read_pole_prompts(empty)


def test_gram_csv_round_trip(tmp_path):
    basis = build_basis(_store_from_directions(np.eye(3, 9)))
    path = tmp_path / "gram.csv"
    write_gram_csv(basis, path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["", "axis0", "axis1", "axis2"]
    values = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    assert np.allclose(values, np.eye(3), atol=1e-9)
