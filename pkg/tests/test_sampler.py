"""Random-displacement sampling of almost self-affine attractors."""

import numpy as np
import pytest

from affdims import (
    BernoulliModel,
    DisplacementField,
    displacement,
    project,
    read_cloud,
    sample_cloud,
    write_cloud,
)
from affdims.errors import InvalidInputError
from affdims.sampler import attractor_radius, default_depth, truncation_tail

from checks import diag_ifs


def small_setup():
    ifs = diag_ifs([0.5, 0.3], [0.4, 0.35])
    model = BernoulliModel(probs=(0.6, 0.4))
    fld = DisplacementField(seed=2024, region_radius=1.0)
    return ifs, model, fld


def test_truncation_tail_formula():
    # sum_{k >= K} a^k R sqrt(N) = a^K R sqrt(N) / (1 - a)
    assert truncation_tail(0.5, 1.0, 2, 10) == pytest.approx(
        0.5**10 * np.sqrt(2) / 0.5
    )
    assert truncation_tail(0.4, 2.0, 3, 5) == pytest.approx(
        0.4**5 * 2.0 * np.sqrt(3) / 0.6
    )


def test_displacement_deterministic_and_bounded():
    fld = DisplacementField(seed=7, region_radius=0.5)
    v1 = displacement(fld, (1, 2, 1), 2)
    v2 = displacement(fld, (1, 2, 1), 2)
    np.testing.assert_array_equal(v1, v2)
    assert np.all(np.abs(v1) <= 0.5)
    v3 = displacement(fld, (1, 2, 2), 2)
    assert not np.array_equal(v1, v3)


def test_displacement_depends_on_seed():
    a = displacement(DisplacementField(seed=1, region_radius=1.0), (1, 1), 2)
    b = displacement(DisplacementField(seed=2, region_radius=1.0), (1, 1), 2)
    assert not np.array_equal(a, b)


def test_project_is_prefix_sum_of_displacements():
    ifs, _, fld = small_setup()
    word = (1, 2, 1, 1)
    K = 4
    pos = np.zeros(2)
    prefix = np.eye(2)
    for j in range(K):
        pos = pos + prefix @ displacement(fld, word[: j + 1], 2)
        prefix = prefix @ ifs.maps[word[j] - 1].matrix
    got = project(ifs, fld, word, K)
    np.testing.assert_allclose(got.position, pos, rtol=1e-12, atol=1e-15)
    assert got.word_prefix == word[:K]


def test_project_common_prefix_shares_leading_terms():
    ifs, _, fld = small_setup()
    a = project(ifs, fld, (1, 2, 1, 1), 2)
    b = project(ifs, fld, (1, 2, 2, 2), 2)
    np.testing.assert_allclose(a.position, b.position)


def test_cloud_matches_scalar_projection():
    ifs, model, fld = small_setup()
    cloud = sample_cloud(ifs, model, fld, 64, 12)
    for i in (0, 7, 31, 63):
        pt = project(ifs, fld, tuple(cloud.words[i]), 12)
        np.testing.assert_allclose(cloud.positions[i], pt.position, rtol=1e-12, atol=1e-14)


def test_cloud_deterministic_and_extendable():
    ifs, model, fld = small_setup()
    a = sample_cloud(ifs, model, fld, 500, 10)
    b = sample_cloud(ifs, model, fld, 500, 10)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.words, b.words)
    # first-n stability under growth of the cloud
    big = sample_cloud(ifs, model, fld, 800, 10)
    np.testing.assert_array_equal(big.positions[:500], a.positions)


def test_cloud_thread_and_chunk_invariance():
    ifs, model, fld = small_setup()
    base = sample_cloud(ifs, model, fld, 2000, 10)
    threaded = sample_cloud(ifs, model, fld, 2000, 10, threads=4)
    chunked = sample_cloud(ifs, model, fld, 2000, 10, chunk=97)
    np.testing.assert_array_equal(base.positions, threaded.positions)
    np.testing.assert_array_equal(base.positions, chunked.positions)


def test_cloud_word_frequencies():
    ifs, model, fld = small_setup()
    cloud = sample_cloud(ifs, model, fld, 30_000, 6)
    freq = np.mean(cloud.words[:, 0] == 1)
    sigma = np.sqrt(0.6 * 0.4 / len(cloud))
    assert abs(freq - 0.6) < 4 * sigma
    # depth-2 cylinder frequency
    f11 = np.mean((cloud.words[:, 0] == 1) & (cloud.words[:, 1] == 1))
    sigma2 = np.sqrt(0.36 * 0.64 / len(cloud))
    assert abs(f11 - 0.36) < 4 * sigma2


def test_points_stay_inside_stated_radius():
    ifs, model, fld = small_setup()
    cloud = sample_cloud(ifs, model, fld, 2000, 15)
    radius = attractor_radius(ifs, fld.region_radius)
    norms = np.linalg.norm(cloud.positions, axis=1)
    assert norms.max() <= radius + cloud.truncation_bound


def test_default_depth_controls_tail():
    ifs, _, fld = small_setup()
    r_min = 1e-3
    K = default_depth(ifs, fld.region_radius, r_min)
    from affdims.linalg import contraction_bounds

    _, a_plus = contraction_bounds(ifs)
    assert truncation_tail(a_plus, fld.region_radius, 2, K) < r_min / 10
    assert truncation_tail(a_plus, fld.region_radius, 2, K - 1) >= r_min / 10


def test_cloud_roundtrip(tmp_path):
    ifs, model, fld = small_setup()
    cloud = sample_cloud(ifs, model, fld, 200, 8)
    path = tmp_path / "cloud.txt"
    write_cloud(path, cloud)
    back = read_cloud(path)
    np.testing.assert_array_equal(back.positions, cloud.positions)
    assert back.words.shape == (len(cloud), 0)  # words are not persisted
    assert back.seed == cloud.seed
    assert back.depth == cloud.depth
    assert back.truncation_bound == pytest.approx(cloud.truncation_bound)


def test_cloud_file_bytes_stable(tmp_path):
    ifs, model, fld = small_setup()
    cloud = sample_cloud(ifs, model, fld, 100, 8)
    p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
    write_cloud(p1, cloud)
    write_cloud(p2, cloud)
    assert p1.read_bytes() == p2.read_bytes()


def test_read_cloud_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a cloud\n1 2 3\n")
    with pytest.raises(InvalidInputError):
        read_cloud(path)


def test_field_seed_validation():
    with pytest.raises(InvalidInputError):
        DisplacementField(seed=-1, region_radius=1.0)
    with pytest.raises(InvalidInputError):
        DisplacementField(seed=2**64, region_radius=1.0)
    with pytest.raises(InvalidInputError):
        DisplacementField(seed=3, region_radius=0.0)


def test_sample_cloud_validates_sizes():
    ifs, model, fld = small_setup()
    with pytest.raises(InvalidInputError):
        sample_cloud(ifs, model, fld, 0, 8)
    with pytest.raises(InvalidInputError):
        sample_cloud(ifs, model, fld, 10, 0)
