"""Core data structures: images, signatures, abundances, neighborhoods."""

import numpy as np
import pytest

from hsunmix.types import (
    AbundanceMatrix,
    ClusterAssignment,
    HyperspectralImage,
    NeighborhoodSystem,
    SignatureMatrix,
    UnmixingConfig,
    build_neighborhood,
    validate_abundances,
)


def grid_neighbors(width, height, k):
    """Reference 8-connected neighbor list, brute force over all pixels."""
    ky, kx = divmod(k, width)
    out = []
    for j in range(width * height):
        if j == k:
            continue
        jy, jx = divmod(j, width)
        if abs(jy - ky) <= 1 and abs(jx - kx) <= 1:
            out.append(j)
    return out


class TestBuildNeighborhood:
    def test_center_of_3x3_has_8_neighbors(self):
        nbhd = build_neighborhood(3, 3)
        assert sorted(nbhd.neighbors_of(4).tolist()) == [0, 1, 2, 3, 5, 6, 7, 8]

    def test_corner_of_3x3_has_3_neighbors(self):
        nbhd = build_neighborhood(3, 3)
        assert sorted(nbhd.neighbors_of(0).tolist()) == [1, 3, 4]

    def test_middle_of_1x5_row_has_2_neighbors(self):
        nbhd = build_neighborhood(5, 1)
        assert sorted(nbhd.neighbors_of(2).tolist()) == [1, 3]

    @pytest.mark.parametrize("width,height", [(1, 1), (2, 2), (4, 3), (7, 5)])
    def test_matches_brute_force(self, width, height):
        nbhd = build_neighborhood(width, height)
        for k in range(width * height):
            assert sorted(nbhd.neighbors_of(k).tolist()) == grid_neighbors(width, height, k)

    def test_single_pixel_has_no_neighbors(self):
        nbhd = build_neighborhood(1, 1)
        assert nbhd.neighbors_of(0).size == 0

    def test_symmetry(self):
        nbhd = build_neighborhood(6, 4)
        for k in range(24):
            for j in nbhd.neighbors_of(k):
                assert k in nbhd.neighbors_of(j)

    def test_rejects_nonpositive_dims(self):
        with pytest.raises(ValueError):
            build_neighborhood(0, 3)
        with pytest.raises(ValueError):
            build_neighborhood(3, -1)


class TestValidateAbundances:
    def test_valid_column(self):
        assert validate_abundances(np.array([[0.5], [0.5]]))

    def test_negative_entry_fails(self):
        assert not validate_abundances(np.array([[1.1], [-0.1]]))

    def test_sum_violation_fails(self):
        tol = 1e-9
        assert not validate_abundances(np.array([[0.6], [0.4 + 2 * tol]]), tol)

    def test_sum_within_tolerance_passes(self):
        assert validate_abundances(np.array([[0.6], [0.4 + 0.5e-9]]), 1e-9)

    def test_nonfinite_fails(self):
        assert not validate_abundances(np.array([[np.nan], [1.0]]))
        assert not validate_abundances(np.array([[np.inf], [0.0]]))

    def test_multiple_columns(self):
        S = np.array([[0.2, 1.0, 0.5], [0.8, 0.0, 0.5]])
        assert validate_abundances(S)
        S[0, 1] = -1e-12
        assert not validate_abundances(S)


class TestHyperspectralImage:
    def test_basic_properties(self):
        img = HyperspectralImage(np.ones((5, 6)), width=3, height=2)
        assert img.n_bands == 5
        assert img.n_pixels == 6

    def test_pixel_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            HyperspectralImage(np.ones((5, 6)), width=4, height=2)

    def test_negative_entries_rejected(self):
        data = np.ones((2, 4))
        data[0, 1] = -0.5
        with pytest.raises(ValueError):
            HyperspectralImage(data, width=2, height=2)

    def test_nonfinite_rejected(self):
        data = np.ones((2, 4))
        data[1, 2] = np.nan
        with pytest.raises(ValueError):
            HyperspectralImage(data, width=2, height=2)

    def test_wavelength_length_checked(self):
        with pytest.raises(ValueError):
            HyperspectralImage(np.ones((3, 4)), 2, 2, wavelengths=np.array([1.0, 2.0]))


class TestSignatureAndAbundanceMatrices:
    def test_signature_rejects_negative(self):
        with pytest.raises(ValueError):
            SignatureMatrix(np.array([[1.0, -0.1], [0.5, 0.5]]))

    def test_signature_names_length_checked(self):
        with pytest.raises(ValueError):
            SignatureMatrix(np.ones((3, 2)), names=["a"])

    def test_abundance_rejects_invalid(self):
        with pytest.raises(ValueError):
            AbundanceMatrix(np.array([[0.7], [0.7]]))

    def test_abundance_accepts_simplex(self):
        S = AbundanceMatrix(np.array([[0.25, 1.0], [0.75, 0.0]]))
        assert S.data.shape == (2, 2)


class TestNeighborhoodSystem:
    def test_weights_must_normalize(self):
        nbhd = build_neighborhood(2, 1)
        with pytest.raises(ValueError):
            nbhd.with_weights(np.array([0.5, 0.7]))

    def test_with_weights_roundtrip(self):
        nbhd = build_neighborhood(3, 1).with_weights(np.array([1.0, 0.4, 0.6, 1.0]))
        assert np.allclose(nbhd.weights_of(1), [0.4, 0.6])

    def test_indptr_must_be_monotone(self):
        with pytest.raises(ValueError):
            NeighborhoodSystem(np.array([0, 2, 1]), np.array([1, 0]))

    def test_indices_in_range(self):
        with pytest.raises(ValueError):
            NeighborhoodSystem(np.array([0, 1, 2]), np.array([1, 5]))


class TestClusterAssignment:
    def test_valid_assignment(self):
        u = np.array([[0.9, 0.2], [0.1, 0.8]])
        ca = ClusterAssignment(np.array([0, 1]), u, np.ones((3, 2)))
        assert ca.n_clusters == 2

    def test_membership_columns_must_normalize(self):
        u = np.array([[0.9, 0.2], [0.2, 0.8]])
        with pytest.raises(ValueError):
            ClusterAssignment(np.array([0, 1]), u, np.ones((3, 2)))

    def test_labels_must_match_argmax(self):
        u = np.array([[0.9, 0.2], [0.1, 0.8]])
        with pytest.raises(ValueError):
            ClusterAssignment(np.array([1, 1]), u, np.ones((3, 2)))


class TestUnmixingConfig:
    def test_defaults_valid(self):
        cfg = UnmixingConfig()
        assert cfg.mu == 0.02
        assert cfg.eta == 0.1
        assert cfg.q == 1.0
        assert cfg.max_iter == 1000
        assert cfg.eps == 1e-8

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"mu": 0.0},
            {"mu": -1.0},
            {"eta": -0.5},
            {"q": 0.0},
            {"q": 1.5},
            {"max_iter": 0},
            {"eps": -1e-8},
            {"clusters": 0},
            {"variant": "unknown"},
            {"sparsity_weight": -0.1},
        ],
    )
    def test_invalid_values_rejected(self, kwargs):
        with pytest.raises(ValueError):
            UnmixingConfig(**kwargs)
