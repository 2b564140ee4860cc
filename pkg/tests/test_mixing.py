import numpy as np
import pytest

from sparsesep import MixtureSet, center, mix, random_mixing_matrix, whiten


def test_identity_mixing_without_noise():
    S = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    out = mix(S, np.eye(2))
    assert np.array_equal(out.data, S)
    assert out.noise_sigma == 0.0


def test_psnr_noise_sigma_closed_form():
    S = np.array([[0.0, 255.0]])
    out = mix(S, np.eye(1), psnr_db=20.0, seed=0)
    assert out.noise_sigma == pytest.approx(25.5)


def test_mix_matches_triple_loop_oracle():
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    A = A / np.linalg.norm(A, axis=0)
    S = np.ones((2, 4))
    out = mix(S, A)
    expected = np.zeros((3, 4))
    for i in range(3):
        for j in range(2):
            for t in range(4):
                expected[i, t] += A[i, j] * S[j, t]
    assert np.allclose(out.data, expected, atol=1e-15)


def test_mix_rejects_bad_dimensions_and_psnr():
    with pytest.raises(ValueError):
        mix(np.ones((3, 4)), np.eye(2))
    with pytest.raises(ValueError):
        mix(np.ones((2, 4)), np.eye(2), psnr_db=-3.0)


def test_random_mixing_matrix_paper_shape():
    A = random_mixing_matrix(10, 4, seed=7)
    assert A.shape == (10, 4)
    assert np.allclose(np.linalg.norm(A, axis=0), 1.0, atol=1e-12)


def test_random_mixing_matrix_deterministic():
    assert np.array_equal(random_mixing_matrix(2, 2, seed=5),
                          random_mixing_matrix(2, 2, seed=5))


def test_random_mixing_matrix_column_norms():
    A = random_mixing_matrix(3, 2, seed=1)
    assert np.allclose(np.linalg.norm(A, axis=0), [1.0, 1.0], atol=1e-12)


def test_random_mixing_matrix_rejects_underdetermined():
    with pytest.raises(ValueError):
        random_mixing_matrix(2, 3, seed=0)


def test_center_simple_row():
    centered, mean = center(np.array([[1.0, 2.0, 3.0]]))
    assert np.allclose(centered, [[-1.0, 0.0, 1.0]])
    assert mean == pytest.approx([2.0])


def test_center_already_centered_is_noop():
    x = np.array([[-1.0, 0.0, 1.0]])
    centered, mean = center(x)
    assert np.array_equal(centered, x)
    assert mean == pytest.approx([0.0])


def test_center_random_rows_have_zero_mean():
    gen = np.random.default_rng(0)
    x = gen.standard_normal((4, 100)) + 5.0
    centered, mean = center(x)
    # recompute the means independently, entry by entry
    for i in range(4):
        total = 0.0
        for t in range(100):
            total += centered[i, t]
        assert abs(total / 100) < 1e-12
    assert np.allclose(centered + mean[:, None], x)


def test_whiten_diagonal_covariance_scales_rows():
    gen = np.random.default_rng(1)
    t = 200_000
    x = np.vstack([2.0 * gen.standard_normal(t), gen.standard_normal(t)])
    white, transform = whiten(x)
    # transform rows must scale the dominant axis by ~1/2 and the other by ~1
    scales = np.sort(np.abs(transform.matrix).max(axis=1))
    assert scales[0] == pytest.approx(0.5, rel=0.02)
    assert scales[1] == pytest.approx(1.0, rel=0.02)


def test_whiten_preserves_already_white_data():
    gen = np.random.default_rng(2)
    x = gen.standard_normal((3, 500))
    white, _ = whiten(x)
    white2, transform2 = whiten(white)
    cov = white2 @ white2.T / white2.shape[1]
    assert np.linalg.norm(cov - np.eye(3)) < 1e-8
    # the second transform is orthogonal (no rescaling left to do)
    assert np.allclose(transform2.matrix @ transform2.matrix.T, np.eye(3), atol=1e-6)


def test_whiten_covariance_identity_oracle():
    gen = np.random.default_rng(3)
    x = gen.standard_normal((3, 500)) * np.array([[3.0], [1.0], [0.5]]) + 2.0
    white, _ = whiten(x)
    t = white.shape[1]
    cov = np.zeros((3, 3))
    for a in range(3):
        for b in range(3):
            cov[a, b] = float(white[a] @ white[b]) / t
    assert np.linalg.norm(cov - np.eye(3)) < 1e-8


def test_whiten_reports_rank_deficiency():
    x = np.vstack([np.arange(10.0), 2.0 * np.arange(10.0)])
    with pytest.raises(ValueError, match="rank deficient"):
        whiten(x)


def test_mix_is_linear_without_noise():
    gen = np.random.default_rng(4)
    A = random_mixing_matrix(4, 2, seed=0)
    s1 = gen.standard_normal((2, 50))
    s2 = gen.standard_normal((2, 50))
    left = mix(2.0 * s1 + 3.0 * s2, A).data
    right = 2.0 * mix(s1, A).data + 3.0 * mix(s2, A).data
    assert np.allclose(left, right, atol=1e-12)


def test_measured_psnr_close_to_requested():
    gen = np.random.default_rng(5)
    S = 255.0 * gen.uniform(size=(2, 20_000))
    A = random_mixing_matrix(3, 2, seed=1)
    for target in (10.0, 20.0, 30.0):
        out = mix(S, A, psnr_db=target, seed=2)
        noise = out.data - A @ S
        measured = 20.0 * np.log10(np.max(np.abs(S)) / np.sqrt(np.mean(noise ** 2)))
        assert abs(measured - target) < 0.5


def test_mixture_set_validation():
    with pytest.raises(ValueError):
        MixtureSet(np.array([[np.inf, 0.0]]))
    with pytest.raises(ValueError):
        MixtureSet(np.zeros((2, 2)), noise_sigma=-1.0)
