import numpy as np
import pytest

from sparsesep import (BlockStructure, Dictionary, analyze, analyze2, dct_basis,
                       dwt_basis, overcomplete_dct, render_mosaic, synthesize,
                       synthesize2, union_basis)


def test_dct_n1_is_identity():
    assert np.allclose(dct_basis(1).atoms, [[1.0]])


@pytest.mark.parametrize("n", [2, 4, 8, 64])
def test_dct_orthonormal(n):
    d = dct_basis(n)
    assert np.max(np.abs(d.atoms.T @ d.atoms - np.eye(n))) < 1e-12


def test_dct_constant_vector_hits_dc_atom_only():
    d = dct_basis(8)
    coeffs = analyze(d, np.full(8, 3.0))
    assert abs(coeffs[0]) > 1e-6
    assert np.max(np.abs(coeffs[1:])) < 1e-12


def test_haar_n2_matches_closed_form():
    d = dwt_basis(2, "haar", 1)
    expected = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    # equality up to per-column sign
    for k in range(2):
        col = d.atoms[:, k]
        assert np.allclose(col, expected[:, k]) or np.allclose(col, -expected[:, k])


def test_db4_orthonormal():
    d = dwt_basis(16, "db4", 2)
    assert np.max(np.abs(d.atoms.T @ d.atoms - np.eye(16))) < 1e-8


def _haar_analysis_oracle(y, levels):
    # direct cascade with explicit averaging/differencing pairs
    approx = y.astype(float)
    details = []
    for _ in range(levels):
        even, odd = approx[0::2], approx[1::2]
        details.append((even - odd) / np.sqrt(2))
        approx = (even + odd) / np.sqrt(2)
    return approx, details


def test_haar_step_signal_sparse_coefficient_count():
    levels = 3
    y = np.zeros(8)
    y[:4] = 2.0
    approx, details = _haar_analysis_oracle(y, levels)
    oracle_nonzeros = np.count_nonzero(np.abs(approx) > 1e-12) + sum(
        np.count_nonzero(np.abs(d) > 1e-12) for d in details)
    d = dwt_basis(8, "haar", levels)
    coeffs = analyze(d, y)
    got = np.count_nonzero(np.abs(coeffs) > 1e-12)
    assert got == oracle_nonzeros
    assert got <= levels + 1
    # same multiset of magnitudes regardless of band ordering
    oracle_vals = np.sort(np.abs(np.concatenate([approx] + details)))
    assert np.allclose(np.sort(np.abs(coeffs)), oracle_vals)


def test_dwt_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        dwt_basis(12, "haar", 2)


def test_dwt_rejects_too_many_levels():
    with pytest.raises(ValueError):
        dwt_basis(8, "haar", 4)


@pytest.mark.parametrize("n,k", [(64, 256), (64, 96)])
def test_overcomplete_dct_dimensions(n, k):
    d = overcomplete_dct(n, k)
    assert d.atoms.shape == (n, k)
    assert np.max(np.abs(np.linalg.norm(d.atoms, axis=0) - 1.0)) < 1e-10


def test_overcomplete_dct_rejects_undercomplete():
    with pytest.raises(ValueError):
        overcomplete_dct(64, 32)


def test_analyze_unit_atom_gives_unit_coordinate():
    d = dct_basis(8)
    coeffs = analyze(d, d.atoms[:, 3])
    expected = np.zeros(8)
    expected[3] = 1.0
    assert np.allclose(coeffs, expected, atol=1e-12)


def test_synthesize_zero_coeffs_gives_zero_signal():
    d = dct_basis(8)
    assert np.allclose(synthesize(d, np.zeros(8)), 0.0)


def test_round_trip_random_orthonormal_basis():
    gen = np.random.default_rng(0)
    q, _ = np.linalg.qr(gen.standard_normal((16, 16)))
    d = Dictionary(q, "orthonormal-basis")
    y = gen.standard_normal(16)
    assert np.linalg.norm(synthesize(d, analyze(d, y)) - y) < 1e-10


def test_parseval_for_orthonormal_bases():
    gen = np.random.default_rng(1)
    for d in (dct_basis(32), dwt_basis(32, "haar"), dwt_basis(32, "db4", 3)):
        y = gen.standard_normal(32)
        assert abs(np.linalg.norm(analyze(d, y)) - np.linalg.norm(y)) < 1e-10


def test_union_analysis_is_member_concatenation():
    gen = np.random.default_rng(2)
    members = [dct_basis(16), dwt_basis(16, "haar")]
    u = union_basis(members)
    y = gen.standard_normal(16)
    coeffs = analyze(u, y)
    for member, (start, stop) in zip(members, u.member_offsets):
        assert np.allclose(coeffs[start:stop], analyze(member, y))


def test_union_requires_two_members():
    with pytest.raises(ValueError):
        union_basis([dct_basis(8)])


def test_2d_round_trip():
    gen = np.random.default_rng(3)
    img = gen.standard_normal((32, 32))
    for d in (dct_basis(32), dwt_basis(32, "db4")):
        rec = synthesize2(d, analyze2(d, img))
        assert np.max(np.abs(rec - img)) < 1e-8


def test_dictionary_invariants_enforced():
    with pytest.raises(ValueError):
        Dictionary(np.array([[2.0], [0.0]]), "overcomplete")  # atom norm 2
    bad = np.array([[1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        Dictionary(bad, "orthonormal-basis")  # not orthogonal


def test_block_structure_partition_checks():
    with pytest.raises(ValueError):
        BlockStructure(((0, 1), (1, 2)), 2)  # overlapping
    with pytest.raises(ValueError):
        BlockStructure(((0, 1, 2),), 2)  # exceeds cap
    bs = BlockStructure(((0, 2), (1,)), 2)
    assert list(bs.block_of) == [0, 1, 0]


def test_render_mosaic_shape_and_range():
    d = overcomplete_dct(16, 24)
    mosaic = render_mosaic(d)
    assert mosaic.dtype == np.uint8
    assert mosaic.ndim == 2 and mosaic.size > 24 * 16
