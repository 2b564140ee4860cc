import numpy as np
import pytest

from sparsesep import (BlockStructure, Dictionary, ThresholdSchedule, block_omp,
                       dct_basis, hard_threshold, omp, soft_threshold)


def test_soft_threshold_closed_form():
    assert np.allclose(soft_threshold(np.array([3.0, -0.5, 1.2]), 1.0), [2.0, 0.0, 0.2])


def test_soft_threshold_zero_delta_is_identity():
    x = np.array([1.5, -2.0, 0.0])
    assert np.array_equal(soft_threshold(x, 0.0), x)


def test_soft_threshold_at_max_kills_everything():
    x = np.array([3.0, -0.5, 1.2])
    assert np.allclose(soft_threshold(x, np.max(np.abs(x))), 0.0)


def test_hard_threshold_closed_form():
    assert np.allclose(hard_threshold(np.array([3.0, -0.5, 1.2]), 1.0), [3.0, 0.0, 1.2])


def test_hard_threshold_zero_delta_keeps_nonzeros():
    x = np.array([3.0, -0.5, 1.2])
    assert np.array_equal(hard_threshold(x, 0.0), x)


def test_hard_threshold_idempotent():
    gen = np.random.default_rng(0)
    x = gen.standard_normal(50)
    once = hard_threshold(x, 0.7)
    assert np.array_equal(hard_threshold(once, 0.7), once)


def test_thresholds_reject_negative_delta():
    with pytest.raises(ValueError):
        soft_threshold(np.ones(3), -0.1)
    with pytest.raises(ValueError):
        hard_threshold(np.ones(3), -0.1)


def test_soft_threshold_is_nonexpansive():
    gen = np.random.default_rng(1)
    for _ in range(200):
        x = gen.standard_normal(20)
        y = gen.standard_normal(20)
        delta = float(gen.uniform(0, 2))
        lhs = np.linalg.norm(soft_threshold(x, delta) - soft_threshold(y, delta))
        assert lhs <= np.linalg.norm(x - y) + 1e-12


def test_schedule_emits_lmax_strictly_decreasing_values():
    sched = ThresholdSchedule.linear(10, 0.5, floor=0.25)
    vals = sched.values()
    assert len(vals) == 10
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] >= sched.floor
    assert vals[0] == pytest.approx(sched.decrement * 10)


def test_schedule_floor_drops_tail_values():
    sched = ThresholdSchedule(5.0, 0.5, floor=2.0)
    vals = sched.values()
    assert vals[-1] >= 2.0
    assert len(vals) == 7


def test_schedule_validation():
    with pytest.raises(ValueError):
        ThresholdSchedule(1.0, 0.3)  # not an integer multiple
    with pytest.raises(ValueError):
        ThresholdSchedule(-1.0, 0.5)
    with pytest.raises(ValueError):
        ThresholdSchedule(1.0, 0.5, floor=-0.1)


def test_omp_single_atom_signal():
    d = dct_basis(12)
    code = omp(d, 2.0 * d.atoms[:, 5], max_atoms=1)
    assert list(code.supports[0]) == [5]
    assert code.coeffs[5, 0] == pytest.approx(2.0)
    residual = 2.0 * d.atoms[:, 5] - d.atoms @ code.coeffs[:, 0]
    assert np.linalg.norm(residual) < 1e-12


def test_omp_zero_signal_empty_support():
    d = dct_basis(12)
    code = omp(d, np.zeros(12), max_atoms=3)
    assert len(code.supports[0]) == 0
    assert not code.coeffs.any()


def _omp_oracle(atoms, y, max_atoms):
    """Independent greedy re-implementation: pinv-based least squares."""
    support = []
    residual = y.copy()
    for _ in range(max_atoms):
        scores = np.abs(atoms.T @ residual)
        best = int(np.argmax(scores))
        if scores[best] <= 1e-12:
            break
        support.append(best)
        sub = atoms[:, support]
        coeffs = np.linalg.pinv(sub) @ y
        residual = y - sub @ coeffs
    full = np.zeros(atoms.shape[1])
    if support:
        full[support] = coeffs
    return full, sorted(support)


def test_omp_matches_independent_greedy_oracle():
    gen = np.random.default_rng(2)
    for trial in range(200):
        atoms = gen.standard_normal((8, 12))
        atoms /= np.linalg.norm(atoms, axis=0)
        y = gen.standard_normal(8)
        code = omp(Dictionary(atoms), y, max_atoms=2)
        expected, support = _omp_oracle(atoms, y, 2)
        assert list(code.supports[0]) == support, f"trial {trial}"
        assert np.allclose(code.coeffs[:, 0], expected, atol=1e-8), f"trial {trial}"


def test_omp_residual_orthogonal_to_support():
    gen = np.random.default_rng(3)
    atoms = gen.standard_normal((10, 20))
    atoms /= np.linalg.norm(atoms, axis=0)
    d = Dictionary(atoms)
    y = gen.standard_normal(10)
    code = omp(d, y, max_atoms=4)
    residual = y - atoms @ code.coeffs[:, 0]
    assert np.max(np.abs(atoms[:, code.supports[0]].T @ residual)) < 1e-8


def test_omp_residual_monotone_in_budget():
    gen = np.random.default_rng(4)
    atoms = gen.standard_normal((10, 16))
    atoms /= np.linalg.norm(atoms, axis=0)
    d = Dictionary(atoms)
    y = gen.standard_normal(10)
    norms = []
    for budget in range(1, 8):
        code = omp(d, y, max_atoms=budget)
        norms.append(np.linalg.norm(y - atoms @ code.coeffs[:, 0]))
    assert np.all(np.diff(norms) <= 1e-10)


def test_omp_residual_norm_stopping():
    gen = np.random.default_rng(5)
    atoms = gen.standard_normal((10, 16))
    atoms /= np.linalg.norm(atoms, axis=0)
    d = Dictionary(atoms)
    y = gen.standard_normal(10)
    target = 0.6 * np.linalg.norm(y)
    code = omp(d, y, residual_norm=target)
    assert np.linalg.norm(y - atoms @ code.coeffs[:, 0]) <= target


def test_omp_requires_a_stopping_rule():
    with pytest.raises(ValueError):
        omp(dct_basis(4), np.ones(4))


def _blocked_dictionary(seed=6):
    gen = np.random.default_rng(seed)
    atoms = gen.standard_normal((8, 12))
    atoms /= np.linalg.norm(atoms, axis=0)
    blocks = BlockStructure(tuple(tuple(range(3 * b, 3 * b + 3)) for b in range(4)), 3)
    return Dictionary(atoms, block_structure=blocks), gen


def test_block_omp_singleton_blocks_equal_omp():
    gen = np.random.default_rng(7)
    atoms = gen.standard_normal((8, 12))
    atoms /= np.linalg.norm(atoms, axis=0)
    plain = Dictionary(atoms)
    blocked = Dictionary(atoms, block_structure=BlockStructure.singletons(12))
    for _ in range(50):
        y = gen.standard_normal(8)
        a = omp(plain, y, max_atoms=3)
        b = block_omp(blocked, y, k_blocks=3)
        assert np.array_equal(a.coeffs, b.coeffs)
        assert np.array_equal(a.supports[0], b.supports[0])


def test_block_omp_exact_block_signal():
    d, gen = _blocked_dictionary()
    y = d.atoms[:, 6:9] @ np.array([1.0, -2.0, 0.5])  # exactly block 2
    code = block_omp(d, y, k_blocks=1)
    assert list(code.supports[0]) == [6, 7, 8]
    assert np.linalg.norm(y - d.atoms @ code.coeffs[:, 0]) < 1e-10


def test_block_omp_single_block_matches_exhaustive_best():
    d, gen = _blocked_dictionary(8)
    for _ in range(50):
        y = gen.standard_normal(8)
        code = block_omp(d, y, k_blocks=1)
        chosen = set(code.supports[0])
        best_err, best_block = None, None
        for b in range(4):
            idx = list(range(3 * b, 3 * b + 3))
            sub = d.atoms[:, idx]
            err = np.linalg.norm(y - sub @ (np.linalg.pinv(sub) @ y))
            if best_err is None or err < best_err - 1e-12:
                best_err, best_block = err, set(idx)
        assert chosen == best_block


def test_block_omp_requires_block_structure():
    with pytest.raises(ValueError):
        block_omp(dct_basis(8), np.ones(8), k_blocks=1)
