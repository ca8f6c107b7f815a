from __future__ import annotations

import numpy as np
import pytest

from levelint.cellgeom import (
    CellClass,
    build_cell_arrays,
    build_cell_model,
    classify_cell,
    extremal_vertices,
    sign_vector,
)
from levelint.grid import ContractViolation, GridSpec, ScalarField, estimate_gradient


def test_build_examples():
    m = build_cell_model(0.0, (1.0, 0.0), (1.0, 1.0))
    assert (m.min_psi, m.max_psi) == (-0.5, 0.5)
    assert m.d.d.tolist() == [0.0, 1.0]
    assert m.d.n_zero == 1

    m = build_cell_model(0.0, (1.0, 1.0), (1.0, 1.0))
    assert (m.min_psi, m.max_psi) == (-1.0, 1.0)
    assert m.d.d.tolist() == [0.5, 0.5]

    m = build_cell_model(2.0, (0.0, 0.0), (1.0, 1.0))
    assert m.min_psi == m.max_psi == 2.0
    assert m.total_increase == 0.0
    assert m.degenerate
    assert m.d.n_zero == 2


def test_build_rejects_bad_input():
    with pytest.raises(ContractViolation):
        build_cell_model(0.0, (1.0, 0.0), (1.0, -1.0))
    with pytest.raises(ContractViolation):
        build_cell_model(0.0, (np.nan, 0.0), (1.0, 1.0))
    with pytest.raises(ContractViolation):
        build_cell_model(0.0, (1.0, 0.0, 0.0), (1.0, 1.0))


def test_extremal_vertices_examples():
    lo, hi = extremal_vertices((0, 0), (1, 1), (1, 1))
    assert lo.tolist() == [-0.5, -0.5] and hi.tolist() == [0.5, 0.5]
    lo, hi = extremal_vertices((0, 0), (-1, 1), (1, 1))
    assert lo.tolist() == [0.5, -0.5] and hi.tolist() == [-0.5, 0.5]
    lo, _ = extremal_vertices((0, 0), (0, 1), (1, 1))
    assert lo.tolist() == [-0.5, -0.5]
    assert sign_vector((0.0, -2.0, 3.0)).tolist() == [1.0, -1.0, 1.0]


def test_classify_examples():
    m = build_cell_model(0.0, (1.0, 1.0), (1.0, 1.0))  # min -1, max 1
    assert classify_cell(m, 2.0) is CellClass.FULL
    assert classify_cell(m, -2.0) is CellClass.EMPTY
    assert classify_cell(m, 0.0) is CellClass.PARTIAL
    assert classify_cell(m, 1.0) is CellClass.FULL
    assert classify_cell(m, -1.0) is CellClass.EMPTY
    flat = build_cell_model(2.0, (0.0, 0.0), (1.0, 1.0))
    assert classify_cell(flat, 2.0) is CellClass.FULL
    assert classify_cell(flat, 1.9) is CellClass.EMPTY


def test_model_invariants(rng):
    for _ in range(500):
        n = int(rng.integers(2, 4))
        grad = rng.normal(size=n) * rng.choice([0.0, 1.0], size=n, p=[0.1, 0.9])
        spacing = rng.uniform(0.1, 2.0, size=n)
        center = rng.normal(size=n)
        psi0 = float(rng.normal())
        m = build_cell_model(psi0, grad, spacing)
        assert m.max_psi - m.min_psi == pytest.approx(m.total_increase, abs=1e-12)
        assert m.min_psi <= psi0 <= m.max_psi
        if not m.degenerate:
            assert m.d.d.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(m.d.d) >= 0) and np.all(m.d.d >= 0)
        lo, hi = extremal_vertices(center, grad, spacing)
        assert psi0 + (lo - center) @ grad == pytest.approx(m.min_psi, abs=1e-12)
        assert psi0 + (hi - center) @ grad == pytest.approx(m.max_psi, abs=1e-12)
        # axis permutation and gradient negation leave d unchanged
        perm = rng.permutation(n)
        assert np.allclose(build_cell_model(psi0, grad[perm], spacing[perm]).d.d, m.d.d, atol=1e-15)
        neg = build_cell_model(psi0, -grad, spacing)
        assert np.array_equal(neg.d.d, m.d.d)
        assert (neg.min_psi, neg.max_psi) == (m.min_psi, m.max_psi)


def test_cell_arrays_match_single_models(rng):
    spec = GridSpec((5, 6), (0.3, 0.2), (0.0, 0.0))
    psi = ScalarField(spec, rng.normal(size=spec.dims))
    grad = estimate_gradient(psi)
    arrays = build_cell_arrays(psi, grad)
    assert len(arrays) == 30
    flat_grad = grad.vectors.reshape(-1, 2)
    for i in range(30):
        m = build_cell_model(psi.values.ravel()[i], flat_grad[i], spec.spacing)
        assert arrays.min_psi[i] == m.min_psi
        assert arrays.max_psi[i] == m.max_psi
        assert arrays.grad_norm[i] == pytest.approx(m.grad_norm, rel=1e-15)
        assert np.array_equal(arrays.d[i], m.d.d)
