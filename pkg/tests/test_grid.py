from __future__ import annotations

import numpy as np
import pytest

from levelint.grid import (
    ContractViolation,
    GradientField,
    GridSpec,
    ScalarField,
    estimate_gradient,
    make_circle_sdf,
    make_ellipse_field,
    make_ellipsoid_field,
    make_sphere_sdf,
)


def _value_at(field: ScalarField, point):
    index = tuple(int(round((p - o) / h)) for p, o, h in zip(point, field.spec.origin, field.spec.spacing))
    return field.values[index]


def test_gridspec_validation():
    with pytest.raises(ContractViolation):
        GridSpec((1, 4), (1.0, 1.0), (0.0, 0.0))
    with pytest.raises(ContractViolation):
        GridSpec((3, 4), (1.0, 0.0), (0.0, 0.0))
    with pytest.raises(ContractViolation):
        GridSpec((3, 4), (1.0,), (0.0, 0.0))


def test_from_bounds_inclusive():
    spec = GridSpec.from_bounds((-5, -5), (5, 5), 0.025)
    assert spec.dims == (401, 401)
    assert spec.axes()[0][-1] == pytest.approx(5.0, abs=1e-12)
    assert spec.domain_volume == pytest.approx((401 * 0.025) ** 2)
    with pytest.raises(ContractViolation):
        GridSpec.from_bounds((0,), (1,), 0.3)


def test_scalar_field_checks():
    spec = GridSpec((2, 3), (1.0, 1.0), (0.0, 0.0))
    with pytest.raises(ContractViolation):
        ScalarField(spec, np.zeros(5))
    with pytest.raises(ContractViolation):
        ScalarField(spec, [0, 1, 2, np.nan, 4, 5])
    f = ScalarField(spec, np.arange(6))
    assert f.values.shape == (2, 3)
    assert f[1, 2] == 5.0
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0
    with pytest.raises(ContractViolation):
        GradientField(spec, np.zeros((2, 3, 3)))
    with pytest.raises(ContractViolation):
        GradientField(spec, np.full((2, 3, 2), np.inf))


def test_ellipse_examples():
    spec = GridSpec.from_bounds((-3, -3), (3, 3), 0.75)
    f = make_ellipse_field(spec, (0, 0), (1.5, 0.75))
    assert _value_at(f, (1.5, 0.0)) == pytest.approx(0.0, abs=1e-15)
    assert _value_at(f, (0.0, 0.0)) == -1.0
    assert _value_at(f, (1.5, 0.75)) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ContractViolation):
        make_ellipse_field(GridSpec((3, 3, 3), (1,) * 3, (0,) * 3), (0, 0), (1, 1))
    with pytest.raises(ContractViolation):
        make_ellipse_field(spec, (0, 0), (1.0, -1.0))


def test_ellipsoid_examples():
    spec = GridSpec.from_bounds((-1.5, -1.5, -1.5), (1.5, 1.5, 1.5), 0.25)
    f = make_ellipsoid_field(spec, (0, 0, 0), (1.5, 0.75, 0.5))
    assert _value_at(f, (0, 0, 0.5)) == pytest.approx(0.0, abs=1e-15)
    assert _value_at(f, (0, 0, 0)) == -1.0
    assert _value_at(f, (1.5, 0.75, 0.5)) == pytest.approx(2.0, abs=1e-14)
    with pytest.raises(ContractViolation):
        make_ellipsoid_field(GridSpec((3, 3), (1, 1), (0, 0)), (0, 0, 0), (1, 1, 1))


def test_circle_examples():
    spec = GridSpec.from_bounds((-2, -2), (2, 2), 0.5)
    sdf = make_circle_sdf(spec, (0, 0), 1.0)
    sq = make_circle_sdf(spec, (0, 0), 1.0, squared=True)
    assert _value_at(sdf, (2, 0)) == 1.0
    assert _value_at(sdf, (0, 0)) == -1.0
    assert _value_at(sq, (2, 0)) == 3.0
    with pytest.raises(ContractViolation):
        make_circle_sdf(spec, (0, 0), 0.0)
    with pytest.raises(ContractViolation):
        make_sphere_sdf(spec, (0, 0, 0), 1.0)


def test_translation_consistency():
    spec = GridSpec.from_bounds((-2, -2), (2, 2), 0.1)
    shift = np.array([0.3, -0.2])
    moved = make_ellipse_field(spec, shift, (1.5, 0.75)).values
    x, y = spec.coordinates()
    direct = ((x - shift[0]) / 1.5) ** 2 + ((y - shift[1]) / 0.75) ** 2 - 1
    assert np.max(np.abs(moved - direct)) <= 1e-13


def test_gradient_examples():
    spec = GridSpec((6, 7), (0.1, 0.2), (0.3, -0.4))
    x, y = spec.coordinates()
    affine = estimate_gradient(ScalarField(spec, 2 * x + 3 * y)).vectors
    assert np.max(np.abs(affine[..., 0] - 2)) <= 1e-12
    assert np.max(np.abs(affine[..., 1] - 3)) <= 1e-12
    const = estimate_gradient(ScalarField(spec, np.full(spec.dims, 4.0))).vectors
    assert np.all(const == 0)

    line = GridSpec((21, 3), (0.1, 0.1), (0.0, 0.0))
    xx = line.coordinates()[0]
    g = estimate_gradient(ScalarField(line, xx**2)).vectors
    assert g[10, 1, 0] == pytest.approx(2.0, abs=1e-12)  # interior point x = 1
    # one-sided first-order differences on the boundary
    assert g[0, 1, 0] == pytest.approx((0.01 - 0.0) / 0.1, abs=1e-12)


def test_gradient_3d_affine():
    spec = GridSpec((4, 5, 6), (0.5, 0.25, 1.0), (0, 0, 0))
    x, y, z = spec.coordinates()
    g = estimate_gradient(ScalarField(spec, -x + 0.5 * y + 7 * z)).vectors
    assert np.max(np.abs(g - np.array([-1.0, 0.5, 7.0]))) <= 1e-12
