"""Quadrature and polynomial basis checks on the reference triangle."""

import math

import numpy as np
import pytest

from shelldpg.polyquad import (
    MAX_TRIANGLE_DEGREE,
    TriangleBasis,
    edge_rule,
    eval_basis,
    map_gradients,
    monomial_integral,
    triangle_basis,
    triangle_geometry,
    triangle_rule,
)


def exact_integral(a, b):
    # independent of the closed form used in the module
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def test_monomial_integral_against_factorials():
    for a in range(0, 9):
        for b in range(0, 9):
            assert monomial_integral(a, b) == pytest.approx(exact_integral(a, b), rel=1e-14)


def test_rule_integrates_xy():
    rule = triangle_rule(2)
    val = np.sum(rule.weights * rule.points[:, 0] * rule.points[:, 1])
    assert val == pytest.approx(1.0 / 24.0, abs=1e-15)


def test_rule_degree_eight_monomial():
    rule = triangle_rule(8)
    x, y = rule.points[:, 0], rule.points[:, 1]
    val = np.sum(rule.weights * x**4 * y**4)
    assert abs(val - exact_integral(4, 4)) < 1e-13


@pytest.mark.parametrize("degree", range(0, MAX_TRIANGLE_DEGREE + 1))
def test_rule_exact_for_all_monomials(degree):
    rule = triangle_rule(degree)
    x, y = rule.points[:, 0], rule.points[:, 1]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            val = np.sum(rule.weights * x**a * y**b)
            assert val == pytest.approx(exact_integral(a, b), abs=1e-14)


def test_rule_weights_positive_and_sum_half():
    for degree in range(MAX_TRIANGLE_DEGREE + 1):
        rule = triangle_rule(degree)
        assert np.all(rule.weights > 0.0)
        assert np.sum(rule.weights) == pytest.approx(0.5, abs=1e-15)
        inside = (
            (rule.points[:, 0] >= 0.0)
            & (rule.points[:, 1] >= 0.0)
            & (rule.points.sum(axis=1) <= 1.0 + 1e-14)
        )
        assert np.all(inside)


def test_rule_rejects_bad_degree():
    with pytest.raises(ValueError):
        triangle_rule(-1)
    with pytest.raises(ValueError):
        triangle_rule(MAX_TRIANGLE_DEGREE + 1)


def test_edge_rule_one_point_is_midpoint():
    rule = edge_rule(1)
    assert rule.points.shape == (1,)
    assert rule.points[0] == pytest.approx(0.5, abs=1e-15)
    assert rule.weights[0] == pytest.approx(1.0, abs=1e-15)


def test_edge_rule_degree_seven():
    rule = edge_rule(7)
    assert rule.points.shape == (4,)
    val = np.sum(rule.weights * rule.points**7)
    assert abs(val - 1.0 / 8.0) < 1e-14


def test_edge_rule_rejects_negative_degree():
    with pytest.raises(ValueError):
        edge_rule(-2)


def test_basis_orthonormal():
    for degree in range(5):
        basis = triangle_basis(degree)
        rule = triangle_rule(2 * degree)
        vals = basis.eval(rule.points)
        gram = (vals * rule.weights[:, None]).T @ vals
        # degree 4 loses a couple of digits to monomial-coefficient
        # cancellation; plenty for Gram conditioning
        assert np.allclose(gram, np.eye(basis.dim), atol=2e-11)


def test_basis_dimension_and_degree_guard():
    assert triangle_basis(0).dim == 1
    assert triangle_basis(3).dim == 10
    assert triangle_basis(4).dim == 15
    with pytest.raises(ValueError):
        TriangleBasis(5)
    with pytest.raises(ValueError):
        TriangleBasis(-1)


def test_basis_spans_monomials():
    # every monomial of matching degree must be reproducible
    basis = triangle_basis(3)
    rule = triangle_rule(6)
    vals = basis.eval(rule.points)
    for a, b in basis.exponents:
        target = rule.points[:, 0] ** a * rule.points[:, 1] ** b
        coef = (vals * rule.weights[:, None]).T @ target
        assert np.allclose(vals @ coef, target, atol=1e-12)


def test_gradient_matches_finite_differences():
    basis = triangle_basis(3)
    rng = np.random.default_rng(7)
    pts = rng.random((20, 2)) * 0.4 + 0.1
    h = 1e-5
    grads = basis.grad(pts)
    for axis in range(2):
        shift = np.zeros(2)
        shift[axis] = h
        fd = (basis.eval(pts + shift) - basis.eval(pts - shift)) / (2 * h)
        assert np.max(np.abs(grads[:, :, axis] - fd)) < 1e-6


def test_hessian_matches_finite_differences():
    basis = triangle_basis(3)
    rng = np.random.default_rng(11)
    pts = rng.random((15, 2)) * 0.4 + 0.1
    h = 1e-5
    hess = basis.hess(pts)
    for ax in range(2):
        shift = np.zeros(2)
        shift[ax] = h
        fd = (basis.grad(pts + shift) - basis.grad(pts - shift)) / (2 * h)
        assert np.max(np.abs(hess[:, :, :, ax] - fd)) < 1e-6


def test_hessian_symmetric():
    basis = triangle_basis(4)
    pts = np.array([[0.2, 0.3], [0.1, 0.05], [0.6, 0.3]])
    hess = basis.hess(pts)
    assert np.allclose(hess[:, :, 0, 1], hess[:, :, 1, 0], atol=1e-13)


def test_geometry_identity_and_scaling():
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    J, detJ, Jinv = triangle_geometry(ref)
    assert detJ == pytest.approx(1.0)
    assert np.allclose(J, np.eye(2))

    scaled = 2.0 * ref
    J, detJ, Jinv = triangle_geometry(scaled)
    assert detJ == pytest.approx(4.0)
    # gradients of linear functions halve under a scaling by two
    basis = triangle_basis(1)
    pts = np.array([[0.25, 0.25]])
    grad_ref = basis.grad(pts)
    grad_phys = map_gradients(grad_ref, Jinv)
    assert np.allclose(grad_phys, grad_ref / 2.0, atol=1e-14)


def test_geometry_batched_and_degenerate():
    coords = np.array(
        [
            [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]],
            [[1.0, 1.0], [3.0, 1.5], [1.5, 3.0]],
        ]
    )
    J, detJ, Jinv = triangle_geometry(coords)
    assert J.shape == (2, 2, 2)
    assert np.allclose(np.einsum("tab,tbc->tac", J, Jinv), np.eye(2)[None], atol=1e-13)

    flat = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(ValueError, match="degenerate"):
        triangle_geometry(flat)


def test_eval_basis_physical_hessian():
    # quadratic x^2 has constant physical Hessian diag(2, 0)
    coords = np.array([[0.2, -0.1], [1.7, 0.3], [0.4, 1.9]])
    basis = triangle_basis(2)
    ref_pts = np.array([[0.2, 0.2], [0.5, 0.1]])
    vals, grads, hess = eval_basis(basis, coords, ref_pts)

    from shelldpg.polyquad import map_points

    phys = map_points(coords, ref_pts)
    x = phys[..., 0]
    # fit coefficients of x^2 in the mapped basis via least squares on many points
    rule = triangle_rule(4)
    vals_q, _, _ = eval_basis(basis, coords, rule.points)
    phys_q = map_points(coords, rule.points)
    target = phys_q[..., 0] ** 2
    coef, *_ = np.linalg.lstsq(vals_q, target, rcond=None)
    assert np.allclose(vals @ coef, x**2, atol=1e-12)
    hess_fn = np.einsum("i,qiab->qab", coef, hess)
    assert np.allclose(hess_fn, [[[2.0, 0.0], [0.0, 0.0]]] * 2, atol=1e-10)
