import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.transform import Rotation

from chebnav import quatalgebra as qa

from helpers import random_unit_quat

finite = st.floats(-10, 10, allow_nan=False)
quats = arrays(np.float64, 4, elements=finite)
vecs = arrays(np.float64, 3, elements=finite)
unit_quats = quats.filter(lambda q: np.linalg.norm(q) > 1e-3).map(lambda q: q / np.linalg.norm(q))


def test_identity_and_basis_products():
    q = np.array([0.3, -0.2, 0.5, 0.1])
    np.testing.assert_array_equal(qa.quat_mul(qa.IDENTITY, q), q)
    i, j = [0, 1, 0, 0], [0, 0, 1, 0]
    np.testing.assert_array_equal(qa.quat_mul(i, j), [0, 0, 0, 1])
    np.testing.assert_array_equal(qa.quat_mul(j, i), [0, 0, 0, -1])


@settings(max_examples=100)
@given(quats, quats)
def test_norm_is_multiplicative(a, b):
    lhs = qa.norm(qa.quat_mul(a, b))
    assert lhs == pytest.approx(qa.norm(a) * qa.norm(b), rel=1e-12, abs=1e-12)


@settings(max_examples=100)
@given(quats, quats)
def test_bracket_matrices_reproduce_product(a, b):
    prod = qa.quat_mul(a, b)
    np.testing.assert_allclose(qa.qplus(a) @ b, prod, atol=1e-12)
    np.testing.assert_allclose(qa.qminus(b) @ a, prod, atol=1e-12)


def test_bracket_block_structure():
    np.testing.assert_array_equal(qa.qplus(qa.IDENTITY), np.eye(4))
    q = np.array([0.5, 0.1, -0.2, 0.3])
    s, eta = q[0], q[1:]
    for sign, mat in ((1, qa.qplus(q)), (-1, qa.qminus(q))):
        np.testing.assert_allclose(mat[0], [s, *(-eta)])
        np.testing.assert_allclose(mat[1:, 0], eta)
        np.testing.assert_allclose(mat[1:, 1:], s * np.eye(3) + sign * qa.skew(eta))


@settings(max_examples=100)
@given(quats, quats, quats)
def test_associativity(a, b, c):
    lhs = qa.quat_mul(qa.quat_mul(a, b), c)
    rhs = qa.quat_mul(a, qa.quat_mul(b, c))
    np.testing.assert_allclose(lhs, rhs, atol=1e-13 * max(1.0, np.max(np.abs(lhs))))


@settings(max_examples=50)
@given(quats)
def test_conjugate_identities(q):
    np.testing.assert_array_equal(qa.conj(qa.conj(q)), q)
    np.testing.assert_allclose(qa.quat_mul(q, qa.conj(q)), [np.dot(q, q), 0, 0, 0], atol=1e-12)


def test_conj_identity_and_no_aliasing():
    np.testing.assert_array_equal(qa.conj(qa.IDENTITY), qa.IDENTITY)
    q = np.array([1.0, 2.0, 3.0, 4.0])
    qa.conj(q)
    np.testing.assert_array_equal(q, [1, 2, 3, 4])


def test_skew_examples():
    np.testing.assert_array_equal(qa.skew([0, 0, 0]), np.zeros((3, 3)))
    np.testing.assert_array_equal(qa.skew([1, 0, 0]) @ [0, 1, 0], [0, 0, 1])
    a = np.array([0.3, -1.2, 2.0])
    np.testing.assert_array_equal(qa.skew(a).T, -qa.skew(a))


@settings(max_examples=50)
@given(vecs, vecs)
def test_skew_is_cross_product(a, b):
    np.testing.assert_allclose(qa.skew(a) @ b, np.cross(a, b), atol=1e-12)


def test_dcm_examples():
    np.testing.assert_allclose(qa.quat_to_dcm(qa.IDENTITY), np.eye(3))
    c = np.cos(np.pi / 4)
    np.testing.assert_allclose(qa.quat_to_dcm([c, 0, 0, c]) @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_dcm_rejects_non_unit():
    with pytest.raises(ValueError):
        qa.quat_to_dcm([1.0, 0.1, 0.0, 0.0])


def test_dcm_matches_scipy_active_rotation():
    rng = np.random.default_rng(7)
    for q in random_unit_quat(rng, 20):
        scipy_q = np.r_[q[1:], q[0]]  # scipy is scalar-last
        np.testing.assert_allclose(qa.quat_to_dcm(q), Rotation.from_quat(scipy_q).as_matrix(), atol=1e-14)


@settings(max_examples=60)
@given(unit_quats, vecs)
def test_dcm_properties(q, v):
    C = qa.quat_to_dcm(q)
    np.testing.assert_allclose(C.T @ C, np.eye(3), atol=1e-13)
    assert np.linalg.det(C) == pytest.approx(1.0, abs=1e-13)
    np.testing.assert_allclose(qa.quat_to_dcm(-q), C, atol=1e-15)
    np.testing.assert_allclose(C @ v, qa.rotate(q, v), atol=1e-13 * max(1.0, np.max(np.abs(v))))


@settings(max_examples=60)
@given(quats, vecs)
def test_rotate_equals_sandwich_product(q, v):
    sandwich = qa.quat_mul(qa.quat_mul(q, qa.as_quat(v)), qa.conj(q))
    scale = max(1.0, float(np.dot(q, q) * np.max(np.abs(v))))
    np.testing.assert_allclose(qa.rotate(q, v), sandwich[1:], atol=1e-13 * scale)
    assert abs(sandwich[0]) <= 1e-12 * scale


def test_dcm_to_quat_round_trip():
    rng = np.random.default_rng(8)
    for q in random_unit_quat(rng, 50):
        back = qa.dcm_to_quat(qa.quat_to_dcm(q))
        assert back[0] >= 0
        np.testing.assert_allclose(back, q if q[0] >= 0 else -q, atol=1e-14)


@pytest.mark.parametrize("angle", [0.0, 1e-12, 1e-6, 1e-3, 0.5, 3.0])
def test_rotvec_quaternion(angle):
    axis = np.array([1.0, -2.0, 0.5]) / np.linalg.norm([1.0, -2.0, 0.5])
    q = qa.quat_from_rotvec(angle * axis)
    expected = np.r_[np.cos(angle / 2), np.sin(angle / 2) * axis]
    np.testing.assert_allclose(q, expected, atol=1e-16)
    np.testing.assert_allclose(qa.quat_from_axis_angle(axis * 3, angle), expected, atol=1e-16)


@pytest.mark.parametrize("angle", [1e-9, 1e-6, 0.1, 2.0])
def test_principal_angle_recovers_rotation(angle):
    rng = np.random.default_rng(9)
    q = random_unit_quat(rng)
    axis = rng.normal(size=3)
    dq = qa.quat_from_axis_angle(axis, angle)
    assert qa.principal_angle(q, qa.quat_mul(q, dq)) == pytest.approx(angle, rel=1e-9, abs=1e-15)
    # sign of either quaternion does not matter
    assert qa.principal_angle(-q, qa.quat_mul(q, dq)) == pytest.approx(angle, rel=1e-9, abs=1e-15)
