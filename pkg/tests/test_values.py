import math

import numpy as np
import pytest

from phaseplane.utils import PreconditionError
from phaseplane.values import (
    ComplexScalar,
    HilbertVector,
    SchattenMatrix,
    conjugate_exponent,
    dual_pair,
    lp_norm,
    make_space,
    schatten_norm,
)


def test_schatten_norm_examples():
    assert schatten_norm(np.eye(2), 2) == pytest.approx(math.sqrt(2))
    assert schatten_norm(np.diag([3.0, 4.0]), np.inf) == pytest.approx(4.0)
    assert schatten_norm(np.diag([3.0, 4.0]), 1) == pytest.approx(7.0)

    # Batches of matrices
    A = np.stack([np.eye(2), 2 * np.eye(2)])
    np.testing.assert_allclose(schatten_norm(A, 2), [math.sqrt(2), 2 * math.sqrt(2)])

    with pytest.raises(PreconditionError):
        schatten_norm(np.array([[np.nan, 0], [0, 1]]), 2)
    with pytest.raises(PreconditionError):
        schatten_norm(np.eye(2), 0.5)


def test_schatten_norm_against_closed_form_singular_values():
    rng = np.random.default_rng(0)
    for _ in range(200):
        A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        fro2 = np.sum(np.abs(A) ** 2)
        det = abs(np.linalg.det(A))
        root = math.sqrt(max(fro2**2 - 4 * det**2, 0.0))
        s1, s2 = math.sqrt((fro2 + root) / 2), math.sqrt(max((fro2 - root) / 2, 0.0))
        for p in (4 / 3, 2.0, 4.0):
            expected = (s1**p + s2**p) ** (1 / p)
            assert schatten_norm(A, p) == pytest.approx(expected, rel=1e-10)
        assert schatten_norm(A, np.inf) == pytest.approx(s1, rel=1e-10)
        # p = 2 is the Frobenius norm
        assert schatten_norm(A, 2) == pytest.approx(math.sqrt(fro2), rel=1e-12)


def test_conjugate_exponent():
    assert conjugate_exponent(2) == 2.0
    assert conjugate_exponent(4) == pytest.approx(4 / 3)
    assert conjugate_exponent(4 / 3) == pytest.approx(4.0)
    assert conjugate_exponent(1) == np.inf
    assert conjugate_exponent(np.inf) == 1.0


@pytest.mark.parametrize(
    "space",
    [ComplexScalar(), HilbertVector(d=4), SchattenMatrix(p=4 / 3, d=2), SchattenMatrix(p=4.0, d=3)],
)
def test_norm_axioms(space):
    rng = np.random.default_rng(3)
    x, y = space.random(rng, size=(50,)), space.random(rng, size=(50,))
    lam = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    lam_b = lam.reshape((50,) + (1,) * len(space.shape))

    assert np.all(space.norm(space.zero()) == 0)
    np.testing.assert_allclose(space.norm(lam_b * x), np.abs(lam) * space.norm(x), rtol=1e-10)
    assert np.all(space.norm(x + y) <= space.norm(x) + space.norm(y) + 1e-10)


@pytest.mark.parametrize(
    "space",
    [ComplexScalar(), HilbertVector(d=3), SchattenMatrix(p=4 / 3, d=2), SchattenMatrix(p=4.0, d=2)],
)
def test_holder_bound_for_pairing(space):
    rng = np.random.default_rng(4)
    x, xs = space.random(rng, size=(1000,)), space.random(rng, size=(1000,))
    lhs = np.abs(space.pair(x, xs))
    assert np.all(lhs <= space.norm(x) * space.dual_norm(xs) * (1 + 1e-10))


def test_dual_pair_examples():
    H = HilbertVector(d=3)
    e1 = H.identity()
    assert dual_pair(H, e1, e1) == 1
    assert dual_pair(H, e1, H.zero()) == 0

    S = SchattenMatrix(p=4.0, d=2)
    A = np.array([[1, 2j], [0, 1]])
    B = np.array([[1, 1], [1j, 0]])
    assert dual_pair(S, A, B) == pytest.approx(np.trace(A @ B.conj().T))
    assert S.dual() == SchattenMatrix(p=conjugate_exponent(4.0), d=2)

    with pytest.raises(PreconditionError):
        dual_pair(H, e1, np.ones(2))


def test_schatten_of_dimension_one_is_scalar():
    rng = np.random.default_rng(5)
    z = ComplexScalar().random(rng, size=(20,))
    for p in (4 / 3, 2.0, 4.0, np.inf):
        np.testing.assert_allclose(
            SchattenMatrix(p=p, d=1).norm(z.reshape(20, 1, 1)), ComplexScalar().norm(z), rtol=1e-13
        )


def test_make_space():
    assert make_space("scalar") == ComplexScalar()
    assert make_space("hilbert", dim=8) == HilbertVector(d=8)
    assert make_space("schatten", dim=2, p=4).exponent == 4.0
    assert make_space("schatten", dim=2).to_json() == {"kind": "schatten", "dim": 2, "p": 2.0}
    with pytest.raises(PreconditionError):
        make_space("banach")
    with pytest.raises(PreconditionError):
        make_space("hilbert", dim=9)
    with pytest.raises(PreconditionError):
        make_space("schatten", dim=2, p=1.0)


def test_lp_norm_examples():
    h = 0.01
    x = -10 + h * np.arange(2000)

    # Zero
    assert lp_norm(np.zeros(2000), h, ComplexScalar(), 2) == 0.0

    # Plateau of height one on [0, 1)
    plateau = np.zeros(2000, dtype=complex)
    plateau[1000:1100] = 1.0
    for p in (1, 2, 4, np.inf):
        assert lp_norm(plateau, h, ComplexScalar(), p) == pytest.approx(1.0)

    # Gaussian against its closed-form moments
    gauss = np.exp(-(x**2))
    for p in (1, 2, 3):
        assert lp_norm(gauss, h, ComplexScalar(), p) == pytest.approx(
            (math.pi / p) ** (1 / (2 * p)), abs=1e-8
        )

    # Hilbert L^2 is the l^2 norm of all entries
    H = HilbertVector(d=4)
    values = H.random(np.random.default_rng(6), size=(100,))
    assert lp_norm(values, h, H, 2) == pytest.approx(math.sqrt(np.sum(np.abs(values) ** 2) * h))

    with pytest.raises(PreconditionError):
        lp_norm(gauss, h, ComplexScalar(), 0.5)
