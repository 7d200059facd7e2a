import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ttmkit import jcmodel
from ttmkit.numlin import convolve_trapezoid, expm, frobenius

finite = st.floats(-1.0, 1.0, allow_nan=False)


def mp_expm(L, t=1.0):
    with mpmath.workdps(40):
        M = mpmath.matrix((np.asarray(L) * t).tolist())
        return np.array(mpmath.expm(M).tolist(), dtype=complex)


def test_expm_zero_time_is_identity():
    L = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(expm(L, 0.0), np.eye(2))


def test_expm_diagonal():
    a, b, t = -0.3, 1.7, 0.9
    np.testing.assert_allclose(expm(np.diag([a, b]), t),
                               np.diag([np.exp(a * t), np.exp(b * t)]), rtol=1e-14)


def test_expm_coherence_generator_entry():
    # oracle: the closed coherence map and a 40-digit exponential
    p = jcmodel.ModelParams(1.0, 0.8)
    ref = mp_expm(jcmodel.liouvillian_B(p), 1.0)[0, 0]
    assert abs(ref - 0.5949662326378878) < 1e-15
    assert abs(expm(jcmodel.liouvillian_B(p), 1.0)[0, 0] - ref) < 1e-14


@pytest.mark.parametrize("scale", [0.1, 5.0, 25.0, 50.0])
def test_expm_relative_accuracy(scale):
    rng = np.random.default_rng(int(scale * 10))
    L = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    L *= scale / frobenius(L)
    ref = mp_expm(L)
    assert frobenius(expm(L) - ref) / frobenius(ref) < 1e-12


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_expm_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        expm(np.array([[bad, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        expm(np.eye(2), bad)


def test_expm_rejects_non_square():
    with pytest.raises(ValueError):
        expm(np.zeros((2, 3)))


@settings(max_examples=40, deadline=None)
@given(arrays(complex, (4, 4), elements=st.complex_numbers(max_magnitude=1.0)),
       st.floats(0, 2), st.floats(0, 2))
def test_expm_semigroup(L, t1, t2):
    n = frobenius(L)
    if n > 5:
        L = L * 5 / n
    np.testing.assert_allclose(expm(L, t1 + t2), expm(L, t1) @ expm(L, t2), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(arrays(float, (4, 4), elements=finite), st.floats(0, 2))
def test_expm_derivative(L, t):
    h = 1e-5
    fd = (expm(L, t + h) - expm(L, t - h)) / (2 * h)
    np.testing.assert_allclose(fd, L @ expm(L, t), atol=1e-6)


def test_frobenius_examples():
    assert frobenius(np.zeros((3, 3))) == 0.0
    assert frobenius(np.eye(2)) == pytest.approx(np.sqrt(2), abs=1e-15)
    M = np.array([[1 + 2j, 3], [0, -4j]])
    assert frobenius(M) == frobenius(M.T)


@settings(max_examples=50, deadline=None)
@given(arrays(complex, (3, 3), elements=st.complex_numbers(max_magnitude=10)),
       arrays(complex, (3, 3), elements=st.complex_numbers(max_magnitude=10)),
       st.complex_numbers(max_magnitude=10))
def test_frobenius_is_a_norm(A, B, a):
    assert frobenius(A + B) <= frobenius(A) + frobenius(B) + 1e-12
    assert frobenius(a * A) == pytest.approx(abs(a) * frobenius(A), abs=1e-12, rel=1e-14)
    assert frobenius(A) >= 0


def test_convolve_zero_kernel():
    assert np.all(convolve_trapezoid(np.zeros(10), np.ones(10), 0.1) == 0)


def test_convolve_constants_exact():
    dt = 0.01
    out = convolve_trapezoid(np.ones(101), np.ones(101), dt)
    np.testing.assert_allclose(out, dt * np.arange(101), atol=1e-13)


def test_convolve_exponential_second_order():
    errs = []
    for n in (50, 100, 200):
        dt = 1.0 / n
        s = dt * np.arange(n + 1)
        out = convolve_trapezoid(np.exp(-s), np.ones(n + 1), dt)
        errs.append(abs(out[-1] - (1 - np.exp(-1))))
    assert errs[0] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_convolve_length_mismatch():
    with pytest.raises(ValueError):
        convolve_trapezoid(np.ones(5), np.ones(6), 0.1)
    with pytest.raises(ValueError):
        convolve_trapezoid(np.ones(1), np.ones(1), 0.1)
