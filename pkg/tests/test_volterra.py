"""Tests for the endpoint series: terms, kernels, certificates, exact oracle."""

import math

import numpy as np
import pytest
import scipy.linalg

from nwidthreach.volterra import (
    BilinearModel,
    ControlSignal,
    SeriesDivergenceError,
    endpoint_exact,
    kernel_eval,
    tail_bound,
    term_bound,
    volterra_terms,
)


def _scalar_model(a=0.0, b=1.0, M=1.0, omega=0.0):
    return BilinearModel.from_matrices(
        np.array([[a]]), np.array([[b]]), M=M, omega=omega
    )


def _random_model(rng, dim, complex_field=False):
    A = rng.normal(size=(dim, dim))
    if complex_field:
        A = A + 1j * rng.normal(size=(dim, dim))
        A = (A - A.conj().T) / 2.0  # skew-Hermitian: isometric group
        B = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        return BilinearModel.from_matrices(A, B, M=1.0, omega=0.0)
    A = (A - A.T) / 2.0  # skew-symmetric: isometric group
    B = rng.normal(size=(dim, dim))
    return BilinearModel.from_matrices(A, B, M=1.0, omega=0.0)


def test_scalar_terms_inverse_factorials():
    m = _scalar_model()
    u = ControlSignal(1.0, np.ones(4))
    terms = volterra_terms(m, np.array([1.0]), u, 8)
    for k in range(9):
        assert abs(terms[k][0] - 1.0 / math.factorial(k)) < 1e-10, k


def test_zero_control_kills_all_terms():
    rng = np.random.default_rng(3)
    m = _random_model(rng, 3)
    x0 = rng.normal(size=3)
    u = ControlSignal(2.0, np.zeros(5))
    terms = volterra_terms(m, x0, u, 4)
    assert np.allclose(terms[0], m.A_action(2.0, x0), atol=1e-12)
    for k in range(1, 5):
        assert np.linalg.norm(terms[k]) < 1e-14


def test_first_term_is_linear_in_control():
    rng = np.random.default_rng(5)
    m = _random_model(rng, 3)
    x0 = rng.normal(size=3)
    va = rng.normal(size=6)
    vb = rng.normal(size=6)
    ua, ub = ControlSignal(1.0, va), ControlSignal(1.0, vb)
    usum = ControlSignal(1.0, va + vb)
    v1a = volterra_terms(m, x0, ua, 1)[1]
    v1b = volterra_terms(m, x0, ub, 1)[1]
    v1sum = volterra_terms(m, x0, usum, 1)[1]
    assert np.allclose(v1sum, v1a + v1b, atol=1e-12)


def test_term_homogeneity():
    rng = np.random.default_rng(7)
    m = _random_model(rng, 2)
    x0 = rng.normal(size=2)
    u = ControlSignal(0.8, rng.normal(size=4))
    base = volterra_terms(m, x0, u, 5)
    for s in (0.5, -2.0):
        scaled = volterra_terms(m, x0, u.scaled(s), 5)
        for k in range(1, 6):
            assert np.allclose(scaled[k], s**k * base[k], rtol=1e-12, atol=1e-13), k


def test_kernel_eval_trivial_cases():
    m = BilinearModel.from_matrices(np.zeros((2, 2)), np.zeros((2, 2)))
    out = kernel_eval(m, np.array([1.0, 2.0]), 1.0, [0.5])
    assert np.allclose(out, 0.0)
    s = _scalar_model(b=3.0)
    for k in range(1, 4):
        out = kernel_eval(s, np.array([1.0]), 1.0, np.linspace(0.2, 0.8, k))
        assert out[0] == pytest.approx(3.0**k, rel=1e-12)


def test_kernel_eval_matches_direct_products():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(3, 3))
    B = rng.normal(size=(3, 3))
    m = BilinearModel.from_matrices(A, B, M=10.0, omega=3.0)
    x0 = rng.normal(size=3)
    t, s1, s2 = 1.2, 0.3, 0.9
    expected = (
        scipy.linalg.expm((t - s2) * A)
        @ B
        @ scipy.linalg.expm((s2 - s1) * A)
        @ B
        @ scipy.linalg.expm(s1 * A)
        @ x0
    )
    assert np.allclose(kernel_eval(m, x0, t, [s1, s2]), expected, atol=1e-10)


def test_kernel_eval_validation():
    m = _scalar_model()
    with pytest.raises(ValueError):
        kernel_eval(m, np.array([1.0]), 1.0, [0.8, 0.2])
    with pytest.raises(ValueError):
        kernel_eval(m, np.array([1.0]), 1.0, [0.5, 1.5])


def test_chain_matches_simplex_quadrature():
    # direct iterated integrals of the kernel over the ordered simplex,
    # for a constant control (single cell), orders 2 and 3
    rng = np.random.default_rng(13)
    A = rng.normal(size=(2, 2)) * 0.5
    B = rng.normal(size=(2, 2)) * 0.5
    m = BilinearModel.from_matrices(A, B, M=5.0, omega=2.0)
    x0 = rng.normal(size=2)
    T, u0 = 0.7, 1.3
    u = ControlSignal(T, np.array([u0]))
    terms = volterra_terms(m, x0, u, 3)

    x2, w2 = np.polynomial.legendre.leggauss(24)
    v2 = np.zeros(2)
    for b2, wb in zip((x2 + 1) * T / 2, w2 * T / 2):
        for b1, wa in zip((x2 + 1) * b2 / 2, w2 * b2 / 2):
            v2 += wb * wa * kernel_eval(m, x0, T, [b1, b2])
    assert np.allclose(terms[2], u0**2 * v2, atol=1e-9)

    x3, w3 = np.polynomial.legendre.leggauss(12)
    v3 = np.zeros(2)
    for b3, wc in zip((x3 + 1) * T / 2, w3 * T / 2):
        for b2, wb in zip((x3 + 1) * b3 / 2, w3 * b3 / 2):
            for b1, wa in zip((x3 + 1) * b2 / 2, w3 * b2 / 2):
                v3 += wc * wb * wa * kernel_eval(m, x0, T, [b1, b2, b3])
    assert np.allclose(terms[3], u0**3 * v3, atol=1e-8)


def test_term_bound_arithmetic():
    m = _scalar_model()
    assert term_bound(m, 1.0, 1.0, 0.5, 2) == pytest.approx(0.25)
    assert term_bound(m, 1.0, 1.0, 0.0, 3) == 0.0
    grown = _scalar_model(M=2.0, omega=0.5)
    expect = 2.0 * np.exp(0.5 * 2.0) * 3.0 * (2.0 * 1.0 * np.sqrt(2.0) * 0.25) ** 2
    assert term_bound(grown, 3.0, 2.0, 0.25, 2) == pytest.approx(expect, rel=1e-14)
    with pytest.raises(ValueError):
        term_bound(m, 1.0, 1.0, 0.5, 0)


def test_term_norms_below_term_bound():
    m = _scalar_model()
    u = ControlSignal(1.0, np.ones(4))
    terms = volterra_terms(m, np.array([1.0]), u, 8)
    for k in range(1, 9):
        assert np.linalg.norm(terms[k]) <= term_bound(m, 1.0, 1.0, u.l2_norm, k) + 1e-10


def test_term_norms_below_term_bound_random():
    rng = np.random.default_rng(17)
    for _ in range(10):
        dim = int(rng.integers(2, 5))
        m = _random_model(rng, dim, complex_field=bool(rng.integers(0, 2)))
        x0 = rng.normal(size=dim).astype(m.A_matrix.dtype)
        x0 /= np.linalg.norm(x0)
        u = ControlSignal(0.5, rng.normal(size=8) * 0.4)
        terms = volterra_terms(m, x0, u, 6)
        for k in range(1, 7):
            bound = term_bound(m, float(np.linalg.norm(x0)), 0.5, u.l2_norm, k)
            assert np.linalg.norm(terms[k]) <= bound + 1e-10, k


def test_tail_bound_values():
    m = _scalar_model()
    assert tail_bound(m, 1.0, 1.0, 0.5, 2) == pytest.approx(0.5)
    assert tail_bound(m, 1.0, 1.0, 0.0, 2) == 0.0
    # q = 0.9 via r = 0.9 on the unit-coefficient scalar model
    assert tail_bound(m, 1.0, 1.0, 0.9, 5) == pytest.approx(0.9**5 / 0.1, rel=1e-12)
    with pytest.raises(SeriesDivergenceError):
        tail_bound(m, 1.0, 1.0, 1.1, 2)
    with pytest.raises(SeriesDivergenceError):
        tail_bound(m, 1.0, 4.0, 0.5, 2)  # q = 1 exactly


def test_endpoint_exact_zero_control_and_scalar():
    rng = np.random.default_rng(19)
    m = _random_model(rng, 3)
    x0 = rng.normal(size=3)
    u = ControlSignal(1.5, np.zeros(4))
    assert np.allclose(endpoint_exact(m, x0, u), m.A_action(1.5, x0), atol=1e-10)
    s = _scalar_model(a=0.3, b=-0.7, omega=0.3)
    u0 = ControlSignal(2.0, np.full(5, 0.4))
    expect = np.exp((0.3 + 0.4 * -0.7) * 2.0)
    assert endpoint_exact(s, np.array([1.0]), u0)[0] == pytest.approx(expect, rel=1e-12)


def test_series_matches_oracle_within_tail():
    rng = np.random.default_rng(23)
    for trial in range(20):
        dim = int(rng.integers(2, 5))
        complex_field = bool(rng.integers(0, 2))
        m = _random_model(rng, dim, complex_field)
        x0 = rng.normal(size=dim).astype(m.A_matrix.dtype)
        x0 /= np.linalg.norm(x0)
        T = float(rng.uniform(0.2, 1.0))
        cells = int(rng.integers(3, 9))
        raw = rng.normal(size=cells)
        # scale the control so q = M*|B|*sqrt(T)*r stays safely summable
        q_target = float(rng.uniform(0.1, 0.8))
        r = q_target / (m.M * m.B_norm * np.sqrt(T))
        u = ControlSignal(T, raw * r / np.sqrt(np.sum(raw**2) * T / cells))
        terms = volterra_terms(m, x0, u, 8)
        series = np.sum(terms, axis=0)
        oracle = endpoint_exact(m, x0, u)
        tail = tail_bound(m, float(np.linalg.norm(x0)), T, u.l2_norm, 9)
        assert np.linalg.norm(series - oracle) <= tail + 1e-8, trial


def test_isometric_action_norm_preservation():
    rng = np.random.default_rng(29)
    m = _random_model(rng, 4, complex_field=True)
    x0 = rng.normal(size=4) + 1j * rng.normal(size=4)
    for t in (0.1, 1.0, 3.7):
        assert np.linalg.norm(m.A_action(t, x0)) == pytest.approx(
            np.linalg.norm(x0), rel=1e-12
        )


def test_control_signal_validation():
    u = ControlSignal(2.0, np.array([1.0, -1.0]))
    assert u.l2_norm == pytest.approx(np.sqrt(2.0))
    assert u.dt == 1.0 and u.cells == 2
    with pytest.raises(ValueError):
        ControlSignal(0.0, np.array([1.0]))
    with pytest.raises(ValueError):
        ControlSignal(1.0, np.array([]))
    with pytest.raises(ValueError):
        ControlSignal(2.0, np.array([1.0, -1.0]), l2_norm=1.0)
    ok = ControlSignal(2.0, np.array([1.0, -1.0]), l2_norm=float(np.sqrt(2.0)))
    assert ok.l2_norm == pytest.approx(np.sqrt(2.0))


def test_model_validation():
    with pytest.raises(ValueError):
        BilinearModel.from_matrices(np.zeros((2, 2)), np.zeros((2, 2)), M=0.5)
    with pytest.raises(ValueError):
        # growing semigroup declared as a contraction
        BilinearModel.from_matrices(np.eye(2), np.zeros((2, 2)), M=1.0, omega=0.0)
    ok = BilinearModel.from_matrices(np.eye(2), np.zeros((2, 2)), M=1.0, omega=1.0)
    assert ok.B_norm == 0.0
    assert ok.field_tag == "real"
