import numpy as np
import pytest

from ciforge.channel import (
    complex_unstack,
    gram_inverse,
    perturb_csi,
    real_stack,
    realize,
    sample_channel,
    subrow_pseudoinverse,
    widely_linear,
    zf_precode,
)
from ciforge.errors import ConfigurationError, SingularChannelError, SingularSubblockError


def rand_h(rng, K, Nt):
    return (rng.standard_normal((K, Nt)) + 1j * rng.standard_normal((K, Nt))) / np.sqrt(2)


def test_sample_channel_deterministic_and_shape():
    a = sample_channel(1, 1, np.random.default_rng(5))
    b = sample_channel(1, 1, np.random.default_rng(5))
    assert a.shape == (1, 1) and a[0, 0] == b[0, 0]
    assert sample_channel(2, 4, np.random.default_rng(0)).shape == (2, 4)


def test_sample_channel_unit_power():
    rng = np.random.default_rng(1)
    H = np.concatenate([sample_channel(4, 4, rng).ravel() for _ in range(6250)])
    assert H.size == 10**5
    assert abs(np.mean(np.abs(H) ** 2) - 1) < 0.02
    # circular: real and imaginary parts carry half the power each
    assert abs(np.var(H.real) - 0.5) < 0.02


@pytest.mark.parametrize("K,Nt", [(0, 1), (3, 2), (2.5, 4)])
def test_sample_channel_bad_dims(K, Nt):
    with pytest.raises(ConfigurationError):
        sample_channel(K, Nt, np.random.default_rng(0))


def test_perturb_csi():
    rng = np.random.default_rng(2)
    H = rand_h(rng, 10, 10)
    assert np.array_equal(perturb_csi(H, 0.0, rng), H)
    E = np.concatenate([(perturb_csi(H, 0.01, rng) - H).ravel() for _ in range(1000)])
    assert E.size == 10**5
    assert abs(np.mean(np.abs(E) ** 2) / 0.01 - 1) < 0.05
    assert perturb_csi(H, 0.01, rng).shape == H.shape
    with pytest.raises(ConfigurationError):
        perturb_csi(H, -1.0, rng)


def test_perturb_csi_stream_alignment():
    # a zero variance must consume the same draws as a nonzero one
    H = np.ones((2, 3), dtype=complex)
    r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
    perturb_csi(H, 0.0, r1)
    perturb_csi(H, 0.5, r2)
    assert r1.random() == r2.random()


def test_widely_linear_small_cases():
    assert np.array_equal(widely_linear(np.array([[1.0 + 0j]])), np.eye(2))
    assert np.array_equal(widely_linear(np.array([[1j]])), np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_quadratic_form_equivalence():
    rng = np.random.default_rng(3)
    for _ in range(100):
        H = rand_h(rng, 3, 5)
        s = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        ref = np.real(np.conj(s) @ np.linalg.solve(H @ H.conj().T, s))
        x = real_stack(s)
        val = x @ gram_inverse(widely_linear(H)) @ x
        assert abs(val - ref) <= 1e-9 * abs(ref)


def test_widely_linear_gram_identity():
    rng = np.random.default_rng(4)
    H = rand_h(rng, 4, 7)
    Hd = widely_linear(H)
    assert np.allclose(Hd @ Hd.T, widely_linear(H @ H.conj().T), atol=1e-10, rtol=0)


def test_stack_roundtrip():
    s = np.array([1 + 2j, -3 + 0.5j])
    assert np.array_equal(real_stack(s), [1, -3, 2, 0.5])
    assert np.array_equal(complex_unstack(real_stack(s)), s)


def test_gram_inverse():
    assert np.allclose(gram_inverse(np.eye(4)), np.eye(4))
    assert np.allclose(gram_inverse(2 * np.eye(4)), 0.25 * np.eye(4))
    rng = np.random.default_rng(5)
    Hd = rng.standard_normal((8, 16))
    Q = gram_inverse(Hd)
    assert np.max(np.abs(Q @ Hd @ Hd.T - np.eye(8))) <= 1e-8
    assert np.array_equal(Q, Q.T)
    assert np.allclose(gram_inverse(3.0 * Hd), Q / 9.0, rtol=1e-9, atol=0)


def test_gram_inverse_singular():
    Hd = np.array([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(SingularChannelError):
        gram_inverse(Hd)
    with pytest.raises(SingularChannelError):
        gram_inverse(np.diag([1.0, 1e-6]), cond_cap=1e10)


def test_zf_precode():
    x, a2 = zf_precode(np.eye(2, dtype=complex), np.array([1, 0], dtype=complex))
    assert np.allclose(x, [1, 0]) and a2 == pytest.approx(1.0)
    rng = np.random.default_rng(6)
    H = rand_h(rng, 4, 6)
    s = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    x, a2 = zf_precode(H, s)
    assert np.max(np.abs(H @ x - s)) <= 1e-8
    Q = realize(H).Q
    assert abs(real_stack(s) @ Q @ real_stack(s) - a2) <= 1e-9 * a2


def test_subrow_pseudoinverse_full_rows():
    rng = np.random.default_rng(7)
    Hd = rng.standard_normal((8, 16))
    Q = gram_inverse(Hd)
    assert np.allclose(subrow_pseudoinverse(Q, Hd, np.arange(8)), Hd.T @ Q, atol=1e-9, rtol=0)


def test_subrow_pseudoinverse_matches_direct():
    rng = np.random.default_rng(8)
    for _ in range(100):
        Hd = rng.standard_normal((8, 16))
        rows = np.sort(rng.choice(8, 6, replace=False))
        P = subrow_pseudoinverse(gram_inverse(Hd), Hd, rows)
        assert np.max(np.abs(Hd[rows] @ P - np.eye(6))) <= 1e-7
        assert np.allclose(P, np.linalg.pinv(Hd[rows]), atol=1e-8, rtol=0)


def test_subrow_pseudoinverse_errors():
    with pytest.raises(ConfigurationError):
        subrow_pseudoinverse(np.eye(2), np.eye(2), [])
    Q = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(SingularSubblockError):
        subrow_pseudoinverse(Q, np.eye(3), [0])
