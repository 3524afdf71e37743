import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvqode import fock, kernels
from cvqode.gradients import batch_gradients
from cvqode.network import NetworkConfig, init_params

needs_compiled = pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")


@pytest.fixture
def backend():
    saved = kernels.get_backend()
    yield kernels.set_backend
    kernels.set_backend(saved)


def random_rows(rng, batch, width):
    return rng.normal(size=(batch, width)) + 1j * rng.normal(size=(batch, width))


def test_python_backend_always_available():
    assert "python" in kernels.available_backends()


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_python_mode_kernel_matches_dense_kron():
    rng = np.random.default_rng(0)
    d, n = 3, 3
    rows = random_rows(rng, 2, d**n)
    gate = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    for mode in range(n):
        ops = [np.eye(d)] * n
        ops[mode] = gate
        full = ops[0]
        for o in ops[1:]:
            full = np.kron(full, o)
        saved = kernels.get_backend()
        kernels.set_backend("python")
        try:
            got = kernels.apply_mode(gate, rows, mode, n, d)
        finally:
            kernels.set_backend(saved)
        np.testing.assert_allclose(got, rows @ full.T, atol=1e-12)


def test_python_pair_kernel_matches_dense_permutation():
    rng = np.random.default_rng(1)
    d, n = 3, 3
    rows = random_rows(rng, 2, d**n)
    gate = fock.beamsplitter_gate(0.7, d)
    # pair (0, 2): act on modes 0 and 2 of the tensor directly
    t = rows.reshape(2, d, d, d)
    want = np.einsum("abij,xikj->xakb", gate.reshape(d, d, d, d), t).reshape(2, -1)
    saved = kernels.get_backend()
    kernels.set_backend("python")
    try:
        got = kernels.apply_pair(gate, rows, 0, 2, n, d)
    finally:
        kernels.set_backend(saved)
    np.testing.assert_allclose(got, want, atol=1e-12)


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 3),
    d=st.integers(2, 6),
    batch=st.integers(1, 4),
    seed=st.integers(0, 2**16),
    diag=st.booleans(),
)
def test_single_mode_backends_agree(n, d, batch, seed, diag):
    rng = np.random.default_rng(seed)
    rows = random_rows(rng, batch, d**n)
    gate = rng.normal(size=d) + 1j * rng.normal(size=d) if diag else rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    fn = kernels.apply_diag if diag else kernels.apply_mode
    saved = kernels.get_backend()
    try:
        for mode in range(n):
            kernels.set_backend("python")
            a = fn(gate, rows, mode, n, d)
            kernels.set_backend("compiled")
            b = fn(gate, rows, mode, n, d)
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    finally:
        kernels.set_backend(saved)


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 4), d=st.integers(2, 5), seed=st.integers(0, 2**16), data=st.data())
def test_pair_backends_agree(n, d, seed, data):
    ma, mb = data.draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
    rng = np.random.default_rng(seed)
    rows = random_rows(rng, 3, d**n)
    gate = fock.beamsplitter_gate(rng.uniform(0, 2 * np.pi), d)
    saved = kernels.get_backend()
    try:
        kernels.set_backend("python")
        a = kernels.apply_pair(gate, rows, ma, mb, n, d)
        kernels.set_backend("compiled")
        b = kernels.apply_pair(gate, rows, ma, mb, n, d)
    finally:
        kernels.set_backend(saved)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


@needs_compiled
def test_full_gradient_engine_backends_agree(backend):
    cfg = NetworkConfig(num_modes=2, num_layers=2, cutoff=10)
    params = init_params(cfg, seed=0)
    xs = np.linspace(-1, 1, 7)
    backend("python")
    a = batch_gradients(xs, params, cfg)
    backend("compiled")
    b = batch_gradients(xs, params, cfg)
    for u, v in zip((a.y, a.dy_dx, a.dy_dtheta, a.d2y_dxdtheta), (b.y, b.dy_dx, b.dy_dtheta, b.d2y_dxdtheta)):
        np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-12)
