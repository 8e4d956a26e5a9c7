import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlink.hilbert import (
    CollapseChannel,
    DensityMatrix,
    LayoutMismatchError,
    Operator,
    SpaceLayout,
    StateValidationError,
    basis_state,
    destroy,
    embed,
    identity,
    ketbra,
    partial_trace,
    pure_state,
    tensor,
)


def random_density(rng, dims):
    d = int(np.prod(dims))
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(SpaceLayout(tuple(dims)), rho)


class TestLayout:
    def test_dim_is_product(self):
        assert SpaceLayout((3, 2, 3, 2)).dim == 36

    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            SpaceLayout((0, 2))

    def test_labels_must_match(self):
        with pytest.raises(ValueError):
            SpaceLayout((2, 2), ("only-one",))


class TestOperator:
    def test_layout_dimension_checked(self):
        with pytest.raises(ValueError):
            Operator(SpaceLayout((3,)), np.eye(2))

    def test_mismatched_layouts_refuse_to_combine(self):
        a = identity(SpaceLayout((2,)))
        b = identity(SpaceLayout((3,)))
        with pytest.raises(LayoutMismatchError):
            _ = a + b


class TestTensor:
    def test_identity_case(self):
        out = tensor([identity(SpaceLayout((2,))), identity(SpaceLayout((3,)))])
        assert out.layout.dims == (2, 3)
        np.testing.assert_allclose(out.mat, np.eye(6))

    def test_sigma_z_with_identity(self):
        sz = Operator(SpaceLayout((2,)), np.diag([1.0, -1.0]))
        out = tensor([sz, identity(SpaceLayout((2,)))])
        np.testing.assert_allclose(np.diag(out.mat).real, [1, 1, -1, -1])

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            tensor([])

    def test_embedded_lowering_matches_index_formula(self):
        # independent oracle: explicit Kronecker index arithmetic
        b = destroy(3)
        out = tensor([b, identity(SpaceLayout((2,)))])
        expected = np.zeros((6, 6), dtype=complex)
        for i1 in range(3):
            for i2 in range(3):
                for j1 in range(2):
                    for j2 in range(2):
                        expected[i1 * 2 + j1, i2 * 2 + j2] = b.mat[i1, i2] * (j1 == j2)
        np.testing.assert_allclose(out.mat, expected)
        embedded = embed(destroy(3), SpaceLayout((3, 2)), 0)
        np.testing.assert_allclose(embedded.mat, expected)


class TestDensityMatrix:
    def test_validates_good_state(self):
        rho = random_density(np.random.default_rng(0), (3,))
        rho.validate()

    def test_rejects_nonhermitian(self):
        mat = np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex)
        with pytest.raises(StateValidationError):
            DensityMatrix(SpaceLayout((2,)), mat).validate()

    def test_rejects_bad_trace(self):
        with pytest.raises(StateValidationError):
            DensityMatrix(SpaceLayout((2,)), np.eye(2)).validate()

    def test_rejects_negative(self):
        mat = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(StateValidationError):
            DensityMatrix(SpaceLayout((2,)), mat).validate()


class TestPartialTrace:
    def test_bell_marginals_are_maximally_mixed(self):
        bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
        rho = pure_state(SpaceLayout((2, 2)), bell)
        for keep in ([0], [1]):
            red = partial_trace(rho, keep)
            np.testing.assert_allclose(red.mat, np.eye(2) / 2, atol=1e-12)

    def test_product_state_reduces_to_factor(self):
        rng = np.random.default_rng(1)
        rho_a = random_density(rng, (3,))
        rho_b = random_density(rng, (2,))
        joint = DensityMatrix(SpaceLayout((3, 2)), np.kron(rho_a.mat, rho_b.mat))
        np.testing.assert_allclose(partial_trace(joint, [0]).mat, rho_a.mat, atol=1e-12)
        np.testing.assert_allclose(partial_trace(joint, [1]).mat, rho_b.mat, atol=1e-12)

    def test_composes_like_iterated_single_traces(self):
        rng = np.random.default_rng(2)
        rho = random_density(rng, (2, 3, 2, 2))
        direct = partial_trace(rho, [1, 3])
        step1 = partial_trace(rho, [1, 2, 3])   # drop factor 0
        step2 = partial_trace(step1, [0, 2])    # drop (new) factor 1
        np.testing.assert_allclose(direct.mat, step2.mat, atol=1e-12)

    def test_trace_preserved(self):
        rho = random_density(np.random.default_rng(3), (2, 3, 2))
        red = partial_trace(rho, [1])
        assert abs(np.trace(red.mat) - 1.0) < 1e-12

    def test_invalid_index_rejected(self):
        rho = random_density(np.random.default_rng(4), (2, 2))
        with pytest.raises(ValueError):
            partial_trace(rho, [2])
        with pytest.raises(ValueError):
            partial_trace(rho, [])


@settings(deadline=None, max_examples=25)
@given(st.integers(2, 4), st.integers(2, 4), st.integers(0, 10))
def test_partial_trace_random_products(da, db, seed):
    rng = np.random.default_rng(seed)
    rho_a = random_density(rng, (da,))
    rho_b = random_density(rng, (db,))
    joint = DensityMatrix(SpaceLayout((da, db)), np.kron(rho_a.mat, rho_b.mat))
    np.testing.assert_allclose(partial_trace(joint, [0]).mat, rho_a.mat, atol=1e-11)


def test_collapse_channel_rejects_nonfinite():
    op = Operator(SpaceLayout((2,)), np.array([[0, np.inf], [0, 0]]))
    with pytest.raises(ValueError):
        CollapseChannel(op)


def test_ketbra_and_basis():
    np.testing.assert_allclose(ketbra(3, 0, 1).mat @ basis_state(3, 1), basis_state(3, 0))
