import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlink.dynamics import DriveTerm, Hamiltonian, IntegrationError, evolve, lindblad_rhs
from qlink.hilbert import (
    CollapseChannel,
    DensityMatrix,
    Operator,
    SpaceLayout,
    ketbra,
    pure_state,
)
from qlink.units import MHZ

TWO = SpaceLayout((2,))
SX = Operator(TWO, np.array([[0, 1], [1, 0]], dtype=complex))
SM = Operator(TWO, np.array([[0, 1], [0, 0]], dtype=complex))
EXCITED = pure_state(TWO, np.array([0, 1], dtype=complex))
GROUND = pure_state(TWO, np.array([1, 0], dtype=complex))


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


class TestLindbladRhs:
    def test_pure_decay_rate(self):
        kappa = 0.05  # rad/ns
        ch = CollapseChannel(np.sqrt(kappa) * SM)
        out = lindblad_rhs(Operator(TWO, np.zeros((2, 2))), [ch], EXCITED)
        assert out[1, 1].real == pytest.approx(-kappa, rel=1e-12)

    def test_no_channels_no_hamiltonian_is_zero(self):
        out = lindblad_rhs(Operator(TWO, np.zeros((2, 2))), [], EXCITED)
        np.testing.assert_allclose(out, 0.0)

    def test_trace_of_derivative_vanishes(self):
        rng = np.random.default_rng(5)
        h = Operator(SpaceLayout((3,)), random_hermitian(rng, 3))
        l = Operator(SpaceLayout((3,)), rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
        rho = pure_state(SpaceLayout((3,)), rng.normal(size=3) + 1j * rng.normal(size=3))
        out = lindblad_rhs(h, [CollapseChannel(l)], rho)
        assert abs(np.trace(out)) < 1e-12

    def test_layout_mismatch(self):
        from qlink.hilbert import LayoutMismatchError
        h = Operator(SpaceLayout((3,)), np.zeros((3, 3)))
        with pytest.raises(LayoutMismatchError):
            lindblad_rhs(h, [], EXCITED)


@settings(deadline=None, max_examples=20)
@given(st.integers(0, 1000))
def test_rhs_preserves_hermiticity_and_trace(seed):
    rng = np.random.default_rng(seed)
    d = 3
    h = Operator(SpaceLayout((d,)), random_hermitian(rng, d))
    ls = [CollapseChannel(Operator(SpaceLayout((d,)),
                                   rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))))
          for _ in range(2)]
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    rho = DensityMatrix(SpaceLayout((d,)), rho / np.trace(rho).real)
    out = lindblad_rhs(h, ls, rho)
    assert abs(np.trace(out)) < 1e-10
    assert np.max(np.abs(out - out.conj().T)) < 1e-10


class TestEvolve:
    def test_rabi_oscillation(self):
        omega = 10.0 * MHZ  # 10 MHz drive, angular
        h = Operator(TWO, 0.5 * omega * SX.mat)
        times = np.linspace(0.0, 200.0, 101)
        traj = evolve(GROUND, h, [], times, observers={"pe": ketbra(2, 1, 1)})
        expected = np.sin(0.5 * omega * times) ** 2
        np.testing.assert_allclose(traj.expectations["pe"].real, expected, atol=1e-6)

    def test_pure_decay(self):
        kappa = 0.02
        ch = CollapseChannel(np.sqrt(kappa) * SM)
        times = np.linspace(0.0, 150.0, 61)
        traj = evolve(EXCITED, Operator(TWO, np.zeros((2, 2))), [ch], times,
                      observers={"pe": ketbra(2, 1, 1)})
        np.testing.assert_allclose(traj.expectations["pe"].real,
                                   np.exp(-kappa * times), atol=1e-6)

    def test_final_state_valid_and_hermitian_along_the_way(self):
        rng = np.random.default_rng(7)
        d = 3
        h = Operator(SpaceLayout((d,)), 0.1 * random_hermitian(rng, d))
        ch = CollapseChannel(Operator(SpaceLayout((d,)), 0.1 * (
            rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))))
        rho0 = pure_state(SpaceLayout((d,)), rng.normal(size=d) + 1j * rng.normal(size=d))
        times = np.linspace(0.0, 50.0, 26)
        traj = evolve(rho0, h, [ch], times, snapshot_stride=5)
        traj.final.validate(eig_tol=1e-6)
        for snap in traj.snapshots:
            assert np.max(np.abs(snap.mat - snap.mat.conj().T)) < 1e-8
            assert abs(np.trace(snap.mat).real - 1.0) < 1e-6

    def test_trace_drift_detected(self):
        # a deliberately non-trace-preserving "channel list" cannot be built
        # through the API, so force drift with an absurd step via max_rate=0
        # override: instead check the drift guard wiring by a huge Hamiltonian
        # and a max_rate lie that makes RK4 unstable.
        h = Operator(TWO, 5.0 * SX.mat)
        with pytest.raises(IntegrationError) as err:
            evolve(EXCITED, h, [CollapseChannel(2.0 * SM)],
                   np.linspace(0.0, 400.0, 5), max_rate=1e-3)
        assert err.value.time > 0

    def test_fourth_order_convergence(self):
        # halving the step reduces the final-state error by >= 8x
        omega = 0.3
        kappa = 0.05
        h = Operator(TWO, 0.5 * omega * SX.mat)
        ch = CollapseChannel(np.sqrt(kappa) * SM)
        times = np.array([0.0, 40.0])

        def final(rate):
            return evolve(EXCITED, h, [ch], times, max_rate=rate).final.mat

        reference = final(64.0)  # very fine step
        err_coarse = np.max(np.abs(final(1.0) - reference))
        err_fine = np.max(np.abs(final(2.0) - reference))
        assert err_coarse / err_fine >= 8.0

    def test_time_dependent_drive_interpolation(self):
        # pi pulse with a triangular envelope: area = omega_peak * T / 2
        t_end = 100.0
        peak = 2.0 * np.pi / t_end  # makes the integral equal pi
        grid = np.linspace(0.0, t_end, 401)
        env = peak * (1.0 - np.abs(2.0 * grid / t_end - 1.0))
        ham = Hamiltonian(Operator(TWO, np.zeros((2, 2))),
                          (DriveTerm(0.5 * SX, grid, env),))
        traj = evolve(GROUND, ham, [], np.linspace(0.0, t_end, 51),
                      observers={"pe": ketbra(2, 1, 1)}, max_rate=peak * 20)
        assert traj.expectations["pe"][-1].real == pytest.approx(1.0, abs=1e-6)

    def test_record_times_must_increase(self):
        with pytest.raises(ValueError):
            evolve(GROUND, Operator(TWO, np.zeros((2, 2))), [], np.array([0.0, 0.0, 1.0]))
