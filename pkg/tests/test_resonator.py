import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from qlink.dynamics import evolve
from qlink.hilbert import CollapseChannel, Operator, SpaceLayout, embed, ketbra, pure_state
from qlink.resonator import (
    CoupledResonatorParams,
    EigenmodeDecomposition,
    EmissionContext,
    PoleError,
    diagonalize,
    flat_band_coupling,
    gamma_f,
    gamma_f_golden,
    modal_rate,
    rate_curve,
    reconstruct,
    response,
    s11,
)
from qlink.units import MHZ


def params(omega_r=9.5, omega_f=9.5, j=50.0, kappa=120.0, g=220.0):
    return CoupledResonatorParams(omega_r=omega_r, omega_f=omega_f,
                                  coupling_j=j, kappa=kappa, g=g)


class TestDiagonalize:
    def test_degenerate_symmetric_splitting(self):
        d = diagonalize(params(j=50.0, kappa=120.0))
        assert d.omega_plus == pytest.approx(9.55, abs=1e-12)
        assert d.omega_minus == pytest.approx(9.45, abs=1e-12)
        for coeff in (d.x, d.y, abs(d.z), abs(d.w)):
            assert coeff == pytest.approx(1 / np.sqrt(2), abs=1e-12)
        assert d.kappa_minus == pytest.approx(60.0, rel=1e-12)
        assert d.kappa_plus == pytest.approx(60.0, rel=1e-12)

    def test_j_zero_inner_mode_dark(self):
        d = diagonalize(params(omega_r=9.40, omega_f=9.48, j=0.0))
        assert d.omega_minus == pytest.approx(9.40)
        assert d.omega_plus == pytest.approx(9.48)
        # inner mode is the minus mode here and carries no external decay
        assert d.kappa_minus == pytest.approx(0.0, abs=1e-12)
        assert d.kappa_plus == pytest.approx(120.0, rel=1e-12)

    def test_sender_values_against_numeric_eigensolver(self):
        p = params(omega_r=9.393, omega_f=9.380, j=44.0, kappa=120.0, g=159.0)
        d = diagonalize(p)
        m = np.array([[9393.0, 44.0], [44.0, 9380.0]])
        vals, vecs = np.linalg.eigh(m)
        assert d.omega_minus * 1e3 == pytest.approx(vals[0], rel=1e-12)
        assert d.omega_plus * 1e3 == pytest.approx(vals[1], rel=1e-12)
        z, w = abs(vecs[1, 0]), abs(vecs[1, 1])
        assert d.kappa_minus == pytest.approx(120.0 * z * z, rel=1e-10)
        assert d.kappa_plus == pytest.approx(120.0 * w * w, rel=1e-10)

    def test_invariants(self):
        d = diagonalize(params(omega_r=9.41, omega_f=9.52, j=37.0, kappa=95.0))
        assert d.x ** 2 + d.y ** 2 == pytest.approx(1.0, abs=1e-10)
        assert d.z ** 2 + d.w ** 2 == pytest.approx(1.0, abs=1e-10)
        assert d.omega_plus >= d.omega_minus
        assert d.x >= 0 and d.y >= 0


@settings(deadline=None, max_examples=50)
@given(st.floats(9.2, 9.8), st.floats(9.2, 9.8), st.floats(1.0, 120.0), st.floats(5.0, 300.0))
def test_diagonalize_involution(omega_r, omega_f, j, kappa):
    p = params(omega_r=omega_r, omega_f=omega_f, j=j, kappa=kappa)
    wr, wf, jj, kk = reconstruct(diagonalize(p))
    assert wr == pytest.approx(omega_r, abs=1e-10)
    assert wf == pytest.approx(omega_f, abs=1e-10)
    assert jj == pytest.approx(j, abs=1e-7)
    assert kk == pytest.approx(kappa, rel=1e-10)


class TestResponse:
    def test_high_frequency_rolloff(self):
        d = diagonalize(params())
        peak = max(abs(response(d, d.omega_minus + 1e-4)[0]),
                   abs(response(d, d.omega_minus + 1e-4)[1]))
        far = 100.0 * d.kappa_total * 1e-3  # 100 bandwidths, in GHz
        rm, rp = response(d, d.center + far)
        assert abs(rm) < 1e-3 * peak
        assert abs(rp) < 1e-3 * peak

    def test_exact_pole_flagged(self):
        d = diagonalize(params(omega_r=9.40, omega_f=9.48, j=0.0))
        with pytest.raises(PoleError):
            response(d, 9.40)  # dark inner mode probed on resonance
        rm, rp = response(d, 9.41)  # off the pole: finite
        assert np.isfinite(rm) and np.isfinite(rp)

    def test_matches_steady_state_classical_ode(self):
        # independent oracle: drive the bare two-mode ODE to steady state
        p = params(omega_r=9.48, omega_f=9.52, j=50.0, kappa=120.0)
        d = diagonalize(p)
        kappa = p.kappa * MHZ
        j = p.coupling_j * MHZ
        for offset_mhz in (-80.0, -20.0, 10.0, 60.0):
            probe = d.center + offset_mhz * 1e-3
            det_r = (p.omega_r - probe) * 1e3 * MHZ
            det_f = (p.omega_f - probe) * 1e3 * MHZ

            def rhs(t, y):
                a, f = y[0] + 1j * y[1], y[2] + 1j * y[3]
                da = -1j * det_r * a - 1j * j * f
                df = -1j * det_f * f - 1j * j * a - 0.5 * kappa * f - np.sqrt(kappa)
                return [da.real, da.imag, df.real, df.imag]

            t_end = 40.0 / kappa
            sol = solve_ivp(rhs, (0, t_end), [0.0, 0.0, 0.0, 0.0],
                            rtol=1e-12, atol=1e-12)
            a = sol.y[0, -1] + 1j * sol.y[1, -1]
            f = sol.y[2, -1] + 1j * sol.y[3, -1]
            # eigenmode amplitudes from the bare ones
            am = d.x * a + d.z * f
            ap = d.y * a + d.w * f
            rm, rp = response(d, probe)
            scale = 1.0 / np.sqrt(MHZ)  # oracle uses rad/ns, response 1/sqrt(MHz)
            assert abs(am) * 1e-0 == pytest.approx(abs(rm) / scale, rel=1e-6)
            assert abs(ap) == pytest.approx(abs(rp) / scale, rel=1e-6)


class TestGammaF:
    def test_j_zero_rate_vanishes(self):
        d = diagonalize(params(omega_r=9.40, omega_f=9.48, j=0.0))
        rate = gamma_f(d, EmissionContext(10.0), 9.46)
        assert rate == pytest.approx(0.0, abs=1e-15)

    def test_exact_pole_flagged(self):
        d = diagonalize(params(omega_r=9.40, omega_f=9.48, j=0.0))
        with pytest.raises(PoleError):
            gamma_f(d, EmissionContext(10.0), 9.40)

    def test_two_forms_agree_on_random_sweep(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(1000):
            p = params(omega_r=rng.uniform(9.3, 9.7), omega_f=rng.uniform(9.3, 9.7),
                       j=rng.uniform(5.0, 120.0), kappa=rng.uniform(10.0, 300.0))
            d = diagonalize(p)
            ctx = EmissionContext(rng.uniform(1.0, 30.0))
            w = rng.uniform(9.2, 9.8)
            a = gamma_f(d, ctx, w)
            b = gamma_f_golden(d, ctx, w)
            if max(a, b) > 0:
                worst = max(worst, abs(a - b) / max(a, b))
        assert worst < 1e-9

    def test_decay_fit_oracle(self):
        # brute-force three-mode master equation: |f> population decay rate
        p = params(j=50.0, kappa=120.0)
        d = diagonalize(p)
        geff = 10.0
        predicted = gamma_f(d, EmissionContext(geff), d.center)
        fitted = lindblad_decay_rate(p, geff, d.center)
        assert fitted == pytest.approx(predicted, rel=0.02)

    def test_design_point_band_is_widest_over_grid(self):
        # at the design optimum the >= 8 MHz window beats neighboring cells
        from qlink.design import DesignObjectiveSpec, bandwidth, QubitParams
        spec = DesignObjectiveSpec()
        grid = spec.freq_grid
        qubit = spec.qubit

        def width(kappa, j):
            return bandwidth(params(j=j, kappa=kappa), qubit, 1000.0, 8.0, grid).width

        best = width(120.0, 50.0)
        for kappa, j in [(60.0, 30.0), (180.0, 80.0), (90.0, 70.0), (160.0, 40.0)]:
            assert width(kappa, j) <= best


@settings(deadline=None, max_examples=60)
@given(st.floats(9.3, 9.7), st.floats(9.3, 9.7), st.floats(1.0, 120.0),
       st.floats(10.0, 300.0), st.floats(0.0, 40.0), st.floats(9.2, 9.8))
def test_gamma_f_nonnegative(omega_r, omega_f, j, kappa, geff, probe):
    d = diagonalize(params(omega_r=omega_r, omega_f=omega_f, j=j, kappa=kappa))
    assert gamma_f(d, EmissionContext(geff), probe) >= 0.0


def lindblad_decay_rate(p: CoupledResonatorParams, geff_mhz: float,
                        omega_ph: float) -> float:
    """Independent oracle: exponential fit to the emitter decay in the full
    three-mode master equation (emitter + both resonator modes)."""
    layout = SpaceLayout((2, 2, 2))
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    num = sm.conj().T @ sm
    s = embed(Operator(SpaceLayout((2,)), sm), layout, 0)
    a = embed(Operator(SpaceLayout((2,)), sm), layout, 1)
    f = embed(Operator(SpaceLayout((2,)), sm), layout, 2)
    det_r = (p.omega_r - omega_ph) * 1e3 * MHZ
    det_f = (p.omega_f - omega_ph) * 1e3 * MHZ
    g = geff_mhz * MHZ
    j = p.coupling_j * MHZ
    kappa = p.kappa * MHZ
    h = (det_r * (a.dag() @ a).mat + det_f * (f.dag() @ f).mat
         + g * (s.dag().mat @ a.mat + s.mat @ a.dag().mat)
         + j * (a.dag().mat @ f.mat + a.mat @ f.dag().mat))
    ham = Operator(layout, h)
    channel = CollapseChannel(np.sqrt(kappa) * f)
    ket = np.zeros(8, dtype=complex)
    ket[4] = 1.0  # emitter excited, both modes empty
    rho0 = pure_state(layout, ket)
    gamma_guess = gamma_f(diagonalize(p), EmissionContext(geff_mhz), omega_ph) * MHZ
    t_end = 3.0 / gamma_guess
    times = np.linspace(0.0, t_end, 400)
    pexc = embed(Operator(SpaceLayout((2,)), num), layout, 0)
    traj = evolve(rho0, ham, [channel], times, observers={"pe": pexc},
                  max_rate=max(kappa, j, g, abs(det_r), abs(det_f)))
    pop = traj.expectations["pe"].real
    mask = (pop < 0.8) & (pop > 0.2)
    slope = np.polyfit(times[mask], np.log(pop[mask]), 1)[0]
    return -slope / MHZ


class TestModalRate:
    def test_equals_physical_rate_on_the_modes(self):
        d = diagonalize(params(omega_r=9.46, omega_f=9.54, j=40.0, kappa=110.0))
        ctx = EmissionContext(12.0)
        for mode_freq in (d.omega_minus, d.omega_plus):
            assert modal_rate(d, ctx, mode_freq) == pytest.approx(
                gamma_f(d, ctx, mode_freq), rel=1e-9)

    def test_differs_between_the_modes(self):
        d = diagonalize(params())
        ctx = EmissionContext(12.0)
        assert modal_rate(d, ctx, d.center) == pytest.approx(
            0.5 * gamma_f(d, ctx, d.center), rel=1e-9)


class TestRateCurve:
    def test_dark_mode_curve_is_all_zero(self):
        d = diagonalize(params(omega_r=9.40, omega_f=9.48, j=0.0))
        grid = np.arange(9.35, 9.55, 1e-3)
        np.testing.assert_allclose(rate_curve(d, EmissionContext(10.0), grid), 0.0)


class TestS11:
    def test_unit_magnitude_everywhere(self):
        d = diagonalize(params(omega_r=9.47, omega_f=9.53, j=45.0, kappa=130.0))
        grid = np.linspace(9.2, 9.8, 4001)
        np.testing.assert_allclose(np.abs(s11(d, grid)), 1.0, atol=1e-10)

    def test_far_detuned_approaches_unity(self):
        d = diagonalize(params())
        val = s11(d, d.center + 5.0)  # 5 GHz away
        assert abs(val - 1.0) < 1e-3

    def test_phase_winds_by_four_pi(self):
        d = diagonalize(params(omega_r=9.48, omega_f=9.52, j=50.0, kappa=120.0))
        span = 5.0 * d.kappa_total * 1e-3
        grid = np.linspace(d.center - span, d.center + span, 200001)
        phase = np.unwrap(np.angle(s11(d, grid)))
        total = abs(phase[-1] - phase[0])
        assert total == pytest.approx(4.0 * np.pi, abs=0.05)

    def test_dispersive_shift_moves_the_inner_pole(self):
        d = diagonalize(params(omega_r=9.48, omega_f=9.52, j=50.0, kappa=120.0))
        grid = np.linspace(9.3, 9.7, 20001)
        base = np.unwrap(np.angle(s11(d, grid)))
        pulled = np.unwrap(np.angle(s11(d, grid, dispersive_shift=2.0)))
        assert np.max(np.abs(base - pulled)) > 0.01


class TestFlatBand:
    def test_flat_over_central_forty_percent(self):
        # maximally flat condition of this model: splitting = sqrt(2) kappa_pm
        kappa = 150.0
        j = flat_band_coupling(kappa)
        d = diagonalize(params(omega_r=9.5, omega_f=9.5, j=j, kappa=kappa))
        ctx = EmissionContext(10.0)
        band = d.splitting * 1e-3
        grid = np.linspace(d.center - 0.2 * band, d.center + 0.2 * band, 801)
        curve = gamma_f(d, ctx, grid)
        assert curve.max() / curve.min() - 1.0 < 0.03

    def test_rule_of_thumb_spacing_dips_at_center(self):
        # spacing-equals-linewidth leaves a visible sag once the shared-line
        # cross-damping is included
        kappa = 200.0
        j = kappa / 4.0  # kappa_pm = 100 = splitting
        d = diagonalize(params(omega_r=9.5, omega_f=9.5, j=j, kappa=kappa))
        ctx = EmissionContext(10.0)
        band = d.splitting * 1e-3
        grid = np.linspace(d.center - 0.25 * band, d.center + 0.25 * band, 801)
        curve = gamma_f(d, ctx, grid)
        sag = 1.0 - curve.min() / curve.max()
        assert 0.1 < sag < 0.6
